"""Escrow-backed collection of gaze recordings from remote subjects.

A deterministic, desk-scale simulation of the full exchange: a subject
records gaze data, gates its quality, attests it with a keyed hash,
anchors the tag on a simulated hash-chained ledger, and trades it
through a double-stake escrow contract with a data collector. Both
honest runs and a catalogue of adversarial ones are first-class.
"""

from .attestation import (
    AttestationTag,
    SecretKey,
    WhiteBoxAttestor,
    attest,
    canonical_deserialize,
    canonical_serialize,
    hmac_sha3_512,
    read_recording_file,
    recording_to_text,
    verify,
    write_recording_file,
)
from .errors import (
    AuthorizationError,
    ConfigurationError,
    DeliveryError,
    FundsError,
    GazeChainError,
    IntegrityError,
    NonceError,
    NotFinalError,
    NotFoundError,
    ParameterError,
    SerializationError,
    StateError,
)
from .escrow import EscrowContract, EscrowState, abort, confirm_collect, confirm_data_valid, create
from .gaze_data import (
    DEFAULT_THRESHOLDS,
    GazeRecording,
    GazeSample,
    NoiseProfile,
    QualityReport,
    QualityThresholds,
    generate_synthetic,
    validate_quality,
)
from .ledger import WEI_PER_ETH, Address, Block, Ledger, Transaction, eth_to_wei, wei_to_eth
from .protocol import (
    CollectorPolicy,
    DirectChannel,
    MatrixCell,
    SessionConfig,
    SessionOutcome,
    SubjectStrategy,
    TamperSpec,
    Verdict,
    anchor_tag,
    collector_verify,
    deliver_data,
    mutate_recording,
    run_matrix,
    run_scenario,
    run_session,
    session_report,
)

__version__ = "0.1.0"
