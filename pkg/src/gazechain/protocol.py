"""Six-step session orchestration between a subject and a data collector.

One session runs, in order: quality-gate the recording, attest it,
create the escrow (subject stakes 2X), collector confirms (stakes 2X),
anchor the tag in a self-transaction, deliver recording plus anchor hash
over the direct channel, and finally the collector verifies and, if
satisfied, confirms so the contract pays out. Every on-chain step seals
its own block, which gives each step a distinct block index.

Subject strategies and collector policies are pluggable so the whole
honesty/incentive matrix can be enumerated deterministically: a session
is a pure function of (config, strategy, policy).
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import struct
from collections import deque
from dataclasses import dataclass

from . import escrow
from .attestation import (
    TAG_LEN,
    AttestationTag,
    SecretKey,
    WhiteBoxAttestor,
    canonical_deserialize,
    canonical_serialize,
    verify,
)
from .errors import DeliveryError, NotFinalError, NotFoundError, ParameterError
from .escrow import EscrowContract, EscrowState
from .gaze_data import (
    DEFAULT_SAMPLE_RATE_HZ,
    DEFAULT_THRESHOLDS,
    GazeRecording,
    NoiseProfile,
    QualityThresholds,
    generate_synthetic,
    validate_quality,
)
from .ledger import WEI_PER_ETH, Address, Ledger


class SubjectStrategy(enum.Enum):
    HONEST = "honest"
    TAMPER_AFTER_HASH = "tamper"
    SUBMIT_NOISY_DATA = "noisy"
    WRONG_ANCHOR = "wronganchor"
    ABORT_AFTER_CREATE = "abort"
    STALL_AFTER_LOCK = "stall"


class CollectorPolicy(enum.Enum):
    HONEST = "honest"
    NEVER_CONFIRM = "neverconfirm"
    CONFIRM_WITHOUT_VERIFY = "confirmwithoutverify"


class Verdict(enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    NOT_PERFORMED = "notperformed"


class QualityVerdict(enum.Enum):
    REPORTABLE = "reportable"
    REJECTED = "rejected"


# Tracker output of a subject who ignored calibration instructions; used
# by SUBMIT_NOISY_DATA and by the CLI's "nosend" scenario.
NOISY_PROFILE = NoiseProfile(valid_fraction=0.35, confidence_mean=0.4, confidence_spread=0.15)

TAMPER_FIELDS = (
    "timestamp_us",
    "gaze_dir",
    "confidence",
    "is_valid",
    "session_id",
    "subject_alias",
    "sample_rate_hz",
)


@dataclass(frozen=True)
class TamperSpec:
    """Which field to alter after the tag was computed, and in which sample."""

    field: str = "confidence"
    index: int = 0

    def __post_init__(self) -> None:
        if self.field not in TAMPER_FIELDS:
            raise ParameterError(f"unknown tamper field {self.field!r}")
        if self.index < 0:
            raise ParameterError("tamper index must be non-negative")


def mutate_recording(recording: GazeRecording, spec: TamperSpec) -> GazeRecording:
    """Return a copy altered in exactly one field, still structurally valid."""
    per_sample = spec.field in ("timestamp_us", "gaze_dir", "confidence", "is_valid")
    if per_sample and not recording.samples:
        raise ParameterError("cannot tamper with a sample of an empty recording")

    if spec.field == "session_id":
        sid = bytearray(recording.session_id)
        sid[-1] ^= 0x01
        return dataclasses.replace(recording, session_id=bytes(sid))
    if spec.field == "subject_alias":
        return dataclasses.replace(recording, subject_alias=recording.subject_alias + "x")
    if spec.field == "sample_rate_hz":
        bump = 1 if recording.sample_rate_hz < 1_000_000 else -1
        return dataclasses.replace(recording, sample_rate_hz=recording.sample_rate_hz + bump)

    idx = spec.index % len(recording.samples)
    sample = recording.samples[idx]
    if spec.field == "timestamp_us":
        nxt = recording.samples[idx + 1].timestamp_us if idx + 1 < len(recording.samples) else None
        prev = recording.samples[idx - 1].timestamp_us if idx > 0 else -1
        if nxt is None or nxt > sample.timestamp_us + 1:
            mutated = dataclasses.replace(sample, timestamp_us=sample.timestamp_us + 1)
        elif sample.timestamp_us - 1 > prev:
            mutated = dataclasses.replace(sample, timestamp_us=sample.timestamp_us - 1)
        else:
            raise ParameterError("no room to shift this timestamp")
    elif spec.field == "gaze_dir":
        # Negating the largest component keeps the norm and always flips a
        # nonzero value (a unit vector has a component of at least 1/sqrt(3)).
        d = list(sample.gaze_dir)
        k = max(range(3), key=lambda i: abs(d[i]))
        d[k] = -d[k]
        mutated = dataclasses.replace(sample, gaze_dir=tuple(d))
    elif spec.field == "confidence":
        delta = 2.0**-12
        c = sample.confidence + delta if sample.confidence <= 0.5 else sample.confidence - delta
        mutated = dataclasses.replace(sample, confidence=c)
    else:
        mutated = dataclasses.replace(sample, is_valid=not sample.is_valid)

    samples = list(recording.samples)
    samples[idx] = mutated
    tampered = dataclasses.replace(recording, samples=tuple(samples))
    tampered.validate()
    return tampered


@dataclass(frozen=True)
class DeliveryReceipt:
    n_bytes: int
    payload_sha3: bytes


class DirectChannel:
    """In-memory stand-in for the confidential off-chain channel.

    Reliable and order-preserving; transport security is assumed, not
    simulated. The CLI swaps this for plain file exchange.
    """

    def __init__(self) -> None:
        self._queue: deque[tuple[bytes, bytes]] = deque()
        self.closed = False

    def close(self) -> None:
        self.closed = True

    def send(self, payload: bytes, anchor_tx_hash: bytes) -> DeliveryReceipt:
        if self.closed:
            raise DeliveryError("channel is closed")
        self._queue.append((payload, anchor_tx_hash))
        return DeliveryReceipt(len(payload), hashlib.sha3_256(payload).digest())

    def receive(self) -> tuple[bytes, bytes]:
        if self.closed:
            raise DeliveryError("channel is closed")
        if not self._queue:
            raise DeliveryError("nothing delivered")
        return self._queue.popleft()


def deliver_data(
    channel: DirectChannel, recording: GazeRecording, anchor_tx_hash: bytes
) -> DeliveryReceipt:
    """Send the recording file bytes plus the anchor transaction hash."""
    return channel.send(canonical_serialize(recording), anchor_tx_hash)


def anchor_tag(ledger: Ledger, subject: Address, tag: AttestationTag, fee: int) -> bytes:
    """Store the tag on-chain in the input data of a sealed self-transaction."""
    tx_hash = ledger.transfer(subject, subject, 0, fee, input_data=tag.tag_bytes)
    ledger.seal_block()
    return tx_hash


def collector_verify(
    ledger: Ledger,
    received: GazeRecording,
    anchor_tx_hash: bytes,
    key: SecretKey,
    thresholds: QualityThresholds = DEFAULT_THRESHOLDS,
) -> tuple[Verdict, str]:
    """Collector-side check: anchored tag matches the data, and quality holds.

    The quality re-run matters: a subject who bypassed their local gate
    still produced a genuine tag over noisy data, and only this re-check
    catches that.
    """
    try:
        tx = ledger.get_transaction(anchor_tx_hash)
    except (NotFoundError, NotFinalError) as exc:
        return Verdict.FAIL, f"anchor not available: {exc}"
    if len(tx.input_data) != TAG_LEN:
        return Verdict.FAIL, "anchored payload is not a 64-byte tag"
    if not verify(received, AttestationTag(tx.input_data), key):
        return Verdict.FAIL, "recording does not match the anchored tag"
    if not validate_quality(received, thresholds).is_reportable:
        return Verdict.FAIL, "recording quality below thresholds"
    return Verdict.PASS, ""


@dataclass(frozen=True)
class SessionConfig:
    """Everything one deterministic session depends on."""

    compensation_x: int
    fee: int = 0
    thresholds: QualityThresholds = DEFAULT_THRESHOLDS
    seed: int = 42
    n_samples: int = 1000
    noise_profile: NoiseProfile = NoiseProfile()
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ
    initial_balance: int = WEI_PER_ETH

    def __post_init__(self) -> None:
        if self.compensation_x <= 0:
            raise ParameterError("compensation_x must be positive")
        if self.fee < 0:
            raise ParameterError("fee must be non-negative")
        if self.initial_balance < 0:
            raise ParameterError("initial_balance must be non-negative")


@dataclass
class SessionOutcome:
    """Terminal result of one protocol run."""

    subject: Address
    collector: Address
    quality: QualityVerdict
    verification: Verdict
    verification_reason: str
    contract: EscrowContract | None
    anchor_tx_hash: bytes | None
    final_balances: dict[Address, int]
    ledger: Ledger
    # Exact bytes the collector received over the channel, when any.
    delivered_payload: bytes | None = None

    @property
    def contract_state(self) -> EscrowState | None:
        return self.contract.state if self.contract else None

    def net(self, addr: Address) -> int:
        return self.final_balances.get(addr, 0) - self.ledger.genesis_allocations.get(addr, 0)

    @property
    def subject_net(self) -> int:
        return self.net(self.subject)

    @property
    def collector_net(self) -> int:
        return self.net(self.collector)


def session_addresses(seed: int) -> tuple[Address, Address]:
    base = struct.pack("<Q", seed)
    return Address.from_seed(base + b"/subject"), Address.from_seed(base + b"/collector")


def _forged_tag(seed: int) -> AttestationTag:
    # What an adversary without the key can do at best: 64 plausible bytes.
    return AttestationTag(hashlib.sha3_512(struct.pack("<Q", seed) + b"forged-tag").digest())


def run_session(
    config: SessionConfig,
    strategy: SubjectStrategy,
    policy: CollectorPolicy,
    tamper: TamperSpec | None = None,
) -> SessionOutcome:
    """Execute one full session and return its terminal outcome.

    Never raises for protocol-level failures: rejected quality, failed
    verification, deadlocks, and aborts are all encoded in the outcome.
    Deterministic for fixed inputs, including every ledger byte.
    """
    subject, collector = session_addresses(config.seed)
    key = SecretKey.from_seed(config.seed)
    attestor = WhiteBoxAttestor(key)

    profile = NOISY_PROFILE if strategy is SubjectStrategy.SUBMIT_NOISY_DATA else config.noise_profile
    recording = generate_synthetic(
        config.seed, config.n_samples, profile, config.sample_rate_hz
    )
    report = validate_quality(recording, config.thresholds)
    quality = QualityVerdict.REPORTABLE if report.is_reportable else QualityVerdict.REJECTED

    ledger = Ledger.genesis(
        [(subject, config.initial_balance), (collector, config.initial_balance)]
    )

    def outcome(
        contract: EscrowContract | None,
        verification: Verdict,
        reason: str,
        anchor: bytes | None,
        payload: bytes | None = None,
    ) -> SessionOutcome:
        return SessionOutcome(
            subject=subject,
            collector=collector,
            quality=quality,
            verification=verification,
            verification_reason=reason,
            contract=contract,
            anchor_tx_hash=anchor,
            final_balances=dict(ledger.balances),
            ledger=ledger,
            delivered_payload=payload,
        )

    # Step 1: the application gates quality; an honest subject with noisy
    # data does not send and nothing is ever staked.
    if quality is QualityVerdict.REJECTED and strategy is not SubjectStrategy.SUBMIT_NOISY_DATA:
        return outcome(None, Verdict.NOT_PERFORMED, "quality gate rejected the recording", None)

    tag = attestor.attest(recording)

    # Step 2: subject stakes 2X.
    contract = escrow.create(ledger, subject, 2 * config.compensation_x, config.fee)
    ledger.seal_block()

    if strategy is SubjectStrategy.ABORT_AFTER_CREATE:
        escrow.abort(ledger, contract, subject, config.fee)
        ledger.seal_block()
        return outcome(contract, Verdict.NOT_PERFORMED, "subject aborted before lock", None)

    # Step 3: collector matches the stake.
    escrow.confirm_collect(ledger, contract, collector, 2 * config.compensation_x, config.fee)
    ledger.seal_block()

    if strategy is SubjectStrategy.STALL_AFTER_LOCK:
        return outcome(contract, Verdict.NOT_PERFORMED, "subject stalled after lock", None)

    # Step 4: anchor the tag (or, for a forger, some fabricated bytes).
    anchored = _forged_tag(config.seed) if strategy is SubjectStrategy.WRONG_ANCHOR else tag
    anchor_hash = anchor_tag(ledger, subject, anchored, config.fee)

    # Step 5: hand over the data (tampered, for a data forger) directly.
    delivered = recording
    if strategy is SubjectStrategy.TAMPER_AFTER_HASH:
        delivered = mutate_recording(recording, tamper or TamperSpec())
    channel = DirectChannel()
    try:
        deliver_data(channel, delivered, anchor_hash)
        payload, received_anchor = channel.receive()
    except DeliveryError as exc:
        return outcome(contract, Verdict.NOT_PERFORMED, f"delivery failed: {exc}", anchor_hash)
    received = canonical_deserialize(payload)

    # Step 6: collector verifies and, if satisfied, confirms for payout.
    verification, reason = Verdict.NOT_PERFORMED, ""
    if policy in (CollectorPolicy.HONEST, CollectorPolicy.NEVER_CONFIRM):
        verification, reason = collector_verify(
            ledger, received, received_anchor, key, config.thresholds
        )
    should_confirm = (
        policy is CollectorPolicy.CONFIRM_WITHOUT_VERIFY
        or (policy is CollectorPolicy.HONEST and verification is Verdict.PASS)
    )
    if should_confirm:
        escrow.confirm_data_valid(ledger, contract, collector, config.fee)
        ledger.seal_block()

    return outcome(contract, verification, reason, anchor_hash, payload)


# -- scenario labels and the strategy x policy matrix ---------------------

# "nosend" is the honest response to a noisy session: the gate rejects and
# nothing is sent or staked. It is honest-strategy sugar, listed here so the
# incentive table shows its net-zero row explicitly.
STRATEGY_LABELS: dict[str, SubjectStrategy] = {s.value: s for s in SubjectStrategy}
SCENARIO_LABELS: tuple[str, ...] = tuple(STRATEGY_LABELS) + ("nosend",)
POLICY_LABELS: dict[str, CollectorPolicy] = {p.value: p for p in CollectorPolicy}


def run_scenario(config: SessionConfig, scenario: str, policy: CollectorPolicy) -> SessionOutcome:
    """Run one labeled scenario: a subject strategy name or "nosend"."""
    if scenario == "nosend":
        noisy = dataclasses.replace(config, noise_profile=NOISY_PROFILE)
        return run_session(noisy, SubjectStrategy.HONEST, policy)
    if scenario not in STRATEGY_LABELS:
        raise ParameterError(f"unknown scenario {scenario!r}")
    return run_session(config, STRATEGY_LABELS[scenario], policy)


@dataclass(frozen=True)
class MatrixCell:
    scenario: str
    policy: str
    outcome: SessionOutcome


def run_matrix(config: SessionConfig) -> list[MatrixCell]:
    """Every scenario against every collector policy, in stable order."""
    cells = []
    for scenario in SCENARIO_LABELS:
        for policy_label, policy in POLICY_LABELS.items():
            cells.append(MatrixCell(scenario, policy_label, run_scenario(config, scenario, policy)))
    return cells


def session_report(
    config: SessionConfig, scenario: str, policy: str, outcome: SessionOutcome
) -> dict:
    """JSON-ready session summary with hex hashes and exact integer balances."""
    dump = outcome.ledger.to_dump()
    state = outcome.contract_state.value if outcome.contract_state else "notcreated"
    return {
        "schema": "gazechain.session/1",
        "config": {
            "compensation_x": config.compensation_x,
            "fee": config.fee,
            "seed": config.seed,
            "n_samples": config.n_samples,
            "sample_rate_hz": config.sample_rate_hz,
            "initial_balance": config.initial_balance,
            "thresholds": {
                "min_tracking_ratio": config.thresholds.min_tracking_ratio,
                "min_mean_confidence": config.thresholds.min_mean_confidence,
                "min_sample_count": config.thresholds.min_sample_count,
            },
            "noise_profile": {
                "valid_fraction": config.noise_profile.valid_fraction,
                "confidence_mean": config.noise_profile.confidence_mean,
                "confidence_spread": config.noise_profile.confidence_spread,
            },
        },
        "scenario": scenario,
        "policy": policy,
        "quality": outcome.quality.value,
        "verification": outcome.verification.value,
        "verification_reason": outcome.verification_reason,
        "contract_state": state,
        "contract": escrow.contract_report(outcome.contract) if outcome.contract else None,
        "anchor_tx_hash": outcome.anchor_tx_hash.hex() if outcome.anchor_tx_hash else None,
        "subject": outcome.subject.hex,
        "collector": outcome.collector.hex,
        "balances": {a.hex: v for a, v in sorted(outcome.final_balances.items())},
        "subject_net": outcome.subject_net,
        "collector_net": outcome.collector_net,
        "fees_burned": outcome.ledger.fees_burned,
        "ledger_dump_sha3": hashlib.sha3_256(dump.encode("utf-8")).hexdigest()[:16],
    }
