"""Gaze recordings, deterministic synthetic capture, and the end-of-session quality gate.

A recording is the digital good the whole exchange is about: an ordered
series of gaze samples with per-sample tracker validity and confidence.
Synthetic recordings stand in for an HMD-integrated eye tracker and are
generated by a counter-based scheme keyed on the seed, so the same seed
always yields byte-identical data regardless of call order.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

from .errors import ParameterError

DEFAULT_SAMPLE_RATE_HZ = 120

# Norm tolerance for the direction vector of a valid sample.
UNIT_NORM_TOL = 1e-6

_U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class GazeSample:
    """One tracker output: time offset, unit gaze direction, confidence, validity."""

    timestamp_us: int
    gaze_dir: tuple[float, float, float]
    confidence: float
    is_valid: bool

    def check(self) -> None:
        if not 0 <= self.timestamp_us <= _U64_MAX:
            raise ParameterError(f"timestamp_us out of range: {self.timestamp_us}")
        if len(self.gaze_dir) != 3 or not all(math.isfinite(c) for c in self.gaze_dir):
            raise ParameterError("gaze_dir must be three finite components")
        if not (math.isfinite(self.confidence) and 0.0 <= self.confidence <= 1.0):
            raise ParameterError(f"confidence outside [0, 1]: {self.confidence}")
        if self.is_valid:
            norm = math.sqrt(sum(c * c for c in self.gaze_dir))
            if abs(norm - 1.0) > UNIT_NORM_TOL:
                raise ParameterError(f"valid sample direction norm {norm} is not unit")


@dataclass(frozen=True)
class GazeRecording:
    """A full session: 16-byte session id, pseudonymous alias, rate, ordered samples."""

    session_id: bytes
    subject_alias: str
    sample_rate_hz: int
    samples: tuple[GazeSample, ...]

    def validate(self) -> None:
        """Raise ParameterError unless every recording invariant holds."""
        if len(self.session_id) != 16:
            raise ParameterError("session_id must be exactly 16 bytes")
        if not 1 <= self.sample_rate_hz <= 1_000_000:
            raise ParameterError(f"sample_rate_hz out of range: {self.sample_rate_hz}")
        prev = -1
        for sample in self.samples:
            sample.check()
            if sample.timestamp_us <= prev:
                raise ParameterError("sample timestamps must be strictly increasing")
            prev = sample.timestamp_us


@dataclass(frozen=True)
class QualityThresholds:
    """Gate configuration; the metrics are fixed, the cutoffs are deployment policy."""

    min_tracking_ratio: float = 0.9
    min_mean_confidence: float = 0.8
    min_sample_count: int = 100

    def __post_init__(self) -> None:
        if not 0.0 <= self.min_tracking_ratio <= 1.0:
            raise ParameterError("min_tracking_ratio outside [0, 1]")
        if not 0.0 <= self.min_mean_confidence <= 1.0:
            raise ParameterError("min_mean_confidence outside [0, 1]")
        if self.min_sample_count < 1:
            raise ParameterError("min_sample_count must be positive")


DEFAULT_THRESHOLDS = QualityThresholds()


@dataclass(frozen=True)
class QualityReport:
    tracking_ratio: float
    mean_confidence: float
    sample_count: int
    is_reportable: bool


@dataclass(frozen=True)
class NoiseProfile:
    """Shape of the synthetic tracker output.

    valid_fraction is the Bernoulli rate of the per-sample validity flag;
    confidence values are drawn from a clipped normal around
    confidence_mean with the given spread.
    """

    valid_fraction: float = 1.0
    confidence_mean: float = 0.95
    confidence_spread: float = 0.02

    def __post_init__(self) -> None:
        if not 0.0 <= self.valid_fraction <= 1.0:
            raise ParameterError("valid_fraction outside [0, 1]")
        if not 0.0 <= self.confidence_mean <= 1.0:
            raise ParameterError("confidence_mean outside [0, 1]")
        if not (math.isfinite(self.confidence_spread) and self.confidence_spread >= 0.0):
            raise ParameterError("confidence_spread must be non-negative")


def validate_quality(recording: GazeRecording, thresholds: QualityThresholds) -> QualityReport:
    """Apply the end-of-session gate and report the metrics it was based on.

    Pure function: tracking ratio is the fraction of samples the tracker
    flagged valid, mean confidence is averaged over valid samples only
    (0 by convention when there are none), and the recording is
    reportable only if all three thresholds are met.
    """
    n = len(recording.samples)
    valid = [s for s in recording.samples if s.is_valid]
    tracking_ratio = len(valid) / max(1, n)
    mean_confidence = sum(s.confidence for s in valid) / len(valid) if valid else 0.0
    is_reportable = (
        tracking_ratio >= thresholds.min_tracking_ratio
        and mean_confidence >= thresholds.min_mean_confidence
        and n >= thresholds.min_sample_count
    )
    return QualityReport(
        tracking_ratio=tracking_ratio,
        mean_confidence=mean_confidence,
        sample_count=n,
        is_reportable=is_reportable,
    )


def _check_seed(seed: int) -> None:
    if not 0 <= seed <= _U64_MAX:
        raise ParameterError("seed must be an unsigned 64-bit integer")


def _stream_block(seed: int, label: bytes, counter: int) -> bytes:
    # One 64-byte block per counter value; splittable by label, keyed by seed.
    return hashlib.sha3_512(struct.pack("<Q", seed) + label + struct.pack("<Q", counter)).digest()


def _uniforms(block: bytes) -> list[float]:
    # Eight open-interval (0, 1) doubles from one 64-byte block.
    words = struct.unpack("<8Q", block)
    return [((w >> 11) + 0.5) * 2.0**-53 for w in words]


def _gauss_pair(u1: float, u2: float) -> tuple[float, float]:
    # Box-Muller: two independent standard normals from two uniforms.
    r = math.sqrt(-2.0 * math.log(u1))
    theta = 2.0 * math.pi * u2
    return r * math.cos(theta), r * math.sin(theta)


def derive_session_id(seed: int) -> bytes:
    _check_seed(seed)
    return _stream_block(seed, b"session-id", 0)[:16]


def generate_synthetic(
    seed: int,
    n_samples: int,
    noise_profile: NoiseProfile = NoiseProfile(),
    sample_rate_hz: int = DEFAULT_SAMPLE_RATE_HZ,
    subject_alias: str | None = None,
) -> GazeRecording:
    """Produce a deterministic synthetic recording for the given seed.

    Every sample draws its randomness from a hash of (seed, sample index),
    so recordings are reproducible bit-for-bit across platforms and runs.
    Directions are unit-normalized for all samples; roughly valid_fraction
    of them carry a true validity flag.
    """
    _check_seed(seed)
    if n_samples < 0:
        raise ParameterError("n_samples must be non-negative")
    if not 1 <= sample_rate_hz <= 1_000_000:
        raise ParameterError("sample_rate_hz must be in [1, 1_000_000]")

    if subject_alias is None:
        subject_alias = "anon-" + _stream_block(seed, b"alias", 0)[:4].hex()

    samples = []
    for i in range(n_samples):
        u = _uniforms(_stream_block(seed, b"gaze", i))
        g0, g1 = _gauss_pair(u[1], u[2])
        g2, _ = _gauss_pair(u[3], u[4])
        g3, _ = _gauss_pair(u[5], u[6])
        direction = (g0, g1, g2)
        norm = math.sqrt(sum(c * c for c in direction))
        if norm < 1e-12:
            direction, norm = (0.0, 0.0, 1.0), 1.0
        is_valid = u[0] < noise_profile.valid_fraction
        raw = noise_profile.confidence_mean + noise_profile.confidence_spread * g3
        confidence = min(1.0, max(0.0, raw if is_valid else raw * 0.3))
        samples.append(
            GazeSample(
                timestamp_us=i * 1_000_000 // sample_rate_hz,
                gaze_dir=tuple(c / norm for c in direction),
                confidence=confidence,
                is_valid=is_valid,
            )
        )

    recording = GazeRecording(
        session_id=derive_session_id(seed),
        subject_alias=subject_alias,
        sample_rate_hz=sample_rate_hz,
        samples=tuple(samples),
    )
    recording.validate()
    return recording
