"""Canonical recording bytes and keyed attestation.

The tag is an HMAC over SHA3-512 of the recording's canonical
serialization. Without the 32-byte secret key nobody can produce a tag
for altered data, so a tag anchored on the ledger makes post-hoc edits
detectable. The serialization is versioned: the leading magic changes
whenever the byte layout does, so a tag can never verify against bytes
produced under a different layout.
"""

from __future__ import annotations

import hashlib
import hmac as _hmac_compare
import secrets
import struct
from dataclasses import dataclass

from .errors import ParameterError, SerializationError
from .gaze_data import GazeRecording, GazeSample

MAGIC = b"GZREC01\x00"
KEY_LEN = 32
TAG_LEN = 64

# SHA3-512 absorbs 72-byte blocks; HMAC pads/reduces the key to that width.
_SHA3_512_BLOCK = 72


@dataclass(frozen=True)
class SecretKey:
    """32-byte attestation key. Its repr is redacted; it must never be logged."""

    key_bytes: bytes

    def __post_init__(self) -> None:
        if len(self.key_bytes) != KEY_LEN:
            raise ParameterError(f"secret key must be {KEY_LEN} bytes")

    def __repr__(self) -> str:  # pragma: no cover - trivial
        return "SecretKey(<redacted>)"

    __str__ = __repr__

    @classmethod
    def generate(cls) -> "SecretKey":
        return cls(secrets.token_bytes(KEY_LEN))

    @classmethod
    def from_seed(cls, seed: int) -> "SecretKey":
        """Deterministic per-session key for reproducible simulations."""
        return cls(hashlib.sha3_256(struct.pack("<Q", seed) + b"session-key").digest())

    @classmethod
    def from_hex(cls, text: str) -> "SecretKey":
        try:
            raw = bytes.fromhex(text)
        except ValueError as exc:
            raise ParameterError(f"invalid key hex: {exc}") from exc
        return cls(raw)


@dataclass(frozen=True)
class AttestationTag:
    """64-byte HMAC-SHA3-512 output binding a recording to a secret key."""

    tag_bytes: bytes

    def __post_init__(self) -> None:
        if len(self.tag_bytes) != TAG_LEN:
            raise ParameterError(f"attestation tag must be {TAG_LEN} bytes")

    @property
    def hex(self) -> str:
        """Lowercase 128-character encoding used in transaction input data."""
        return self.tag_bytes.hex()

    @classmethod
    def from_hex(cls, text: str) -> "AttestationTag":
        try:
            raw = bytes.fromhex(text)
        except ValueError as exc:
            raise ParameterError(f"invalid tag hex: {exc}") from exc
        return cls(raw)


def hmac_sha3_512(key: bytes, message: bytes) -> bytes:
    """HMAC construction over SHA3-512 (block size 72 bytes)."""
    if len(key) > _SHA3_512_BLOCK:
        key = hashlib.sha3_512(key).digest()
    key = key + b"\x00" * (_SHA3_512_BLOCK - len(key))
    inner = hashlib.sha3_512(bytes(b ^ 0x36 for b in key) + message).digest()
    return hashlib.sha3_512(bytes(b ^ 0x5C for b in key) + inner).digest()


def canonical_serialize(recording: GazeRecording) -> bytes:
    """Encode a recording into its unique, platform-independent byte form.

    Layout: magic, session_id, alias (u32 length + UTF-8 bytes), sample
    rate (u32), sample count (u64), then per sample the timestamp (u64),
    three direction components, confidence (all f64 bit patterns), and a
    validity byte. All integers little-endian fixed width. These bytes
    are exactly the attestation pre-image and exactly the file format.
    """
    try:
        recording.validate()
    except ParameterError as exc:
        raise SerializationError(f"recording violates invariants: {exc}") from exc

    alias = recording.subject_alias.encode("utf-8")
    if len(alias) > 0xFFFFFFFF:
        raise SerializationError("subject_alias too long")

    parts = [
        MAGIC,
        recording.session_id,
        struct.pack("<I", len(alias)),
        alias,
        struct.pack("<I", recording.sample_rate_hz),
        struct.pack("<Q", len(recording.samples)),
    ]
    for s in recording.samples:
        # +0.0 canonicalizes -0.0 so equal values encode identically.
        parts.append(
            struct.pack(
                "<Q3ddB",
                s.timestamp_us,
                s.gaze_dir[0] + 0.0,
                s.gaze_dir[1] + 0.0,
                s.gaze_dir[2] + 0.0,
                s.confidence + 0.0,
                1 if s.is_valid else 0,
            )
        )
    return b"".join(parts)


def canonical_deserialize(data: bytes) -> GazeRecording:
    """Inverse of canonical_serialize; rejects wrong magic, truncation, trailing bytes."""
    view = memoryview(data)
    if len(view) < len(MAGIC) + 16 + 4 or bytes(view[: len(MAGIC)]) != MAGIC:
        raise SerializationError("missing or unsupported recording magic")
    offset = len(MAGIC)
    session_id = bytes(view[offset : offset + 16])
    offset += 16
    (alias_len,) = struct.unpack_from("<I", view, offset)
    offset += 4
    if offset + alias_len + 4 + 8 > len(view):
        raise SerializationError("truncated recording header")
    try:
        alias = bytes(view[offset : offset + alias_len]).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SerializationError("subject_alias is not valid UTF-8") from exc
    offset += alias_len
    (sample_rate_hz,) = struct.unpack_from("<I", view, offset)
    offset += 4
    (n_samples,) = struct.unpack_from("<Q", view, offset)
    offset += 8

    sample_size = struct.calcsize("<Q3ddB")
    if len(view) - offset != n_samples * sample_size:
        raise SerializationError("recording body length does not match sample count")

    samples = []
    for _ in range(n_samples):
        ts, dx, dy, dz, conf, valid = struct.unpack_from("<Q3ddB", view, offset)
        offset += sample_size
        if valid not in (0, 1):
            raise SerializationError("validity byte must be 0 or 1")
        samples.append(GazeSample(ts, (dx, dy, dz), conf, valid == 1))

    recording = GazeRecording(
        session_id=session_id,
        subject_alias=alias,
        sample_rate_hz=sample_rate_hz,
        samples=tuple(samples),
    )
    try:
        recording.validate()
    except ParameterError as exc:
        raise SerializationError(f"decoded recording violates invariants: {exc}") from exc
    return recording


def attest(recording: GazeRecording, key: SecretKey) -> AttestationTag:
    """Tag a recording: HMAC-SHA3-512 over its canonical serialization."""
    return AttestationTag(hmac_sha3_512(key.key_bytes, canonical_serialize(recording)))


def verify(recording: GazeRecording, tag: AttestationTag, key: SecretKey) -> bool:
    """True iff the tag matches the recording under the key.

    Comparison is constant-time over the fixed 64-byte tag length; a
    recording that cannot be serialized verifies as False rather than
    raising.
    """
    try:
        expected = attest(recording, key)
    except SerializationError:
        return False
    return _hmac_compare.compare_digest(expected.tag_bytes, tag.tag_bytes)


class WhiteBoxAttestor:
    """Subject-side attestation oracle that exposes tags but not the key.

    Stands in for a keyed hash baked into a hardened application binary:
    the code path that runs on the subject's machine can request a tag
    for the bytes it recorded, yet has no API through which to read the
    key and forge tags for altered data.
    """

    def __init__(self, key: SecretKey):
        self.__key = key

    def attest(self, recording: GazeRecording) -> AttestationTag:
        return attest(recording, self.__key)

    def __repr__(self) -> str:  # pragma: no cover - trivial
        return "WhiteBoxAttestor(<key hidden>)"


def write_recording_file(path, recording: GazeRecording) -> bytes:
    """Write the canonical bytes to disk and return them (file == pre-image)."""
    data = canonical_serialize(recording)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def read_recording_file(path) -> GazeRecording:
    with open(path, "rb") as fh:
        return canonical_deserialize(fh.read())


def recording_to_text(recording: GazeRecording) -> str:
    """Line-delimited debug view. Never hashed and never authoritative."""
    lines = [
        f"session_id {recording.session_id.hex()}",
        f"subject_alias {recording.subject_alias}",
        f"sample_rate_hz {recording.sample_rate_hz}",
        f"n_samples {len(recording.samples)}",
    ]
    for s in recording.samples:
        lines.append(
            f"{s.timestamp_us} {s.gaze_dir[0]!r} {s.gaze_dir[1]!r} {s.gaze_dir[2]!r} "
            f"{s.confidence!r} {int(s.is_valid)}"
        )
    return "\n".join(lines) + "\n"
