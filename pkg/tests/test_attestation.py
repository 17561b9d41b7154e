import dataclasses
import hashlib
import hmac as stdlib_hmac
import math
import random

import pytest
from cryptography.hazmat.primitives import hashes as c_hashes
from cryptography.hazmat.primitives import hmac as c_hmac
from hypothesis import given, strategies as st

from gazechain import (
    AttestationTag,
    GazeRecording,
    GazeSample,
    ParameterError,
    SecretKey,
    SerializationError,
    WhiteBoxAttestor,
    attest,
    canonical_deserialize,
    canonical_serialize,
    generate_synthetic,
    hmac_sha3_512,
    read_recording_file,
    recording_to_text,
    verify,
    write_recording_file,
)
from gazechain.attestation import MAGIC

from conftest import make_recording, random_recording

# Known-answer vectors cross-checked against two unrelated implementations
# (OpenSSL via the cryptography package, and CPython's hmac module) before
# this module's own construction existed. Key lengths straddle the 72-byte
# block boundary.
HMAC_SHA3_512_VECTORS = [
    ("0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b0b", "4869205468657265",
     "eb3fbd4b2eaab8f5c504bd3a41465aacec15770a7cabac531e482f860b5ec7ba47ccb2c6f2afce8f88d22b6dc61380f23a668fd3888bb80537c0a0b86407689e"),
    ("4a656665", "7768617420646f2079612077616e7420666f72206e6f7468696e673f",
     "5a4bfeab6166427c7a3647b747292b8384537cdb89afb3bf5665e4c5e709350b287baec921fd7ca0ee7a0c31d022a95e1fc92ba9d77df883960275beb4e62024"),
    ("aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa", "dd" * 50,
     "309e99f9ec075ec6c6d475eda1180687fcf1531195802a99b5677449a8625182851cb332afb6a89c411325fbcbcd42afcb7b6e5aab7ea42c660f97fd8584bf03"),
    ("0102030405060708090a0b0c0d0e0f10111213141516171819", "cd" * 50,
     "b27eab1d6e8d87461c29f7f5739dd58e98aa35f8e823ad38c5492a2088fa0281993bbfff9a0e9c6bf121ae9ec9bb09d84a5ebac817182ea974673fb133ca0d1d"),
    ("00" * 32, "",
     "cbcf45540782d4bc7387fbbf7d30b3681d6d66cc435cafd82546b0fce96b367ea79662918436fba442e81a01d0f9592dfcd30f7a7a8f1475693d30be4150ca84"),
    (bytes(range(32)).hex(), "00",
     "37fe34316809746adcb27ade6f08899e16027b9f1b080d8507ef7e565fe88c831554d5a3833df98dc546d3da9102a9d76568562effaac0ccbfcc5a3fa18f48b1"),
    ("a5" * 64, "63616e6f6e6963616c206279746573",
     "72bee2a090bdde7950cd1527fcba2bbd0297c28cf74fbb6b8aa4d2ef63dfda7c6d871e37a0993f34995ab7971561493c5bc274475304778ddaefd2f5c641056a"),
    ("5a" * 71, "6f6e652062656c6f7720626c6f636b2073697a65",
     "2f17cbe9103472ea9c6e28523e1501955d599ac484a5226d4759a62b35d22aa96ebb480eaf17f661783d7a55f531dc3c728dc1a4abd0ba38b3a914c41240dee8"),
    ("3c" * 72, "65786163746c7920626c6f636b2073697a65",
     "54627767f9b972c428035f4bbcc54f664134f935978cb6c3569eb4fb9628aa27dcfed5d4f11596c994615973aad79e1ddd3ffefd217a2c3008155b5f8aac6e5b"),
    ("c3" * 73, "6f6e652061626f766520626c6f636b2073697a65",
     "99e3d23bf59c088831f7c6e15c1882fd7b99909dc86184243054e2d94d4026bbe316470834a34b6a48a07aa606c3455c742a32cd8b37552bd476a2f4b9bcd27a"),
    ("0f" * 100,
     "54657374205573696e67204c6172676572205468616e20426c6f636b2d53697a65204b6579202d2048617368204b6579204669727374",
     "c5c7cac60def6b8589cf2b37c76796bb8ddaeae0f4ae4192d1ad561b02c167da7f97ac14287f76ee8e99cff4cdb07db1d2b0aa15823744c018b57094b2ccc698"),
    (bytes(range(32)).hex(), bytes(i % 256 for i in range(1000)).hex(),
     "6507a04ac07bcf898e83b901f7b01afadf755469617d3e16fe53965d0aa26025832907954cb95e66ef6638877ec5cae674cf651057ad429c0e8e09457ab932b5"),
]


def _oracle_hmac(key: bytes, msg: bytes) -> bytes:
    mac = c_hmac.HMAC(key, c_hashes.SHA3_512())
    mac.update(msg)
    return mac.finalize()


class TestHmacSha3_512:
    @pytest.mark.parametrize("key_hex,msg_hex,expected_hex", HMAC_SHA3_512_VECTORS)
    def test_known_answer_vectors(self, key_hex, msg_hex, expected_hex):
        out = hmac_sha3_512(bytes.fromhex(key_hex), bytes.fromhex(msg_hex))
        assert out.hex() == expected_hex

    def test_matches_independent_implementations_on_random_inputs(self):
        rng = random.Random(0x5EED)
        for _ in range(60):
            key = rng.randbytes(rng.randint(0, 120))
            msg = rng.randbytes(rng.randint(0, 500))
            mine = hmac_sha3_512(key, msg)
            assert mine == _oracle_hmac(key, msg)
            assert mine == stdlib_hmac.new(key, msg, hashlib.sha3_512).digest()

    def test_output_is_64_bytes(self):
        assert len(hmac_sha3_512(b"k", b"m")) == 64


def recordings(max_samples=12):
    @st.composite
    def build(draw):
        n = draw(st.integers(0, max_samples))
        deltas = draw(st.lists(st.integers(1, 10**6), min_size=n, max_size=n))
        samples = []
        ts = -1
        for delta in deltas:
            ts += delta
            raw = draw(
                st.tuples(
                    st.floats(-1, 1, allow_nan=False),
                    st.floats(-1, 1, allow_nan=False),
                    st.floats(-1, 1, allow_nan=False),
                ).filter(lambda t: math.sqrt(sum(c * c for c in t)) > 1e-6)
            )
            norm = math.sqrt(sum(c * c for c in raw))
            samples.append(
                GazeSample(
                    timestamp_us=ts,
                    gaze_dir=tuple(c / norm for c in raw),
                    confidence=draw(st.floats(0, 1, allow_nan=False)),
                    is_valid=draw(st.booleans()),
                )
            )
        return GazeRecording(
            session_id=draw(st.binary(min_size=16, max_size=16)),
            subject_alias=draw(st.text(max_size=20)),
            sample_rate_hz=draw(st.integers(1, 1_000_000)),
            samples=tuple(samples),
        )

    return build()


class TestCanonicalSerialization:
    def test_equal_recordings_equal_bytes(self):
        a = generate_synthetic(11, 50)
        b = generate_synthetic(11, 50)
        assert a == b
        assert canonical_serialize(a) == canonical_serialize(b)

    def test_single_confidence_change_changes_bytes(self):
        rec = make_recording(5)
        sample = dataclasses.replace(rec.samples[2], confidence=0.9500001)
        samples = list(rec.samples)
        samples[2] = sample
        other = dataclasses.replace(rec, samples=tuple(samples))
        assert canonical_serialize(rec) != canonical_serialize(other)

    @given(recordings())
    def test_round_trip_identity(self, rec):
        assert canonical_deserialize(canonical_serialize(rec)) == rec

    def test_starts_with_version_magic(self):
        assert canonical_serialize(make_recording(1)).startswith(MAGIC)

    def test_wrong_magic_rejected(self):
        data = bytearray(canonical_serialize(make_recording(1)))
        data[6] = ord("9")
        with pytest.raises(SerializationError):
            canonical_deserialize(bytes(data))

    def test_truncation_rejected(self):
        data = canonical_serialize(make_recording(3))
        with pytest.raises(SerializationError):
            canonical_deserialize(data[:-1])

    def test_trailing_bytes_rejected(self):
        data = canonical_serialize(make_recording(3))
        with pytest.raises(SerializationError):
            canonical_deserialize(data + b"\x00")

    def test_invariant_violations_do_not_serialize(self):
        good = make_recording(2)
        out_of_order = dataclasses.replace(good, samples=tuple(reversed(good.samples)))
        with pytest.raises(SerializationError):
            canonical_serialize(out_of_order)
        bad_sid = dataclasses.replace(good, session_id=b"\x01" * 15)
        with pytest.raises(SerializationError):
            canonical_serialize(bad_sid)

    def test_file_round_trip(self, tmp_path):
        rec = generate_synthetic(9, 40)
        path = tmp_path / "rec.gzrec"
        data = write_recording_file(path, rec)
        assert path.read_bytes() == data == canonical_serialize(rec)
        assert read_recording_file(path) == rec


class TestAttestVerify:
    def test_round_trip_identity(self):
        rec = generate_synthetic(5, 30)
        key = SecretKey.from_seed(5)
        tag = attest(rec, key)
        assert len(tag.tag_bytes) == 64
        assert verify(rec, tag, key)

    def test_tag_is_hmac_of_canonical_bytes(self):
        rec = generate_synthetic(5, 30)
        key = SecretKey.from_seed(5)
        assert attest(rec, key).tag_bytes == _oracle_hmac(key.key_bytes, canonical_serialize(rec))

    def test_different_keys_different_tags(self):
        rec = make_recording(4)
        rng = random.Random(77)
        tags = {attest(rec, SecretKey(rng.randbytes(32))).tag_bytes for _ in range(100)}
        assert len(tags) == 100

    def test_preimage_bit_flip_changes_mac(self):
        # HMAC avalanche oracle: flip one bit of the canonical bytes and
        # recompute with an independent implementation.
        rec = make_recording(4)
        key = SecretKey.from_seed(1)
        pre = bytearray(canonical_serialize(rec))
        pre[len(pre) // 2] ^= 0x01
        assert _oracle_hmac(key.key_bytes, bytes(pre)) != attest(rec, key).tag_bytes

    def test_one_ulp_confidence_change_fails_verification(self):
        rec = make_recording(6, confidence=0.5)
        key = SecretKey.from_seed(2)
        tag = attest(rec, key)
        nudged = dataclasses.replace(rec.samples[3], confidence=math.nextafter(0.5, 1.0))
        samples = list(rec.samples)
        samples[3] = nudged
        assert not verify(dataclasses.replace(rec, samples=tuple(samples)), tag, key)

    def test_random_tags_never_verify(self):
        rec = make_recording(3)
        key = SecretKey.from_seed(3)
        rng = random.Random(123)
        assert not any(
            verify(rec, AttestationTag(rng.randbytes(64)), key) for _ in range(300)
        )

    def test_every_field_mutation_changes_tag(self):
        key = SecretKey.from_seed(4)
        rec = make_recording(2, n_invalid=1)
        baseline = attest(rec, key).tag_bytes
        mutants = [
            dataclasses.replace(rec, session_id=b"\x02" * 16),
            dataclasses.replace(rec, subject_alias=rec.subject_alias + "!"),
            dataclasses.replace(rec, sample_rate_hz=rec.sample_rate_hz + 1),
        ]
        for idx in range(len(rec.samples)):
            s = rec.samples[idx]
            for mutated in (
                dataclasses.replace(s, timestamp_us=s.timestamp_us + 1),
                dataclasses.replace(s, gaze_dir=(0.0, 1.0, 0.0)),
                dataclasses.replace(s, confidence=s.confidence / 2),
                dataclasses.replace(s, is_valid=not s.is_valid),
            ):
                samples = list(rec.samples)
                samples[idx] = mutated
                mutants.append(dataclasses.replace(rec, samples=tuple(samples)))
        for mutant in mutants:
            assert attest(mutant, key).tag_bytes != baseline

    def test_verify_false_for_unserializable_recording(self):
        rec = make_recording(2)
        key = SecretKey.from_seed(6)
        tag = attest(rec, key)
        broken = dataclasses.replace(rec, session_id=b"short")
        assert verify(broken, tag, key) is False


class TestKeyHandling:
    def test_key_length_enforced(self):
        with pytest.raises(ParameterError):
            SecretKey(b"\x00" * 31)

    def test_tag_length_enforced(self):
        with pytest.raises(ParameterError):
            AttestationTag(b"\x00" * 63)

    def test_repr_is_redacted(self):
        key = SecretKey.from_seed(42)
        assert key.key_bytes.hex() not in repr(key)
        assert key.key_bytes.hex() not in str(key)
        assert "redacted" in repr(key)

    def test_from_seed_is_deterministic(self):
        assert SecretKey.from_seed(9) == SecretKey.from_seed(9)
        assert SecretKey.from_seed(9) != SecretKey.from_seed(10)

    def test_whitebox_attestor_matches_direct_attest_without_key_access(self):
        key = SecretKey.generate()
        attestor = WhiteBoxAttestor(key)
        rec = make_recording(3)
        assert attestor.attest(rec) == attest(rec, key)
        assert not hasattr(attestor, "key")
        assert key.key_bytes.hex() not in repr(attestor)

    def test_tag_hex_is_lowercase_128_chars(self):
        tag = attest(make_recording(1), SecretKey.from_seed(0))
        assert len(tag.hex) == 128
        assert tag.hex == tag.hex.lower()
        assert AttestationTag.from_hex(tag.hex) == tag

    def test_debug_text_export_contains_no_binary(self):
        rec = make_recording(2)
        text = recording_to_text(rec)
        assert "session_id" in text and str(len(rec.samples)) in text
