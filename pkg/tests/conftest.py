"""Shared helpers for building recordings and ledgers in tests."""

from __future__ import annotations

import math
import random

from gazechain import Address, GazeRecording, GazeSample, Ledger


def make_recording(
    n_valid: int,
    n_invalid: int = 0,
    confidence: float = 0.95,
    invalid_confidence: float = 0.2,
    session_id: bytes = b"\x01" * 16,
    subject_alias: str = "test-subject",
    sample_rate_hz: int = 120,
) -> GazeRecording:
    """Hand-built recording with an exact valid/invalid split."""
    samples = []
    for i in range(n_valid + n_invalid):
        is_valid = i < n_valid
        samples.append(
            GazeSample(
                timestamp_us=i * 1_000_000 // sample_rate_hz,
                gaze_dir=(0.0, 0.0, 1.0),
                confidence=confidence if is_valid else invalid_confidence,
                is_valid=is_valid,
            )
        )
    return GazeRecording(
        session_id=session_id,
        subject_alias=subject_alias,
        sample_rate_hz=sample_rate_hz,
        samples=tuple(samples),
    )


def random_recording(rng: random.Random, n_samples: int | None = None) -> GazeRecording:
    """Structurally valid recording with randomized contents."""
    if n_samples is None:
        n_samples = rng.randint(0, 40)
    samples = []
    ts = 0
    for _ in range(n_samples):
        ts += rng.randint(1, 20_000)
        raw = [rng.uniform(-1, 1) for _ in range(3)]
        norm = math.sqrt(sum(c * c for c in raw)) or 1.0
        samples.append(
            GazeSample(
                timestamp_us=ts,
                gaze_dir=tuple(c / norm for c in raw),
                confidence=rng.random(),
                is_valid=rng.random() < 0.8,
            )
        )
    return GazeRecording(
        session_id=rng.randbytes(16),
        subject_alias=f"rand-{rng.randrange(16**6):06x}",
        sample_rate_hz=rng.randint(30, 1000),
        samples=tuple(samples),
    )


def fund_accounts(rng: random.Random, n: int, top: int = 10**18) -> list[tuple[Address, int]]:
    return [
        (Address.from_seed(f"acct-{rng.randrange(2**32)}-{i}"), rng.randrange(top))
        for i in range(n)
    ]


def replay_chain(ledger: Ledger) -> dict[Address, int]:
    """Independent sequential replay: the balance oracle used by tests."""
    balances = dict(ledger.genesis_allocations)
    for block in ledger.chain:
        for tx in block.transactions:
            balances[tx.sender] = balances.get(tx.sender, 0) - tx.value - tx.fee
            balances[tx.recipient] = balances.get(tx.recipient, 0) + tx.value
    return balances
