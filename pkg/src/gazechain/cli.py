"""Command-line front end: run sessions, enumerate the matrix, verify files.

Exit codes for `run`:
  0   session completed with a passing verification
  10  quality gate rejected the recording, nothing was staked
  11  locked deadlock: stakes stranded in the contract
  12  subject aborted before lock
  13  completed without verification (lazy-collector policy)
  2   usage or parse errors

Every flag can also be supplied via an environment variable with the
GAZECHAIN_ prefix (e.g. GAZECHAIN_FEE for --fee); explicit flags win.
All artifacts are written under --out with content-addressed names, so
identical runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from .attestation import (
    TAG_LEN,
    AttestationTag,
    SecretKey,
    read_recording_file,
    verify,
)
from .errors import GazeChainError, NotFinalError, NotFoundError
from .gaze_data import QualityThresholds, validate_quality
from .ledger import Ledger, eth_to_wei, wei_to_eth
from .protocol import (
    POLICY_LABELS,
    SCENARIO_LABELS,
    MatrixCell,
    SessionConfig,
    SessionOutcome,
    Verdict,
    run_matrix,
    run_scenario,
    session_report,
)

ENV_PREFIX = "GAZECHAIN_"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_QUALITY_REJECTED = 10
EXIT_LOCKED = 11
EXIT_ABORTED = 12
EXIT_UNVERIFIED_COMPLETE = 13


def _env(name: str, fallback: str) -> str:
    return os.environ.get(ENV_PREFIX + name, fallback)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--x", default=_env("X", "0.025"), help="compensation X in ETH (default 0.025)")
    parser.add_argument("--fee", default=_env("FEE", "0"), help="flat per-transaction fee in ETH (default 0)")
    parser.add_argument("--seed", default=_env("SEED", "42"), help="64-bit session seed (default 42)")
    parser.add_argument("--samples", default=_env("SAMPLES", "1000"), help="synthetic sample count (default 1000)")
    parser.add_argument(
        "--min-tracking-ratio",
        default=_env("MIN_TRACKING_RATIO", "0.9"),
        help="quality gate: minimum valid-sample fraction (default 0.9)",
    )
    parser.add_argument(
        "--min-confidence",
        default=_env("MIN_CONFIDENCE", "0.8"),
        help="quality gate: minimum mean confidence over valid samples (default 0.8)",
    )
    parser.add_argument(
        "--min-samples",
        default=_env("MIN_SAMPLES", "100"),
        help="quality gate: minimum sample count (default 100)",
    )
    parser.add_argument(
        "--out", default=_env("OUT", "gazechain-out"), help="output directory (default ./gazechain-out)"
    )


def _build_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> SessionConfig:
    try:
        return SessionConfig(
            compensation_x=eth_to_wei(args.x),
            fee=eth_to_wei(args.fee),
            seed=int(args.seed),
            n_samples=int(args.samples),
            thresholds=QualityThresholds(
                min_tracking_ratio=float(args.min_tracking_ratio),
                min_mean_confidence=float(args.min_confidence),
                min_sample_count=int(args.min_samples),
            ),
        )
    except (GazeChainError, ValueError) as exc:
        parser.error(str(exc))
        raise AssertionError("unreachable")


def _write_artifact(out_dir: Path, prefix: str, suffix: str, content: bytes) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    name = f"{prefix}-{hashlib.sha3_256(content).hexdigest()[:8]}{suffix}"
    path = out_dir / name
    path.write_bytes(content)
    return path


def _json_bytes(doc: dict) -> bytes:
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _write_session_files(
    out_dir: Path, config: SessionConfig, scenario: str, policy: str, outcome: SessionOutcome
) -> dict[str, str]:
    files = {}
    report = session_report(config, scenario, policy, outcome)
    files["report"] = _write_artifact(out_dir, "session", ".json", _json_bytes(report)).name
    dump = outcome.ledger.to_dump().encode("utf-8")
    files["ledger"] = _write_artifact(out_dir, "ledger", ".json", dump).name
    if outcome.delivered_payload is not None:
        files["recording"] = _write_artifact(
            out_dir, "recording", ".gzrec", outcome.delivered_payload
        ).name
    key_line = (SecretKey.from_seed(config.seed).key_bytes.hex() + "\n").encode("ascii")
    files["key"] = _write_artifact(out_dir, "key", ".hex", key_line).name
    return files


def _run_exit_code(outcome: SessionOutcome) -> int:
    state = outcome.contract_state
    if state is None:
        return EXIT_QUALITY_REJECTED
    if state.value == "complete":
        return EXIT_OK if outcome.verification is Verdict.PASS else EXIT_UNVERIFIED_COMPLETE
    if state.value == "locked":
        return EXIT_LOCKED
    return EXIT_ABORTED


def _net_str(net: int) -> str:
    return ("+" if net >= 0 else "") + wei_to_eth(net)


def cmd_run(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = _build_config(args, parser)
    if args.strategy not in SCENARIO_LABELS:
        parser.error(f"unknown strategy {args.strategy!r} (choose from {', '.join(SCENARIO_LABELS)})")
    if args.policy not in POLICY_LABELS:
        parser.error(f"unknown policy {args.policy!r} (choose from {', '.join(POLICY_LABELS)})")
    outcome = run_scenario(config, args.strategy, POLICY_LABELS[args.policy])
    files = _write_session_files(Path(args.out), config, args.strategy, args.policy, outcome)

    state = outcome.contract_state.value if outcome.contract_state else "notcreated"
    print(f"scenario={args.strategy} policy={args.policy}")
    print(
        f"state={state} verification={outcome.verification.value} quality={outcome.quality.value}"
    )
    if outcome.anchor_tx_hash:
        print(f"anchor_tx={outcome.anchor_tx_hash.hex()}")
    print(
        f"subject   {outcome.subject.hex}  "
        f"{wei_to_eth(outcome.final_balances.get(outcome.subject, 0))} ETH "
        f"(net {_net_str(outcome.subject_net)})"
    )
    print(
        f"collector {outcome.collector.hex}  "
        f"{wei_to_eth(outcome.final_balances.get(outcome.collector, 0))} ETH "
        f"(net {_net_str(outcome.collector_net)})"
    )
    for kind, name in files.items():
        print(f"{kind}: {Path(args.out) / name}")
    return _run_exit_code(outcome)


def _matrix_table(cells: list[MatrixCell]) -> str:
    header = f"{'scenario':<12} {'policy':<22} {'state':<11} {'verify':<13} {'subject net':>14} {'collector net':>14}"
    lines = [header, "-" * len(header)]
    for cell in cells:
        state = cell.outcome.contract_state.value if cell.outcome.contract_state else "notcreated"
        lines.append(
            f"{cell.scenario:<12} {cell.policy:<22} {state:<11} "
            f"{cell.outcome.verification.value:<13} "
            f"{_net_str(cell.outcome.subject_net):>14} "
            f"{_net_str(cell.outcome.collector_net):>14}"
        )
    return "\n".join(lines)


def cmd_matrix(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = _build_config(args, parser)
    cells = run_matrix(config)
    out_dir = Path(args.out)
    rows = []
    for cell in cells:
        files = _write_session_files(out_dir, config, cell.scenario, cell.policy, cell.outcome)
        rows.append(
            {
                "scenario": cell.scenario,
                "policy": cell.policy,
                "contract_state": (
                    cell.outcome.contract_state.value if cell.outcome.contract_state else "notcreated"
                ),
                "verification": cell.outcome.verification.value,
                "quality": cell.outcome.quality.value,
                "subject_net": cell.outcome.subject_net,
                "collector_net": cell.outcome.collector_net,
                "files": files,
            }
        )
    summary = {
        "schema": "gazechain.matrix/1",
        "compensation_x": config.compensation_x,
        "fee": config.fee,
        "seed": config.seed,
        "cells": rows,
    }
    summary_path = _write_artifact(out_dir, "matrix", ".json", _json_bytes(summary))
    print(_matrix_table(cells))
    print(f"\nmatrix summary: {summary_path}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        recording = read_recording_file(args.recording)
    except (OSError, GazeChainError) as exc:
        print(f"error: cannot read recording: {exc}")
        return EXIT_USAGE
    try:
        ledger = Ledger.from_dump(Path(args.ledger_dump).read_text(encoding="utf-8"))
    except (OSError, GazeChainError) as exc:
        print(f"error: cannot read ledger dump: {exc}")
        return EXIT_USAGE
    try:
        tx_hash = bytes.fromhex(args.tx_hash.removeprefix("0x"))
        key = SecretKey.from_hex(args.key)
    except (ValueError, GazeChainError) as exc:
        print(f"error: {exc}")
        return EXIT_USAGE
    try:
        tx = ledger.get_transaction(tx_hash)
    except (NotFoundError, NotFinalError) as exc:
        print(f"error: anchor transaction not available in dump: {exc}")
        return EXIT_USAGE

    if len(tx.input_data) != TAG_LEN:
        print("FAIL: anchored payload is not a 64-byte attestation tag")
        return 1
    if not verify(recording, AttestationTag(tx.input_data), key):
        print("FAIL: recording does not match the anchored tag")
        return 1
    if args.min_tracking_ratio or args.min_confidence or args.min_samples:
        try:
            thresholds = QualityThresholds(
                min_tracking_ratio=float(args.min_tracking_ratio or 0.0),
                min_mean_confidence=float(args.min_confidence or 0.0),
                min_sample_count=int(args.min_samples or 1),
            )
        except (GazeChainError, ValueError) as exc:
            print(f"error: {exc}")
            return EXIT_USAGE
        if not validate_quality(recording, thresholds).is_reportable:
            print("FAIL: recording quality below thresholds")
            return 1
    print("PASS: recording matches the anchored tag")
    return EXIT_OK


def cmd_ledger_dump(args: argparse.Namespace) -> int:
    try:
        ledger = Ledger.from_dump(Path(args.infile).read_text(encoding="utf-8"))
    except (OSError, GazeChainError) as exc:
        print(f"error: {exc}")
        return EXIT_USAGE
    sys.stdout.write(ledger.to_dump())
    return EXIT_OK


def cmd_ledger_verify(args: argparse.Namespace) -> int:
    try:
        ledger = Ledger.from_dump(Path(args.infile).read_text(encoding="utf-8"))
    except (OSError, GazeChainError) as exc:
        print(f"error: {exc}")
        return EXIT_USAGE
    problems = []
    if not ledger.verify_chain():
        problems.append("hash chain does not recompute")
    if ledger.balances != ledger.replay_balances():
        problems.append("balances do not match a replay of the chain")
    if not ledger.conservation_holds():
        problems.append("conservation violated (balances + burned fees != genesis)")
    if problems:
        print("INVALID: " + "; ".join(problems))
        return 1
    n_tx = sum(len(b.transactions) for b in ledger.chain)
    print(f"OK: {len(ledger.chain)} blocks, {n_tx} transactions, chain and balances verify")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gazechain",
        description="Escrow-backed gaze-data collection sessions on a simulated ledger.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one session end to end")
    _add_config_flags(p_run)
    p_run.add_argument(
        "--strategy",
        default=_env("STRATEGY", "honest"),
        help="subject scenario: " + ", ".join(SCENARIO_LABELS),
    )
    p_run.add_argument(
        "--policy",
        default=_env("POLICY", "honest"),
        help="collector policy: " + ", ".join(POLICY_LABELS),
    )
    p_run.set_defaults(func=lambda a: cmd_run(a, p_run))

    p_matrix = sub.add_parser("matrix", help="run every scenario x policy cell")
    _add_config_flags(p_matrix)
    p_matrix.set_defaults(func=lambda a: cmd_matrix(a, p_matrix))

    p_verify = sub.add_parser("verify", help="verify a recording file against an anchored tag")
    p_verify.add_argument("--recording", required=True, help="recording file (canonical bytes)")
    p_verify.add_argument("--ledger-dump", required=True, help="ledger dump JSON file")
    p_verify.add_argument("--tx-hash", required=True, help="anchor transaction hash (hex)")
    p_verify.add_argument("--key", required=True, help="attestation key (64 hex chars)")
    p_verify.add_argument("--min-tracking-ratio", default=None, help="also re-check quality")
    p_verify.add_argument("--min-confidence", default=None, help="also re-check quality")
    p_verify.add_argument("--min-samples", default=None, help="also re-check quality")
    p_verify.set_defaults(func=lambda a: cmd_verify(a, p_verify))

    p_ledger = sub.add_parser("ledger", help="inspect or audit ledger dumps")
    ledger_sub = p_ledger.add_subparsers(dest="ledger_command", required=True)
    p_ldump = ledger_sub.add_parser("dump", help="re-emit a dump in canonical form")
    p_ldump.add_argument("--in", dest="infile", required=True, help="ledger dump JSON file")
    p_ldump.set_defaults(func=cmd_ledger_dump)
    p_lverify = ledger_sub.add_parser("verify", help="recompute hashes, links, and balances")
    p_lverify.add_argument("--in", dest="infile", required=True, help="ledger dump JSON file")
    p_lverify.set_defaults(func=cmd_ledger_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
