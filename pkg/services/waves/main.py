"""
Command line for the wave solver.

    waves run    --config run.cfg --out out/
    waves verify --config run.cfg --n 128
    waves audit  --config run.cfg --trajectory out/trajectory.jsonl

Exit codes: 0 ok, 1 verification or audit failure, 2 input error,
3 runtime abort.
"""
import argparse
import json
import sys
import uuid
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from services.worker.main import WorkerPool
from services.worker.tasks import batch_verify

from .core.config import get_settings
from .core.exceptions import (
    EXIT_OK,
    EXIT_RUNTIME_ABORT,
    EXIT_VERIFICATION_FAILED,
    SimulationAbort,
    WaveError,
)
from .core.logging_config import get_logger, set_run_id, setup_logging
from .numerics.dynamics import iterate
from .numerics.energy import energy_rate_audit, estimate_audit, random_state
from .numerics.spectral import PeriodicGrid, flipped_hilbert
from .schemas.config import SolverConfig, load_config
from .schemas.reports import AuditSummary
from .schemas.snapshot import Snapshot, append_snapshots, read_trajectory, write_snapshot

logger = get_logger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


def _output_path(out_dir: Path, name: str) -> Path:
    path = Path(name)
    return path if path.is_absolute() else out_dir / path


def _write_json(path: Path, payload: Dict[str, Any]) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n", encoding="utf-8")


def cmd_run(config: SolverConfig, out_dir: Path, run_id: str, quiet: bool = False) -> int:
    """Integrate, writing the trajectory, final snapshot, diagnostics CSV and run summary."""
    trajectory_path = _output_path(out_dir, config.snapshot_path)
    diagnostics_path = _output_path(out_dir, config.diagnostics_path)
    trajectory_path.write_text("", encoding="utf-8")

    rows: List[Dict[str, float]] = []
    final = None
    summary: Dict[str, Any] = {"run_id": run_id, "status": "completed", "reason": None, "t": None}
    exit_code = EXIT_OK
    n_steps = config.n_steps
    try:
        for record in tqdm(iterate(config), total=n_steps + 1, desc="run", disable=quiet, file=sys.stderr):
            if record.step % config.snapshot_every == 0:
                append_snapshots(trajectory_path, [Snapshot.from_state(record.state)])
            if record.step % config.diagnostics_every == 0 or record.step == n_steps:
                rows.append(record.row)
            final = record.state
    except SimulationAbort as e:
        summary.update({"status": "aborted", "reason": e.reason, "t": e.t, "detail": str(e.detail)})
        exit_code = EXIT_RUNTIME_ABORT

    pd.DataFrame(rows).to_csv(diagnostics_path, index=False, float_format=CSV_FLOAT_FORMAT)
    if final is not None:
        write_snapshot(out_dir / "final_snapshot.json", Snapshot.from_state(final))
        summary["final_t"] = final.time
    summary["rows"] = len(rows)
    summary["config"] = config.model_dump(mode="json")
    _write_json(out_dir / "run_summary.json", summary)
    logger.info("Diagnostics written to %s", diagnostics_path)
    return exit_code


def cmd_verify(config: SolverConfig, out_dir: Path, run_id: str) -> int:
    """Run all verification suites; verify_report.json holds per-check results."""
    with WorkerPool(get_settings().MAX_WORKERS, name="verify") as pool:
        with flipped_hilbert(config.debug_flip_hilbert):
            report = batch_verify(config, run_id=run_id, pool=pool)
    (out_dir / "verify_report.json").write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    for suite in report.suites:
        print(f"{suite.suite:24s} {'PASS' if suite.passed else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_VERIFICATION_FAILED


def cmd_audit(config: SolverConfig, trajectory: Path, out_dir: Path, run_id: str) -> int:
    """Energy-rate audit of a trajectory plus the seeded estimate ensemble."""
    states = [s.to_state() for s in read_trajectory(trajectory)]
    rng = np.random.default_rng(config.seed)
    grid = PeriodicGrid(config.n_points)
    ensemble = [random_state(grid, rng) for _ in range(config.ensemble_size)]

    with WorkerPool(get_settings().MAX_WORKERS, name="audit") as pool:
        rate, energies = energy_rate_audit(states, config.sobolev_r, config.gravity, config.solver_tol, pool.map)
        estimates = estimate_audit(ensemble, config.sobolev_r, config.gravity,
                                   solver_tol=config.solver_tol, map_fn=pool.map)

    energies.to_csv(out_dir / "audit_energy.csv", index=False, float_format=CSV_FLOAT_FORMAT)
    estimates.to_csv(out_dir / "audit_report.csv", index=False, float_format=CSV_FLOAT_FORMAT)
    estimates_passed = bool(estimates["passed"].all())
    summary = AuditSummary(
        run_id=run_id,
        trajectory=str(trajectory),
        sobolev_r=config.sobolev_r,
        energy_rate=rate,
        estimates_passed=estimates_passed,
        passed=rate.passed and estimates_passed,
    )
    (out_dir / "audit_summary.json").write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
    print(f"energy rate {'PASS' if rate.passed else 'FAIL'}, estimates {'PASS' if estimates_passed else 'FAIL'}")
    return EXIT_OK if summary.passed else EXIT_VERIFICATION_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="waves", description="Gravity-capillary wave simulator and verifier.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "integrate a configuration"),
        ("verify", "run the operator and identity suites"),
        ("audit", "audit energy growth and error-term estimates"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out", help="output directory (default from settings)")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--n", type=int, help="override the grid size N")
        p.add_argument("--quiet", action="store_true", help="warnings only, no progress bar")
        if name == "audit":
            p.add_argument("--trajectory", help="JSON Lines trajectory (default: <out>/<snapshot_path>)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    setup_logging(
        log_level="WARNING" if args.quiet else settings.LOG_LEVEL,
        log_file=settings.LOG_FILE,
        max_bytes=settings.LOG_MAX_BYTES,
        backup_count=settings.LOG_BACKUP_COUNT,
    )
    run_id = uuid.uuid4().hex[:8]
    set_run_id(run_id)

    try:
        config = load_config(args.config, {"n_points": args.n, "seed": args.seed})
        out_dir = Path(args.out or settings.DEFAULT_OUTPUT_DIR)
        out_dir.mkdir(parents=True, exist_ok=True)
        logger.info("%s: N=%d, output %s", args.command, config.n_points, out_dir)
        if args.command == "run":
            return cmd_run(config, out_dir, run_id, quiet=args.quiet)
        if args.command == "verify":
            return cmd_verify(config, out_dir, run_id)
        trajectory = Path(args.trajectory) if args.trajectory else _output_path(out_dir, config.snapshot_path)
        return cmd_audit(config, trajectory, out_dir, run_id)
    except WaveError as e:
        logger.error("%s: %s %s", e.error_code, e.detail, e.extra or "")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
