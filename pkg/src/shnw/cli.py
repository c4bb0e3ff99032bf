"""Command-line entry point: run, ensemble, verify, exponents, analyze."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import diagnostics as diag
from . import store
from .analysis import ensemble_analysis
from .config import ConfigError, apply_seed_override, build_manifest, config_from_manifest, parse_config
from .dynamics import SimConfig, run_trajectory
from .reference import make_reference_outputs
from .verify import run_verify


def _load_config(path: str) -> SimConfig:
    cfg_path = Path(path)
    if not cfg_path.exists():
        raise ConfigError(f"configuration file not found: {path}")
    return apply_seed_override(parse_config(cfg_path.read_text()))


def _emit_error(exc: Exception) -> int:
    payload = {"error": str(exc), "type": type(exc).__name__}
    print(json.dumps(payload), file=sys.stderr)
    return 1


def _run_trajectories(cfg: SimConfig, indices, jobs: int):
    if jobs > 1 and len(indices) > 1:
        import multiprocessing as mp

        with mp.Pool(processes=jobs) as pool:
            records = pool.starmap(run_trajectory, [(cfg, k) for k in indices])
    else:
        records = [run_trajectory(cfg, k) for k in indices]
    # merge order is by trajectory index, independent of completion order
    return sorted(records, key=lambda r: r.trajectory_index)


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    out_dir = Path(args.out)
    manifest = build_manifest(cfg, str(out_dir))
    store.write_manifest(out_dir, manifest)
    record = run_trajectory(cfg, args.traj)
    files = store.write_trajectory(out_dir, record)
    print(f"trajectory {args.traj}: status={record.status}, "
          f"{len(record.rows)} samples, {len(files)} files in {out_dir}")
    return 0


def cmd_ensemble(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    out_dir = Path(args.out)
    manifest = build_manifest(cfg, str(out_dir))
    store.write_manifest(out_dir, manifest)
    jobs = args.jobs if args.jobs else (os.cpu_count() or 1)
    records = _run_trajectories(cfg, range(cfg.trajectories), jobs)
    for rec in records:
        store.write_trajectory(out_dir, rec)
    summary = diag.build_summary([r.rows for r in records])
    analysis = ensemble_analysis(summary, cfg)
    store.write_summary(out_dir, summary, analysis)
    statuses = {}
    for rec in records:
        statuses[rec.status] = statuses.get(rec.status, 0) + 1
    print(f"ensemble of {cfg.trajectories} trajectories in {out_dir}: {statuses}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    ok, results = run_verify(args.level)
    width = max(len(name) for name, _, _ in results)
    for name, passed, detail in results:
        print(f"{name:<{width}}  {'PASS' if passed else 'FAIL'}  {detail}")
    if args.out:
        ref = make_reference_outputs(args.out, args.level)
        print(f"reference outputs written to {ref}")
    print(f"verify level={args.level}: {'all checks passed' if ok else 'FAILURES present'}")
    return 0 if ok else 1


def cmd_exponents(args: argparse.Namespace) -> int:
    dims = [args.d] if args.d is not None else [5, 6, 7, 8]
    for d in dims:
        q, r = diag.strichartz_exponents(d)
        print(f"d={d}: q={q} r={r}")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    out_dir = Path(args.dir)
    manifest = store.read_manifest(out_dir)
    cfg = apply_seed_override(config_from_manifest(manifest))
    csvs = store.list_trajectory_csvs(out_dir)
    if not csvs:
        raise ConfigError(f"no trajectory CSV files in {out_dir}")
    rows = [store.read_trajectory_csv(p) for p in csvs]
    summary = diag.build_summary(rows)
    tails = None
    if (out_dir / store.TAILS_NAME).exists():
        tails, _ = store.read_tail_samples(out_dir)
    analysis = ensemble_analysis(summary, cfg, tail_samples=tails)
    store.write_summary(out_dir, summary, analysis)
    line = {k: analysis[k] for k in sorted(analysis)}
    print(f"analyzed {len(csvs)} trajectories in {out_dir}: "
          + ", ".join(f"{k}={v:.6g}" for k, v in line.items()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shnw",
                                     description="Stochastic Hartree wave simulator and verification harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one trajectory")
    p_run.add_argument("config")
    p_run.add_argument("--traj", type=int, default=0)
    p_run.add_argument("--out", default="shnw_output")
    p_run.set_defaults(fn=cmd_run)

    p_ens = sub.add_parser("ensemble", help="integrate all configured trajectories")
    p_ens.add_argument("config")
    p_ens.add_argument("--jobs", type=int, default=0)
    p_ens.add_argument("--out", default="shnw_output")
    p_ens.set_defaults(fn=cmd_ensemble)

    p_ver = sub.add_parser("verify", help="run the built-in invariant suite")
    p_ver.add_argument("--level", choices=["quick", "full"], default="quick")
    p_ver.add_argument("--out", default=None,
                       help="also write the reference output directory here")
    p_ver.set_defaults(fn=cmd_verify)

    p_exp = sub.add_parser("exponents", help="print the Strichartz exponent table")
    p_exp.add_argument("d", nargs="?", type=int, default=None)
    p_exp.set_defaults(fn=cmd_exponents)

    p_ana = sub.add_parser("analyze", help="recompute ensemble summaries from stored CSVs")
    p_ana.add_argument("dir")
    p_ana.set_defaults(fn=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:
        return _emit_error(exc)


if __name__ == "__main__":
    sys.exit(main())
