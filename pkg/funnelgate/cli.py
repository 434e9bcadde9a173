# funnelgate/cli.py
"""
funnelgate command line.

    certify   search for / verify a certificate
    simulate  closed-loop run with CSV, JSON, SVG artifacts
    selftest  embedded invariant suite
    report    re-print the artifacts of an output directory
    runs      list the run ledger of an output directory

Exit codes: 0 success, 1 infeasible / violations / failed checks,
2 configuration errors.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from funnelgate import run_ledger
from funnelgate.config import LOG_LEVEL, OUT_DIR, derive_seed, resolve_seed
from funnelgate.errors import ConfigError, DegenerateSystemError, FunnelGateError
from funnelgate.export import read_report_json, write_report_json, write_trajectory_csv, write_workbook
from funnelgate.lmi_cert import Certificate, SearchResult, VerifyReport, search, verify
from funnelgate.matrix_kernel import SymMatrix
from funnelgate.scenarios import SCENARIOS, Scenario, load_scenario
from funnelgate.selftest import run_selftest
from funnelgate.sim import run_output_feedback, run_state_feedback

logger = logging.getLogger("funnelgate")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


# ------------------------------------------------------------
# Manifest
# ------------------------------------------------------------

@dataclass
class RunManifest:
    scenario: str
    config_path: Optional[Path]
    out_dir: Path
    seed: int
    certify: bool = True
    simulate: bool = False
    plots: bool = True

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"cannot create output directory {self.out_dir}: {e}") from e
        if not os.access(self.out_dir, os.W_OK):
            raise ConfigError(f"output directory {self.out_dir} is not writable")


def _manifest(args, simulate: bool) -> RunManifest:
    return RunManifest(
        scenario=args.scenario,
        config_path=Path(args.config) if args.config else None,
        out_dir=Path(args.out),
        seed=resolve_seed(args.seed),
        simulate=simulate,
        plots=not getattr(args, "no_plots", False),
    )


def _scenario(args, manifest: RunManifest) -> Scenario:
    scenario = load_scenario(manifest.scenario, manifest.config_path)
    return scenario.with_overrides(
        alpha=args.alpha,
        horizon=args.horizon,
        step=args.step,
        seed=manifest.seed,
    )


def _parse_taus(text: str):
    try:
        taus = tuple(float(v) for v in text.split(","))
    except ValueError as e:
        raise ConfigError(f"--tau: {e}") from e
    if len(taus) != 5:
        raise ConfigError(f"--tau needs 5 comma-separated values, got {len(taus)}")
    return taus


# ------------------------------------------------------------
# Printing
# ------------------------------------------------------------

def _print_verify(report: VerifyReport) -> None:
    print("========================================")
    print("  Certificate check")
    print("========================================")
    for name, value in report.margins.items():
        print(f"  {name:<20} {value: .6e}")
    print()
    print(f"  eps group:   {'ok' if report.eps_group else 'FAILED'}")
    print(f"  H group:     {'ok' if report.h_group else 'FAILED'}")
    print(f"  well formed: {'ok' if report.well_formed else 'FAILED'}")
    for note in report.notes:
        print(f"  note: {note}")


def _print_search(result: SearchResult) -> None:
    print(f"alpha floor (eps group):  {result.alpha_floor:.6g}")
    print(f"best Gramian ratio (H):   {result.gramian_ratio:.6g}")
    print(f"search: {result.message}")
    if result.certificate is not None:
        print(f"alpha = {result.certificate.alpha:.6g}")
        print("tau   = " + ", ".join(f"{t:.6g}" for t in result.certificate.taus))


def _print_violations(report_doc: dict) -> None:
    print("========================================")
    print("  Simulation report")
    print("========================================")
    for kind, v in report_doc["violations"].items():
        first = "-" if v["first_time"] is None else f"{v['first_time']:.4f} s"
        print(f"  {kind:<12} {v['count']:>8}   first: {first}")
    print()
    for name, value in sorted(report_doc.get("margins", {}).items()):
        print(f"  min margin {name:<8} {value: .6e}")
    print(f"  sup V1       {report_doc.get('sup_V1', 0.0):.6e}")
    print(f"  eps drift    {report_doc.get('eps_drift', 0.0):.6e}")
    print(f"  u2 crossings {report_doc.get('u2_crossings', 0):>8}")
    print(f"  u2 held at 0 {report_doc.get('sliding_steps', 0):>8} steps")
    print()
    print("PASSED" if report_doc["passed"] else "FAILED")


# ------------------------------------------------------------
# Commands
# ------------------------------------------------------------

def _certify(scenario: Scenario, args, seed: int, alpha_hint: Optional[float]):
    """Returns (certificate or None, report or None, ok)."""
    problem = scenario.problem()
    if args.tau is not None:
        taus = _parse_taus(args.tau)
        if scenario.certificate is not None:
            H = scenario.certificate.H
        else:
            H = SymMatrix(problem.dominance_floor.entries + np.eye(problem.n))
        cert = Certificate(scenario.alpha, taus, H)
        report = verify(problem, cert)
        ok = report.eps_group if args.eps_only else report.feasible
        return cert, report, ok

    if scenario.certificate is not None and args.alpha is None:
        report = verify(problem, scenario.certificate)
        ok = report.eps_group if args.eps_only else report.feasible
        if ok:
            return scenario.certificate, report, True
        logger.info("stored certificate rejected, searching")

    result = search(problem, alpha_hint=alpha_hint, seed=derive_seed(seed, "h-search"),
                    eps_only=args.eps_only)
    _print_search(result)
    ok = result.found or (args.eps_only and result.report is not None and result.report.eps_group)
    return result.certificate, result.report, ok


def cmd_certify(args) -> int:
    manifest = _manifest(args, simulate=False)
    scenario = _scenario(args, manifest)
    cert, report, ok = _certify(scenario, args, manifest.seed, args.alpha)
    if report is not None:
        _print_verify(report)
    if cert is not None:
        path = manifest.out_dir / "certificate.json"
        cert.save(path)
        print(f"\nCertificate written to: {path}")
    code = EXIT_OK if ok else EXIT_FAIL
    run_ledger.record_run(manifest.out_dir, "certify", scenario.name, manifest.seed, code,
                          {"feasible": bool(ok), "alpha": cert.alpha if cert else None})
    return code


def cmd_simulate(args) -> int:
    manifest = _manifest(args, simulate=True)
    scenario = _scenario(args, manifest)

    # the simulated law runs at the preset alpha unless a certificate fixes another
    cert, report, ok = _certify(scenario, args, manifest.seed, scenario.alpha)
    if report is not None:
        _print_verify(report)
    if not ok:
        logger.warning("no certificate for %s: the run is not covered by a guarantee", scenario.name)
    H = cert.H if (cert is not None and report is not None and report.h_group) else None
    if cert is not None:
        cert.save(manifest.out_dir / "certificate.json")

    law = scenario.law(cert.alpha if cert is not None else None)
    config = scenario.sim_config(H=H)
    if scenario.is_output:
        traj, sim_report = run_output_feedback(scenario.plant, law, scenario.funnel, config)
    else:
        traj, sim_report = run_state_feedback(scenario.plant, law, scenario.funnel, config)

    out = manifest.out_dir
    write_trajectory_csv(traj, out / "trajectory.csv")
    extra = {"scenario": scenario.name, "seed": manifest.seed, "certified": bool(ok)}
    path = write_report_json(sim_report, out / "violations.json", extra)
    if manifest.plots:
        from funnelgate.plots import emit_plots

        emit_plots(traj, scenario.funnel, scenario.weights, out / "plots",
                   P1_bar=None if scenario.is_output else law.P1_bar)
    if args.xlsx:
        write_workbook(traj, sim_report, out / "trajectory.xlsx")

    _print_violations(read_report_json(path))
    print(f"\nArtifacts written to: {out}")
    code = EXIT_OK if sim_report.passed else EXIT_FAIL
    run_ledger.record_run(out, "simulate", scenario.name, manifest.seed, code,
                          {"passed": sim_report.passed, "steps": sim_report.steps})
    return code


def _parse_tolerances(items: List[str]) -> dict:
    tol = {}
    for item in items or []:
        name, _, value = item.partition("=")
        try:
            tol[name] = float(value)
        except ValueError as e:
            raise ConfigError(f"--tolerance {item!r}: {e}") from e
    return tol


def cmd_selftest(args) -> int:
    seed = resolve_seed(args.seed)
    ok = run_selftest(seed=seed, tolerances=_parse_tolerances(args.tolerance))
    code = EXIT_OK if ok else EXIT_FAIL
    if args.record:
        run_ledger.record_run(Path(args.out), "selftest", None, seed, code, {"passed": ok})
    return code


def cmd_report(args) -> int:
    out = Path(args.out)
    vpath = out / "violations.json"
    cpath = out / "certificate.json"
    if not vpath.exists() and not cpath.exists():
        raise ConfigError(f"no violations.json or certificate.json in {out}")
    code = EXIT_OK
    if cpath.exists():
        cert = Certificate.load(cpath)
        print(f"certificate: alpha={cert.alpha:.6g}, tau=" + ", ".join(f"{t:.6g}" for t in cert.taus))
    if vpath.exists():
        doc = read_report_json(vpath)
        _print_violations(doc)
        code = EXIT_OK if doc.get("passed") else EXIT_FAIL
    return code


def cmd_runs(args) -> int:
    rows = run_ledger.list_runs(Path(args.out), limit=args.limit)
    if not rows:
        print(f"No runs recorded in {args.out}")
        return EXIT_OK
    print(f"{'id':>4}  {'started':<25} {'command':<9} {'scenario':<13} {'seed':>10} {'exit':>4}")
    for r in rows:
        print(f"{r['id']:>4}  {r['started']:<25} {r['command']:<9} {str(r['scenario'] or '-'):<13} "
              f"{str(r['seed']):>10} {r['exit_code']:>4}")
    return EXIT_OK


# ------------------------------------------------------------
# Parser
# ------------------------------------------------------------

def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", default="example2", help=f"one of {', '.join(SCENARIOS)}")
    p.add_argument("--config", help="JSON run document (scenario custom)")
    p.add_argument("--alpha", type=float, help="fix alpha instead of sweeping")
    p.add_argument("--tau", help="verify only: tau_1..tau_5 as csv")
    p.add_argument("--horizon", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--seed", type=int, default=0, help="FUNNELGATE_SEED overrides this")
    p.add_argument("--eps-only", action="store_true",
                   help="accept a certificate of the eps group alone")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("--out", default=OUT_DIR, help="output directory (FUNNELGATE_OUT)")

    parser = argparse.ArgumentParser(prog="funnelgate", description="Funnel-constrained control toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", parents=[common], help="search or verify a certificate")
    _add_run_flags(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("simulate", parents=[common], help="closed-loop simulation")
    _add_run_flags(p)
    p.add_argument("--no-plots", action="store_true")
    p.add_argument("--xlsx", action="store_true", help="also write trajectory.xlsx")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("selftest", parents=[common], help="embedded invariant suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", action="append", metavar="NAME=VALUE",
                   help=argparse.SUPPRESS)
    p.add_argument("--record", action="store_true", help="append to the run ledger")
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("report", parents=[common], help="print stored artifacts")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("runs", parents=[common], help="list recorded runs")
    p.add_argument("--limit", type=int, default=20)
    p.set_defaults(func=cmd_runs)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, DegenerateSystemError) as e:
        logger.error("%s", e)
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except FunnelGateError as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
