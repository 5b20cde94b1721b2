"""Command line front end.

    olpdg check     --input FILE --out DIR
    olpdg solve     --input FILE --out DIR [--tol X]
    olpdg verify    --input FILE --out DIR [--trajectory CSV] [--seed N] [--trials N]
    olpdg smartgrid [--input FILE] --out DIR
    olpdg sweep     [--input FILE] --out DIR --param NAME --scale LIST

Exit status: 0 when every certificate passes, 2 when the game is not a
potential game, 1 when a certificate fails and 3 when a stage errors out.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import smartgrid as sg
from .gamefile import (GameFileError, bundled_scenario_path, load_game, read_trajectory,
                       write_lcp, write_trajectory)
from .game_core import LqGame
from .lcp import LcpError
from .pipeline import solve_ocp
from .potential_check import build_ocp, check_conditions
from .verify import certify

EXIT_OK, EXIT_CERT, EXIT_NOT_POTENTIAL, EXIT_STAGE = 0, 1, 2, 3
MODES = ("check", "solve", "verify", "smartgrid", "sweep")


class StageError(RuntimeError):
    def __init__(self, stage, exc):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    return x


def _write_report(out: Path, report: dict, lines: list) -> None:
    (out / "report.json").write_text(json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    (out / "summary.txt").write_text("\n".join(lines) + "\n")


def _load(path):
    try:
        obj = load_game(path)
    except (OSError, GameFileError) as exc:
        raise StageError("load", exc) from exc
    if isinstance(obj, sg.SmartGridScenario):
        return sg.to_nzdg(obj), obj
    return obj, None


def _potential_section(game: LqGame, tol: float) -> dict:
    rep = check_conditions(game, rtol=tol)
    return {"is_potential": rep.is_potential,
            "violations": [{"condition": c, "k": k, "players": list(ij), "deviation": dev}
                           for c, k, ij, dev in rep.violations]}


def _certify_section(cert) -> dict:
    return {
        "kkt": cert.kkt.as_dict(),
        "hessian": {"status": cert.hessian.status, "pd": cert.hessian.pd,
                    "min_pivot": cert.hessian.min_pivot},
        "best_response": [{"player": r.player + 1, "gap": r.gap, "J_candidate": r.J_candidate,
                           "J_best": r.J_best, "sampled_improvement": r.sampled_improvement,
                           "samples": r.samples} for r in cert.responses],
        "checks": cert.checks,
    }


def _summary_lines(title, checks: dict) -> list:
    lines = [title]
    for name, ok in checks.items():
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name}")
    return lines


def run_check(args, out: Path) -> int:
    game, _ = _load(args.input)
    pot = _potential_section(game, args.tol)
    lines = _summary_lines(f"check {args.input}", {"potential": pot["is_potential"]})
    for v in pot["violations"]:
        lines.append(f"  {v['condition']} k={v['k']} players={tuple(v['players'])} dev={v['deviation']:.3e}")
    _write_report(out, {"mode": "check", "potential": pot}, lines)
    return EXIT_OK if pot["is_potential"] else EXIT_NOT_POTENTIAL


def _solve_and_certify(game, out: Path, args, mode, traj=None, extra=None):
    report = {"mode": mode, "potential": _potential_section(game, args.tol)}
    if not report["potential"]["is_potential"]:
        _write_report(out, report, _summary_lines(f"{mode}: not a potential game",
                                                  {"potential": False}))
        return EXIT_NOT_POTENTIAL, None
    try:
        ocp = build_ocp(game, rtol=args.tol)
        sol = None
        if traj is None:
            sol = solve_ocp(game, ocp)
            traj = sol.trajectory
    except (LcpError, np.linalg.LinAlgError) as exc:
        report["error"] = {"stage": "solve", "message": str(exc)}
        _write_report(out, report, [f"{mode}: FAIL at stage solve: {exc}"])
        raise StageError("solve", exc) from exc
    if sol is not None:
        report["lcp"] = {"status": sol.lcp.status, "pivots": sol.lcp.pivots, "size": sol.problem.size,
                         "stage0_status": sol.stage0.status}
        write_lcp(out / "lcp.csv", sol.problem, sol.lcp)
    write_trajectory(out / "trajectory.csv", traj, game.dims)
    try:
        cert = certify(game, traj, ocp, kkt_tol=args.kkt_tol, trials=args.trials, seed=args.seed)
    except (LcpError, np.linalg.LinAlgError) as exc:
        report["error"] = {"stage": "verify", "message": str(exc)}
        _write_report(out, report, [f"{mode}: FAIL at stage verify: {exc}"])
        raise StageError("verify", exc) from exc
    report["certificates"] = _certify_section(cert)
    lines = _summary_lines(f"{mode} {args.input or 'bundled scenario'}", {"potential": True, **cert.checks})
    if extra is not None:
        more_report, more_lines = extra(traj)
        report.update(more_report)
        lines += more_lines
    _write_report(out, report, lines)
    return (EXIT_OK if cert.ok else EXIT_CERT), traj


def run_solve(args, out: Path) -> int:
    game, sc = _load(args.input)
    extra = _smartgrid_extra(sc, out) if sc is not None else None
    return _solve_and_certify(game, out, args, args.mode, extra=extra)[0]


def run_verify(args, out: Path) -> int:
    game, _ = _load(args.input)
    traj = None
    if args.trajectory:
        try:
            traj = read_trajectory(args.trajectory, game.dims)
        except (OSError, GameFileError, ValueError) as exc:
            raise StageError("load", exc) from exc
    return _solve_and_certify(game, out, args, "verify", traj=traj)[0]


def _smartgrid_extra(sc, out: Path):
    def extra(traj):
        rep = sg.extract_report(traj, sc)
        with open(out / "smartgrid.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            head = (["k"] + [f"X{j}" for j in range(sc.S)]
                    + [f"I{i + 1}_{a}" for i in range(sc.N) for a in range(sc.m[i])]
                    + [f"K{i + 1}" for i in range(sc.N)] + ["storage_margin"])
            w.writerow(head)
            for k in range(sc.K + 1):
                cons = rep.consumption[k] if k < sc.K else [""] * sc.mt
                w.writerow([k] + [format(a, ".17g") for a in rep.X[k]]
                           + [a if a == "" else format(a, ".17g") for a in cons]
                           + [format(a, ".17g") for a in rep.battery[k]]
                           + [format(rep.storage_margin[k], ".17g")])
        switches = sg.switch_stages(rep.consumption)
        full = sg.full_capacity_stages(rep.battery, sc.Kmax)
        data = {"smartgrid": {
            "switch_stages": switches, "full_capacity_stages": full,
            "total_storage": rep.battery.sum(1), "min_storage_margin": float(rep.storage_margin.min()),
            "cost_split": {"salvage": rep.salvage, "demand": rep.demand.sum(0),
                           "balance": rep.balance.sum(0), "storage": rep.storage.sum(0),
                           "incentive": rep.incentive.sum(0), "total": rep.total}}}
        lines = [f"switch stages (contribution -> consumption) per activity column: {switches}",
                 f"stages at full battery capacity per user: {full}",
                 f"min storage margin: {rep.storage_margin.min():.6g}"]
        return data, lines
    return extra


def _scenario(args):
    path = args.input or bundled_scenario_path()
    try:
        sc = load_game(path)
    except (OSError, GameFileError) as exc:
        raise StageError("load", exc) from exc
    if not isinstance(sc, sg.SmartGridScenario):
        raise StageError("load", ValueError(f"{path} is not a smartgrid scenario"))
    return sc


def run_smartgrid(args, out: Path) -> int:
    sc = _scenario(args)
    return _solve_and_certify(sg.to_nzdg(sc), out, args, "smartgrid", extra=_smartgrid_extra(sc, out))[0]


def run_sweep(args, out: Path) -> int:
    if not args.param or not args.scale:
        raise StageError("config", ValueError("sweep needs --param and --scale"))
    sc = _scenario(args)
    try:
        factors = [float(x) for x in args.scale.split(",") if x.strip()]
    except ValueError as exc:
        raise StageError("config", exc) from exc
    status = EXIT_OK
    rows = []
    for f in factors:
        sub = out / f"{args.param}_x{f:g}"
        sub.mkdir(parents=True, exist_ok=True)
        try:
            scaled = sg.scale_parameter(sc, args.param, f)
        except ValueError as exc:
            raise StageError("config", exc) from exc
        code, traj = _solve_and_certify(sg.to_nzdg(scaled), sub, args, "sweep",
                                        extra=_smartgrid_extra(scaled, sub))
        status = max(status, code)
        if traj is not None:
            rows.append([f] + traj.v.sum(1).tolist() + [float(traj.v.sum())])
    K = sc.K
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scale"] + [f"storage_k{k}" for k in range(K + 1)] + ["storage_total"])
        for r in rows:
            w.writerow([format(a, ".17g") for a in r])
    lines = [f"sweep {args.param} over {factors}"]
    lines += [f"  x{r[0]:g}: total storage {r[-1]:.6g}" for r in rows]
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    return status


RUNNERS = {"check": run_check, "solve": run_solve, "verify": run_verify,
           "smartgrid": run_smartgrid, "sweep": run_sweep}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="olpdg", description=__doc__.split("\n")[0] or None,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("mode", choices=MODES)
    p.add_argument("--input", help="game or scenario JSON file (smartgrid/sweep default to the bundled scenario)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--tol", type=float, default=1e-10, help="relative tolerance of the potential check")
    p.add_argument("--kkt-tol", type=float, default=1e-8, help="scaled KKT residual tolerance")
    p.add_argument("--seed", type=int, default=0, help="seed for the random perturbation search")
    p.add_argument("--trials", type=int, default=0, help="random perturbations per player")
    p.add_argument("--trajectory", help="trajectory.csv to verify instead of solving")
    p.add_argument("--param", help="scenario parameter to scale in sweep mode, e.g. a2")
    p.add_argument("--scale", help="comma separated scale factors, e.g. 0.8,1.0,1.2")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.mode in ("check", "solve", "verify") and not args.input:
        print(f"olpdg {args.mode}: --input is required", file=sys.stderr)
        return EXIT_STAGE
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        code = RUNNERS[args.mode](args, out)
    except StageError as exc:
        print(f"olpdg {args.mode}: failed at stage {exc}", file=sys.stderr)
        return EXIT_STAGE
    print((out / "summary.txt").read_text() if (out / "summary.txt").exists() else "", end="")
    return code


if __name__ == "__main__":
    sys.exit(main())
