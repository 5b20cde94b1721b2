"""JSON game files (``schema: 1``) and CSV trajectory files.

A game file is a JSON object with ``schema``, ``kind`` and the arrays of the
corresponding dataclass as row-major nested lists::

    {"schema": 1, "kind": "lq_game",
     "dims": {"n": 2, "N": 2, "K": 3, "m": [1, 1], "s": [1, 1], "l": 1},
     "A": [...], "B": [...], ..., "x0": [...]}

    {"schema": 1, "kind": "smartgrid", "S": 3, "N": 2, "K": 12, "m": [2, 2],
     "Atilde": [...], ...}
"""

from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .game_core import Dims, EquilibriumTrajectory, LqGame, validate
from .smartgrid import SmartGridScenario

SCHEMA = 1
GAME_ARRAYS = ("A", "B", "Qi", "pi", "Ri", "Di", "di", "Li", "M", "Ncon", "r", "x0")
SCENARIO_ARRAYS = ("Atilde", "Btilde", "P", "q", "rcost", "b", "a", "Ltilde", "eps", "Kmax",
                   "X0", "Xminus1")


class GameFileError(ValueError):
    pass


def _need(doc, key, where="document"):
    if key not in doc:
        raise GameFileError(f"missing field {key!r} in {where}")
    return doc[key]


def _array(doc, key):
    try:
        return np.array(_need(doc, key), dtype=float)
    except (TypeError, ValueError) as exc:
        raise GameFileError(f"field {key!r} is not a numeric array: {exc}") from exc


def game_to_dict(obj) -> dict:
    if isinstance(obj, LqGame):
        d = obj.dims
        out = {"schema": SCHEMA, "kind": "lq_game",
               "dims": {"n": d.n, "N": d.N, "K": d.K, "m": list(d.m), "s": list(d.s), "l": d.l}}
        out.update({k: getattr(obj, k).tolist() for k in GAME_ARRAYS})
        return out
    if isinstance(obj, SmartGridScenario):
        out = {"schema": SCHEMA, "kind": "smartgrid", "S": obj.S, "N": obj.N, "K": obj.K,
               "m": list(obj.m)}
        out.update({k: getattr(obj, k).tolist() for k in SCENARIO_ARRAYS})
        return out
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def game_from_dict(doc: dict):
    if not isinstance(doc, dict):
        raise GameFileError("top level must be an object")
    schema = _need(doc, "schema")
    if schema != SCHEMA:
        raise GameFileError(f"unsupported schema {schema!r}, expected {SCHEMA}")
    kind = _need(doc, "kind")
    if kind == "lq_game":
        dd = _need(doc, "dims")
        try:
            dims = Dims(**{k: _need(dd, k, "dims") for k in ("n", "N", "K", "m", "s", "l")})
        except (TypeError, ValueError) as exc:
            if isinstance(exc, GameFileError):
                raise
            raise GameFileError(f"bad dims: {exc}") from exc
        game = LqGame(dims=dims, **{k: _array(doc, k) for k in GAME_ARRAYS})
        rep = validate(game)
        if not rep.ok:
            raise GameFileError("game failed validation:\n" + str(rep))
        return game
    if kind == "smartgrid":
        head = {k: _need(doc, k) for k in ("S", "N", "K", "m")}
        sc = SmartGridScenario(**head, **{k: _array(doc, k) for k in SCENARIO_ARRAYS})
        bad = sc.problems()
        if bad:
            raise GameFileError("scenario failed validation: " + "; ".join(bad))
        return sc
    raise GameFileError(f"unknown kind {kind!r}; expected 'lq_game' or 'smartgrid'")


def load_game(path):
    """Read an ``LqGame`` or ``SmartGridScenario`` from a JSON file."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GameFileError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return game_from_dict(doc)


def dumps_game(obj) -> str:
    """One top-level field per line, arrays kept on their line."""
    doc = game_to_dict(obj)
    body = ",\n".join(f" {json.dumps(k)}: {json.dumps(v)}" for k, v in doc.items())
    return "{\n" + body + "\n}\n"


def save_game(obj, path) -> None:
    Path(path).write_text(dumps_game(obj))


def bundled_scenario_path() -> Path:
    return Path(str(resources.files("olpdg") / "data" / "smartgrid_default.json"))


# --- trajectories ------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trajectory_columns(dims: Dims) -> list:
    return (["k"] + [f"x{j}" for j in range(dims.n)] + [f"u{j}" for j in range(dims.mt)]
            + [f"v{j}" for j in range(dims.st)] + [f"lambda{j}" for j in range(dims.n)]
            + [f"mu{j}" for j in range(dims.l)])


def write_trajectory(path, traj: EquilibriumTrajectory, dims: Dims) -> None:
    """One row per stage; the ``u`` cells are empty at the terminal stage."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_columns(dims))
        for k in range(dims.K + 1):
            u = [_fmt(a) for a in traj.u[k]] if k < dims.K else [""] * dims.mt
            w.writerow([k] + [_fmt(a) for a in traj.x[k]] + u + [_fmt(a) for a in traj.v[k]]
                       + [_fmt(a) for a in traj.lam[k]] + [_fmt(a) for a in traj.mu[k]])


def read_trajectory(path, dims: Dims) -> EquilibriumTrajectory:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header != trajectory_columns(dims):
        raise GameFileError(f"{path}: trajectory columns do not match the game dimensions")
    if len(body) != dims.K + 1:
        raise GameFileError(f"{path}: expected {dims.K + 1} stages, found {len(body)}")
    n, m, s, l = dims.n, dims.mt, dims.st, dims.l
    x = np.array([[float(c) for c in r[1:1 + n]] for r in body])
    u = np.array([[float(c) for c in r[1 + n:1 + n + m]] for r in body[:-1]]).reshape(dims.K, m)
    o = 1 + n + m
    v = np.array([[float(c) for c in r[o:o + s]] for r in body])
    lam = np.array([[float(c) for c in r[o + s:o + s + n]] for r in body])
    mu = np.array([[float(c) for c in r[o + s + n:o + s + n + l]] for r in body])
    return EquilibriumTrajectory(x=x, u=u, v=v, lam=lam, mu=mu)


def write_lcp(path, problem, solution) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "stage", "kind", "which", "q", "z", "w"])
        labels = problem.labels or [("", "", "")] * problem.size
        for j, (lab, q, z, ww) in enumerate(zip(labels, problem.q, solution.z, solution.w)):
            w.writerow([j, *lab, _fmt(q), _fmt(z), _fmt(ww)])
