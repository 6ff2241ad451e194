"""Batch command line for the estimation and detection experiments.

Every command resolves a configuration from three layers (built-in
defaults, an optional JSON document given with ``--config``, then flags),
validates it against a JSON schema that rejects unknown keys, and writes a
CSV table preceded by a ``#`` header block::

    # qframes 0.1.0
    # command: qdoc
    # config: {...resolved config, sorted keys...}
    # seed: 0
    # wall_clock_s: 0.123
    M,L,method,kind,eta,pf,pd
    ...

Numbers are written with 12 significant digits.  The ``config`` line is a
complete config document: feeding it back through ``--config`` reproduces
the table.  ``--no-clock`` drops the wall-clock line so repeated runs give
byte-identical files.  ``--workers`` (or ``QFRAMES_WORKERS``) changes only
the run time, never the output.

Exit status: 0 success, 2 parse error, 3 validation error, 4 self-check
failure, 5 enumeration cap exceeded.
"""

from __future__ import annotations

import argparse
import copy
import io
import json
import sys
import time
from typing import Callable, Dict, List, Optional

import jsonschema
import numpy as np

from . import __version__
from .coord_frame import FrameError
from .detection import (
    ENUMERATION_CAP,
    BinaryHypothesis,
    DetectionError,
    EnumerationCapExceeded,
    QdocCurve,
    default_rotation_set,
    orientation_sweep,
    qdoc_exact,
    qdoc_monte_carlo,
    upper_envelope,
)
from .estimation import EstimationError, tradeoff_grid
from .herm_space import OperatorError, density_from_bloch, pure_state
from .povm import (
    PlatonicSpec,
    PovmError,
    entf_params,
    ic_check,
    platonic_povm,
    povm_from_dict,
    tight_ic_check,
    traceless_rep,
    validate,
)
from .rotations import from_euler, from_quaternion, so3_grid, to_quaternion
from .sampling_stats import (
    SamplingError,
    coeff_error_moments,
    deviation_moments_analytic,
    empirical_deviation_moments,
    raw_moment_offdiagonal,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_SELF_CHECK = 4
EXIT_CAP = 5

SELF_CHECK_SE = 5.0


class ConfigError(ValueError):
    pass


class SelfCheckFailed(RuntimeError):
    pass


def fmt(x) -> str:
    """12 significant digits; integers stay integers."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if x == 0.0:
            return "0"
        return format(x, ".12g")
    return str(x)


# --- schema ----------------------------------------------------------------

_NUM = {"type": "number"}
_VEC3 = {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}
_SOLID = {"type": ["string", "integer"]}
_STATE = {
    "type": "object",
    "oneOf": [
        {"required": ["bloch"], "not": {"anyOf": [{"required": ["theta"]}, {"required": ["phi"]}]}},
        {"required": ["theta"], "not": {"required": ["bloch"]}},
    ],
    "properties": {"bloch": _VEC3, "theta": _NUM, "phi": _NUM},
    "additionalProperties": False,
}
_ROTATION = {
    "type": "object",
    "oneOf": [
        {"required": ["quaternion"], "not": {"required": ["euler"]}},
        {"required": ["euler"], "not": {"required": ["quaternion"]}},
    ],
    "properties": {
        "quaternion": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4},
        "euler": _VEC3,
        "seq": {"type": "string", "pattern": "^[xyzXYZ]{3}$"},
    },
    "additionalProperties": False,
}
_POS_INT = {"type": "integer", "minimum": 1}
_SEED = {"type": "integer", "minimum": 0}
_OUT = {"type": ["string", "null"]}
_COMMAND = {"type": "string"}
_PRIORS = {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 2, "maxItems": 2}


def _obj(props: Dict, required=()) -> Dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMAS: Dict[str, Dict] = {
    "verify": _obj(
        {
            "command": _COMMAND,
            "solid": {"type": ["string", "integer", "null"]},
            "rotation": {"oneOf": [_ROTATION, {"type": "null"}]},
            "weights": {"oneOf": [{"type": "array", "items": _NUM}, {"type": "null"}]},
            "povm_file": _OUT,
            "tol": {"type": "number", "exclusiveMinimum": 0},
            "output": _OUT,
        }
    ),
    "estimate": _obj(
        {
            "command": _COMMAND,
            "solids": {"type": "array", "items": _SOLID, "minItems": 1},
            "shots": {"type": "array", "items": _POS_INT, "minItems": 1},
            "state": _STATE,
            "rotation": {"oneOf": [_ROTATION, {"type": "null"}]},
            "trials": {"type": "integer", "minimum": 2},
            "seed": _SEED,
            "force_exact_frequencies": {"type": "boolean"},
            "self_check": {"type": "boolean"},
            "output": _OUT,
        }
    ),
    "qdoc": _obj(
        {
            "command": _COMMAND,
            "solids": {"type": "array", "items": _SOLID, "minItems": 1},
            "shots": {"type": "array", "items": _POS_INT, "minItems": 1},
            "rho0": _STATE,
            "rho1": _STATE,
            "priors": _PRIORS,
            "rotation": {"oneOf": [_ROTATION, {"type": "null"}]},
            "method": {"enum": ["exact", "monte-carlo", "both", "auto"]},
            "samples": {"type": "integer", "minimum": 1000},
            "seed": _SEED,
            "cap": _POS_INT,
            "envelope": {"type": "boolean"},
            "plot": _OUT,
            "output": _OUT,
        }
    ),
    "orient-sweep": _obj(
        {
            "command": _COMMAND,
            "solids": {"type": "array", "items": _SOLID, "minItems": 1},
            "shots": _POS_INT,
            "rho0": _STATE,
            "rho1": _STATE,
            "priors": _PRIORS,
            "axes": _POS_INT,
            "angles": _POS_INT,
            "rotations": {
                "oneOf": [
                    {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4}, "minItems": 1},
                    {"type": "null"},
                ]
            },
            "cap": _POS_INT,
            "output": _OUT,
        }
    ),
    "moments": _obj(
        {
            "command": _COMMAND,
            "p": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
            "shots": _POS_INT,
            "traces": {"oneOf": [{"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}}, {"type": "null"}]},
            "draws": {"type": "integer", "minimum": 2},
            "seed": _SEED,
            "output": _OUT,
        },
    ),
}

DEFAULTS: Dict[str, Dict] = {
    "verify": {"solid": "tetrahedron", "rotation": None, "weights": None, "povm_file": None, "tol": 1e-10, "output": None},
    "estimate": {
        "solids": [4, 6, 8, 12],
        "shots": [5, 10, 50],
        "state": {"theta": 2 * np.pi / 3, "phi": 0.0},
        "rotation": None,
        "trials": 500,
        "seed": 0,
        "force_exact_frequencies": False,
        "self_check": False,
        "output": None,
    },
    "qdoc": {
        "solids": [4, 6],
        "shots": [5, 10, 20],
        "rho0": {"theta": 0.0, "phi": 0.0},
        "rho1": {"theta": 2 * np.pi / 3, "phi": np.pi / 3},
        "priors": [0.5, 0.5],
        "rotation": None,
        "method": "exact",
        "samples": 100000,
        "seed": 0,
        "cap": ENUMERATION_CAP,
        "envelope": False,
        "plot": None,
        "output": None,
    },
    "orient-sweep": {
        "solids": [2, 4, 6, 8],
        "shots": 5,
        "rho0": {"theta": 0.0, "phi": 0.0},
        "rho1": {"theta": 2 * np.pi / 3, "phi": np.pi / 3},
        "priors": [0.5, 0.5],
        "axes": 100,
        "angles": 10,
        "rotations": None,
        "cap": ENUMERATION_CAP,
        "output": None,
    },
    "moments": {"p": [0.5, 0.5], "shots": 4, "traces": None, "draws": 100000, "seed": 0, "output": None},
}


def resolve_config(command: str, doc: Optional[Dict], overrides: Dict) -> Dict:
    """Defaults, then ``doc``, then ``overrides``; validated and with ``command`` set."""
    cfg = copy.deepcopy(DEFAULTS[command])
    if doc is not None:
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        if "command" in doc and doc["command"] != command:
            raise ConfigError(f"config is for command {doc['command']!r}, not {command!r}")
        try:
            jsonschema.validate({"command": command, **doc}, SCHEMAS[command])
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"config: {exc.message} at {list(exc.absolute_path)}") from exc
        cfg.update(doc)
    cfg.update(overrides)
    cfg["command"] = command
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{exc.message} at {list(exc.absolute_path)}") from exc
    return cfg


# --- config -> objects -----------------------------------------------------


def state_from(doc: Dict):
    if "bloch" in doc:
        return density_from_bloch(doc["bloch"])
    return pure_state(doc["theta"], doc.get("phi", 0.0))


def rotation_from(doc: Optional[Dict]) -> np.ndarray:
    if doc is None:
        return np.eye(3)
    if "quaternion" in doc:
        q = np.asarray(doc["quaternion"], dtype=float)
        if abs(np.linalg.norm(q) - 1) > 1e-9:
            raise ConfigError(f"quaternion {q.tolist()} is not unit length")
        return from_quaternion(q)
    return from_euler(doc["euler"], doc.get("seq", "zyz"))


def _solid_id(s):
    return int(s) if isinstance(s, str) and s.isdigit() else s


def _hypothesis(cfg: Dict) -> BinaryHypothesis:
    q0, q1 = cfg["priors"]
    return BinaryHypothesis(state_from(cfg["rho0"]), state_from(cfg["rho1"]), q0, q1)


# --- output ----------------------------------------------------------------


class Table:
    def __init__(self, columns: List[str]):
        self.columns = columns
        self.rows: List[List] = []
        self.notes: List[str] = []

    def add(self, *row):
        self.rows.append(list(row))

    def render(self, cfg: Dict, seed, elapsed: Optional[float]) -> str:
        buf = io.StringIO()
        buf.write(f"# qframes {__version__}\n")
        buf.write(f"# command: {cfg['command']}\n")
        buf.write(f"# config: {json.dumps(cfg, sort_keys=True)}\n")
        buf.write(f"# seed: {fmt(seed) if seed is not None else 'none'}\n")
        if elapsed is not None:
            buf.write(f"# wall_clock_s: {elapsed:.3f}\n")
        for note in self.notes:
            buf.write(f"# {note}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(fmt(x) for x in row) + "\n")
        return buf.getvalue()


# --- commands --------------------------------------------------------------


def cmd_verify(cfg: Dict, workers: Optional[int]) -> Table:
    if cfg["povm_file"]:  # takes precedence over solid
        with open(cfg["povm_file"]) as fh:
            try:
                povm = povm_from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{cfg['povm_file']}: {exc}") from exc
    else:
        if cfg["solid"] is None:
            raise ConfigError("give a solid or a povm_file")
        spec = PlatonicSpec(_solid_id(cfg["solid"]), rotation_from(cfg["rotation"]), cfg["weights"])
        povm = platonic_povm(spec)
    tol = cfg["tol"]
    t = Table(["quantity", "value"])
    rep = validate(povm, tol)
    t.add("M", povm.M)
    t.add("dim", povm.dim)
    t.add("valid", rep.is_valid)
    for k, m in enumerate(rep.psd_margins):
        t.add(f"psd_margin_{k}", m)
    t.add("completeness_residual", rep.completeness_residual)
    t.add("trace_sum", rep.trace_sum)
    if not rep.is_valid:
        t.notes.append("invalid POVM")
        raise InvalidPovm(t)
    ic = ic_check(povm)
    t.add("ic", ic.is_ic)
    t.add("ic_rank", ic.rank)
    t.add("ic_kind", ic.kind)
    tight = tight_ic_check(povm, tol)
    t.add("tight_ic", tight.is_tight_ic)
    t.add("tightness_residual", tight.residual)
    if tight.is_tight_ic:
        ent = entf_params(traceless_rep(povm), tol)
        t.add("C", ent.C)
        t.add("a", ent.a)
        t.add("N", ent.N)
        t.add("CN_minus_Ma2", ent.C * ent.N - ent.M * ent.a**2)
    return t


class InvalidPovm(Exception):
    def __init__(self, table: Table):
        super().__init__("invalid POVM")
        self.table = table


def cmd_estimate(cfg: Dict, workers: Optional[int]) -> Table:
    rho = state_from(cfg["state"])
    rot = rotation_from(cfg["rotation"])
    povms = [platonic_povm(PlatonicSpec(_solid_id(s), rot)) for s in cfg["solids"]]
    exact = cfg["force_exact_frequencies"]
    summaries = tradeoff_grid(povms, cfg["shots"], rho, cfg["trials"], cfg["seed"], exact, workers)
    t = Table(["M", "L", "trials", "mean", "std", "stderr", "predicted_uncorrelated", "predicted_exact", "z"])
    worst = 0.0
    for s in summaries:
        if s.stderr > 0:
            z = (s.mean_error_sq - s.predicted_exact) / s.stderr
        else:
            z = 0.0 if s.mean_error_sq == s.predicted_exact else np.inf
        if not exact:
            worst = max(worst, abs(z))
        t.add(s.M, s.shots, s.trials, s.mean_error_sq, s.std_error_sq, s.stderr,
              s.predicted_uncorrelated, s.predicted_exact, z if not exact else float("nan"))
    if cfg["self_check"] and not exact:
        t.notes.append(f"self_check: max |z| = {fmt(worst)} (limit {fmt(SELF_CHECK_SE)})")
        if worst > SELF_CHECK_SE:
            raise SelfCheckFailedTable(t, worst)
    return t


class SelfCheckFailedTable(SelfCheckFailed):
    def __init__(self, table: Table, worst: float):
        super().__init__(f"self-check failed: max |z| = {worst:.3g} > {SELF_CHECK_SE}")
        self.table = table


def _curve_rows(t: Table, m: int, shots: int, curve: QdocCurve, envelope: bool):
    for eta, pf, pd in curve.points:
        t.add(m, shots, curve.method, "atom", eta, pf, pd)
    if envelope:
        for pf, pd in upper_envelope(curve.pf, curve.pd):
            t.add(m, shots, curve.method, "envelope", float("nan"), pf, pd)


def cmd_qdoc(cfg: Dict, workers: Optional[int]) -> Table:
    hyp = _hypothesis(cfg)
    rot = rotation_from(cfg["rotation"])
    t = Table(["M", "L", "method", "kind", "eta", "pf", "pd"])
    curves = []
    for s in cfg["solids"]:
        povm = platonic_povm(PlatonicSpec(_solid_id(s), rot))
        for shots in cfg["shots"]:
            method = cfg["method"]
            exact = None
            if method in ("exact", "both", "auto"):
                try:
                    exact = qdoc_exact(hyp, povm, shots, cfg["cap"])
                except EnumerationCapExceeded:
                    if method != "auto":
                        raise
                    t.notes.append(f"M={povm.M} L={shots}: cap exceeded, monte-carlo fallback")
                    method = "monte-carlo"
            if exact is not None:
                _curve_rows(t, povm.M, shots, exact, cfg["envelope"])
                curves.append(exact)
            if method in ("monte-carlo", "both"):
                thresholds = exact.eta if exact is not None else None
                mc = qdoc_monte_carlo(hyp, povm, shots, cfg["samples"], cfg["seed"], thresholds)
                _curve_rows(t, povm.M, shots, mc, cfg["envelope"])
                curves.append(mc)
    if cfg["plot"]:
        _plot(curves, cfg["plot"], cfg["envelope"])
    return t


def _plot(curves: List[QdocCurve], path: str, envelope: bool):
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "qframes"
    fig, ax = plt.subplots(figsize=(5, 5))
    for c in curves:
        label = f"M={c.meta['M']} L={c.meta['L']} ({c.method})"
        style = "-" if c.method == "exact" else ":"
        if envelope:
            hull = upper_envelope(c.pf, c.pd)
            ax.plot(hull[:, 0], hull[:, 1], style, label=label)
            ax.plot(c.pf, c.pd, ".", color=ax.lines[-1].get_color())
        else:
            ax.plot(c.pf, c.pd, style + "o", markersize=3, label=label)
    ax.plot([0, 1], [0, 1], color="0.7", linewidth=0.5)
    ax.set_xlabel("P_f")
    ax.set_ylabel("P_d")
    ax.legend(fontsize=7, loc="lower right")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_orient_sweep(cfg: Dict, workers: Optional[int]) -> Table:
    hyp = _hypothesis(cfg)
    if cfg["rotations"] is not None:
        rots = np.array([rotation_from({"quaternion": q}) for q in cfg["rotations"]])
    else:
        rots = None
    t = Table(["solid", "M", "rotation_index", "qw", "qx", "qy", "qz", "pe"])
    spreads = {}
    for s in cfg["solids"]:
        spec = PlatonicSpec(_solid_id(s))
        this = default_rotation_set(hyp, spec, so3_grid(cfg["axes"], cfg["angles"])) if rots is None else rots
        res = orientation_sweep(hyp, spec, cfg["shots"], this, workers, cfg["cap"])
        for i, (r, pe) in enumerate(zip(res.rotations, res.pe)):
            t.add(res.solid, spec.M, i, *to_quaternion(r), pe)
        spreads[spec.M] = res.spread
        t.notes.append(
            f"summary: solid={res.solid} M={spec.M} n={len(res.pe)} "
            f"min={fmt(res.pe_min)} max={fmt(res.pe_max)} spread={fmt(res.spread)}"
        )
    ms = [m for m in (4, 6, 8) if m in spreads]
    if len(ms) >= 2:
        ok = all(spreads[a] >= spreads[b] for a, b in zip(ms, ms[1:]))
        t.notes.append(f"reproduction: spread non-increasing over M={ms}: {'pass' if ok else 'flag'}")
    return t


def cmd_moments(cfg: Dict, workers: Optional[int]) -> Table:
    p = np.asarray(cfg["p"], dtype=float)
    shots = cfg["shots"]
    analytic = deviation_moments_analytic(p, shots).second
    legacy = raw_moment_offdiagonal(p, shots)
    _, emp, se = empirical_deviation_moments(p, shots, cfg["draws"], cfg["seed"])
    cols = ["j", "k", "analytic", "empirical", "stderr", "legacy_formula"]
    coeff = None
    if cfg["traces"] is not None:
        if len(cfg["traces"]) != len(p):
            raise ConfigError(f"expected {len(p)} traces, got {len(cfg['traces'])}")
        coeff = coeff_error_moments(p, shots, cfg["traces"])
        cols.append("coeff_analytic")
    t = Table(cols)
    m = len(p)
    for j in range(m):
        for k in range(m):
            row = [j, k, analytic[j, k], emp[j, k], se[j, k], legacy[j, k]]
            if coeff is not None:
                row.append(coeff[j, k])
            t.add(*row)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, np.abs(emp - analytic) / se, np.where(emp == analytic, 0.0, np.inf))
    t.notes.append(f"max |analytic - empirical| = {fmt(np.max(np.abs(emp - analytic)))}")
    t.notes.append(f"max |z| empirical vs analytic = {fmt(np.max(z))}")
    t.notes.append(f"max |analytic - legacy_formula| = {fmt(np.max(np.abs(legacy - analytic)))}")
    return t


COMMANDS: Dict[str, Callable] = {
    "verify": cmd_verify,
    "estimate": cmd_estimate,
    "qdoc": cmd_qdoc,
    "orient-sweep": cmd_orient_sweep,
    "moments": cmd_moments,
}

SEED_KEY = {"verify": None, "estimate": "seed", "qdoc": "seed", "orient-sweep": None, "moments": "seed"}


# --- argument parsing ------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config document")
    p.add_argument("--output", "-o", help="output CSV path (default stdout)")
    p.add_argument("--workers", type=int, help="worker processes (output does not depend on it)")
    p.add_argument("--no-clock", action="store_true", help="omit the wall-clock header line")


def _state_flags(p, name: str):
    g = p.add_mutually_exclusive_group()
    g.add_argument(f"--{name}-bloch", nargs=3, type=float, metavar=("X", "Y", "Z"))
    g.add_argument(f"--{name}-angles", nargs=2, type=float, metavar=("THETA", "PHI"))


def _rotation_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--rotate", nargs=4, type=float, metavar=("W", "X", "Y", "Z"), help="unit quaternion, scalar first")
    g.add_argument("--euler", nargs=3, type=float, metavar=("A", "B", "C"), help="zyz Euler angles in radians")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qframes", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"qframes {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check a POVM: validity, IC, tightness, C and a")
    _common(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--solid", help="solid name or vertex count")
    src.add_argument("--povm-file", help="JSON POVM document")
    _rotation_flags(p)
    p.add_argument("--weights", nargs="+", type=float)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("estimate", help="state-estimation error grid over M and L")
    _common(p)
    p.add_argument("--solids", nargs="+")
    p.add_argument("--shots", nargs="+", type=int)
    _state_flags(p, "state")
    _rotation_flags(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--force-exact-frequencies", action="store_true", default=None)
    p.add_argument("--self-check", action="store_true", default=None)

    p = sub.add_parser("qdoc", help="detection operating characteristics")
    _common(p)
    p.add_argument("--solids", nargs="+")
    p.add_argument("--shots", nargs="+", type=int)
    _state_flags(p, "rho0")
    _state_flags(p, "rho1")
    p.add_argument("--priors", nargs=2, type=float)
    _rotation_flags(p)
    p.add_argument("--method", choices=["exact", "monte-carlo", "both", "auto"])
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--cap", type=int)
    p.add_argument("--envelope", action="store_true", default=None)
    p.add_argument("--plot", help="SVG output path")

    p = sub.add_parser("orient-sweep", help="error probability over orientations of each solid")
    _common(p)
    p.add_argument("--solids", nargs="+")
    p.add_argument("--shots", type=int)
    _state_flags(p, "rho0")
    _state_flags(p, "rho1")
    p.add_argument("--priors", nargs=2, type=float)
    p.add_argument("--axes", type=int)
    p.add_argument("--angles", type=int)
    p.add_argument("--cap", type=int)

    p = sub.add_parser("moments", help="second moments of relative-frequency deviations")
    _common(p)
    p.add_argument("--p", nargs="+", type=float)
    p.add_argument("--shots", type=int)
    p.add_argument("--traces", nargs="+", type=float)
    p.add_argument("--draws", type=int)
    p.add_argument("--seed", type=int)
    return parser


def _state_override(args, name: str) -> Optional[Dict]:
    bloch = getattr(args, f"{name}_bloch", None)
    angles = getattr(args, f"{name}_angles", None)
    if bloch is not None:
        return {"bloch": list(bloch)}
    if angles is not None:
        return {"theta": angles[0], "phi": angles[1]}
    return None


def overrides_from(args) -> Dict:
    skip = {"command", "config", "workers", "no_clock", "rotate", "euler",
            "state_bloch", "state_angles", "rho0_bloch", "rho0_angles", "rho1_bloch", "rho1_angles"}
    out = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    if "solids" in out:
        out["solids"] = [_solid_id(s) for s in out["solids"]]
    if "solid" in out:
        out["solid"] = _solid_id(out["solid"])
    if getattr(args, "rotate", None) is not None:
        out["rotation"] = {"quaternion": list(args.rotate)}
    elif getattr(args, "euler", None) is not None:
        out["rotation"] = {"euler": list(args.euler), "seq": "zyz"}
    for name in ("state", "rho0", "rho1"):
        st = _state_override(args, name)
        if st is not None:
            out[name] = st
    if args.command == "verify" and out.get("povm_file"):
        out["solid"] = None
    return out


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code not in (0, None) else EXIT_OK
    doc = None
    if args.config:
        try:
            with open(args.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
            return EXIT_PARSE
    try:
        overrides = overrides_from(args)
        cfg = resolve_config(args.command, doc, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    start = time.perf_counter()
    status = EXIT_OK
    try:
        table = COMMANDS[args.command](cfg, args.workers)
    except InvalidPovm as exc:
        table, status = exc.table, EXIT_VALIDATION
    except SelfCheckFailedTable as exc:
        table, status = exc.table, EXIT_SELF_CHECK
        print(f"error: {exc}", file=sys.stderr)
    except EnumerationCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ConfigError, PovmError, OperatorError, FrameError, SamplingError,
            EstimationError, DetectionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    elapsed = None if args.no_clock else time.perf_counter() - start
    seed_key = SEED_KEY[args.command]
    text = table.render(cfg, cfg[seed_key] if seed_key else None, elapsed)
    if cfg.get("output"):
        with open(cfg["output"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if status == EXIT_VALIDATION:
        print("error: invalid POVM (see completeness_residual and psd margins)", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
