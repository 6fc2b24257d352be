"""Command-line driver: ``newton-aero <command> [options]``.

Every command writes a CSV (header row first) into ``--out`` plus a JSON
metadata sidecar ``<name>.meta.json`` with versions, seed and tolerances.
Failures print ``{"error": code, "context": {...}}`` to stderr and exit nonzero.
"""

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
import shapely

from . import __version__
from . import heel_front as heel
from . import maxwell_stratum as mx
from . import newton_radial as nr
from .convex_core import TOL_ACTIVE, MIN_CELL_AREA, conjugate
from .corpus import corpus
from .errors import NewtonAeroError
from .hessian_measure import f0_polyhedral
from .resistance import dual_resistance, primal_resistance, tilde_transform
from .serialize import body_to_dict, dump

COMMANDS = ("newton-radial", "heel-sweep", "heel-audit", "maxwell-solve", "maxwell-body",
            "duality-check", "tilde-check", "accept")

TOLERANCES = {"tol_active": TOL_ACTIVE, "min_cell_area": MIN_CELL_AREA,
              "duality_gap": 1e-12, "audit_improvement": 1e-9, "shoot_tol": 1e-9}


class UsageError(NewtonAeroError):
    code = "usage"


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    out: Path = Path(".")
    seed: int = 7

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError("unknown command", command=self.command)
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned integer", seed=self.seed)
        self.out = Path(self.out)


def _write(cfg, name, header, rows, extra=None):
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / name
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    meta = {"command": cfg.command, "params": cfg.params, "seed": cfg.seed,
            "tolerances": TOLERANCES, "columns": list(header),
            "versions": {"newton_aero": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "shapely": shapely.__version__}}
    if extra:
        meta.update(extra)
    with open(cfg.out / (Path(name).stem + ".meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    return path


def _pool_map(fn, items, workers):
    if workers <= 1:
        return list(map(fn, items))
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(fn, items))  # map keeps submission order


def _parse_range(text):
    try:
        a, b, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise UsageError("range must look like start:stop:step", value=text) from None
    if step <= 0 or b < a:
        raise UsageError("range needs step > 0 and stop >= start", value=text)
    n = int(np.floor((b - a) / step + 1e-9))
    return [round(a + k * step, 12) for k in range(n + 1)]


# ---------------------------------------------------------------------------
# commands


def cmd_newton_radial(cfg):
    p = cfg.params
    prof = nr.calibrate(p["x0"], p["M"], p["samples"])
    J = nr.radial_resistance(prof)
    rows = zip(prof.v, prof.x, prof.u)
    _write(cfg, "profile.csv", ("v", "x", "u"), rows,
           {"p0": prof.p0, "x_front": prof.x_front, "v_max": prof.v_max,
            "resistance": J.value, "calibration_residual": prof.residual})
    print(f"J = {J.value:.12g}  p0 = {prof.p0:.12g}  v_max = {prof.v_max:.12g}")


def _sweep_row(args):
    M, m_max = args
    opts = [heel.optimize_regular(m, M) for m in range(2, m_max + 1)]
    best = min(opts, key=lambda o: o.J)
    return M, best.m, best.R, best.J


def cmd_heel_sweep(cfg):
    p = cfg.params
    Ms = _parse_range(p["M"])
    rows = [("best",) + r for r in _pool_map(_sweep_row, [(M, p["m_max"]) for M in Ms],
                                             p["workers"])]
    rep = heel.sweep_transition((Ms[0], Ms[-1]), p["m_max"])
    bi = heel.optimize_regular(2, rep.M_crit)
    rows.append(("M_crit", rep.M_crit, 2, bi.R, bi.J))
    _write(cfg, "sweep.csv", ("kind", "M", "m", "R", "J"), rows, {"M_crit": rep.M_crit})
    print(f"M_crit = {rep.M_crit:.8f}")


def cmd_heel_audit(cfg):
    p = cfg.params
    rows = []
    for M in p["M"]:
        opt = heel.best_regular(M, p["m_max"]) if p["m"] is None else heel.optimize_regular(p["m"], M)
        rep = heel.perturbation_audit(heel.SupportFn.regular(opt.m, opt.R), M, p["trials"],
                                      cfg.seed)
        rows.append((M, opt.m, opt.R, opt.J, rep.trials, rep.improvements, rep.best_delta))
        print(f"M={M}: m*={opt.m} R*={opt.R:.6f} improvements={rep.improvements}")
    _write(cfg, "audit.csv", ("M", "m", "R", "J", "trials", "improvements", "best_delta"), rows)


def cmd_maxwell_solve(cfg):
    p = cfg.params
    c = mx.shoot(p["v0"], p["dv0"], step=p["step"], tol=p["tol"], M=p["M"])
    exits = {k: v for k, v in c.exits.items()}
    _write(cfg, "maxwell.csv", ("p", "v", "dv"), zip(c.p, c.v, c.dv),
           {"exits": exits, "el_residual": mx.el_residual(c)})
    print(f"profile on [{c.A:.6f}, {c.B:.6f}], {len(c.p)} nodes")


def _stratum_curve(p):
    if p["stratum"] == "quadratic":
        return mx.quadratic_stratum_curve(p["M"], p["n"])
    return mx.point_stratum_curve(p["M"], p["n"])


def cmd_maxwell_body(cfg):
    p = cfg.params
    c = _stratum_curve(p)
    body = mx.assemble_body(mx.stratum_from_dual(c), p["M"], p["m"])
    J_profile = mx.maxwell_resistance(c).value
    J_body = primal_resistance(body).value
    cfg.out.mkdir(parents=True, exist_ok=True)
    dump(body_to_dict(body), cfg.out / "body.json")
    _write(cfg, "maxwell_body.csv", ("stratum", "M", "m", "J_profile", "J_body"),
           [(p["stratum"], p["M"], p["m"], J_profile, J_body)])
    print(f"J profile = {J_profile:.10g}  J body = {J_body:.10g}")


def _duality_row(u):
    J = primal_resistance(u).value
    Js = dual_resistance(f0_polyhedral(conjugate(u))).value
    return u.n_pieces, J, Js, abs(J - Js) / J


def cmd_duality_check(cfg):
    p = cfg.params
    rows = _pool_map(_duality_row, corpus(p["bodies"], cfg.seed), p["workers"])
    gap = max(r[3] for r in rows)
    _write(cfg, "duality.csv", ("index", "n_pieces", "J", "J_star", "rel_gap"),
           [(i,) + r for i, r in enumerate(rows)], {"max_rel_gap": gap})
    print(f"max relative gap {gap:.3e} over {len(rows)} bodies")
    return 0 if gap <= TOLERANCES["duality_gap"] else 1


def _tilde_row(u):
    w = conjugate(u)
    a = dual_resistance(f0_polyhedral(w)).value
    b = dual_resistance(f0_polyhedral(tilde_transform(w))).value
    return a, b, b - a


def cmd_tilde_check(cfg):
    p = cfg.params
    rows = _pool_map(_tilde_row, corpus(p["bodies"], cfg.seed), p["workers"])
    worst = max(r[2] for r in rows)
    _write(cfg, "tilde.csv", ("index", "J_star", "J_star_tilde", "delta"),
           [(i,) + r for i, r in enumerate(rows)], {"max_delta": worst})
    print(f"max J*(tilde) - J* = {worst:.3e}")
    return 0 if worst <= 0 else 1


def cmd_accept(cfg):
    from .acceptance import run_all

    res = run_all(cfg.params["only"] or None)
    _write(cfg, "acceptance.csv", ("criterion", "name", "passed", "detail"),
           [(r.number, r.name, r.passed, r.detail) for r in res])
    return 0 if all(r.passed for r in res) else 1


HANDLERS = {"newton-radial": cmd_newton_radial, "heel-sweep": cmd_heel_sweep,
            "heel-audit": cmd_heel_audit, "maxwell-solve": cmd_maxwell_solve,
            "maxwell-body": cmd_maxwell_body, "duality-check": cmd_duality_check,
            "tilde-check": cmd_tilde_check, "accept": cmd_accept}


def run(cfg):
    """Execute one experiment; returns the process exit status."""
    status = HANDLERS[cfg.command](cfg)
    return 0 if status is None else int(status)


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, prog=self.prog)


def _positive(kind):
    def conv(text):
        val = kind(text)
        if val <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return val
    return conv


def build_parser():
    ap = _Parser(prog="newton-aero", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--seed", type=int, default=7)
        return sp

    sp = add("newton-radial", "calibrated radial profile to profile.csv")
    sp.add_argument("--x0", type=_positive(float), default=1.0)
    sp.add_argument("--M", type=_positive(float), default=1.0)
    sp.add_argument("--samples", type=_positive(int), default=512)

    sp = add("heel-sweep", "best regular front per height and the transition height")
    sp.add_argument("--M", default="0.5:3.0:0.05", help="start:stop:step")
    sp.add_argument("--m-max", type=_positive(int), default=64)
    sp.add_argument("--workers", type=_positive(int), default=1)

    sp = add("heel-audit", "perturbation audit of optimal regular fronts")
    sp.add_argument("--M", type=_positive(float), nargs="+", default=[0.7, 0.9, 1.1])
    sp.add_argument("--m", type=int, default=None, help="fix the polygon order")
    sp.add_argument("--m-max", type=_positive(int), default=64)
    sp.add_argument("--trials", type=_positive(int), default=200)

    sp = add("maxwell-solve", "shoot the profile ODE to maxwell.csv")
    sp.add_argument("--v0", type=_positive(float), default=1.0)
    sp.add_argument("--dv0", type=float, default=0.0)
    sp.add_argument("--M", type=_positive(float), default=None)
    sp.add_argument("--step", type=_positive(float), default=1e-2)
    sp.add_argument("--tol", type=_positive(float), default=1e-9)

    sp = add("maxwell-body", "assemble a symmetric body from a stratum; body.json")
    sp.add_argument("--stratum", choices=("quadratic", "point"), default="quadratic")
    sp.add_argument("--M", type=_positive(float), default=1.0)
    sp.add_argument("--m", type=_positive(int), default=720)
    sp.add_argument("--n", type=_positive(int), default=513)

    for name, help_ in (("duality-check", "primal vs dual resistance on a random corpus"),
                        ("tilde-check", "tilde transform never increases J* on a corpus")):
        sp = add(name, help_)
        sp.add_argument("--bodies", type=_positive(int), default=100)
        sp.add_argument("--workers", type=_positive(int), default=1)

    sp = add("accept", "run the acceptance suite")
    sp.add_argument("--only", type=int, nargs="*", default=[], help="criterion numbers")
    return ap


def config_from_args(argv=None):
    ns = vars(build_parser().parse_args(argv))
    command, out, seed = ns.pop("command"), ns.pop("out"), ns.pop("seed")
    return ExperimentConfig(command, ns, out, seed)


def _emit_error(exc):
    ctx = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
           for k, v in getattr(exc, "context", {}).items()}
    ctx.setdefault("message", str(exc))
    json.dump({"error": getattr(exc, "code", "error"), "context": ctx}, sys.stderr, default=str)
    sys.stderr.write("\n")


def main(argv=None):
    try:
        cfg = config_from_args(argv)
        return run(cfg)
    except UsageError as exc:
        _emit_error(exc)
        return 2
    except NewtonAeroError as exc:
        _emit_error(exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
