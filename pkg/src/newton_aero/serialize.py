"""Lossless JSON round-trips for domains, bodies, measures and results.

Python's float repr is exact, so ``json.dumps`` / ``json.loads`` reproduce
every array bit for bit.
"""

import json

import numpy as np

from .convex_core import Domain2, GridConvexFn, PolyConvexFn
from .hessian_measure import AtomicMeasure2, CurvePart


def domain_to_dict(d):
    out = {"kind": d.kind, "vertices": d.vertices.tolist()}
    if d.kind == "disk_approx":
        out.update(m=d.m, radius=d.radius)
    return out


def domain_from_dict(obj):
    if obj.get("kind") == "disk_approx":
        return Domain2(np.array(obj["vertices"]), "disk_approx", obj["m"], obj["radius"])
    return Domain2(np.array(obj["vertices"]))


def body_to_dict(u):
    if isinstance(u, GridConvexFn):
        return {"domain": domain_to_dict(u.domain),
                "grid": {"points": u.points.tolist(), "values": u.values.tolist(),
                         "triangles": u.triangles.tolist()},
                "height_cap": u.M}
    out = {"domain": domain_to_dict(u.domain), "pieces": u.pieces.tolist(),
           "height_cap": u.height_cap}
    if u.primal_domain is not None:
        out["primal_domain"] = domain_to_dict(u.primal_domain)
    return out


def body_from_dict(obj):
    dom = domain_from_dict(obj["domain"])
    if "grid" in obj:
        g = obj["grid"]
        return GridConvexFn(np.array(g["points"]), np.array(g["values"]),
                            np.array(g["triangles"], dtype=int), dom, obj.get("height_cap"))
    primal = obj.get("primal_domain")
    return PolyConvexFn.from_pieces(np.array(obj["pieces"]), dom,
                                    height_cap=obj.get("height_cap"),
                                    primal_domain=None if primal is None else domain_from_dict(primal))


def measure_to_dict(mu):
    return {"atoms": np.column_stack([mu.atoms, mu.masses]).tolist(),
            "curves": [{"param": c.param.tolist(), "samples": c.points.tolist(),
                        "density": c.density.tolist(), "weights": c.weights.tolist()}
                       for c in mu.curves]}


def measure_from_dict(obj):
    atoms = np.array(obj["atoms"], dtype=float).reshape(-1, 3)
    curves = tuple(CurvePart(c["param"], c["samples"], c["density"], c["weights"])
                   for c in obj.get("curves", []))
    return AtomicMeasure2(atoms[:, :2], atoms[:, 2], curves)


def dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)


def load(path):
    with open(path) as fh:
        return json.load(fh)
