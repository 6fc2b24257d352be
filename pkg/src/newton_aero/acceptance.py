"""Acceptance suite: one function per criterion, each returning a CriterionResult.

Used by ``tests/test_acceptance.py`` and by ``newton-aero accept``.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import heel_front as heel
from . import maxwell_stratum as mx
from . import newton_radial as nr
from .convex_core import check_C_M, conjugate
from .corpus import band_body, corpus, random_body
from .hessian_measure import (cone_patch, f0_merge_curve, f0_polyhedral, homogeneous_patch,
                              polar_merge_curve, steiner_check)
from .resistance import (boundary_band_sequence, convergence_harness, dual_resistance,
                         gradient_histogram, legendre_eigenvalues, legendre_sign_change,
                         primal_resistance, scaling_sequence, tilde_transform)

SEED = 7


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(number, name):
    def wrap(fn):
        def run(**kw):
            t = time.perf_counter()
            passed, detail = fn(**kw)
            return CriterionResult(number, name, bool(passed), detail, time.perf_counter() - t)
        run.number = number
        run.criterion = name
        return run
    return wrap


@_timed(1, "duality identity")
def duality(n_bodies=100, seed=SEED):
    t = time.perf_counter()
    gap = 0.0
    for u in corpus(n_bodies, seed):
        J = primal_resistance(u).value
        Js = dual_resistance(f0_polyhedral(conjugate(u))).value
        gap = max(gap, abs(J - Js) / J)
    dt = time.perf_counter() - t
    return gap <= 1e-12 and dt <= 60, f"max relative gap {gap:.2e} over {n_bodies} bodies in {dt:.1f}s"


@_timed(2, "mass conservation")
def mass_conservation(n_bodies=100, seed=SEED):
    err = 0.0
    for u in corpus(n_bodies, seed):
        mu = f0_polyhedral(conjugate(u))
        err = max(err, abs(mu.total_mass - u.domain.area) / u.domain.area)
    return err <= 1e-12, f"max relative mass error {err:.2e}"


@_timed(3, "Steiner polynomial")
def steiner(n_bodies=20, seed=SEED):
    worst_res, worst_coef, ok = 0.0, 0.0, True
    for u in corpus(n_bodies, seed + 1):
        w = conjugate(u)
        mu = f0_polyhedral(w)
        rep = steiner_check(w, mu.atoms)
        ok &= rep.passed
        worst_res = max(worst_res, rep.residual)
        worst_coef = max(worst_coef, abs(rep.quadratic - mu.atom_mass) / mu.atom_mass)
    passed = ok and worst_res <= 1e-10 and worst_coef <= 1e-10
    return passed, f"max fit residual {worst_res:.1e}, max |eps^2 coef - mass|/mass {worst_coef:.1e}"


@_timed(4, "cone identity")
def cone_identity():
    errs = []
    for M in (0.5, 1.0, 2.0, 4.0):
        J = heel.reduced_functional(heel.SupportFn.disk(0.0), M).value
        errs.append(abs(J - np.pi / (1 + M * M)))
    return max(errs) <= 1e-9, f"max |J - pi/(1+M^2)| = {max(errs):.1e} for M in 0.5, 1, 2, 4"


@_timed(5, "merge-curve density")
def merge_density(seed=SEED):
    dens_err = 0.0
    for rho in (0.0, 0.2, 0.5, 0.8):
        for M in (0.5, 1.0, 2.0):
            th = 2 * np.pi * np.arange(256) / 256
            v = lambda t, r=rho: np.full_like(t, r)
            z = np.zeros_like
            c = polar_merge_curve(v, z, M, th, np.full(256, 2 * np.pi / 256))
            mu = f0_merge_curve(homogeneous_patch(v, z, z), cone_patch(M), c)
            dens_err = max(dens_err, np.abs(mu.curves[0].density - 0.5 * (1 - rho ** 2)).max())
    rng = np.random.default_rng(seed)
    route_err = 0.0
    for _ in range(10):
        omega = heel.SupportFn.polygon(rng.uniform(-0.6, 0.6, size=(rng.integers(3, 10), 2)))
        if omega.max_value >= 0.95:
            continue
        M = rng.uniform(0.5, 3.0)
        a = dual_resistance(heel.merge_measure(omega, M)).value
        b = heel.reduced_functional(omega, M).value
        route_err = max(route_err, abs(a - b))
    ok = dens_err <= 1e-8 and route_err <= 1e-8
    return ok, f"density error {dens_err:.1e}, polygon atom route vs functional {route_err:.1e}"


@_timed(6, "front transition height")
def transition(m_max=64, n=heel.N_THETA):
    t = time.perf_counter()
    rep = heel.sweep_transition(m_max=m_max, n=n)
    dt = time.perf_counter() - t
    ok = 1.16 <= rep.M_crit <= 1.19 and dt <= 600
    return ok, f"M_crit = {rep.M_crit:.6f} (m <= {m_max}, N = {n}) in {dt:.0f}s"


@_timed(7, "regular polygon local optimality")
def local_optimality(trials=200, seed=SEED):
    parts, ok = [], True
    for M in (0.7, 0.9, 1.1):
        opt = heel.best_regular(M, 64)
        rep = heel.perturbation_audit(heel.SupportFn.regular(opt.m, opt.R), M, trials, seed)
        ok &= rep.improvements == 0 and opt.legendre_ok
        parts.append(f"M={M}: m*={opt.m} R*={opt.R:.4f} improvements={rep.improvements}")
    rho, _ = heel.optimize_disk(2.0)
    n_imp, best, _ = heel.circle_mode_audit(rho, 2.0, trials=trials, seed=seed)
    ok &= n_imp >= 1
    parts.append(f"circle M=2: {n_imp} improving")
    return ok, "; ".join(parts)


@_timed(8, "gradient-modulus transform")
def gradient_modulus(n_bodies=100, seed=SEED):
    worst = -np.inf
    for u in corpus(n_bodies, seed):
        w = conjugate(u)
        before = dual_resistance(f0_polyhedral(w)).value
        after = dual_resistance(f0_polyhedral(tilde_transform(w))).value
        worst = max(worst, after - before)
    u = band_body()
    w = conjugate(u)
    gain = dual_resistance(f0_polyhedral(w)).value - dual_resistance(
        f0_polyhedral(tilde_transform(w))).value
    band = gradient_histogram(nr.revolve(nr.calibrate(1.0, 1.0), 720)).band_mass
    ok = worst <= 0 and gain >= 1e-4 and band == 0
    return ok, (f"max J*(tilde) - J* = {worst:.1e}; band body gain {gain:.4f}; "
                f"Newton body (0,1)-band mass {band:g}")


@_timed(9, "Newton radial body")
def newton_radial():
    prof = nr.calibrate(1.0, 1.0)
    dxdv, dudv = nr.profile_derivatives(prof.p0, 1.0)
    edge = bool(nr.profile_point(prof.p0, 1.0)[1] == 0.0 and dudv / dxdv == 1.0)
    Js = [nr.radial_resistance(nr.calibrate(1.0, M)).value for M in (0.5, 1.0, 2.0, 4.0)]
    decreasing = all(a > b for a, b in zip(Js, Js[1:]))
    rel, rel2 = (abs(primal_resistance(nr.revolve(prof, m)).value - Js[1]) / Js[1]
                 for m in (720, 1440))
    ok = (edge and decreasing and rel <= 1e-3 and rel2 < rel
          and check_C_M(nr.revolve(prof, 64), 1.0).passed)
    return ok, (f"u(1)=0 and edge slope 1: {edge}; J decreasing over M: {decreasing}; "
                f"revolved 512-sample body relative error {rel:.1e} (m=720), {rel2:.1e} (m=1440)")


def homogeneity_defect(n=1000, seed=SEED):
    rng = np.random.default_rng(seed)
    p = rng.uniform(-2, 2, n)
    v = np.abs(p) + rng.uniform(0.05, 2.0, n)
    dv = rng.uniform(-1, 1, n)
    worst = 0.0
    for lam in (0.5, 2.0, 4.0):
        a = mx.el_rhs(lam * p, lam * v, dv)
        b = mx.el_rhs(p, v, dv) / lam
        worst = max(worst, float(np.max(np.abs(a - b) / (1 + np.abs(b)))))
    return worst


@_timed(10, "Maxwell Euler-Lagrange")
def maxwell(M=1.0):
    c = mx.shoot(M, 0.0, tol=1e-12, max_halvings=14)
    r1 = mx.el_residual(c)
    span = 0.8 * (c.B - c.A)
    r2 = mx.el_residual(c, h=span / 512)
    ratio = r1 / r2
    hom = homogeneity_defect()
    q = mx.quadratic_stratum_curve(M, n=513)
    J12 = mx.maxwell_resistance(q).value
    s = mx.stratum_from_dual(q)
    rel, rel2 = (abs(J12 - primal_resistance(mx.assemble_body(s, M, m)).value) / J12
                 for m in (720, 1440))
    ok = 3.5 <= ratio <= 4.5 and hom <= 1e-12 and rel <= 2e-3 and rel2 < rel
    return ok, (f"residual ratio {ratio:.3f}; homogeneity defect {hom:.2e} (needs 1e-12); "
                f"profile functional vs hull body {rel:.1e} (m=720), {rel2:.1e} (m=1440)")


@_timed(11, "pointwise-limit continuity")
def continuity(seed=SEED):
    u = random_body(np.random.default_rng(seed))
    r1 = convergence_harness(scaling_sequence(u, [10, 100, 1000, 10000]), u)
    prof = nr.calibrate(1.0, 1.0)
    grids = ((n, nr.radial_grid_body(prof, n, n)) for n in (32, 64, 128, 256))
    r2 = convergence_harness(grids, nr.radial_resistance(prof).value)
    r3 = convergence_harness(boundary_band_sequence(u, [10, 100, 1000, 10000], u.height_cap), u)
    ok = r1.passed and r2.passed and r3.passed
    return ok, (f"final gaps: scaling {r1.gaps[-1]:.1e}, grid {r2.gaps[-1]:.1e}, "
                f"boundary {r3.gaps[-1]:.1e}")


@_timed(12, "Legendre eigenvalues")
def legendre():
    crit = 1 / np.sqrt(3)
    r = np.concatenate([np.linspace(0, 5, 100_001), crit + np.logspace(-11, 0, 200),
                        crit - np.logspace(-11, -0.3, 200)])
    r = r[np.abs(r - crit) > 1e-12]
    lam2 = legendre_eigenvalues(np.column_stack([r, np.zeros_like(r)]))[1]
    sign_ok = bool(np.all((lam2 < 0) == (r > crit)))
    root = legendre_sign_change()
    ok = sign_ok and abs(root - crit) <= 1e-12
    return ok, f"sign pattern exact: {sign_ok}; sign change at {root:.15f} (|err| {abs(root - crit):.1e})"


CRITERIA = [duality, mass_conservation, steiner, cone_identity, merge_density, transition,
            local_optimality, gradient_modulus, newton_radial, maxwell, continuity, legendre]


def run_all(selected=None, echo=print):
    out = []
    for crit in CRITERIA:
        if selected and crit.number not in selected:
            continue
        res = crit()
        if echo:
            echo(res.line())
        out.append(res)
    return out
