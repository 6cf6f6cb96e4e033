"""Particle swarm search for phi_p-optimal designs, followed by local polish.

A particle encodes a design with ``k`` support points as
``(d_1, ..., d_k, z_1, ..., z_k)``: doses are clamped to ``[L, R]`` and the
logits ``z`` are mapped to weights by a softmax.  The best particle is
cleaned up (near-duplicate doses merged, tiny weights pruned) and then
refined by :func:`polish`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._search import golden_section_max
from .criteria import CriterionSpec, D_OPTIMAL, batch_phi_p, finite_p_parts, phi_p_from_info
from .design_theory import closed_form_points, minimal_support_size, support_bound
from .equivalence import DEFAULT_GRID, DEFAULT_TOL, VerificationReport, _e_optimal_parts, verify
from .errors import ConfigurationError, NoClosedFormError, SingularDesignError
from .infomat import (
    BivariateModel,
    Design,
    DoseRange,
    batch_design_info,
    make_design,
    pointwise_info,
)

log = logging.getLogger(__name__)

LOGIT_BOUND = 10.0
PRUNE_WEIGHT = 1e-4
MERGE_FRACTION = 1e-3
# relative rounding level of phi_p evaluations for ill-conditioned M
VALUE_RESOLUTION = 1e-11


@dataclass(frozen=True)
class DesignProblem:
    bm: BivariateModel
    dose_range: DoseRange
    crit: CriterionSpec = D_OPTIMAL


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 80
    iterations: int = 500
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    seed: int = 0
    k_max: int | None = None
    restarts: int = 3

    def __post_init__(self):
        if self.swarm_size < 10:
            raise ConfigurationError("swarm_size must be at least 10")
        if not 0.0 < self.inertia < 1.0:
            raise ConfigurationError("inertia must lie in (0, 1)")
        if self.iterations < 1 or self.restarts < 1:
            raise ConfigurationError("iterations and restarts must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")


@dataclass
class Diagnostics:
    history: list = field(default_factory=list)
    restart_best: list = field(default_factory=list)
    k_max: int = 0
    pso_value: float = 0.0
    polished_value: float = 0.0
    report: VerificationReport | None = None
    converged: bool = False

    def to_dict(self) -> dict:
        return {
            "k_max": self.k_max,
            "pso_value": self.pso_value,
            "polished_value": self.polished_value,
            "restart_best": list(self.restart_best),
            "converged": self.converged,
        }


def project_simplex(v):
    """Euclidean projection of ``v`` onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _value(points, weights, problem):
    M = np.einsum("k,kij->ij", weights, pointwise_info(problem.bm, points))
    return phi_p_from_info(M, problem.crit)


def _parts_from_info(M, problem, points):
    if problem.crit.is_e_optimal:
        return _e_optimal_parts(M, problem.crit, problem.bm, points)
    return finite_p_parts(M, problem.crit)


def _weight_pass(points, w, problem, steps=200):
    """Projected-gradient ascent on the weights with backtracking."""
    bm, crit = problem.bm, problem.crit
    info = pointwise_info(bm, points)
    f = phi_p_from_info(np.einsum("k,kij->ij", w, info), crit)
    t = 1.0
    for _ in range(steps):
        try:
            parts = _parts_from_info(np.einsum("k,kij->ij", w, info), problem, points)
        except SingularDesignError:
            break
        g = np.einsum("kij,ji->k", info, parts.A) / parts.offset
        g = g - g.mean()
        if np.max(np.abs(g)) < 1e-15:
            break
        improved = False
        while t > 1e-14:
            w_new = project_simplex(w + t * g)
            f_new = phi_p_from_info(np.einsum("k,kij->ij", w_new, info), crit)
            if f_new > f:
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        step = np.max(np.abs(w_new - w))
        w, f = w_new, f_new
        t *= 2.0
        if np.any(w <= 0) or step < 1e-15:
            break
    return w, f


def _clean(points, weights, dose_range, merge_tol):
    xi = make_design(points, weights, dose_range, merge_tol=merge_tol)
    keep = xi.weights >= PRUNE_WEIGHT
    if not np.all(keep):
        xi = make_design(xi.points[keep], xi.weights[keep], dose_range, merge_tol=merge_tol)
    return xi


def _stationarity_gap(pts, w, problem):
    M = np.einsum("k,kij->ij", w, pointwise_info(problem.bm, pts))
    parts = _parts_from_info(M, problem, pts)
    return parts, parts.directional(problem.bm, pts) / parts.offset


def _stationarity_refine(pts, w, problem, iters=200):
    """Drive the first-order conditions to zero once the criterion is flat.

    Near an optimum the criterion changes only to second order, so value
    comparisons stall at roughly the square root of machine precision.  Here
    weights follow the multiplicative update ``w_k <- w_k g_k`` (``g_k`` the
    normalized directional derivative, whose weighted mean is one) and
    interior doses take Newton steps towards the local maximum of the
    sensitivity function.
    """
    rng = problem.dose_range
    tol = rng.boundary_tol
    h = 1e-3 * rng.width
    pts, w = pts.copy(), w.copy()
    for _ in range(iters):
        try:
            parts, g = _stationarity_gap(pts, w, problem)
        except SingularDesignError:
            break
        w = w * g
        w = w / w.sum()
        interior = (pts > rng.L + tol) & (pts < rng.R - tol)
        moved = 0.0
        for i in np.flatnonzero(interior):
            # Richardson-extrapolated central difference for the slope
            x = pts[i] + np.array([0.0, h, -h, 0.5 * h, -0.5 * h])
            f0, fp, fm, fp2, fm2 = parts.directional(problem.bm, x)
            d1 = (4.0 * (fp2 - fm2) / h - (fp - fm) / (2 * h)) / 3.0
            d2 = (fp - 2 * f0 + fm) / (h * h)
            if d2 >= 0:
                continue
            lo = pts[i - 1] if i > 0 else rng.L
            hi = pts[i + 1] if i < pts.size - 1 else rng.R
            step = float(np.clip(-d1 / d2, -h, h))
            new = min(max(pts[i] + step, 0.5 * (lo + pts[i])), 0.5 * (pts[i] + hi))
            moved = max(moved, abs(new - pts[i]))
            pts[i] = new
        if np.max(np.abs(g - 1.0)) < 1e-13 and moved < 1e-13 * rng.width:
            break
    return pts, w


def _snap_to_boundary(pts, w, problem, f):
    """Move doses lying within 1e-9 (R - L) of an endpoint onto it, if no worse."""
    rng = problem.dose_range
    near = 1e-9 * rng.width
    snapped = pts.copy()
    snapped[np.abs(snapped - rng.L) <= near] = rng.L
    snapped[np.abs(snapped - rng.R) <= near] = rng.R
    if np.array_equal(snapped, pts):
        return pts, f
    f_new = _value(snapped, w, problem)
    return (snapped, f_new) if f_new >= f else (pts, f)


def polish(xi: Design, problem: DesignProblem, max_rounds: int = 500,
           rtol: float = 1e-15) -> Design:
    """Locally improve a nonsingular design; the criterion never decreases.

    Alternates golden-section searches over each dose (between its
    neighbours) with projected-gradient passes over the weights.  Points
    whose weight reaches zero are dropped and doses that meet are merged.
    A final stationarity refinement sharpens the optimality conditions; it
    is accepted only if the criterion stays within ``VALUE_RESOLUTION`` of
    the incumbent, the level at which phi_p itself is resolved.
    """
    rng = problem.dose_range
    L, R = rng.L, rng.R
    merge_tol = 1e-9 * rng.width
    pts, w = xi.points.copy(), xi.weights.copy()
    f = _value(pts, w, problem)
    if f <= 0:
        raise SingularDesignError("cannot polish a singular design")
    start = (pts.copy(), w.copy(), f)

    for _ in range(max_rounds):
        f_round = f
        for i in range(pts.size):
            lo = pts[i - 1] if i > 0 else L
            hi = pts[i + 1] if i < pts.size - 1 else R

            def at(x, i=i):
                trial = pts.copy()
                trial[i] = x
                return _value(trial, w, problem)

            x, fx = golden_section_max(at, lo, hi, tol=1e-12 * rng.width)
            if fx > f:
                pts[i], f = x, fx
        w_new, f_new = _weight_pass(pts, w, problem)
        if f_new > f:
            w, f = w_new, f_new
        keep = w > 0
        cleaned = make_design(pts[keep], w[keep], rng, merge_tol=merge_tol)
        if cleaned.size != pts.size:
            pts, w = cleaned.points.copy(), cleaned.weights.copy()
            f = max(f, _value(pts, w, problem))
        if f - f_round <= rtol * abs(f):
            break

    pts, f = _snap_to_boundary(pts, w, problem, f)
    try:
        gap = np.max(np.abs(_stationarity_gap(pts, w, problem)[1] - 1.0))
        p_new, w_new = _stationarity_refine(pts, w, problem)
        gap_new = np.max(np.abs(_stationarity_gap(p_new, w_new, problem)[1] - 1.0))
        f_new = _value(p_new, w_new, problem)
        # near the optimum the criterion is flat below its rounding level, so
        # accept when the optimality conditions improve and the value ties
        if gap_new < gap and f_new >= f * (1.0 - VALUE_RESOLUTION):
            pts, w, f = p_new, w_new, f_new
    except SingularDesignError:
        pass

    if f < start[2] * (1.0 - VALUE_RESOLUTION):
        pts, w, f = start
    w = w / w.sum()
    return make_design(pts, w, rng, merge_tol=merge_tol)


def _seed_particles(problem, k):
    """Particles from the closed-form minimal design and an equispaced design."""
    rng = problem.dose_range
    seeds = []
    try:
        pts = closed_form_points(problem.bm, rng)
    except (NoClosedFormError, ConfigurationError):
        pts = None
    if pts is not None and len(pts) <= k:
        reps = np.resize(np.arange(len(pts)), k)
        counts = np.bincount(reps, minlength=len(pts))
        doses = np.asarray(pts)[reps]
        logits = np.log(1.0 / (len(pts) * counts[reps]))
        seeds.append(np.concatenate([doses, logits]))
    seeds.append(np.concatenate([np.linspace(rng.L, rng.R, k), np.zeros(k)]))
    return seeds


def _run_swarm(problem, cfg, k, restart):
    rng = problem.dose_range
    n, dim = cfg.swarm_size, 2 * k
    lb = np.concatenate([np.full(k, rng.L), np.full(k, -LOGIT_BOUND)])
    ub = np.concatenate([np.full(k, rng.R), np.full(k, LOGIT_BOUND)])
    span = ub - lb
    vmax = 0.2 * span

    streams = np.random.SeedSequence([int(cfg.seed), restart]).spawn(n)
    gens = [np.random.default_rng(s) for s in streams]

    X = np.stack([g.uniform(lb, ub) for g in gens])
    V = np.stack([g.uniform(-0.1, 0.1, dim) for g in gens]) * span
    for j, s in enumerate(_seed_particles(problem, k)):
        X[j] = np.clip(s, lb, ub)

    def fitness(X):
        Ms = batch_design_info(X[:, :k], _softmax(X[:, k:]), problem.bm)
        return batch_phi_p(Ms, problem.crit)

    fX = fitness(X)
    P, fP = X.copy(), fX.copy()
    best = int(np.argmax(fP))
    history = [float(fP[best])]
    for _ in range(cfg.iterations):
        r1 = np.stack([g.random(dim) for g in gens])
        r2 = np.stack([g.random(dim) for g in gens])
        V = cfg.inertia * V + cfg.cognitive * r1 * (P - X) + cfg.social * r2 * (P[best] - X)
        V = np.clip(V, -vmax, vmax)
        X = np.clip(X + V, lb, ub)
        fX = fitness(X)
        better = fX > fP
        P[better], fP[better] = X[better], fX[better]
        best = int(np.argmax(fP))
        history.append(float(fP[best]))
    return P[best], float(fP[best]), history


def default_k(problem: DesignProblem) -> int:
    eff, tox = problem.bm.efficacy.family, problem.bm.toxicity.family
    return support_bound(eff, tox).max_points


def optimize(problem: DesignProblem, cfg: PsoConfig = PsoConfig(),
             grid_n: int = DEFAULT_GRID, tol: float = DEFAULT_TOL):
    """Search for a phi_p-optimal design; returns ``(design, diagnostics)``.

    ``diagnostics.converged`` is False when the final design fails the
    equivalence check at relative tolerance ``tol``.
    """
    eff, tox = problem.bm.efficacy.family, problem.bm.toxicity.family
    k_min = minimal_support_size(eff, tox)
    k = cfg.k_max if cfg.k_max is not None else default_k(problem)
    if k < k_min:
        raise ConfigurationError(f"k_max={k} is below the minimal support size {k_min}")

    diag = Diagnostics(k_max=k)
    best_x, best_f = None, -np.inf
    for r in range(cfg.restarts):
        x, fx, hist = _run_swarm(problem, cfg, k, r)
        diag.history.append(hist)
        diag.restart_best.append(fx)
        log.debug("restart %d: best criterion %.12g", r, fx)
        if fx > best_f:
            best_x, best_f = x, fx
    diag.pso_value = best_f
    if best_f <= 0:
        raise SingularDesignError("swarm found no nonsingular design")

    rng = problem.dose_range
    xi = _clean(best_x[:k], _softmax(best_x[k:]), rng, MERGE_FRACTION * rng.width)
    if _value(xi.points, xi.weights, problem) <= 0:
        xi = make_design(best_x[:k], _softmax(best_x[k:]), rng)
    xi = polish(xi, problem)
    report = verify(xi, problem.bm, problem.crit, rng, grid_n, tol)

    # add the most violating dose while the budget allows
    for _ in range(3):
        if report.optimal or xi.size >= k:
            break
        pts = np.append(xi.points, report.argmax_dose)
        w = np.append(xi.weights * 0.95, 0.05)
        trial = polish(make_design(pts, w, rng, merge_tol=1e-9 * rng.width), problem)
        if _value(trial.points, trial.weights, problem) <= _value(xi.points, xi.weights, problem):
            break
        xi = trial
        report = verify(xi, problem.bm, problem.crit, rng, grid_n, tol)

    diag.polished_value = _value(xi.points, xi.weights, problem)
    diag.report = report
    diag.converged = report.optimal
    if not report.optimal:
        log.warning("design failed verification: max sensitivity %.3g (tolerance %.3g)",
                    report.max_sensitivity, report.tolerance)
    return xi, diag
