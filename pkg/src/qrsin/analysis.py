"""Numerical estimation of the constants the construction leaves implicit.

beta  = ess inf of the smallest singular value of DF   (expansion source)
alpha = lam * beta                                     (expansion of f)
delta = inf ||y|| * smallest singular value of the inverse-branch derivative
K, K_O, K_I = dilatation bounds relating ||DF||, det DF and l(DF)
M     = threshold making the height-growth implication hold on samples

All estimators are seeded Monte Carlo minima/maxima over the smooth locus:
the non-differentiability set (fold walls, the planes |x_d| in {0,1}, the
max-norm tie sets and, for d >= 3, the lateral axis) has measure zero, and an
explicit margin keeps finite-difference stencils away from it.

Also hosts the box-counting dimension estimator used as the desk-scale proxy
for Hausdorff dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basemap import fold_batch, lambda_branch, map_F, seam_distance, tray_boundary_distance
from .core import MapParams, SeededSampler, TrayIndex, as_point, as_points, validate_params
from .dynamics import pullback_levels
from .errors import (
    DegenerateFitError,
    NonPositiveJacobianError,
    TooCloseToFoldError,
)

__all__ = [
    "JacobianEstimate", "boundary_distance", "jacobian_fd", "singular_range",
    "smooth_margin",
    "estimate_beta", "estimate_dilatation", "DilatationEstimate",
    "estimate_delta", "DeltaEstimate",
    "calibrate_M", "MCalibration", "sample_orbit_pairs", "growth_violations",
    "box_count", "DimensionEstimate", "dyadic_scales",
    "estimate_constants", "ConstantsReport",
]

DEFAULT_FD_STEP = 1e-5


# ---------------------------------------------------------------------------
# finite-difference Jacobians
# ---------------------------------------------------------------------------

@dataclass
class JacobianEstimate:
    at: np.ndarray
    matrix: np.ndarray
    step: float
    boundary_distance: float


def boundary_distance(x) -> float:
    """Distance to the nearest fold hyperplane or exponential seam."""
    p = as_point(x)
    return min(tray_boundary_distance(p), seam_distance(p))


def jacobian_fd(x, h: float, params: MapParams) -> JacobianEstimate:
    """Central-difference Jacobian of F (scale by lam for f).

    Requires boundary_distance(x) >= 4h so the stencil never straddles a fold
    hyperplane or the |x_d| = 1 seam; halving h changes entries by O(h^2).
    """
    if not (1e-8 <= h <= 1e-3):
        raise ValueError("h must lie in [1e-8, 1e-3]")
    p = as_point(x, params.dim)
    bd = boundary_distance(p)
    if bd < 4.0 * h:
        raise TooCloseToFoldError(bd, 4.0 * h)
    return JacobianEstimate(p, _jacobians(p[None, :], h)[0], h, bd)


def _jacobians(pts: np.ndarray, h: float) -> np.ndarray:
    """(n, d, d) central-difference Jacobians of F at each row."""
    n, d = pts.shape
    cols = []
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        cols.append((map_F(pts + e) - map_F(pts - e)) / (2.0 * h))
    return np.stack(cols, axis=-1)


def singular_range(m) -> tuple[float, float]:
    """(smallest, largest) singular value."""
    sv = np.linalg.svd(np.asarray(m, dtype=np.float64), compute_uv=False)
    return float(sv[-1]), float(sv[0])


def smooth_margin(pts) -> np.ndarray:
    """Distance (lower bound) to every non-smoothness structure of F.

    For points in the fundamental half-beam: tray walls, the planes x_d = 0
    and x_d = 1, the max-norm argmax-tie sets of the cube-to-ball step and,
    for d >= 3, the lateral axis where the radial direction degenerates.
    """
    p = as_points(pts)
    d = p.shape[1]
    m = np.min(1.0 - np.abs(p[:, :-1]), axis=1)
    m = np.minimum(m, np.abs(p[:, -1]))
    m = np.minimum(m, np.abs(p[:, -1] - 1.0))
    # input of the cube-to-ball step: (lateral, min(x_d,1) - 1)
    v = np.concatenate([np.abs(p[:, :-1]),
                        np.abs(np.minimum(p[:, -1:], 1.0) - 1.0)], axis=1)
    v.sort(axis=1)
    m = np.minimum(m, (v[:, -1] - v[:, -2]) / math.sqrt(2.0))
    if d >= 3:
        m = np.minimum(m, np.sqrt(np.sum(p[:, :-1] ** 2, axis=1)))
    return m


# ---------------------------------------------------------------------------
# sampled constants
# ---------------------------------------------------------------------------

def _slab_samples(dim: int, n: int, sampler: SeededSampler, h: float) -> np.ndarray:
    """Uniform points in [-1,1]^{d-1} x [0,2] with smooth margin >= 4h.

    The slab suffices: above the seam the derivative only grows with height
    and reflections preserve singular values.
    """
    lo = np.array([-1.0] * (dim - 1) + [0.0])
    hi = np.array([1.0] * (dim - 1) + [2.0])
    pts = sampler.points_in_box(n, lo, hi)
    return pts[smooth_margin(pts) >= 4.0 * h]


def estimate_beta(params: MapParams | int, n_samples: int, seed: int,
                  h: float = DEFAULT_FD_STEP) -> float:
    """Sample minimum of the smallest singular value of DF over the slab.

    Accepts MapParams or a bare dimension (F does not depend on lam, which
    lets this run before lambda is chosen).
    """
    dim = params if isinstance(params, int) else params.dim
    if n_samples < 1000:
        raise ValueError("n_samples must be >= 1000")
    pts = _slab_samples(dim, n_samples, SeededSampler(seed), h)
    J = _jacobians(pts, h)
    sv = np.linalg.svd(J, compute_uv=False)
    return float(sv[:, -1].min())


@dataclass
class DilatationEstimate:
    k_hat: float       # max ||DF|| / l(DF)
    k_o_hat: float     # max ||DF||^d / det DF
    k_i_hat: float     # max det DF / l(DF)^d
    samples_used: int
    dim: int

    @property
    def geometric_mean_bound(self) -> float:
        """(K_O * K_I)^{1/d}."""
        return float((self.k_o_hat * self.k_i_hat) ** (1.0 / self.dim))


def estimate_dilatation(params: MapParams, n_samples: int, seed: int,
                        h: float = DEFAULT_FD_STEP) -> DilatationEstimate:
    """Outer/inner dilatation bounds and their singular-value ratio over the slab.

    Raises NonPositiveJacobianError if any sampled determinant is <= 0
    (orientation is constant on each fold cell, so this flags a bug).
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be >= 1000")
    d = params.dim
    pts = _slab_samples(d, n_samples, SeededSampler(seed), h)
    J = _jacobians(pts, h)
    sv = np.linalg.svd(J, compute_uv=False)
    det = np.linalg.det(J)
    if np.any(det <= 0.0):
        i = int(np.argmin(det))
        raise NonPositiveJacobianError(
            f"det DF = {det[i]} at {pts[i]}; orientation must be constant"
        )
    return DilatationEstimate(
        k_hat=float((sv[:, 0] / sv[:, -1]).max()),
        k_o_hat=float((sv[:, 0] ** d / det).max()),
        k_i_hat=float((det / sv[:, -1] ** d).max()),
        samples_used=pts.shape[0],
        dim=d,
    )


@dataclass
class DeltaEstimate:
    delta_hat: float        # min ||y|| * l(D branch)
    norm_gain_max: float    # max ||y|| * ||D branch||, must stay <= 1/beta
    samples_used: int

    def __float__(self) -> float:
        return self.delta_hat


def estimate_delta(params: MapParams, n_samples: int, seed: int,
                   h: float = DEFAULT_FD_STEP) -> DeltaEstimate:
    """Inverse-branch derivative floor: min ||y|| * sigma_min(D Lambda(y)).

    Samples y in the upper half-annulus lam <= ||y|| <= lam*e of the
    fundamental branch; reflections make all branches isometric copies, and
    the derivative scaling law makes the product height-invariant above the
    seam, so the annulus covers the whole range ||y|| >= lam.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be >= 1000")
    d, lam = params.dim, params.lam
    sampler = SeededSampler(seed)
    R = lam * math.e
    lo = np.array([-R] * (d - 1) + [0.0])
    hi = np.array([R] * (d - 1) + [R])
    ys = []
    got = 0
    while got < n_samples:
        cand = sampler.points_in_box(2 * n_samples, lo, hi)
        norms = np.linalg.norm(cand, axis=1)
        cand = cand[(norms >= lam) & (norms <= R)]
        ys.append(cand)
        got += len(cand)
    y = np.concatenate(ys)[:n_samples]

    tray0 = TrayIndex.origin(d)
    x = as_points(lambda_branch(tray0, y, params), d)
    folded, _, _, _ = fold_batch(x)
    keep = (smooth_margin(folded) >= 4.0 * h) & (y[:, -1] >= 4.0 * h)
    y = y[keep]

    cols = []
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        cols.append((lambda_branch(tray0, y + e, params)
                     - lambda_branch(tray0, y - e, params)) / (2.0 * h))
    J = np.stack(cols, axis=-1)
    sv = np.linalg.svd(J, compute_uv=False)
    ny = np.linalg.norm(y, axis=1)
    return DeltaEstimate(
        delta_hat=float((ny * sv[:, -1]).min()),
        norm_gain_max=float((ny * sv[:, 0]).max()),
        samples_used=int(keep.sum()),
    )


# ---------------------------------------------------------------------------
# growth-lemma threshold calibration
# ---------------------------------------------------------------------------

@dataclass
class MCalibration:
    m_hat: float
    floor: float              # max(e, 4 lam)
    search_found: float       # smallest zero-violation M located by bisection
    violations_at_zero: int
    example_violation: tuple | None   # (pair index, step) at M = 0
    n_pairs: int


def sample_orbit_pairs(params: MapParams, n_pairs: int, k_steps: int,
                       sampler: SeededSampler,
                       g_max: float | None = None) -> list[tuple[np.ndarray, np.ndarray]]:
    """Orbit-height pairs sharing a k-step itinerary, built by pullback.

    Both members pull back targets placed in the tray of the (K+1)-th symbol
    of one random admissible itinerary, so their trays agree at steps
    0 .. K by construction.  The second target's height is spread so trigger
    events straddle any threshold up to g_max.
    """
    from .core import random_admissible_itinerary
    if g_max is None:
        g_max = 2.0 * max(math.e, 4.0 * params.lam) + 10.0
    d, lam = params.dim, params.lam
    pairs = []
    for _ in range(n_pairs):
        K = int(sampler.rng.integers(1, k_steps + 1))
        itin = random_admissible_itinerary(
            d, sampler, n_prefix=0, n_cycle=K + 1, lateral_range=(-2, 2))
        sym = itin.symbol(K)
        base_lat = 2.0 * np.asarray(sym.lateral, dtype=np.float64)

        t1 = np.empty(d)
        t1[:-1] = base_lat + sampler.uniform(-1.0, 1.0, d - 1)
        t1[-1] = sym.sign * sampler.uniform(0.0, 2.0)
        t2 = np.empty(d)
        t2[:-1] = base_lat + sampler.uniform(-1.0, 1.0, d - 1)
        g = sampler.uniform(0.5, g_max)
        t2[-1] = sym.sign * lam * math.exp(g - 1.0)

        lv1 = pullback_levels(itin, K, t1, params)
        lv2 = pullback_levels(itin, K, t2, params)
        h1 = np.array([abs(p[-1]) for p in lv1])
        h2 = np.array([abs(p[-1]) for p in lv2])
        pairs.append((h1, h2))
    return pairs


def growth_violations(pairs, M: float, lam: float):
    """Count trigger events whose growth conclusion fails at the next step.

    Trigger at step k: the taller orbit exceeds the shorter by more than M.
    Conclusion at k+1: taller_height > (lam/3) exp(taller_height_at_k) + M.
    """
    count = 0
    example = None
    for idx, (ha, hb) in enumerate(pairs):
        for k in range(len(ha) - 1):
            if ha[k] > hb[k] + M:
                tall = ha
            elif hb[k] > ha[k] + M:
                tall = hb
            else:
                continue
            if not tall[k + 1] > (lam / 3.0) * math.exp(tall[k]) + M:
                count += 1
                if example is None:
                    example = (idx, k)
    return count, example


def calibrate_M(params: MapParams, n_pairs: int, k_steps: int,
                seed: int) -> MCalibration:
    """Smallest M (resolution 0.1) with zero sampled growth violations,
    clamped from below by max{e, 4 lam}.
    """
    if n_pairs < 1000:
        raise ValueError("n_pairs must be >= 1000")
    floor = max(math.e, 4.0 * params.lam)
    pairs = sample_orbit_pairs(params, n_pairs, k_steps, SeededSampler(seed))

    v0, example = growth_violations(pairs, 0.0, params.lam)

    hi = floor
    while growth_violations(pairs, hi, params.lam)[0] > 0:
        hi *= 2.0
        if hi > 1e6:
            raise RuntimeError("no zero-violation threshold found")
    lo = 0.0
    while hi - lo > 0.1:
        mid = 0.5 * (lo + hi)
        if growth_violations(pairs, mid, params.lam)[0] == 0:
            hi = mid
        else:
            lo = mid
    return MCalibration(
        m_hat=max(floor, hi),
        floor=floor,
        search_found=hi,
        violations_at_zero=v0,
        example_violation=example,
        n_pairs=n_pairs,
    )


# ---------------------------------------------------------------------------
# box-counting dimension
# ---------------------------------------------------------------------------

@dataclass
class DimensionEstimate:
    scales: np.ndarray
    counts: np.ndarray
    slope: float
    r2: float

    def to_json(self) -> dict:
        return {
            "scales": [float(s) for s in self.scales],
            "counts": [int(c) for c in self.counts],
            "slope": float(self.slope),
            "r2": float(self.r2),
        }


def box_count(points, scales) -> DimensionEstimate:
    """Occupied-box counts on origin-anchored grids, slope of log N vs log 1/eps.

    Least-squares fit; r2 exposes bad fits.  Scales must be strictly
    decreasing with at least 4 values, points at least 100.
    """
    pts = as_points(points)
    if pts.shape[0] < 100:
        raise ValueError("need at least 100 points")
    eps = np.asarray(scales, dtype=np.float64)
    if eps.ndim != 1 or eps.shape[0] < 4 or np.any(np.diff(eps) >= 0.0) \
            or np.any(eps <= 0.0):
        raise ValueError("scales must be >= 4 strictly decreasing positive values")
    counts = np.empty(eps.shape[0], dtype=np.int64)
    for i, e in enumerate(eps):
        idx = np.floor(pts / e).astype(np.int64)
        counts[i] = np.unique(idx, axis=0).shape[0]
    if np.all(counts == counts[0]):
        raise DegenerateFitError(f"all {eps.shape[0]} scales give N = {counts[0]}")
    logx = np.log(1.0 / eps)
    logy = np.log(counts.astype(np.float64))
    slope, intercept = np.polyfit(logx, logy, 1)
    pred = slope * logx + intercept
    ss_res = float(np.sum((logy - pred) ** 2))
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    return DimensionEstimate(eps, counts, float(slope), 1.0 - ss_res / ss_tot)


def dyadic_scales(points, n_scales: int, largest_fraction: float = 0.25) -> np.ndarray:
    """Halving scales starting at largest_fraction of the point-cloud extent."""
    pts = as_points(points)
    extent = float(np.max(pts.max(axis=0) - pts.min(axis=0)))
    if extent <= 0.0:
        raise ValueError("degenerate point cloud")
    start = extent * largest_fraction
    return start * 0.5 ** np.arange(n_scales)


# ---------------------------------------------------------------------------
# one-shot constants report
# ---------------------------------------------------------------------------

@dataclass
class ConstantsReport:
    params: MapParams
    k_o_hat: float
    k_i_hat: float
    seed: int
    samples: int

    def to_json(self) -> dict:
        from . import __version__
        p = self.params
        return {
            "dim": p.dim,
            "lambda": float(p.lam),
            "beta_hat": float(p.beta_hat),
            "alpha_hat": float(p.alpha_hat),
            "delta_hat": float(p.delta_hat),
            "K_hat": float(p.k_hat),
            "K_O_hat": float(self.k_o_hat),
            "K_I_hat": float(self.k_i_hat),
            "M_hat": float(p.m_hat),
            "seed": self.seed,
            "samples": self.samples,
            "version": __version__,
        }


def estimate_constants(dim: int, lam, n_samples: int, seed: int,
                       n_pairs: int = 1000, k_steps: int = 4) -> ConstantsReport:
    """Estimate everything: beta, then lambda ("auto" -> 1.1/beta), delta,
    dilatations, and the calibrated ordering threshold M."""
    beta = estimate_beta(dim, n_samples, seed)
    lam_value = 1.1 / beta if lam in (None, "auto") else float(lam)
    params = validate_params(dim, lam_value, beta)
    delta = estimate_delta(params, n_samples, seed)
    dil = estimate_dilatation(params, n_samples, seed)
    mcal = calibrate_M(params, n_pairs, k_steps, seed)
    params = params.with_constants(
        delta_hat=delta.delta_hat, k_hat=dil.k_hat, m_hat=mcal.m_hat)
    return ConstantsReport(params, dil.k_o_hat, dil.k_i_hat, seed, n_samples)
