"""The expanding map f = lam * F and its exact inverse branches.

Construction of F on the fundamental half-beam [-1,1]^{d-1} x [0, inf):

  h1: half-cube B+ -> B-,    x |-> x - e_d
  h2: B- -> lower half-ball, x |-> (||x||_inf / ||x||_2) x
  h3: lower -> upper half-ball via the Moebius map T(z) = (z+i)/(iz+1)
      acting on z = ||p(x)||_2 + i x_d, rotationally symmetric in the
      lateral directions
  base_F = h3 o h2 o h1 for x_d <= 1, and exp(x_d - 1) * base_F(p(x), 1)
      above the seam x_d = 1.

The map extends to all of R^d by repeated reflections at the hyperplanes
{x_j = odd integer} and {x_d = 0}; fold/unfold implement that reflection
bookkeeping, and the image picks up one sign flip of the last coordinate per
domain reflection (the tray parity sigma).

All operations accept a single point (d,) or a batch (n, d) and are pure.
"""

from __future__ import annotations

import math

import numpy as np

from .core import HEIGHT_SAFETY_LIMIT, MapParams, TrayIndex, as_points
from .errors import DomainError, HeightOverflowError, WrongHalfSpaceError

__all__ = [
    "h1", "h1_inv", "h2", "h2_inv", "h3", "h3_inv",
    "base_F", "base_F_inv",
    "fold", "unfold", "tray_of", "FoldResult",
    "map_f", "map_F", "lambda_branch",
    "tray_boundary_distance", "seam_distance",
]

DOMAIN_TOL = 1e-12
#: below this 2-norm, radial rescalings return 0 (guards denormals)
RADIAL_EPS = 1e-300


def _prep(x, dim=None):
    """(points (n,d), was_single) with validation."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    return as_points(arr, dim), single


def _out(y: np.ndarray, single: bool) -> np.ndarray:
    return y[0] if single else y


# ---------------------------------------------------------------------------
# the bi-Lipschitz chain on the half-cube
# ---------------------------------------------------------------------------

def h1(x):
    """Shift the half-cube down: x |-> x - (0, ..., 0, 1)."""
    p, single = _prep(x)
    if np.any(np.abs(p[:, :-1]) > 1.0 + DOMAIN_TOL) or \
       np.any(p[:, -1] < -DOMAIN_TOL) or np.any(p[:, -1] > 1.0 + DOMAIN_TOL):
        raise DomainError("h1 input outside the half-cube [-1,1]^{d-1} x [0,1]")
    y = p.copy()
    y[:, -1] -= 1.0
    return _out(y, single)


def h1_inv(y):
    p, single = _prep(y)
    if np.any(np.abs(p[:, :-1]) > 1.0 + DOMAIN_TOL) or \
       np.any(p[:, -1] > DOMAIN_TOL) or np.any(p[:, -1] < -1.0 - DOMAIN_TOL):
        raise DomainError("h1_inv input outside the half-cube [-1,1]^{d-1} x [-1,0]")
    x = p.copy()
    x[:, -1] += 1.0
    return _out(x, single)


def h2(x):
    """Radial cube-to-ball map x |-> (||x||_inf / ||x||_2) x, 0 |-> 0."""
    p, single = _prep(x)
    if np.any(np.abs(p) > 1.0 + DOMAIN_TOL) or np.any(p[:, -1] > DOMAIN_TOL):
        raise DomainError("h2 input outside the lower half-cube")
    return _out(_h2_raw(p), single)


def _h2_raw(p: np.ndarray) -> np.ndarray:
    ninf = np.max(np.abs(p), axis=1)
    n2 = np.sqrt(np.sum(p * p, axis=1))
    scale = np.where(n2 > RADIAL_EPS, ninf / np.where(n2 == 0.0, 1.0, n2), 0.0)
    return p * scale[:, None]


def h2_inv(y):
    """Radial ball-to-cube map y |-> (||y||_2 / ||y||_inf) y, 0 |-> 0."""
    p, single = _prep(y)
    n2 = np.sqrt(np.sum(p * p, axis=1))
    if np.any(n2 > 1.0 + DOMAIN_TOL) or np.any(p[:, -1] > DOMAIN_TOL):
        raise DomainError("h2_inv input outside the lower half-ball")
    return _out(_h2_inv_raw(p), single)


def _h2_inv_raw(p: np.ndarray) -> np.ndarray:
    ninf = np.max(np.abs(p), axis=1)
    n2 = np.sqrt(np.sum(p * p, axis=1))
    scale = np.where(n2 > RADIAL_EPS, n2 / np.where(ninf == 0.0, 1.0, ninf), 0.0)
    return p * scale[:, None]


def h3(x):
    """Lower half-ball to upper half-ball through T(z) = (z+i)/(iz+1).

    With z = a + ib, a = ||p(x)||, b = x_d <= 0:

        T(z) = (2a + i(1 - a^2 - b^2)) / ((1-b)^2 + a^2)

    and the lateral image is (p(x)/a) Re T(z) = 2 p(x) / ((1-b)^2 + a^2),
    which also gives the continuous extension 0 at a = 0.
    """
    p, single = _prep(x)
    n2 = np.sqrt(np.sum(p * p, axis=1))
    if np.any(n2 > 1.0 + DOMAIN_TOL) or np.any(p[:, -1] > DOMAIN_TOL):
        raise DomainError("h3 input outside the lower half-ball")
    return _out(_h3_raw(p), single)


def _h3_raw(p: np.ndarray) -> np.ndarray:
    a2 = np.sum(p[:, :-1] * p[:, :-1], axis=1)
    b = p[:, -1]
    den = (1.0 - b) ** 2 + a2
    y = np.empty_like(p)
    y[:, :-1] = 2.0 * p[:, :-1] / den[:, None]
    y[:, -1] = (1.0 - a2 - b * b) / den
    return y


def h3_inv(y):
    """Inverse of h3 via T^{-1}(w) = (w - i)/(1 - iw)."""
    p, single = _prep(y)
    n2 = np.sqrt(np.sum(p * p, axis=1))
    if np.any(n2 > 1.0 + DOMAIN_TOL) or np.any(p[:, -1] < -DOMAIN_TOL):
        raise DomainError("h3_inv input outside the upper half-ball")
    return _out(_h3_inv_raw(p), single)


def _h3_inv_raw(p: np.ndarray) -> np.ndarray:
    u2 = np.sum(p[:, :-1] * p[:, :-1], axis=1)
    v = p[:, -1]
    den = (1.0 + v) ** 2 + u2
    x = np.empty_like(p)
    x[:, :-1] = 2.0 * p[:, :-1] / den[:, None]
    x[:, -1] = (u2 + v * v - 1.0) / den
    return x


# ---------------------------------------------------------------------------
# base map on the fundamental half-beam
# ---------------------------------------------------------------------------

def base_F(x):
    """h3 o h2 o h1 below the seam x_d = 1, exponential extension above.

    ||base_F(x)|| = exp(x_d - 1) whenever x_d >= 1.
    """
    p, single = _prep(x)
    if np.any(np.abs(p[:, :-1]) > 1.0 + DOMAIN_TOL) or np.any(p[:, -1] < -DOMAIN_TOL):
        raise DomainError("base_F input outside the fundamental half-beam")
    return _out(_base_F_raw(p), single)


def _base_F_raw(p: np.ndarray) -> np.ndarray:
    t = p[:, -1]
    clipped = p.copy()
    clipped[:, -1] = np.minimum(t, 1.0)
    y = _h3_raw(_h2_raw(_h1_shift(clipped)))
    hi = t > 1.0
    if np.any(hi):
        y[hi] *= np.exp(t[hi] - 1.0)[:, None]
    return y


def _h1_shift(p: np.ndarray) -> np.ndarray:
    y = p.copy()
    y[:, -1] -= 1.0
    return y


def base_F_inv(w):
    """Inverse of base_F on the closed upper half-space.

    ||w|| <= 1: invert the chain.  ||w|| > 1: the height is 1 + log||w|| and
    the lateral part comes from the chain inverse of w/||w||, which lands on
    the top face of the half-cube.
    """
    p, single = _prep(w)
    if np.any(p[:, -1] < -DOMAIN_TOL):
        raise DomainError("base_F_inv input below the upper half-space")
    return _out(_base_F_inv_raw(p), single)


def _base_F_inv_raw(p: np.ndarray) -> np.ndarray:
    n2 = np.sqrt(np.sum(p * p, axis=1))
    big = n2 > 1.0
    safe = np.where(n2 == 0.0, 1.0, n2)
    unit = np.where(big[:, None], p / safe[:, None], p)
    x = _h2_inv_raw(_h3_inv_raw(unit))
    x[:, -1] += 1.0
    x[:, -1] = np.where(big, 1.0 + np.log(safe), x[:, -1])
    return x


# ---------------------------------------------------------------------------
# reflection folding
# ---------------------------------------------------------------------------

class FoldResult:
    """Folded representative in the fundamental half-beam plus its tray."""

    __slots__ = ("folded", "tray")

    def __init__(self, folded: np.ndarray, tray: TrayIndex):
        self.folded = folded
        self.tray = tray

    def __iter__(self):
        return iter((self.folded, self.tray))

    def __repr__(self):
        return f"FoldResult(folded={self.folded!r}, tray={self.tray})"


def fold_batch(pts: np.ndarray):
    """(folded (n,d), lat_float (n,d-1), sign (n,), parity (n,)) for a batch.

    Lateral tray indices are returned as exact float64 integers so that
    points far out (|x| ~ 1e100, as in escape tails) never overflow; parity
    is sigma(r) mod 2.  All shifts and sign flips are exact in floating
    point: folded values round-trip through unfold with zero error.
    """
    lat = np.floor((pts[:, :-1] + 1.0) / 2.0)
    odd = np.fmod(lat, 2.0) != 0.0
    folded = np.empty_like(pts)
    folded[:, :-1] = np.where(odd, -(pts[:, :-1] - 2.0 * lat), pts[:, :-1] - 2.0 * lat)
    folded[:, -1] = np.abs(pts[:, -1])
    sign = np.where(pts[:, -1] >= 0.0, 1, -1).astype(np.int64)
    parity = (np.sum(odd, axis=1) + (sign < 0)) % 2
    return folded, lat, sign, parity


def fold(x) -> FoldResult:
    """Fold one point into the fundamental half-beam; tie-breaks upward."""
    p, single = _prep(x)
    if not single:
        raise ValueError("fold takes a single point; use fold_batch for batches")
    folded, lat, sign, _ = fold_batch(p)
    tray = TrayIndex(tuple(int(v) for v in lat[0]), int(sign[0]))
    return FoldResult(folded[0], tray)


def unfold(folded, tray: TrayIndex):
    """Exact inverse of fold given the tray: x_j = 2 r_j + (-1)^{r_j} u_j."""
    p, single = _prep(folded, dim=tray.dim)
    lat = np.asarray(tray.lateral, dtype=np.float64)
    signs = np.where(np.asarray(tray.lateral, dtype=np.int64) % 2 == 0, 1.0, -1.0)
    x = np.empty_like(p)
    x[:, :-1] = 2.0 * lat + signs * p[:, :-1]
    x[:, -1] = tray.sign * p[:, -1]
    return _out(x, single)


def tray_of(x) -> TrayIndex:
    """Tray containing x; boundaries resolve by floor((x_j+1)/2), x_d=0 -> +1."""
    return fold(x).tray


def tray_boundary_distance(x):
    """Distance to the nearest fold hyperplane (odd-integer wall or x_d = 0)."""
    p, single = _prep(x)
    folded, _, _, _ = fold_batch(p)
    d = np.min(1.0 - np.abs(folded[:, :-1]), axis=1)
    d = np.minimum(d, folded[:, -1])
    return _out(d, single) if not single else float(d[0])


def seam_distance(x):
    """Distance of |x_d| to the exponential seam at height 1."""
    p, single = _prep(x)
    d = np.abs(np.abs(p[:, -1]) - 1.0)
    return _out(d, single) if not single else float(d[0])


# ---------------------------------------------------------------------------
# the full map and its inverse branches
# ---------------------------------------------------------------------------

def map_f(x, params: MapParams, height_cap: float | None = None):
    """Evaluate f = lam * F through fold / base map / parity sign.

    Consequences: ||f(x)|| = lam exp(|x_d| - 1) for |x_d| >= 1, and
    sign(f(x)_d) = +1 iff sigma(tray_of(x)) is even (off the zero set).

    Raises HeightOverflowError when |x_d| exceeds the cap (default: the
    float64 safety limit), so infinities are never silently produced.
    """
    p, single = _prep(x, dim=params.dim)
    cap = HEIGHT_SAFETY_LIMIT if height_cap is None else float(height_cap)
    top = np.max(np.abs(p[:, -1]), initial=0.0)
    if top > cap:
        raise HeightOverflowError(
            f"|x_d| = {top} exceeds the height cap {cap}; next norm would be "
            f"lam * exp({top} - 1)"
        )
    from . import backend
    return _out(backend.map_batch(np.ascontiguousarray(p), params.lam), single)


def map_F(x, dim: int | None = None):
    """The unscaled extended map F (used by derivative estimators)."""
    p, single = _prep(x, dim=dim)
    from . import backend
    return _out(backend.map_batch(np.ascontiguousarray(p), 1.0), single)


def lambda_branch(tray: TrayIndex, y, params: MapParams):
    """Inverse of f restricted to T(tray), applied to a point of f(T(tray)).

    The domain is the closed upper half-space when sigma(tray) is even and
    the closed lower one when odd (tolerance 1e-12 on the sign of y_d).
    """
    p, single = _prep(y, dim=params.dim)
    flip = -1.0 if tray.parity else 1.0
    yd = flip * p[:, -1]
    bad = yd < -DOMAIN_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise WrongHalfSpaceError(
            f"branch {tray} expects y_d {'<= 0' if tray.parity else '>= 0'}; "
            f"got y_d = {p[i, -1]!r}"
        )
    w = p.copy()
    w[:, -1] = np.maximum(yd, 0.0)  # snap boundary jitter within tolerance
    u = _base_F_inv_raw(w / params.lam)
    return _out(unfold(u, tray), single)
