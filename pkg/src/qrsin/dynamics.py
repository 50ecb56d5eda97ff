"""Orbits, itineraries, pullbacks, hairs, endpoints, the height ordering, Omega.

The escape certificate: once |x_d| reaches the height cap, the next iterate
has norm lam * exp(cap - 1), and expansion keeps the orbit growing, so the
orbit is classified Escaped at the step where the cap is first reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .basemap import fold_batch, lambda_branch, map_f, tray_of
from .core import (
    HEIGHT_SAFETY_LIMIT,
    Itinerary,
    MapParams,
    OrbitRecord,
    OrbitStatus,
    TrayIndex,
    as_point,
    as_points,
)
from .errors import NoConvergenceError, WrongHalfSpaceError

__all__ = [
    "iterate", "itinerary_of", "ItinerarySymbols",
    "pullback", "pullback_levels", "anchor_pullbacks",
    "endpoint", "EndpointEstimate",
    "hair_trace", "HairTrace",
    "order_compare", "OrderRelation", "OrderResult",
    "in_omega",
    "orbit_to_csv", "hair_to_csv",
]

DEFAULT_HEIGHT_CAP = 300.0


def _check_cap(params: MapParams, height_cap: float) -> float:
    cap = float(height_cap)
    if cap < params.lam * math.e:
        raise ValueError(f"height_cap must be >= lam*e = {params.lam * math.e}")
    if cap > HEIGHT_SAFETY_LIMIT:
        raise ValueError(f"height_cap must be <= {HEIGHT_SAFETY_LIMIT}")
    return cap


# ---------------------------------------------------------------------------
# forward iteration
# ---------------------------------------------------------------------------

def iterate(x, n: int, params: MapParams,
            height_cap: float = DEFAULT_HEIGHT_CAP) -> OrbitRecord:
    """Forward orbit of up to n applications of f with escape bookkeeping.

    Stops early with status Escaped(k) when |x_d^k| >= height_cap (the
    trigger point is recorded).  After n full applications the orbit is
    Bounded if the final point lies in the ball ||x|| <= lam (a diagnostic
    label, not a theorem), Undecided otherwise; n = 0 is always Undecided.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    cap = _check_cap(params, height_cap)
    cur = as_point(x, params.dim)
    points = [cur]
    escape_step = None
    for k in range(n + 1):
        if abs(points[-1][-1]) >= cap:
            escape_step = k
            break
        if k == n:
            break
        points.append(map_f(points[-1], params))
    pts = np.asarray(points)
    heights = np.abs(pts[:, -1])
    trays = tuple(tray_of(p) for p in points)
    if escape_step is not None:
        status = OrbitStatus.ESCAPED
    elif n >= 1 and float(np.linalg.norm(pts[-1])) <= params.lam:
        status = OrbitStatus.BOUNDED
    else:
        status = OrbitStatus.UNDECIDED
    return OrbitRecord(pts, trays, status, escape_step, heights)


class ItinerarySymbols(NamedTuple):
    symbols: tuple[TrayIndex, ...]
    truncated: bool


def itinerary_of(x, k: int, params: MapParams,
                 height_cap: float = DEFAULT_HEIGHT_CAP) -> ItinerarySymbols:
    """Trays of x, f(x), ..., f^{k-1}(x); truncated if the orbit caps out."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return ItinerarySymbols((), False)
    orbit = iterate(x, k - 1, params, height_cap)
    symbols = orbit.trays[:k]
    return ItinerarySymbols(symbols, len(symbols) < k)


# ---------------------------------------------------------------------------
# inverse-branch pullbacks
# ---------------------------------------------------------------------------

def pullback(itinerary: Itinerary, depth: int, target, params: MapParams):
    """Apply the branch chain of the first `depth` symbols to the target.

    Branches are applied innermost-first (symbol depth-1), outermost-last
    (symbol 0); the result lies in the tray of symbol 0.  The target must lie
    in the image half-space of symbol depth-1's tray.
    """
    levels = pullback_levels(itinerary, depth, target, params)
    return levels[0]


def pullback_levels(itinerary: Itinerary, depth: int, target, params: MapParams):
    """All intermediate pullback levels: levels[j] approximates f^j of the
    result, with levels[depth] = target."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    tgt = np.asarray(target, dtype=np.float64)
    single = tgt.ndim == 1
    cur = as_points(tgt, params.dim)
    levels = [None] * depth + [cur if not single else cur[0]]
    for j in range(depth - 1, -1, -1):
        sym = itinerary.symbol(j)
        try:
            cur = as_points(lambda_branch(sym, cur, params), params.dim)
        except WrongHalfSpaceError as exc:
            raise WrongHalfSpaceError(
                f"pullback failed at step {j} (symbol {sym}): {exc}", step=j
            ) from None
        levels[j] = cur[0] if single else cur
    return levels


def _anchor(itinerary: Itinerary, k: int, t: float = 0.0) -> np.ndarray:
    """Tray-center anchor at symbol k: (2 * lateral(s_k), sign(s_k) * t)."""
    sym = itinerary.symbol(k)
    z = np.empty(itinerary.dim, dtype=np.float64)
    z[:-1] = 2.0 * np.asarray(sym.lateral, dtype=np.float64)
    z[-1] = sym.sign * t
    return z


@dataclass
class EndpointEstimate:
    """Pullback limit of height-0 tray-center anchors along an itinerary."""

    point: np.ndarray
    residual: float
    depth: int
    increments: np.ndarray  # increments[k-1] = ||x_k - x_{k-1}||


def anchor_pullbacks(itinerary: Itinerary, max_depth: int, params: MapParams):
    """(pullbacks (max_depth+1, d), increments (max_depth,)) of the height-0
    tray-center anchor sequence; pullbacks[k] = pullback(itinerary, k, z_k).

    One batched branch call per level: the anchor for depth k joins the batch
    just before level k-1 is applied.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    batch = np.empty((0, itinerary.dim))
    for j in range(max_depth - 1, -1, -1):
        row = _anchor(itinerary, j + 1)[None, :]
        batch = np.vstack([row, batch])
        sym = itinerary.symbol(j)
        try:
            batch = lambda_branch(sym, batch, params)
        except WrongHalfSpaceError as exc:
            raise WrongHalfSpaceError(
                f"anchor pullback failed at step {j}: {exc}", step=j
            ) from None
    pulled = np.vstack([_anchor(itinerary, 0)[None, :], batch])
    increments = np.linalg.norm(np.diff(pulled, axis=0), axis=1)
    return pulled, increments


def endpoint(itinerary: Itinerary, tol: float, max_depth: int,
             params: MapParams) -> EndpointEstimate:
    """First pullback of the anchor sequence whose Cauchy increment <= tol.

    Anchors sit at height 0 on the tray centers, so they are valid branch
    inputs for either parity; geometric branch contraction makes the sequence
    Cauchy whenever the address is realizable.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    pulled, increments = anchor_pullbacks(itinerary, max_depth, params)
    for k in range(1, max_depth + 1):
        inc = float(increments[k - 1])
        if inc <= tol:
            return EndpointEstimate(pulled[k], inc, k,
                                    np.asarray(increments[:k]))
    raise NoConvergenceError(
        f"pullback increments did not reach tol={tol} within depth {max_depth} "
        f"(last increment {increments[-1]})",
        residual=float(increments[-1]),
    )


@dataclass
class HairTrace:
    """Sampled pullback approximation of the hair addressed by an itinerary."""

    itinerary: Itinerary
    depth: int
    t: np.ndarray            # (n,) anchor heights, ascending from 0
    points: np.ndarray       # (n, d) pullback samples, points[i] ~ gamma(t[i])
    endpoint_estimate: np.ndarray
    endpoint_residual: float
    residual: float          # Cauchy increment of the t=0 sample at `depth`
    c_bound: float           # residual <= c_bound * alpha_hat^{-depth}

    def __len__(self) -> int:
        return self.t.shape[0]


def hair_trace(itinerary: Itinerary, depth: int, t_max: float, n_samples: int,
               params: MapParams, tol: float = 1e-9,
               max_depth: int | None = None) -> HairTrace:
    """Trace the hair by pulling back anchors (2 lat(s_depth), sign * t).

    The t grid is uniform on [0, t_max]; samples are assembled in t order.
    """
    if t_max <= 0.0:
        raise ValueError("t_max must be positive")
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    ts = np.linspace(0.0, t_max, n_samples)
    sym = itinerary.symbol(depth)
    anchors = np.empty((n_samples, itinerary.dim))
    anchors[:, :-1] = 2.0 * np.asarray(sym.lateral, dtype=np.float64)
    anchors[:, -1] = sym.sign * ts
    samples = pullback(itinerary, depth, anchors, params)

    cap_depth = max_depth if max_depth is not None else depth + 60
    ep = endpoint(itinerary, tol, cap_depth, params)

    # trace residual: increment of the height-0 anchor at the trace depth
    if depth == 1:
        shallow = _anchor(itinerary, 0)
    else:
        shallow = pullback(itinerary, depth - 1, _anchor(itinerary, depth - 1), params)
    deep = pullback(itinerary, depth, _anchor(itinerary, depth), params)
    residual = float(np.linalg.norm(deep - shallow))
    c_bound = residual * params.alpha_hat ** depth
    return HairTrace(itinerary, depth, ts, samples, ep.point, ep.residual,
                     residual, c_bound)


# ---------------------------------------------------------------------------
# the height ordering and the absorbing region
# ---------------------------------------------------------------------------

class OrderRelation(Enum):
    LESS = "less"
    GREATER = "greater"
    INCOMPARABLE = "incomparable"


@dataclass
class OrderResult:
    relation: OrderRelation
    step: int | None             # trigger step, None when incomparable
    k_max: int
    persistence_ok: bool         # trigger persisted for the checked steps
    persistence_checked: int


def order_compare(x, y, params: MapParams, k_max: int,
                  height_cap: float = DEFAULT_HEIGHT_CAP) -> OrderResult:
    """Height-ordering probe: x precedes y when some iterate has
    |y_d^k| > |x_d^k| + m_hat.

    Once triggered the relation should persist (growth lemma); the next up to
    3 common recorded steps are re-checked and any reversal is reported via
    persistence_ok = False.
    """
    ox = iterate(x, k_max, params, height_cap)
    oy = iterate(y, k_max, params, height_cap)
    m = params.m_hat
    common = min(len(ox), len(oy))
    for k in range(common):
        hx, hy = ox.heights[k], oy.heights[k]
        if hy > hx + m:
            rel, first = OrderRelation.LESS, k
        elif hx > hy + m:
            rel, first = OrderRelation.GREATER, k
        else:
            continue
        ok = True
        checked = 0
        for j in range(k + 1, min(k + 4, common)):
            checked += 1
            gap = oy.heights[j] - ox.heights[j] if rel is OrderRelation.LESS \
                else ox.heights[j] - oy.heights[j]
            if gap <= m:
                ok = False
        return OrderResult(rel, first, k_max, ok, checked)
    return OrderResult(OrderRelation.INCOMPARABLE, None, k_max, True, 0)


def in_omega(x, params: MapParams):
    """|x_d| >= m_hat and ||p(x)|| <= exp(sqrt(log |x_d|))."""
    pts = np.asarray(x, dtype=np.float64)
    single = pts.ndim == 1
    pts = as_points(pts, params.dim)
    height = np.abs(pts[:, -1])
    lateral = np.sqrt(np.sum(pts[:, :-1] ** 2, axis=1))
    tall = height >= params.m_hat
    psi = np.exp(np.sqrt(np.log(np.where(tall, height, math.e))))
    ok = tall & (lateral <= psi)
    return bool(ok[0]) if single else ok


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def _csv_header(params: MapParams, depth: int, seed=None) -> list[str]:
    from . import __version__
    lines = [f"# dim={params.dim} lambda={params.lam!r} depth={depth}"]
    meta = f"# seed={seed if seed is not None else 'none'} version={__version__}"
    return [*lines, meta]


def _format_row(first, coords) -> str:
    vals = [first, *(repr(float(c)) for c in coords)]
    return ",".join(str(v) for v in vals)


def orbit_to_csv(orbit: OrbitRecord, params: MapParams, path, seed=None) -> None:
    """Step index first, then the point coordinates, one point per line."""
    lines = _csv_header(params, depth=len(orbit) - 1, seed=seed)
    for k in range(len(orbit)):
        lines.append(_format_row(k, orbit.points[k]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def hair_to_csv(trace: HairTrace, params: MapParams, path, seed=None) -> None:
    """Parameter t first, then the sample coordinates, one point per line."""
    lines = _csv_header(params, depth=trace.depth, seed=seed)
    for i in range(len(trace)):
        lines.append(_format_row(repr(float(trace.t[i])), trace.points[i]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
