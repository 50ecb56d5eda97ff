"""Shared domain types: trays, itineraries, map parameters, orbits, sampling.

The ambient space is R^d, d >= 2, tiled by "trays"
T(r) = {|x_j - 2 r_j| <= 1 (j < d), r_d x_d >= 0} indexed by
r = (r_1, ..., r_{d-1}, r_d) with integer lateral part and r_d in {-1, +1}.
The reflection parity sigma(r) = sum_j r_j + (r_d - 1)/2 decides whether the
expanding map sends T(r) onto the upper or the lower half-space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import ItineraryError, NotExpandingError

__all__ = [
    "TrayIndex",
    "Itinerary",
    "MapParams",
    "OrbitStatus",
    "OrbitRecord",
    "SeededSampler",
    "validate_params",
    "admissible_successor",
    "as_point",
    "as_points",
]

#: |x_d| above which exp(|x_d| - 1) risks overflowing a 64-bit float.
HEIGHT_SAFETY_LIMIT = 700.0


# ---------------------------------------------------------------------------
# points
# ---------------------------------------------------------------------------

def as_point(x, dim: int | None = None) -> np.ndarray:
    """Coerce to a finite float64 vector of length >= 2 (= dim if given)."""
    p = np.asarray(x, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"expected a 1-d point, got shape {p.shape}")
    if p.shape[0] < 2:
        raise ValueError("points need dimension d >= 2")
    if dim is not None and p.shape[0] != dim:
        raise ValueError(f"expected dimension {dim}, got {p.shape[0]}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point has non-finite entries")
    return p


def as_points(x, dim: int | None = None) -> np.ndarray:
    """Coerce to a finite (n, d) float64 array."""
    p = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    if p.ndim == 1:
        p = p[None, :]
    if p.ndim != 2 or p.shape[1] < 2:
        raise ValueError(f"expected (n, d>=2) points, got shape {p.shape}")
    if dim is not None and p.shape[1] != dim:
        raise ValueError(f"expected dimension {dim}, got {p.shape[1]}")
    if not np.all(np.isfinite(p)):
        raise ValueError("points have non-finite entries")
    return p


# ---------------------------------------------------------------------------
# tray indices and itineraries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrayIndex:
    """Label r of a tray: lateral integers (r_1..r_{d-1}) plus a sign r_d."""

    lateral: tuple[int, ...]
    sign: int

    def __post_init__(self):
        object.__setattr__(self, "lateral", tuple(int(v) for v in self.lateral))
        if self.sign not in (-1, 1):
            raise ValueError(f"tray sign must be -1 or +1, got {self.sign}")

    @property
    def dim(self) -> int:
        return len(self.lateral) + 1

    @property
    def sigma(self) -> int:
        """Reflection count parity source: sum r_j + (r_d - 1)/2."""
        return sum(self.lateral) + (self.sign - 1) // 2

    @property
    def parity(self) -> int:
        """0 if sigma(r) is even (tray maps onto H+), 1 if odd (H-)."""
        return self.sigma % 2

    @classmethod
    def origin(cls, dim: int) -> "TrayIndex":
        return cls((0,) * (dim - 1), 1)

    def to_json(self) -> list:
        return [list(self.lateral), self.sign]

    @classmethod
    def from_json(cls, obj) -> "TrayIndex":
        lateral, sign = obj
        return cls(tuple(lateral), int(sign))

    def __str__(self) -> str:
        return f"({','.join(str(v) for v in self.lateral)};{self.sign:+d})"


def admissible_successor(prev: TrayIndex, nxt: TrayIndex) -> bool:
    """Parity rule: the successor sign must match prev's image half-space."""
    return (nxt.sign == 1) == (prev.parity == 0)


@dataclass(frozen=True)
class Itinerary:
    """Eventually periodic symbolic address: finite prefix + repeating cycle.

    Validity is the parity-admissibility of every consecutive pair along
    prefix . cycle^inf, including the wrap pair (last cycle element back to
    the first).  Whether the addressed hair is non-empty is a separate,
    numerical question (see dynamics.endpoint / dynamics.hair_trace).
    """

    dim: int
    prefix: tuple[TrayIndex, ...]
    cycle: tuple[TrayIndex, ...]

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "cycle", tuple(self.cycle))
        if self.dim < 2:
            raise ValueError("itinerary dimension must be >= 2")
        if not self.cycle:
            raise ValueError("itinerary cycle must be non-empty")
        word = self.prefix + self.cycle
        for i, sym in enumerate(word):
            if sym.dim != self.dim:
                raise ItineraryError(
                    f"symbol {i} has dimension {sym.dim}, itinerary wants {self.dim}"
                )
        for i in range(len(word) - 1):
            if not admissible_successor(word[i], word[i + 1]):
                raise ItineraryError(
                    f"parity rule violated between symbols {i} and {i + 1}: "
                    f"{word[i]} -> {word[i + 1]}",
                    index_pair=(i, i + 1),
                )
        last = len(word) - 1
        wrap_to = len(self.prefix)
        if not admissible_successor(word[last], word[wrap_to]):
            raise ItineraryError(
                f"parity rule violated on the cycle wrap between symbols "
                f"{last} and {wrap_to}: {word[last]} -> {word[wrap_to]}",
                index_pair=(last, wrap_to),
            )

    def symbol(self, k: int) -> TrayIndex:
        """k-th symbol of prefix . cycle^inf (k >= 0)."""
        if k < 0:
            raise ValueError("symbol index must be >= 0")
        if k < len(self.prefix):
            return self.prefix[k]
        return self.cycle[(k - len(self.prefix)) % len(self.cycle)]

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "prefix": [s.to_json() for s in self.prefix],
            "cycle": [s.to_json() for s in self.cycle],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Itinerary":
        return cls(
            dim=int(obj["dim"]),
            prefix=tuple(TrayIndex.from_json(s) for s in obj.get("prefix", [])),
            cycle=tuple(TrayIndex.from_json(s) for s in obj["cycle"]),
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Itinerary":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    @classmethod
    def constant(cls, dim: int, symbol: TrayIndex | None = None) -> "Itinerary":
        return cls(dim, (), (symbol or TrayIndex.origin(dim),))


def random_admissible_itinerary(
    dim: int,
    sampler: "SeededSampler",
    n_prefix: int = 0,
    n_cycle: int = 1,
    lateral_range: tuple[int, int] = (-3, 3),
) -> Itinerary:
    """Draw laterals uniformly; signs are forced by the parity rule.

    Only the first symbol's sign is free (chosen +1).  The wrap constraint is
    met by bumping the last cycle lateral when needed, which flips its parity.
    """
    lo, hi = lateral_range
    laterals = [
        tuple(int(v) for v in sampler.rng.integers(lo, hi + 1, size=dim - 1))
        for _ in range(n_prefix + n_cycle)
    ]
    symbols: list[TrayIndex] = []
    sign = 1
    for lat in laterals:
        symbols.append(TrayIndex(lat, sign))
        sign = 1 if symbols[-1].parity == 0 else -1
    # wrap: the sign forced after the last cycle symbol must equal the sign
    # of the first cycle symbol
    first_cycle = symbols[n_prefix]
    if sign != first_cycle.sign:
        last = symbols[-1]
        bumped = (last.lateral[0] + 1,) + last.lateral[1:]
        symbols[-1] = TrayIndex(bumped, last.sign)
    return Itinerary(dim, tuple(symbols[:n_prefix]), tuple(symbols[n_prefix:]))


# ---------------------------------------------------------------------------
# map parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MapParams:
    """Dimension, scaling lambda, and cached constant estimates.

    alpha_hat = lam * beta_hat must exceed 1 (expanding regime) and m_hat
    never drops below max{e, 4 lam}.
    """

    dim: int
    lam: float
    beta_hat: float
    alpha_hat: float
    m_hat: float
    delta_hat: float | None = None
    k_hat: float | None = None

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dimension must be >= 2")
        if self.alpha_hat <= 1.0:
            raise NotExpandingError(self.lam, self.beta_hat)
        floor = max(math.e, 4.0 * self.lam)
        if self.m_hat < floor:
            raise ValueError(f"m_hat={self.m_hat} below the floor max(e,4*lam)={floor}")
        if self.k_hat is not None and self.k_hat < 1.0:
            raise ValueError("k_hat must be >= 1")
        if self.delta_hat is not None and self.delta_hat <= 0.0:
            raise ValueError("delta_hat must be positive")

    def with_constants(self, **kwargs) -> "MapParams":
        return replace(self, **kwargs)


def validate_params(
    dim: int,
    lam: float,
    beta_hat: float,
    *,
    m_hat: float | None = None,
    delta_hat: float | None = None,
    k_hat: float | None = None,
) -> MapParams:
    """Build MapParams, refusing non-expanding lambda.

    m_hat, if given, is clamped from below by max{e, 4 lam}.
    """
    if dim < 2:
        raise ValueError("dimension must be >= 2")
    if lam <= 0.0 or beta_hat <= 0.0:
        raise ValueError("lambda and beta_hat must be positive")
    if lam * beta_hat <= 1.0:
        raise NotExpandingError(lam, beta_hat)
    floor = max(math.e, 4.0 * lam)
    return MapParams(
        dim=dim,
        lam=float(lam),
        beta_hat=float(beta_hat),
        alpha_hat=float(lam) * float(beta_hat),
        m_hat=max(floor, m_hat) if m_hat is not None else floor,
        delta_hat=delta_hat,
        k_hat=k_hat,
    )


# ---------------------------------------------------------------------------
# orbits
# ---------------------------------------------------------------------------

class OrbitStatus(Enum):
    ESCAPED = "escaped"
    BOUNDED = "bounded"
    UNDECIDED = "undecided"


@dataclass
class OrbitRecord:
    """Forward orbit x^0, x^1, ... with tray symbols and escape bookkeeping."""

    points: np.ndarray  # (m, d)
    trays: tuple[TrayIndex, ...]
    status: OrbitStatus
    escape_step: int | None
    heights: np.ndarray  # |x_d^k|, shape (m,)

    def __len__(self) -> int:
        return self.points.shape[0]


# ---------------------------------------------------------------------------
# deterministic sampling
# ---------------------------------------------------------------------------

class SeededSampler:
    """Reproducible uniform sampling on a fixed 64-bit generator (PCG64).

    Identical seeds give identical streams across runs and platforms.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.rng = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self.rng.uniform(low, high, size=size)

    def point_in_box(self, low, high) -> np.ndarray:
        lo = np.asarray(low, dtype=np.float64)
        hi = np.asarray(high, dtype=np.float64)
        return self.rng.uniform(lo, hi)

    def points_in_box(self, n: int, low, high) -> np.ndarray:
        lo = np.asarray(low, dtype=np.float64)
        hi = np.asarray(high, dtype=np.float64)
        return self.rng.uniform(lo, hi, size=(n, lo.shape[0]))

    def spawn(self, offset: int) -> "SeededSampler":
        """Independent stream derived from (seed, offset); deterministic."""
        return SeededSampler((self.seed * 1_000_003 + offset) % (1 << 63))
