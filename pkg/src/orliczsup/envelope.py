"""Scalar convex envelopes and the large-power limit density.

In the scalar case (N = 1 or d = 1) the quasiconvex envelope of a density
coincides with its convex envelope, so the lower convex hull of the sampled
graph is the whole story.  The limit density is the pointwise supremum of
the rooted envelopes of the powers, sup_n (hull(f**n))**(1/n), which this
module evaluates entirely in log space: hulls of f**n for n in the thousands
never materialize the powers, and exact zeros of f ride along as -inf
log-values without any flooring.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SampledDensity",
    "EnvelopeResult",
    "QInfinityResult",
    "convex_envelope",
    "q_infinity",
    "level_convexity_check",
    "monotone_ladder_check",
    "default_n_ladder",
]


@dataclass(frozen=True)
class SampledDensity:
    """A density slice f(x_fixed, .) tabulated on a uniform xi lattice."""

    xi: np.ndarray
    values: np.ndarray
    x_fixed: float = 0.0

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "values", values)
        if xi.ndim != 1 or xi.size < 3:
            raise ValueError("need a 1-d lattice with at least 3 points")
        if values.shape != xi.shape:
            raise ValueError("values must match the lattice")
        if not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite")
        if np.any(values < 0):
            raise ValueError("density values must be nonnegative")
        steps = np.diff(xi)
        if np.any(steps <= 0):
            raise ValueError("lattice must be strictly increasing")

    @classmethod
    def from_callable(cls, fn, radius, n_points, x_fixed=0.0):
        xi = np.linspace(-radius, radius, n_points)
        return cls(xi, np.asarray(fn(xi), dtype=float), x_fixed)

    @property
    def step(self):
        return float(self.xi[1] - self.xi[0])


@dataclass(frozen=True)
class EnvelopeResult:
    """Envelope values on the input lattice plus the input-envelope gap."""

    xi: np.ndarray
    values: np.ndarray
    certified_gap: float

    def interp(self, points):
        return np.interp(points, self.xi, self.values)


@dataclass(frozen=True)
class QInfinityResult(EnvelopeResult):
    """Limit-density table with the ladder truncation diagnostics."""

    reached_n: int = 0
    last_increment: float = float("nan")


def _lower_hull_indices(x, y):
    """Vertex indices of the lower convex hull of the graph (x_i, y_i).

    Andrew's monotone chain over points already sorted by x; collinear
    middle points are dropped, so each hull segment spans a maximal
    straight run.
    """
    hull = [0]
    for i in range(1, len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # pop b when it lies on or above the chord a->i
            if (x[b] - x[a]) * (y[i] - y[a]) - (x[i] - x[a]) * (y[b] - y[a]) <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=int)


def _chord_values(x, y, hull_idx):
    """Hull values on the full lattice: exact y at vertices, chords between."""
    out = np.empty_like(y)
    out[hull_idx] = y[hull_idx]
    for a, b in zip(hull_idx[:-1], hull_idx[1:]):
        if b - a > 1:
            inner = np.arange(a + 1, b)
            t = (x[inner] - x[a]) / (x[b] - x[a])
            out[inner] = y[a] + (y[b] - y[a]) * t
    return out


def convex_envelope(density):
    """Lower convex hull of the sampled graph, exact on the lattice.

    The certified gap is the largest amount by which the input sits above
    its envelope; zero means the input was already convex on the lattice.
    """
    x, y = density.xi, density.values
    hull_idx = _lower_hull_indices(x, y)
    values = _chord_values(x, y, hull_idx)
    gap = float(np.max(y - values))
    return EnvelopeResult(x, values, gap)


def _log_lower_hull(x, a):
    """Lower convex hull computed on log-values a_i = log y_i.

    Vertex detection and chord evaluation both work through
    log((1-t) e^{a_l} + t e^{a_r}) via logaddexp, so y values spanning
    thousands of orders of magnitude (f**n for large n) stay exact to
    rounding.  a = -inf encodes an exact zero of y.
    """

    def chord_log(l, r, i):
        t = (x[i] - x[l]) / (x[r] - x[l])
        return np.logaddexp(np.log1p(-t) + a[l], np.log(t) + a[r])

    hull = [0]
    for i in range(1, len(x)):
        while len(hull) >= 2:
            l, m = hull[-2], hull[-1]
            if a[m] >= chord_log(l, i, m):
                hull.pop()
            else:
                break
        hull.append(i)

    out = np.empty_like(a)
    hull = np.asarray(hull, dtype=int)
    out[hull] = a[hull]
    for l, r in zip(hull[:-1], hull[1:]):
        if r - l > 1:
            inner = np.arange(l + 1, r)
            t = (x[inner] - x[l]) / (x[r] - x[l])
            with np.errstate(divide="ignore"):
                out[inner] = np.logaddexp(np.log1p(-t) + a[l], np.log(t) + a[r])
    return out


def default_n_ladder(max_exponent=10):
    """The doubling ladder 1, 2, 4, ..., 2**max_exponent."""
    return [2**k for k in range(max_exponent + 1)]


def rooted_power_envelope(density, n):
    """(hull(f**n))**(1/n) on the lattice, evaluated in log space."""
    with np.errstate(divide="ignore"):
        log_f = np.log(density.values)
    hull_log = _log_lower_hull(density.xi, n * log_f)
    return np.exp(hull_log / n)


def q_infinity(density, n_ladder=None, stop_increment=1e-8):
    """Pointwise sup over the ladder of rooted power envelopes.

    Returns the running maximum together with the last ladder step actually
    used: the sup is truncated once the lattice-wide increment stays below
    ``stop_increment`` for two consecutive steps, and the final increment is
    reported so slow convergence is visible rather than asserted away.
    """
    if n_ladder is None:
        n_ladder = default_n_ladder()
    n_ladder = [int(n) for n in n_ladder]
    if any(b <= a for a, b in zip(n_ladder, n_ladder[1:])) or n_ladder[0] < 1:
        raise ValueError("n_ladder must be strictly increasing, starting >= 1")

    best = rooted_power_envelope(density, n_ladder[0])
    reached = n_ladder[0]
    increment = float("inf")
    small_steps = 0
    for n in n_ladder[1:]:
        e_n = rooted_power_envelope(density, n)
        increment = float(np.max(e_n - best))
        best = np.maximum(best, e_n)
        reached = n
        small_steps = small_steps + 1 if increment < stop_increment else 0
        if small_steps >= 2:
            break
    gap = float(np.max(density.values - best))
    return QInfinityResult(density.xi, best, gap,
                           reached_n=reached, last_increment=increment)


@dataclass(frozen=True)
class LevelConvexityReport:
    passed: bool
    worst_excess: float
    witness_xi: float | None

    def __bool__(self):
        return self.passed


def level_convexity_check(density, tol=None):
    """1-d level convexity: f(m) <= max(f(a), f(b)) for all a < m < b.

    Checked in O(n) against prefix and suffix minima; the witness is the
    lattice point with the largest excess over the best enclosing pair.
    """
    y = density.values
    if tol is None:
        tol = 1e-12 * (1.0 + float(np.max(np.abs(y))))
    prefix = np.minimum.accumulate(y)
    suffix = np.minimum.accumulate(y[::-1])[::-1]
    bound = np.maximum(prefix, suffix)
    excess = y - bound - tol
    worst = float(np.max(excess))
    if worst <= 0:
        return LevelConvexityReport(True, worst, None)
    return LevelConvexityReport(False, worst,
                                float(density.xi[int(np.argmax(excess))]))


@dataclass(frozen=True)
class LadderReport:
    passed: bool
    worst_violation: float
    tables: dict

    def __bool__(self):
        return self.passed


def monotone_ladder_check(density, n_ladder=None, tol=1e-10):
    """Checks (hull(f**n))**(1/n) is pointwise nondecreasing along the ladder."""
    if n_ladder is None:
        n_ladder = default_n_ladder()
    tables = {int(n): rooted_power_envelope(density, int(n)) for n in n_ladder}
    worst = -float("inf")
    ns = sorted(tables)
    for a, b in zip(ns, ns[1:]):
        worst = max(worst, float(np.max(tables[a] - tables[b])))
    return LadderReport(worst <= tol, worst, tables)
