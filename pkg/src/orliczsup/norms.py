"""Modulars, Luxemburg quasinorms, and executable forms of the norm lemmas.

The Luxemburg norm is the root of the monotone scalar equation
``rho(g / lam) = 1`` and is found by bracketed bisection; the infinity
indicator short-circuits to the cellwise supremum, exactly.  Every
inequality of the theory that the package relies on (unit-ball property,
embedding with explicit constant, variable-exponent Hoelder, norm-modular
sandwich) is available as a checker returning a small report object.
"""

from dataclasses import dataclass

import numpy as np

from . import phi as phimod
from .domain import integrate, sup_cellwise
from .errors import BracketError, HypothesisError
from .reports import ConvergenceReport

__all__ = [
    "modular",
    "lp_norm",
    "NormValue",
    "luxemburg_norm",
    "unit_ball_check",
    "embedding_check",
    "holder_check",
    "sandwich_check",
    "embedding_constant",
    "norm_convergence_experiment",
]


def _cell_field(grid, g):
    g = np.asarray(g, dtype=float).reshape(-1)
    if g.size != grid.n_cells:
        raise ValueError(f"expected {grid.n_cells} cell values, got {g.size}")
    return g


def modular(phi, grid, g):
    """rho_phi(g) = integral of phi(x, g(x)) over the cell lattice; g >= 0."""
    g = _cell_field(grid, g)
    if np.any(g < 0):
        raise ValueError("modular argument must be nonnegative")
    with np.errstate(over="ignore", under="ignore"):
        values = phi(grid.cell_centers(), g)
    return integrate(grid, values)


def lp_norm(grid, g, p):
    """Discrete L^p norm (sum h * g**p)**(1/p), evaluated in log space.

    Large p underflows/overflows the direct power; the log-space form is
    exact up to rounding for any p >= 1.
    """
    g = np.abs(_cell_field(grid, g))
    if np.isinf(p):
        return sup_cellwise(grid, g)
    if np.all(g == 0):
        return 0.0
    log_h = np.log(grid.cell_measure)
    with np.errstate(divide="ignore"):
        terms = p * np.log(g) + log_h
    m = np.max(terms)
    return float(np.exp((m + np.log(np.sum(np.exp(terms - m)))) / p))


@dataclass(frozen=True)
class NormValue:
    """A computed Luxemburg norm and the bracket half-width it achieved."""

    value: float
    achieved_tol: float

    def __float__(self):
        return self.value


def luxemburg_norm(phi, grid, g, tol=1e-9):
    """inf{lam > 0 : rho_phi(g / lam) <= 1} by bracketed bisection.

    The modular is nonincreasing in lam, with rho = +inf counting as "> 1".
    The zero field has norm 0; the infinity indicator short-circuits to
    sup_cellwise exactly (no root search).  If the bracket cannot be
    established after the expansion cap, a BracketError carries the modular
    values at both ends.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    g = _cell_field(grid, g)
    if np.any(g < 0):
        raise ValueError("field must be nonnegative")
    if phi.is_indicator:
        return NormValue(sup_cellwise(grid, g), 0.0)
    gmax = float(np.max(g))
    if gmax == 0.0:
        return NormValue(0.0, 0.0)
    if np.isinf(gmax):
        return NormValue(float("inf"), 0.0)

    def rho(lam):
        return modular(phi, grid, g / lam)

    lo, hi = gmax / 2.0, gmax * 2.0
    rho_hi = rho(hi)
    for _ in range(60):
        if rho_hi <= 1.0:
            break
        lo, hi = hi, hi * 2.0
        rho_hi = rho(hi)
    else:
        raise BracketError("no upper bracket for the Luxemburg norm",
                           lo, hi, rho(lo), rho_hi)
    rho_lo = rho(lo)
    for _ in range(60):
        if rho_lo > 1.0:
            break
        lo, hi = lo / 2.0, lo
        rho_lo = rho(lo)
    else:
        raise BracketError("no lower bracket for the Luxemburg norm",
                           lo, hi, rho_lo, rho(hi))

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if rho(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return NormValue(0.5 * (lo + hi), 0.5 * (hi - lo))


# -- inequality checkers -----------------------------------------------------

@dataclass(frozen=True)
class UnitBallReport:
    passed: bool
    norm: float
    modular_value: float

    def __bool__(self):
        return self.passed


def unit_ball_check(phi, grid, g, tol=1e-9):
    """Checks ||g|| < 1 => rho(g) <= 1 => ||g|| <= 1 on computed values.

    The norm carries a root tolerance, so the strict hypothesis is guarded
    by a 2*tol band and the conclusions get the matching slack.
    """
    nv = luxemburg_norm(phi, grid, g, tol=tol)
    rho = modular(phi, grid, g)
    ok = True
    if nv.value < 1.0 - 2.0 * tol:
        ok &= rho <= 1.0 + phimod.default_tol(1.0)
    if rho <= 1.0:
        ok &= nv.value <= 1.0 + 2.0 * tol
    return UnitBallReport(bool(ok), nv.value, rho)


def embedding_constant(p, L, c, omega_measure):
    """The explicit embedding constant (2L(|Omega| + c))**(1/p)."""
    return float((2.0 * L * (omega_measure + c)) ** (1.0 / p))


@dataclass(frozen=True)
class EmbeddingReport:
    passed: bool
    lp_norm: float
    phi_norm: float
    constant: float

    def __bool__(self):
        return self.passed


def embedding_check(phi, grid, g, p, L, c, tol=1e-9):
    """Verifies ||g||_{L^p} <= (2L(|Omega|+c))**(1/p) ||g||_phi.

    Preconditions are the anchor bound with constant c and (aInc)_p with
    constant L; either failure rejects the check by naming the hypothesis.
    """
    centers = grid.cell_centers()
    anchor = phimod.check_anchor(phi, c, centers)
    if not anchor.passed:
        raise HypothesisError("(H4)", f"anchor bound with c={c} fails: "
                              f"phi(x,1) in [{anchor.phi_minus_1:.3g}, "
                              f"{anchor.phi_plus_1:.3g}]")
    ainc = phimod.check_aInc(phi, p, L, phimod.SamplePlan(centers))
    if not ainc.passed:
        raise HypothesisError("(H3)", f"(aInc)_{p} with L={L} fails, worst "
                              f"violation {ainc.worst_violation:.3g}")
    g = _cell_field(grid, g)
    lp = lp_norm(grid, g, p)
    nv = luxemburg_norm(phi, grid, g, tol=tol)
    const = embedding_constant(p, L, c, grid.measure)
    bound = const * (nv.value + nv.achieved_tol)
    passed = lp <= bound + phimod.default_tol(bound)
    return EmbeddingReport(bool(passed), lp, nv.value, const)


@dataclass(frozen=True)
class HolderReport:
    passed: bool
    product_integral: float
    abs_product_integral: float
    bound: float
    constant: float

    def __bool__(self):
        return self.passed


def holder_check(grid, f, g, p, tol=1e-9):
    """Variable-exponent Hoelder check with constant 1/p^- + 1/p'^-.

    f and g are signed per-cell fields; p is a coefficient (preset or
    callable) with p(x) > 1 on the lattice, infinite values allowed under
    the convention p' = 1 there.
    """
    f = np.asarray(f, dtype=float).reshape(-1)
    g = np.asarray(g, dtype=float).reshape(-1)
    centers = grid.cell_centers()
    p_fn = phimod.as_coefficient(p)
    p_vals = np.asarray(p_fn(centers), dtype=float)
    finite = np.isfinite(p_vals)
    if np.any(p_vals[finite] <= 1.0):
        raise ValueError("holder_check needs p(x) > 1 where finite")
    pprime = phimod.ConjugateExponent(p_fn)
    p_minus = float(np.min(p_vals))
    pprime_minus = float(np.min(pprime(centers)))
    constant = (0.0 if np.isinf(p_minus) else 1.0 / p_minus) + 1.0 / pprime_minus

    lhs = abs(integrate(grid, f * g))
    mid = integrate(grid, np.abs(f * g))
    nf = luxemburg_norm(phimod.VariableExponent(p_fn), grid, np.abs(f), tol=tol)
    ng = luxemburg_norm(phimod.VariableExponent(pprime), grid, np.abs(g), tol=tol)
    bound = constant * (nf.value + nf.achieved_tol) * (ng.value + ng.achieved_tol)
    slack = phimod.default_tol(bound)
    passed = lhs <= mid + slack and mid <= bound + slack
    return HolderReport(bool(passed), lhs, mid, bound, constant)


@dataclass(frozen=True)
class SandwichReport:
    passed: bool
    modular_value: float
    norm: float
    lower: float
    upper: float

    def __bool__(self):
        return self.passed


def sandwich_check(grid, u, p, tol=1e-9):
    """Norm-modular sandwich for bounded variable exponents:

    min(rho**(1/p^-), rho**(1/p^+)) <= ||u||_{p(.)} <= max(...), with the
    computed modular and norm.
    """
    u = np.abs(np.asarray(u, dtype=float).reshape(-1))
    p_fn = phimod.as_coefficient(p)
    centers = grid.cell_centers()
    p_vals = np.asarray(p_fn(centers), dtype=float)
    if not np.all(np.isfinite(p_vals)):
        raise ValueError("sandwich_check needs a bounded exponent (p^+ < inf)")
    p_minus, p_plus = float(np.min(p_vals)), float(np.max(p_vals))
    varphi = phimod.VariableExponent(p_fn)
    rho = modular(varphi, grid, u)
    if rho == 0.0:
        lower = upper = 0.0
    else:
        lower = min(rho ** (1.0 / p_minus), rho ** (1.0 / p_plus))
        upper = max(rho ** (1.0 / p_minus), rho ** (1.0 / p_plus))
    nv = luxemburg_norm(varphi, grid, u, tol=tol)
    slack = 2.0 * tol + phimod.default_tol(upper)
    passed = (lower <= nv.value + slack) and (nv.value <= upper + slack)
    return SandwichReport(bool(passed), rho, nv.value, lower, upper)


# -- the norm-convergence experiment ----------------------------------------

def norm_convergence_experiment(grid, g, seq, L, c, tol=1e-9,
                                final_gap_threshold=1e-2, threads=None):
    """Tracks ||g||_{phi_n} -> ||g||_inf along a diverging-exponent ladder.

    Preconditions: every entry passes the anchor check with the shared c and
    the (aInc) check at its declared rate with the shared L, and the lower
    exponents increase strictly.  The report rows carry the norm, the sup
    norm, their gap and the embedding constant; the assertions are the
    final-gap threshold and the monotone decrease of the constants to 1.
    """
    g = _cell_field(grid, g)
    centers = grid.cell_centers()
    seq.validate_for_limit()
    plan = phimod.SamplePlan(centers)
    for i, entry in enumerate(seq):
        rate = seq.p_minus[i]
        anchor = phimod.check_anchor(entry, c, centers)
        if not anchor.passed:
            raise HypothesisError("(H4)", f"entry {i} fails the anchor bound "
                                  f"with c={c}")
        ainc = phimod.check_aInc(entry, rate, L, plan)
        if not ainc.passed:
            raise HypothesisError("(H3)", f"entry {i} fails (aInc) at rate "
                                  f"{rate} with L={L}")

    sup = sup_cellwise(grid, g)

    def row(i):
        nv = luxemburg_norm(seq.entries[i], grid, g, tol=tol)
        const = embedding_constant(seq.p_minus[i], L, c, grid.measure)
        return (i + 1, float(seq.p_minus[i]), float(seq.p_plus[i]),
                nv.value, sup, abs(nv.value - sup), const)

    indices = range(len(seq))
    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, indices))
    else:
        rows = [row(i) for i in indices]

    report = ConvergenceReport(
        "norm-convergence",
        ["n", "p_minus", "p_plus", "norm", "sup_norm", "gap",
         "embedding_constant"],
        meta={"L": L, "c": c, "tol": tol, "grid_cells": list(grid.cells)},
    )
    for r in rows:
        report.add_row(*r)

    gaps = report.column("gap")
    consts = report.column("embedding_constant")
    report.add_assertion(
        "final norm gap below threshold",
        gaps[-1] <= final_gap_threshold,
        f"gap={gaps[-1]:.3e} threshold={final_gap_threshold:.3e}")
    tail = gaps[len(gaps) - max(2, len(gaps) // 3):]
    report.add_assertion(
        "gap nonincreasing on the tail",
        all(b <= a + 2.0 * tol for a, b in zip(tail, tail[1:])),
        f"tail gaps {['%.3e' % v for v in tail]}")
    report.add_assertion(
        "embedding constants decrease monotonically toward 1",
        all(b <= a + 1e-15 for a, b in zip(consts, consts[1:]))
        and consts[-1] >= 1.0,
        f"first={consts[0]:.6g} last={consts[-1]:.6g}")
    return report
