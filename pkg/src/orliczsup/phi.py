"""Catalog of generalized weak Phi-functions and structural hypothesis checkers.

A Phi-function here is a map ``phi(x, t)`` on ``Omega x [0, inf)`` that
vanishes at ``t = 0``, is nondecreasing in ``t`` and diverges as ``t -> inf``
(the infinity indicator is the one deliberate exception handled everywhere as
a short-circuit).  The catalog covers constant powers ``t**p``, variable
exponents ``t**p(x)``, double phase ``t**p + a(x) t**q`` and its variable
version, x-independent Orlicz presets, and the indicator of ``t > 1`` whose
Luxemburg norm is the sup norm.

Spatial coefficients (exponents, weights, scales) come from a small symbolic
preset catalog: constant, affine in the first coordinate, and sinusoidal in
the first coordinate.  There deliberately is no expression parser.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisError

__all__ = [
    "Coefficient",
    "ConjugateExponent",
    "PhiFunction",
    "ConstantPower",
    "VariableExponent",
    "DoublePhase",
    "VariableDoublePhase",
    "OrliczFunction",
    "InfinityIndicator",
    "orlicz_preset",
    "SamplePlan",
    "ExponentSequence",
    "evaluate",
    "check_aInc",
    "check_anchor",
    "check_a0",
]

_INF = float("inf")


def _first_coordinate(x):
    """First spatial coordinate of a point array.

    Arrays of shape (..., N) use their last axis as coordinates; scalars and
    1-d arrays are taken to be first coordinates already (N = 1 shorthand).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim >= 2:
        return x[..., 0]
    return x


@dataclass(frozen=True)
class Coefficient:
    """Spatial coefficient from the symbolic preset catalog.

    kind:
        "constant":   a
        "affine":     a + b*x1
        "sinusoidal": a + b*sin(2*pi*x1)
    """

    kind: str
    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "affine", "sinusoidal"):
            raise ValueError(f"unknown coefficient preset {self.kind!r}")

    def __call__(self, x):
        x1 = _first_coordinate(x)
        if self.kind == "constant":
            return np.broadcast_to(np.float64(self.a), np.shape(x1)).copy() \
                if np.ndim(x1) else np.float64(self.a)
        if self.kind == "affine":
            return self.a + self.b * x1
        return self.a + self.b * np.sin(2.0 * np.pi * x1)


def as_coefficient(c):
    """Coerce a number, preset, or callable into a coefficient callable."""
    if isinstance(c, Coefficient) or callable(c):
        return c
    return Coefficient("constant", float(c))


class ConjugateExponent:
    """Pointwise dual exponent p'(x) with 1/p + 1/p' = 1 and p = inf -> p' = 1."""

    def __init__(self, p):
        self.p = as_coefficient(p)

    def __call__(self, x):
        p = np.atleast_1d(np.asarray(self.p(x), dtype=float))
        finite = ~np.isinf(p)
        if np.any(p[finite] <= 1.0):
            raise ValueError("conjugate exponent undefined where p(x) <= 1")
        out = np.ones_like(p)
        out[finite] = p[finite] / (p[finite] - 1.0)
        return out


def _validate_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    if not np.all(np.isfinite(t)):
        raise ValueError("t must be finite")
    return t


def _no_nan(values):
    if np.any(np.isnan(values)):
        raise FloatingPointError("NaN produced while evaluating a Phi-function")
    return values


class PhiFunction:
    """Base class: a generalized weak Phi-function with declared structure.

    Subclasses set ``aInc_rate`` (the exponent p for which (aInc)_p is
    claimed), ``aInc_constant`` (its constant L >= 1) and provide
    ``_value(x, t)``.  ``anchor_bounds`` is the claimed two-sided bound
    (1/c, c) on phi(x, 1).
    """

    aInc_rate = 1.0
    aInc_constant = 1.0
    anchor_bounds = (1.0, 1.0)
    is_indicator = False

    def _value(self, x, t):  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, x, t):
        """Vectorized evaluation with broadcasting; t validated >= 0, finite."""
        t = _validate_t(t)
        return _no_nan(self._value(x, t))

    def anchor_values(self, x):
        """phi(x, 1) at the sample points x."""
        return self(x, np.ones(np.shape(_first_coordinate(x))))

    def exponent_range(self, x):
        """Sampled (lower, upper) growth exponents over the points x.

        For power-type functions these are the lattice extrema of p(.) (and
        q(.) where the double-phase weight is active); for plain Orlicz
        presets the declared (aInc) rate is reported for both ends.
        """
        r = float(self.aInc_rate)
        return (r, r)


class ConstantPower(PhiFunction):
    """phi(x, t) = s(x) * t**p with optional scale s (default 1)."""

    def __init__(self, p, scale=None):
        p = float(p)
        if p < 1:
            raise ValueError("p must be >= 1")
        self.p = p
        self.scale = None if scale is None else as_coefficient(scale)
        self.aInc_rate = p
        self.aInc_constant = 1.0

    def _value(self, x, t):
        v = t**self.p
        if self.scale is not None:
            v = np.asarray(self.scale(x), dtype=float) * v
        return v

    def exponent_range(self, x):
        return (self.p, self.p)

    def __repr__(self):
        return f"ConstantPower(p={self.p!r})"


class VariableExponent(PhiFunction):
    """phi(x, t) = s(x) * t**p(x) with p(x) >= 1 and optional scale s."""

    def __init__(self, p, scale=None, aInc_rate=None):
        self.p = as_coefficient(p)
        self.scale = None if scale is None else as_coefficient(scale)
        # The honest lower rate is ess inf p; callers that know it can
        # declare it, otherwise it is sampled on first use.
        self.aInc_rate = aInc_rate
        self.aInc_constant = 1.0

    def _exponents(self, x):
        p = np.asarray(self.p(x), dtype=float)
        if np.any(p < 1):
            raise ValueError("variable exponent must satisfy p(x) >= 1")
        return p

    def _value(self, x, t):
        p = self._exponents(x)
        v = t ** np.broadcast_to(p, np.broadcast_shapes(np.shape(p), t.shape))
        if self.scale is not None:
            v = np.asarray(self.scale(x), dtype=float) * v
        return v

    def exponent_range(self, x):
        p = self._exponents(x)
        return (float(np.min(p)), float(np.max(p)))

    def __repr__(self):
        return f"VariableExponent(p={self.p!r})"


class DoublePhase(PhiFunction):
    """phi(x, t) = t**p + a(x) * t**q with a >= 0 and q >= p >= 1."""

    def __init__(self, p, q, a):
        p, q = float(p), float(q)
        if p < 1 or q < p:
            raise ValueError("need 1 <= p <= q")
        self.p, self.q = p, q
        self.a = as_coefficient(a)
        self.aInc_rate = p
        self.aInc_constant = 1.0

    def _value(self, x, t):
        a = np.asarray(self.a(x), dtype=float)
        if np.any(a < 0):
            raise ValueError("double phase weight must be nonnegative")
        return t**self.p + a * t**self.q

    def exponent_range(self, x):
        a = np.asarray(self.a(x), dtype=float)
        upper = self.q if np.any(a > 0) else self.p
        return (self.p, upper)

    def __repr__(self):
        return f"DoublePhase(p={self.p!r}, q={self.q!r})"


class VariableDoublePhase(PhiFunction):
    """phi(x, t) = t**p(x) + a(x) * t**q(x) with q(x) >= p(x) >= 1."""

    def __init__(self, p, q, a):
        self.p = as_coefficient(p)
        self.q = as_coefficient(q)
        self.a = as_coefficient(a)
        self.aInc_rate = None
        self.aInc_constant = 1.0

    def _exponents(self, x):
        p = np.asarray(self.p(x), dtype=float)
        q = np.asarray(self.q(x), dtype=float)
        if np.any(p < 1) or np.any(q < p):
            raise ValueError("need 1 <= p(x) <= q(x)")
        return p, q

    def _value(self, x, t):
        p, q = self._exponents(x)
        a = np.asarray(self.a(x), dtype=float)
        if np.any(a < 0):
            raise ValueError("double phase weight must be nonnegative")
        shape = np.broadcast_shapes(np.shape(p), t.shape)
        return t ** np.broadcast_to(p, shape) + a * t ** np.broadcast_to(q, shape)

    def exponent_range(self, x):
        p, q = self._exponents(x)
        a = np.asarray(self.a(x), dtype=float)
        upper = float(np.max(np.where(a > 0, q, p)))
        return (float(np.min(p)), upper)


class OrliczFunction(PhiFunction):
    """x-independent Orlicz function t -> fn(t) with declared (aInc) data."""

    def __init__(self, fn, aInc_rate, aInc_constant=1.0, name="orlicz"):
        self.fn = fn
        self.aInc_rate = float(aInc_rate)
        self.aInc_constant = float(aInc_constant)
        self.name = name

    def _value(self, x, t):
        v = np.asarray(self.fn(t), dtype=float)
        target = np.broadcast_shapes(np.shape(_first_coordinate(x)), t.shape) \
            if x is not None else t.shape
        return np.broadcast_to(v, target).copy() if v.shape != target else v

    def __repr__(self):
        return f"OrliczFunction({self.name!r})"


class InfinityIndicator(PhiFunction):
    """The indicator 0 for t <= 1, +inf for t > 1; its Luxemburg norm is sup."""

    is_indicator = True

    def _value(self, x, t):
        v = np.where(t > 1.0, _INF, 0.0)
        target = np.broadcast_shapes(np.shape(_first_coordinate(x)), t.shape) \
            if x is not None else t.shape
        return np.broadcast_to(v, target).copy() if v.shape != target else v

    def exponent_range(self, x):
        return (_INF, _INF)

    def __repr__(self):
        return "InfinityIndicator()"


def orlicz_preset(name, **params):
    """Named x-independent Orlicz presets.

    "scaled_power":   s * t**p        (params s, p; anchor value s)
    "two_power_max":  max(t**p_low, t**p_high)  (true lower rate is p_low,
                      but the declared rate defaults to p_high: the preset
                      exists to exercise the uniform-(aInc) refusal)
    """
    if name == "scaled_power":
        s, p = float(params["s"]), float(params["p"])
        if s <= 0 or p < 1:
            raise ValueError("scaled_power needs s > 0 and p >= 1")
        return OrliczFunction(lambda t: s * t**p, aInc_rate=p,
                              name=f"scaled_power(s={s}, p={p})")
    if name == "two_power_max":
        p_low, p_high = float(params["p_low"]), float(params["p_high"])
        declared = float(params.get("declared_rate", p_high))
        if not (1 <= p_low <= p_high):
            raise ValueError("two_power_max needs 1 <= p_low <= p_high")
        return OrliczFunction(lambda t: np.maximum(t**p_low, t**p_high),
                              aInc_rate=declared,
                              name=f"two_power_max({p_low}, {p_high})")
    raise ValueError(f"unknown Orlicz preset {name!r}")


# -- hypothesis checkers -----------------------------------------------------

def default_tol(rhs):
    """Rounding slack for inequalities that hold exactly in the reals."""
    return 1e-12 * (1.0 + np.abs(rhs))


@dataclass(frozen=True)
class SamplePlan:
    """Finite (x, t, lambda) sample lattice used by the (aInc) checker.

    lambdas default to the geometric ladder 2**-k, k = 0..20, and t to a
    log-spaced span of [1e-6, 1e6]: growth-rate violations are scale
    phenomena, so logarithmic coverage is what finds them.
    """

    x: np.ndarray
    t: np.ndarray = field(default_factory=lambda: np.logspace(-6, 6, 25))
    lam: np.ndarray = field(default_factory=lambda: 2.0 ** -np.arange(21, dtype=float))

    def __post_init__(self):
        for name in ("x", "t", "lam"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.x.size == 0 or self.t.size == 0 or self.lam.size == 0:
            raise ValueError("sample plan must be nonempty")
        if np.any(self.lam <= 0) or np.any(self.lam > 1):
            raise ValueError("lambda samples must lie in (0, 1]")
        if np.any(self.t < 0):
            raise ValueError("t samples must be nonnegative")


@dataclass(frozen=True)
class AIncReport:
    passed: bool
    worst_violation: float
    witness: tuple | None  # (x, t, lam) of the worst violation

    def __bool__(self):
        return self.passed


def check_aInc(phi, p, L, plan, tol=default_tol):
    """Sampled check of (aInc)_p: phi(x, lam*t) <= L * lam**p * phi(x, t).

    The inequality is tested on the full (x, t, lambda) lattice of the plan
    with absolute rounding slack ``tol(rhs)``; the report carries the worst
    violation and its witness triple.
    """
    if p < 1 or L < 1:
        raise ValueError("need p >= 1 and L >= 1")
    plan = plan if isinstance(plan, SamplePlan) else SamplePlan(np.asarray(plan))
    nx = plan.x.shape[0] if plan.x.ndim >= 1 else 1
    xs = plan.x.reshape(nx, -1) if plan.x.ndim >= 1 else plan.x.reshape(1, 1)

    # lattice shaped (nx, nt, nl); coordinates stay on the last axis
    t = plan.t[None, :, None]
    lam = plan.lam[None, None, :]
    x_pts = xs[:, None, None, :]
    shape = (nx, plan.t.size, plan.lam.size)
    with np.errstate(over="ignore", under="ignore", divide="ignore",
                     invalid="ignore"):
        lhs = phi(x_pts, np.broadcast_to(lam * t, shape))
        base = phi(x_pts, np.broadcast_to(t, shape))
        # assemble L * lam**p * base through logs: lam**p alone underflows
        # long before the product does
        rhs = np.exp(np.log(L) + p * np.log(lam) + np.log(base))
        viol = lhs - rhs - tol(rhs)
        # both sides saturated to inf counts as satisfied
        viol = np.where(np.isinf(lhs) & np.isinf(rhs), -np.inf, viol)
    worst = float(np.max(viol))
    if worst <= 0:
        return AIncReport(True, worst, None)
    i, j, k = np.unravel_index(np.argmax(viol), viol.shape)
    witness = (np.array(xs[i]).squeeze()[()], float(plan.t[j]), float(plan.lam[k]))
    return AIncReport(False, worst, witness)


@dataclass(frozen=True)
class AnchorReport:
    passed: bool
    phi_minus_1: float
    phi_plus_1: float
    supported: bool = True

    def __bool__(self):
        return self.passed


def check_anchor(phi, c, x):
    """Sampled two-sided anchor check: 1/c <= phi(x, 1) <= c on the lattice.

    The essential inf/sup are approximated by lattice extrema over the given
    sample points (all catalog functions are continuous in x).  The infinity
    indicator is reported as unsupported: phi(x, 1) = 0 violates every
    two-sided anchor, by design rather than by error.
    """
    if c < 1:
        raise ValueError("need c >= 1")
    values = phi.anchor_values(np.asarray(x, dtype=float))
    lo, hi = float(np.min(values)), float(np.max(values))
    if phi.is_indicator:
        return AnchorReport(False, lo, hi, supported=False)
    tol = default_tol(c)
    passed = (lo >= 1.0 / c - tol) and (hi <= c + tol)
    return AnchorReport(bool(passed), lo, hi)


@dataclass(frozen=True)
class A0Report:
    passed: bool
    beta: float | None

    def __bool__(self):
        return self.passed


def check_a0(phi, x, beta_ladder=None):
    """Sampled one-sided anchoring (A0): some beta in (0, 1] has
    phi(x, beta) <= 1 <= phi(x, 1/beta) for all sampled x.

    Scans a geometric beta ladder; weaker than the two-sided anchor, which
    is exactly why the falsification sequences pass here while failing there.
    """
    x = np.asarray(x, dtype=float)
    if beta_ladder is None:
        beta_ladder = 2.0 ** -np.arange(0, 41, dtype=float)
    ones = np.ones(np.shape(_first_coordinate(x)))
    with np.errstate(over="ignore", under="ignore"):
        for beta in beta_ladder:
            lo = phi(x, beta * ones)
            hi = phi(x, ones / beta)
            if np.all(lo <= 1.0) and np.all(hi >= 1.0):
                return A0Report(True, float(beta))
    return A0Report(False, None)


# -- exponent sequences ------------------------------------------------------

class ExponentSequence:
    """A finite prefix phi_1, ..., phi_K of a diverging-growth sequence.

    Per-entry lower/upper exponents are sampled on the given lattice; the
    ratio bound beta is the sampled counterpart of p_n^+ / p_n^- <= beta.
    Construction does not validate divergence: falsification ladders are
    legitimate values here, and ``validate_for_limit`` is the gate that
    limit experiments call.
    """

    def __init__(self, entries, x, ratio_bound=None):
        self.entries = list(entries)
        if not self.entries:
            raise ValueError("sequence must contain at least one entry")
        self.x = np.asarray(x, dtype=float)
        ranges = [e.exponent_range(self.x) for e in self.entries]
        self.p_minus = np.array([r[0] for r in ranges])
        self.p_plus = np.array([r[1] for r in ranges])
        self.ratio_bound = None if ratio_bound is None else float(ratio_bound)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def validate_for_limit(self):
        """Checks the finite-prefix forms of the divergence and ratio bounds."""
        if not np.all(np.diff(self.p_minus) > 0):
            raise HypothesisError(
                "(5.3)", "lower exponents p_n^- must be strictly increasing "
                f"(got {self.p_minus.tolist()})")
        if self.ratio_bound is not None:
            ratios = self.p_plus / self.p_minus
            if np.any(ratios > self.ratio_bound * (1 + 1e-12)):
                worst = int(np.argmax(ratios))
                raise HypothesisError(
                    "(5.4)", f"p_n^+/p_n^- = {ratios[worst]:.6g} at entry "
                    f"{worst} exceeds the declared bound {self.ratio_bound}")

    def ratios(self):
        return self.p_plus / self.p_minus


def constant_power_ladder(start, factor, count, x, scale_inverse_p=False):
    """Geometric ladder of constant powers t**p_n (or t**p_n / p_n)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    entries = []
    p = float(start)
    for _ in range(count):
        scale = 1.0 / p if scale_inverse_p else None
        entries.append(ConstantPower(p, scale=scale))
        p *= factor
    return ExponentSequence(entries, x)


def variable_exponent_ladder(base, start, factor, count, x, ratio_bound=None,
                             scale_inverse_p=False):
    """Ladder p_n(x) = m_n * base(x) with geometric multipliers m_n."""
    base = as_coefficient(base)
    entries = []
    m = float(start)
    for _ in range(count):
        mult = m

        def p_fn(pts, mult=mult):
            return mult * np.asarray(base(pts), dtype=float)

        scale = None
        if scale_inverse_p:
            def scale_fn(pts, p_fn=p_fn):
                return 1.0 / p_fn(pts)
            scale = scale_fn
        entries.append(VariableExponent(p_fn, scale=scale))
        m *= factor
    return ExponentSequence(entries, x, ratio_bound=ratio_bound)


# -- module-level evaluate ---------------------------------------------------

def evaluate(phi, x, t):
    """phi(x, t) for a single point and scalar t >= 0.

    The indicator returns exactly 0.0 or inf; powers and phases return the
    obvious arithmetic value.  Negative or non-finite t is a domain error.
    """
    t = float(t)
    if t < 0 or not np.isfinite(t):
        raise ValueError("t must be nonnegative and finite")
    out = phi(np.asarray(x, dtype=float), np.float64(t))
    return float(np.asarray(out).reshape(-1)[0])
