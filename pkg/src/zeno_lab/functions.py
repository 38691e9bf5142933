"""Admissible functions, their Kato parts and the auxiliary ratio functions.

A function ``phi: [0, inf) -> C`` is admissible when ``|phi| <= 1``,
``phi(0) = 1`` and ``phi'(+0) = -i``. None of this can be checked on the whole
half-line, so every verdict produced here holds *on the verification grid*
(log-spaced, ``[1e-6, 1e3]``, 10^4 points, plus the origin).

Evaluators are vectorized: they take a float array of points ``x >= 0`` and
return a complex array of the same shape.
"""
from dataclasses import dataclass, field, replace
import math
import re
from typing import Callable, Optional

import numpy as np

from .exceptions import NumericalGuardError, ValidationError

GRID_LO, GRID_HI, GRID_SIZE = 1e-6, 1e3, 10_000
DERIVATIVE_STEPS = (1e-3, 1e-4, 1e-5, 1e-6, 1e-7)
VALUE_TOL = 1e-12
DERIVATIVE_TOL = 1e-4
ALPHA_CONSTANT_LIMIT = 1e6
P_BOUND_SMALL_S = 1e-8

BUILTIN_IDS = ("exp", "resolvent-1", "resolvent-2", "resolvent-3", "cutoff-exp-[0,pi)")


def default_grid():
    return np.geomspace(GRID_LO, GRID_HI, GRID_SIZE)


@dataclass(frozen=True)
class IntervalUnion:
    """Finite union of disjoint half-open intervals ``[a, b)``, the first starting at 0."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        if not ivs:
            raise ValidationError("interval union must not be empty")
        for a, b in ivs:
            if not (0.0 <= a < b):
                raise ValidationError(f"bad interval [{a}, {b})")
        for (_, b0), (a1, _) in zip(ivs, ivs[1:]):
            if a1 < b0:
                raise ValidationError("intervals must be sorted and pairwise disjoint")
        if ivs[0][0] != 0.0:
            raise ValidationError("the first interval must start at 0 (a neighbourhood of zero)")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(tuple(pair) for pair in obj))

    def to_json(self):
        return [list(pair) for pair in self.intervals]

    def indicator(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = np.zeros(x.shape, dtype=bool)
        for a, b in self.intervals:
            inside |= (x >= a) & (x < b)
        return inside

    def __str__(self):
        return "+".join(f"[{a:.17g},{b:.17g})" for a, b in self.intervals)


@dataclass(frozen=True)
class FunctionSpec:
    """A named scalar function on ``[0, inf)`` with tri-state verification flags.

    Flags are ``None`` until :func:`verify_admissible` has been run. When
    ``cutoff`` is set, ``evaluator`` already includes the indicator factor.
    ``complement`` optionally evaluates ``1 - phi`` without cancellation.
    """

    id: str
    evaluator: Callable = field(repr=False)
    admissible: Optional[bool] = None
    kato: Optional[bool] = None
    im_nonpositive: Optional[bool] = None
    cutoff: Optional[IntervalUnion] = None
    complement: Optional[Callable] = field(default=None, repr=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.asarray(self.evaluator(x), dtype=np.complex128)

    def one_minus(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.complement is not None:
            return np.asarray(self.complement(x), dtype=np.complex128)
        return 1.0 - self(x)

    def with_report(self, report):
        """Copy of the spec with flags set from an :class:`AdmissibilityReport`."""
        return replace(
            self,
            admissible=report.admissible,
            im_nonpositive=report.im_nonpositive,
            kato=report.im_nonpositive,
        )


@dataclass(frozen=True)
class AdmissibilityReport:
    function_id: str
    bounded_by_one: bool
    value_one_at_zero: bool
    derivative_at_zero: complex
    derivative_ok: bool
    im_nonpositive: bool
    violating_points: np.ndarray = field(repr=False)
    sup_modulus: float = 1.0

    @property
    def admissible(self):
        return self.bounded_by_one and self.value_one_at_zero and self.derivative_ok

    def to_dict(self, max_points=20):
        return {
            "function_id": self.function_id,
            "scope": "on grid",
            "admissible": self.admissible,
            "bounded_by_one": self.bounded_by_one,
            "value_one_at_zero": self.value_one_at_zero,
            "derivative_at_zero": [self.derivative_at_zero.real, self.derivative_at_zero.imag],
            "im_nonpositive": self.im_nonpositive,
            "sup_modulus": self.sup_modulus,
            "violating_point_count": int(len(self.violating_points)),
            "violating_points": [float(x) for x in self.violating_points[:max_points]],
        }


@dataclass(frozen=True)
class Decomposition:
    """``phi = psi - i*omega`` with Kato part ``kato_part = 1 - omega``."""

    psi: Callable = field(repr=False)
    omega: Callable = field(repr=False)
    kato_part: Callable = field(repr=False)


# -- builtins ---------------------------------------------------------------

def _exp(x):
    return np.exp(-1j * x)


def _exp_complement(x):
    return -np.expm1(-1j * x)


def _resolvent(k):
    def phi(x):
        return (1.0 + 1j * x / k) ** (-k)

    coeffs = [math.comb(k, j) for j in range(1, k + 1)]

    def complement(x):
        # 1 - (1+z)^-k = ((1+z)^k - 1) / (1+z)^k, numerator expanded to avoid cancellation
        z = 1j * x / k
        numer = sum(c * z ** j for j, c in enumerate(coeffs, start=1))
        return numer / (1.0 + z) ** k

    return phi, complement


def _with_cutoff(phi, complement, delta):
    def cut(x):
        return np.where(delta.indicator(x), phi(x), 0.0)

    def cut_complement(x):
        return np.where(delta.indicator(x), complement(x), 1.0)

    return cut, cut_complement


_RESOLVENT_RE = re.compile(r"^resolvent-([1-9][0-9]*)$")


def builtin(function_id):
    """Look up a builtin function by id.

    Known ids: ``exp`` (``e^{-ix}``), ``resolvent-k`` (``(1 + ix/k)^{-k}``,
    any positive integer ``k``) and ``cutoff-exp-[0,pi)``
    (``e^{-ix}`` times the indicator of ``[0, pi)``; the spelling with the
    Greek letter is accepted too).
    """
    if function_id == "exp":
        return FunctionSpec("exp", _exp, complement=_exp_complement)
    match = _RESOLVENT_RE.match(function_id)
    if match:
        phi, comp = _resolvent(int(match.group(1)))
        return FunctionSpec(function_id, phi, complement=comp)
    if function_id in ("cutoff-exp-[0,pi)", "cutoff-exp-[0,π)"):
        delta = IntervalUnion(((0.0, np.pi),))
        phi, comp = _with_cutoff(_exp, _exp_complement, delta)
        return FunctionSpec("cutoff-exp-[0,pi)", phi, cutoff=delta, complement=comp)
    raise ValidationError(f"unknown function id {function_id!r}; known: {', '.join(BUILTIN_IDS)}")


def function_from_config(entry):
    """Build a spec from a config entry: an id string or ``{"id": ..., "cutoff": [[a, b], ...]}``."""
    if isinstance(entry, str):
        return builtin(entry)
    if not isinstance(entry, dict) or "id" not in entry:
        raise ValidationError(f"bad function entry {entry!r}")
    spec = builtin(entry["id"])
    if entry.get("cutoff") is not None:
        spec = cutoff_regularize(spec, IntervalUnion.from_json(entry["cutoff"]))
    return spec


# -- verification -----------------------------------------------------------

def one_sided_derivative(spec, steps=DERIVATIVE_STEPS):
    """Estimate ``phi'(+0)`` from forward differences plus one Richardson step.

    Uses the two smallest steps; with step ratio ``r`` the first-order error
    term cancels in ``(r*D(h/r) - D(h)) / (r - 1)``.
    """
    steps = np.asarray(sorted(steps, reverse=True), dtype=np.float64)
    if len(steps) < 2:
        raise ValidationError("at least two derivative steps are required")
    diffs = -spec.one_minus(steps) / steps
    r = steps[-2] / steps[-1]
    return complex((r * diffs[-1] - diffs[-2]) / (r - 1.0))


def verify_admissible(spec, grid=None, steps=DERIVATIVE_STEPS):
    """Check the admissibility conditions and the sign condition on a grid.

    Returns
    -------
    AdmissibilityReport
        ``bounded_by_one`` iff ``sup |phi| <= 1 + 1e-12`` over the grid and 0;
        ``im_nonpositive`` iff ``Im phi <= 1e-12`` on the whole grid, with the
        offending points listed in ``violating_points``.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    if grid.size == 0 or np.any(grid < 0):
        raise ValidationError("grid must be non-empty and non-negative")
    try:
        values = spec(grid)
        at_zero = complex(spec(np.zeros(1))[0])
        derivative = one_sided_derivative(spec, steps)
    except ValidationError:
        raise
    except Exception as exc:
        raise ValidationError(f"evaluator for {spec.id!r} failed on the grid: {exc}") from exc
    if not (np.all(np.isfinite(values)) and np.isfinite(at_zero)):
        raise ValidationError(f"evaluator for {spec.id!r} is not finite on the grid")
    sup = float(max(np.max(np.abs(values)), abs(at_zero)))
    violating = grid[values.imag > VALUE_TOL]
    return AdmissibilityReport(
        function_id=spec.id,
        bounded_by_one=sup <= 1.0 + VALUE_TOL,
        value_one_at_zero=abs(at_zero - 1.0) <= VALUE_TOL,
        derivative_at_zero=derivative,
        derivative_ok=abs(derivative + 1j) <= DERIVATIVE_TOL,
        im_nonpositive=bool(violating.size == 0 and at_zero.imag <= VALUE_TOL),
        violating_points=violating,
        sup_modulus=sup,
    )


def kato_part_decompose(spec, grid=None):
    """Split ``phi = psi - i*omega`` and return the Kato part ``1 - omega``.

    Requires the sign condition ``Im phi <= 0``; the spec is verified first if
    its flag is still unset.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    flag = spec.im_nonpositive
    if flag is None:
        flag = verify_admissible(spec, grid).im_nonpositive
    if not flag:
        raise ValidationError(f"{spec.id!r} does not satisfy Im(phi) <= 0; no Kato part exists")

    def psi(x):
        return spec(x).real

    def omega(x):
        return -spec(x).imag

    def kato_part(x):
        return 1.0 - omega(x)

    w = omega(grid)
    if np.any(w < -VALUE_TOL) or np.any(w > 1.0 + VALUE_TOL):
        raise ValidationError(f"omega of {spec.id!r} leaves [0, 1] on the grid")
    if np.any(np.abs(psi(grid)) > 1.0 + VALUE_TOL):
        raise ValidationError(f"|psi| of {spec.id!r} exceeds 1 on the grid")
    zero = np.zeros(1)
    if abs(psi(zero)[0] - 1.0) > VALUE_TOL or abs(omega(zero)[0]) > VALUE_TOL:
        raise ValidationError(f"{spec.id!r} violates psi(0) = 1, omega(0) = 0")
    slope = -one_sided_derivative(spec).imag
    if abs(slope - 1.0) > DERIVATIVE_TOL:
        raise ValidationError(f"omega'(+0) of {spec.id!r} estimated as {slope}, expected 1")
    return Decomposition(psi=psi, omega=omega, kato_part=kato_part)


def cutoff_regularize(spec, delta, grid=None):
    """Multiply ``phi`` by the indicator of ``delta``.

    ``delta`` must start at 0 and lie inside ``{Im phi <= 0}`` on the grid.
    Regularizing an already regularized spec with the same set is a no-op.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    if not isinstance(delta, IntervalUnion):
        delta = IntervalUnion.from_json(delta)
    if spec.cutoff == delta:
        return spec
    inside = grid[delta.indicator(grid)]
    if inside.size and np.any(spec(inside).imag > VALUE_TOL):
        raise ValidationError(f"cutoff set is not contained in {{Im {spec.id} <= 0}} on the grid")
    complement = spec.complement or (lambda x: 1.0 - spec(x))
    phi, comp = _with_cutoff(spec.evaluator, complement, delta)
    base = spec.id.split("|", 1)[0]
    return FunctionSpec(f"{base}|{delta}", phi, cutoff=delta, complement=comp)


# -- auxiliary ratio functions ---------------------------------------------

def p_function(spec, x):
    """``p(x) = (1 - phi(x)) / x`` with ``p(0) = i``. Vectorized in ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValidationError("p is defined on [0, inf)")
    out = np.full(x.shape, 1j, dtype=np.complex128)
    pos = x > 0
    out[pos] = spec.one_minus(x[pos]) / x[pos]
    return out if out.ndim else complex(out)


def p_constant(spec, grid=None):
    """``C_p``: supremum of ``|p|`` over the grid and the origin."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    return float(max(1.0, np.max(np.abs(p_function(spec, grid)))))


def p_alpha(spec, alpha, x):
    """``(p(x) - i) / x**alpha`` with value 0 at the origin. Vectorized in ``x``."""
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros(x.shape, dtype=np.complex128)
    pos = x > 0
    out[pos] = (p_function(spec, x[pos]) - 1j) / x[pos] ** alpha
    return out if out.ndim else complex(out)


def alpha_constant(spec, alpha, grid=None):
    """``C_alpha``: supremum of ``|p_alpha|`` over the grid.

    Raises :class:`NumericalGuardError` above 1e6, i.e. when the function
    fails the Hoelder-type condition needed for operator-norm rates.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    value = float(np.max(np.abs(p_alpha(spec, alpha, grid))))
    if not np.isfinite(value) or value > ALPHA_CONSTANT_LIMIT:
        raise NumericalGuardError(
            f"p_alpha of {spec.id!r} with alpha={alpha} is unbounded on the grid (sup {value:.3e})"
        )
    return value


class PBounds:
    """Vectorized ``p_-``/``p_+`` for one Kato part on a fixed grid.

    ``p_-(x)`` (``p_+(x)``) is the infimum (supremum) of ``(1 - kato(s)) / s``
    over the grid points in ``(0, x]`` together with ``s = min(x, 1e-8)`` and
    ``s = x`` itself. Including ``x`` keeps ``p_-(x) <= (1 - kato(x))/x <= p_+(x)``
    exact, which the form sandwich relies on.
    """

    def __init__(self, kato_part, grid=None):
        if isinstance(kato_part, Decomposition):
            self._ratio = lambda s: kato_part.omega(s) / s
        else:
            self._ratio = lambda s: (1.0 - np.asarray(kato_part(s), dtype=np.float64)) / s
        self.grid = default_grid() if grid is None else np.sort(np.asarray(grid, dtype=np.float64))
        self.grid = self.grid[self.grid > 0]
        r = np.asarray(self._ratio(self.grid), dtype=np.float64)
        self._cummin = np.minimum.accumulate(r)
        self._cummax = np.maximum.accumulate(r)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < 0) or not np.all(np.isfinite(x)):
            raise ValidationError("p bounds need finite x >= 0")
        flat = x.ravel()
        lo = np.ones(flat.shape)
        hi = np.ones(flat.shape)
        pos = flat > 0
        xp = flat[pos]
        if xp.size:
            small = np.minimum(xp, P_BOUND_SMALL_S)
            r_small = self._ratio(small)
            r_x = self._ratio(xp)
            lo_p = np.minimum(r_small, r_x)
            hi_p = np.maximum(r_small, r_x)
            k = np.searchsorted(self.grid, xp, side="right") - 1
            has = k >= 0
            lo_p[has] = np.minimum(lo_p[has], self._cummin[k[has]])
            hi_p[has] = np.maximum(hi_p[has], self._cummax[k[has]])
            lo[pos], hi[pos] = lo_p, hi_p
        return lo.reshape(x.shape), hi.reshape(x.shape)


def p_bounds(kato_part, x, grid=None):
    """``(p_minus(x), p_plus(x))`` for a Kato part (or a :class:`Decomposition`)."""
    lo, hi = PBounds(kato_part, grid)(np.asarray([x], dtype=np.float64))
    return float(lo[0]), float(hi[0])


def scalar_product_error(spec, x, n, dps=60):
    """``|phi(x/n)^n - e^{-ix}|`` evaluated in ``dps``-digit arithmetic.

    Builtins are re-evaluated in mpmath; other specs fall back to double
    precision for ``phi(x/n)`` and mpmath for the power.
    """
    import mpmath

    with mpmath.workdps(dps):
        xm = mpmath.mpf(x)
        step = xm / n
        base = spec.id.split("|", 1)[0]
        match = _RESOLVENT_RE.match(base)
        if base == "exp" or base == "cutoff-exp-[0,pi)":
            value = mpmath.exp(-1j * step)
            if base == "cutoff-exp-[0,pi)" and not step < mpmath.pi:
                value = mpmath.mpc(0)
        elif match:
            k = int(match.group(1))
            value = (1 + 1j * step / k) ** (-k)
        else:
            value = mpmath.mpc(complex(spec(np.array([float(step)]))[0]))
        if spec.cutoff is not None and base != "cutoff-exp-[0,pi)":
            if not spec.cutoff.indicator(np.array([float(step)]))[0]:
                value = mpmath.mpc(0)
        err = abs(value ** n - mpmath.exp(-1j * xm))
        return float(err)
