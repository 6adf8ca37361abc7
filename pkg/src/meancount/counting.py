"""Weighted and unweighted counting of solutions of phi(s) = w.

For a symbol periodic in t (every index a power of one prime) the solutions
repeat with the vertical period P, so one fundamental window is solved and
its solutions are replicated over |Im s| < T.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .dirichlet import DEFAULT_SPEC, DirichletPolynomial, QuadratureSpec, SymbolG0
from .errors import MeanCountError
from .jessen import jessen_torus_details, zero_free_right_edge
from .ladder import LadderSpec
from .zeros import Rectangle, find_zeros

SIGMA_FLOOR = 1e-8


@dataclass
class CountingEstimate:
    value: float
    sigma0: float
    t_ladder: list[float] = field(default_factory=list)
    per_T_values: list[float] = field(default_factory=list)
    error_estimate: float = 0.0
    converged: bool = True
    sigma_ladder: list[float] = field(default_factory=list)
    per_sigma_values: list[float] = field(default_factory=list)
    jessen_value: float | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class LittlewoodBound:
    bound: float
    lower_env: float
    upper_env: float


def _parts(phi):
    if isinstance(phi, SymbolG0):
        return phi, complex(phi.nu)
    if isinstance(phi, DirichletPolynomial):
        return phi, complex(phi.value_at_infinity)
    raise TypeError("expected a SymbolG0 or DirichletPolynomial")


def _is_constant(phi) -> bool:
    return bool(getattr(phi, "is_constant", False))


def _edges_with_jitter(solve, sigma0: float, T: float, tol: float):
    """Call solve(sigma0, T) and nudge both by <= tol on boundary hits."""
    for k in range(8):
        s0 = sigma0 + tol * 0.1 * k
        Tk = T + tol * 0.1 * k
        try:
            return solve(s0, Tk)
        except MeanCountError as exc:
            if exc.code != "BOUNDARY_ZERO":
                raise
    raise MeanCountError("NONCONVERGED", "solutions keep landing on the window boundary")


class _LevelCounter:
    """Solutions of F(s) = 0 with Re s > sigma0, cached per sigma0 for periodic F."""

    def __init__(self, F, sigma0: float, tol: float, spec: QuadratureSpec):
        self.F, self.sigma0, self.tol, self.spec = F, sigma0, tol, spec
        self.period = F.period
        self.right = zero_free_right_edge(F, sigma0)
        self._window = None

    def _fundamental(self):
        if self._window is None:
            P = self.period
            last = None
            # the window start is free (solutions are replicated afterwards), so
            # boundary hits are resolved by moving it instead of sigma0
            for frac in (0.0137, -0.0213, 0.0291, -0.0377, 0.0453, -0.0531):
                t_lo = (frac - 0.5) * P
                try:
                    zs = find_zeros(self.F, Rectangle(self.sigma0, self.right, t_lo, t_lo + P),
                                    self.tol, self.spec)
                    self._window = [(z.s, z.multiplicity) for z in zs]
                    break
                except MeanCountError as exc:
                    if exc.code != "BOUNDARY_ZERO":
                        raise
                    last = exc
            else:
                raise last
        return self._window

    def zeros(self, T: float) -> tuple[list[tuple[complex, int, float]], float]:
        """(s, multiplicity, copies) with |Im s| < T.

        Replicated solutions landing exactly on |Im s| = T get weight 1/2.
        """
        if self.right <= self.sigma0:
            return [], self.sigma0
        if self.period is not None:
            P = self.period
            eps = 1e-9 * max(1.0, T)
            out = []
            for s, m in self._fundamental():
                t0 = s.imag
                inner = math.ceil((T - eps - t0) / P) - math.floor((-T + eps - t0) / P) - 1
                outer = math.ceil((T + eps - t0) / P) - math.floor((-T - eps - t0) / P) - 1
                out.append((s, m, max(0, inner) + 0.5 * (outer - inner)))
            return out, self.sigma0

        def solve(s0, Tk):
            zs = find_zeros(self.F, Rectangle(s0, self.right, -Tk, Tk), self.tol, self.spec)
            return [(z.s, z.multiplicity, 1) for z in zs], s0

        return _edges_with_jitter(solve, self.sigma0, T, self.tol)


def _level_map(phi, w):
    phi, nu = _parts(phi)
    w = complex(w)
    if w == nu:
        raise MeanCountError("W_EQUALS_NU", "w coincides with phi(+inf)")
    return phi.level(w)


def counting_finite(phi, w: complex, sigma0: float, T: float, tol: float = 1e-10,
                    spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """(pi/T) * sum of Re s over solutions of phi(s) = w, sigma0 < Re s, |Im s| < T."""
    F = _level_map(phi, w)
    if not sigma0 > 0:
        raise MeanCountError("DOMAIN", "sigma0 must be > 0")
    if not T > 0:
        raise MeanCountError("DOMAIN", "T must be > 0")
    if _is_constant(phi):
        return 0.0
    zs, _ = _LevelCounter(F, sigma0, tol, spec).zeros(T)
    return math.pi / T * sum(s.real * m * c for s, m, c in zs)


def _ladder_run(evaluate, Ts, rel_tol, sigma0) -> CountingEstimate:
    vals: list[float] = []
    used: list[float] = []
    for T in Ts:
        used.append(T)
        vals.append(evaluate(T))
        if len(vals) >= 2:
            err = abs(vals[-1] - vals[-2])
            if err < rel_tol * max(1.0, abs(vals[-1])):
                return CountingEstimate(vals[-1], sigma0, used, vals, err, True)
    est = CountingEstimate(vals[-1], sigma0, used, vals, abs(vals[-1] - vals[-2]), False)
    raise MeanCountError("NONCONVERGED", "T ladder exhausted", diagnostics=est.as_dict())


def counting_sigma(phi, w: complex, sigma0: float, ladder: LadderSpec | None = None,
                   tol: float = 1e-10, spec: QuadratureSpec = DEFAULT_SPEC) -> CountingEstimate:
    ladder = ladder or LadderSpec()
    F = _level_map(phi, w)
    if not sigma0 > 0:
        raise MeanCountError("DOMAIN", "sigma0 must be > 0")
    Ts = ladder.t_values(F.quasi_period)
    if _is_constant(phi):
        return CountingEstimate(0.0, sigma0, Ts[:1], [0.0], 0.0, True)
    counter = _LevelCounter(F, sigma0, tol, spec)

    def evaluate(T):
        zs, _ = counter.zeros(T)
        return math.pi / T * sum(s.real * m * c for s, m, c in zs)

    return _ladder_run(evaluate, Ts, ladder.rel_tol, sigma0)


def jessen_route(phi, w: complex, sigmas: tuple[float, float],
                 spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """lim_{sigma -> 0} J_{phi - w}(sigma) - log|nu - w|, linearly extrapolated
    from two small sigma values."""
    F = _level_map(phi, w)
    _, nu = _parts(phi)
    if _is_constant(phi):
        return 0.0
    sa, sb = sigmas
    ja = jessen_torus_details(F, sa, spec=spec).value
    jb = jessen_torus_details(F, sb, spec=spec).value
    j0 = jb - sb * (ja - jb) / (sa - sb)
    return j0 - math.log(abs(nu - complex(w)))


def mean_counting(phi, w: complex, ladder: LadderSpec | None = None, tol: float = 1e-10,
                  spec: QuadratureSpec = DEFAULT_SPEC, bound_tol: float = 1e-3) -> CountingEstimate:
    """Mean counting function at w: T ladder inside, sigma0 ladder outside,
    cross-checked by the Jessen route."""
    ladder = ladder or LadderSpec()
    sym, nu = _parts(phi)
    w = complex(w)
    _level_map(phi, w)
    sig = list(ladder.sigma_ladder)
    if _is_constant(phi):
        return CountingEstimate(0.0, sig[-1], [], [], 0.0, True, sig, [0.0] * len(sig), 0.0)
    per_sigma, last = [], None
    for s0 in sig:
        last = counting_sigma(phi, w, s0, ladder, tol, spec)
        per_sigma.append(last.value)
    pair = (sig[-2], sig[-1]) if len(sig) >= 2 else (2 * sig[-1], sig[-1])
    jv = jessen_route(phi, w, pair, spec)
    est = CountingEstimate(
        last.value, sig[-1], last.t_ladder, last.per_T_values,
        max(last.error_estimate, abs(last.value - jv)), True, sig, per_sigma, jv,
    )
    if isinstance(sym, SymbolG0) and w.real > 0.5:
        b = littlewood_bound(w, nu).bound
        if est.value > b + bound_tol:
            raise MeanCountError(
                "BOUND_VIOLATION",
                f"counting value {est.value!r} exceeds the bound {b!r}",
                diagnostics=est.as_dict(),
            )
    return est


def unweighted_counting(f: DirichletPolynomial, sigma: float, ladder: LadderSpec | None = None,
                        tol: float = 1e-10, spec: QuadratureSpec = DEFAULT_SPEC) -> CountingEstimate:
    """(1/2T) * #{zeros with Re s > sigma, |Im s| < T} along the T ladder."""
    ladder = ladder or LadderSpec()
    if not sigma > 0:
        raise MeanCountError("DOMAIN", "sigma must be > 0")
    if f.is_zero:
        raise MeanCountError("INVALID", "the zero series has no isolated zeros")
    Ts = ladder.t_values(f.quasi_period)
    if f.is_constant:
        return CountingEstimate(0.0, sigma, Ts[:1], [0.0], 0.0, True)
    counter = _LevelCounter(f, sigma, tol, spec)

    def evaluate(T):
        zs, _ = counter.zeros(T)
        return sum(m * c for _, m, c in zs) / (2.0 * T)

    return _ladder_run(evaluate, Ts, ladder.rel_tol, sigma)


def littlewood_bound(w: complex, nu: complex) -> LittlewoodBound:
    """log of the inverse pseudo-hyperbolic distance, with its two envelopes."""
    w, nu = complex(w), complex(nu)
    if w == nu:
        raise MeanCountError("W_EQUALS_NU", "w coincides with nu")
    if w.real <= 0.5 or nu.real <= 0.5:
        raise MeanCountError("DOMAIN", "w and nu must lie in Re > 1/2")
    top = abs(w.conjugate() + nu - 1.0)
    bot = abs(w - nu)
    num = 2.0 * (w.real - 0.5) * (nu.real - 0.5)
    return LittlewoodBound(math.log(top / bot), num / top**2, num / bot**2)


def theta_inverse(s: complex) -> complex:
    """(sinh(s pi/2) - sinh(pi/2)) / (sinh(s pi/2) + sinh(pi/2)) on the half-strip."""
    s = complex(s)
    if s.real < -1e-15 or abs(s.imag) > 1.0 + 1e-15:
        raise MeanCountError("DOMAIN", f"s = {s} lies outside Re s >= 0, |Im s| <= 1")
    a = math.sinh(math.pi / 2.0)
    v = np.sinh(s * math.pi / 2.0)
    return complex((v - a) / (v + a))


@dataclass(frozen=True)
class InterchangeProbe:
    order_a: float
    order_b: float
    gap: float


def limit_interchange_probe(phi, w: complex, ladder: LadderSpec | None = None, tol: float = 1e-10,
                            spec: QuadratureSpec = DEFAULT_SPEC) -> InterchangeProbe:
    """Counting with sigma0 -> 0 taken before T -> inf versus after.

    order_b counts from a fixed floor sigma0 = 1e-8 along the T ladder.
    """
    ladder = ladder or LadderSpec()
    if _is_constant(phi):
        _level_map(phi, w)
        return InterchangeProbe(0.0, 0.0, 0.0)
    a = mean_counting(phi, w, ladder, tol, spec).value
    b = counting_sigma(phi, w, SIGMA_FLOOR, ladder, tol, spec).value
    return InterchangeProbe(a, b, abs(a - b))


@dataclass(frozen=True)
class SubmeanCheck:
    center_value: float
    disc_average: float
    slack: float
    nodes: int


def submean_check(phi, center: complex, radius: float, ladder: LadderSpec | None = None,
                  n_r: int = 6, n_theta: int = 16, spec: QuadratureSpec = DEFAULT_SPEC) -> SubmeanCheck:
    """Compare M(center) with its area average over the disc D(center, radius).

    Polar product rule: Gauss-Legendre in r (weight r) and trapezoid in angle.
    """
    _, nu = _parts(phi)
    center = complex(center)
    if center.real - radius <= 0.5 or abs(center - nu) <= radius:
        raise MeanCountError("DOMAIN", "disc must lie in Re w > 1/2 and avoid nu")
    x, wts = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * radius * (x + 1.0)
    wr = 0.5 * radius * wts * r
    th = (np.arange(n_theta) + 0.5) * (2.0 * math.pi / n_theta)
    acc = 0.0
    for ri, wi in zip(r, wr):
        for t in th:
            acc += wi * mean_counting(phi, center + ri * complex(math.cos(t), math.sin(t)), ladder,
                                      spec=spec).value
    avg = acc * (2.0 * math.pi / n_theta) / (math.pi * radius**2)
    cv = mean_counting(phi, center, ladder, spec=spec).value
    return SubmeanCheck(cv, avg, avg - cv, n_r * n_theta)


def counting_grid_csv(phi, ws, ladder: LadderSpec | None = None,
                      spec: QuadratureSpec = DEFAULT_SPEC) -> str:
    """CSV rows (w_re, w_im, value, error_estimate, bound) for a list of w."""
    _, nu = _parts(phi)
    buf = io.StringIO()
    buf.write("w_re,w_im,value,error_estimate,bound\n")
    for w in ws:
        w = complex(w)
        est = mean_counting(phi, w, ladder, spec=spec)
        try:
            b = repr(littlewood_bound(w, nu).bound)
        except MeanCountError:
            b = ""
        buf.write(f"{w.real!r},{w.imag!r},{est.value!r},{est.error_estimate!r},{b}\n")
    return buf.getvalue()
