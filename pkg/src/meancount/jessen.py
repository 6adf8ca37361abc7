"""Vertical means of log|f|: time averages, torus integrals and the
rectangle Jensen identity linking them to zero sums."""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from . import _kernels as K
from .dirichlet import DEFAULT_SPEC, DirichletPolynomial, QuadratureSpec, _GeneratorMap
from .errors import MeanCountError
from .ladder import LadderSpec
from .zeros import Rectangle, find_zeros

TWO_PI = 2.0 * math.pi
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
# a torus integral that is still moving by more than this at the node cap is
# reported as non-converged; below it the last value is returned with its error
TORUS_ACCEPT = 1e-6


# -- lattice rules ----------------------------------------------------------------


def _seed() -> int:
    return int(os.environ.get("MEANCOUNT_SEED", "20240607"))


@lru_cache(maxsize=64)
def _korobov_multiplier(m: int, n: int) -> int:
    """Pick a by the P_2 figure of merit over a fixed pseudo-random candidate set."""
    rng = np.random.default_rng(_seed())
    budget = max(4, min(48, (1 << 22) // max(1, n * m)))
    cands = np.unique(rng.integers(2, max(3, n - 1), size=budget))
    j = np.arange(n, dtype=np.int64)
    best, best_a = math.inf, int(cands[0])
    for a in cands:
        z = [pow(int(a), d, n) for d in range(m)]
        prod = np.ones(n)
        for zd in z:
            x = (j * zd % n) / n
            prod *= 1.0 + 2.0 * math.pi**2 * (x * x - x + 1.0 / 6.0)
        score = float(prod.sum()) / n - 1.0
        if score < best:
            best, best_a = score, int(a)
    return best_a


def korobov_nodes(m: int, n: int, shift: float = 0.5) -> np.ndarray:
    """Rank-1 Korobov lattice on T^m with n points, as angles (n x m)."""
    if m == 1:
        return ((np.arange(n) + shift) * (TWO_PI / n))[:, None]
    a = _korobov_multiplier(m, n)
    z = np.array([pow(a, d, n) for d in range(m)], dtype=np.int64)
    j = np.arange(n, dtype=np.int64)[:, None]
    return ((j * z % n) + shift) * (TWO_PI / n)


def _tensor_nodes(m: int, per: int, shift: float = 0.5) -> np.ndarray:
    axes = [(np.arange(per) + shift) * (TWO_PI / per)] * m
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


@dataclass(frozen=True)
class TorusMean:
    value: float
    error: float
    nodes: int


def _torus_mean(values_at, m: int, fn, spec: QuadratureSpec) -> TorusMean:
    """Mean of fn(values_at(theta)) over T^m, nodes doubled until stable."""
    prev = None
    if m <= 3:
        sizes = []
        per = spec.torus_start
        while per**m <= spec.torus_max_nodes or not sizes:
            sizes.append(per)
            per *= 2
        makers = [lambda sh, p=p: _tensor_nodes(m, p, sh) for p in sizes]
    else:
        sizes = []
        n = max(spec.torus_start**3, 1 << 12)
        while n <= spec.torus_max_nodes or not sizes:
            sizes.append(n)
            n *= 2
        makers = [lambda sh, n=n: korobov_nodes(m, n, sh) for n in sizes]
    value, err, count = math.nan, math.inf, 0
    for make in makers:
        for sh in (0.5, 0.381966011250105):
            theta = make(sh)
            v = float(np.mean(fn(values_at(theta))))
            if math.isfinite(v):
                break
        else:
            raise MeanCountError("NONCONVERGED", "integrand vanishes at torus nodes")
        count = theta.shape[0]
        if prev is not None:
            err = abs(v - prev)
            value = v
            if err <= spec.torus_tol * max(1.0, abs(v)):
                return TorusMean(v, err, count)
        prev, value = v, v
    return TorusMean(value, err, count)


def _log_abs(v):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(v))


def torus_setup(f: DirichletPolynomial):
    primes = f.support_primes
    return primes, f.exponents(primes), np.asarray(f.values)


def _scaled_amps(f: DirichletPolynomial, sigma: float) -> np.ndarray:
    return np.asarray(f.values) * np.exp(-sigma * np.asarray(f.logs))


def _variable_order(expo: np.ndarray, amps: np.ndarray) -> list[tuple[int, bool]]:
    """Torus variables to try integrating exactly, best first, with a reversal flag.

    A single monomial in the leading coefficient keeps the roots finite at
    every node, so only such variables qualify. Low degree comes first since
    it is cheap; among equal degrees the heavier variable, because
    integrating out the one that carries the zeros leaves a smoother remainder.
    """
    out = []
    w = np.abs(amps)
    for j in range(expo.shape[1]):
        d = expo[:, j]
        top1 = int(np.sum(d == d.max())) == 1
        bot1 = int(np.sum(d == d.min())) == 1
        if top1 or bot1:
            weight = float(w[d != d.min()].sum())
            out.append(((int(d.max() - d.min()), -weight), j, (not top1) and bot1))
    return [(j, rev) for _, j, rev in sorted(out)]


def _mahler(q: np.ndarray) -> np.ndarray:
    """log of the Mahler measure of each row of ascending coefficients q."""
    D = q.shape[1] - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        lead = np.log(np.abs(q[:, -1]))
        if D == 0:
            return lead
        if D == 1:
            roots = (-q[:, 0] / q[:, 1])[:, None]
        elif D == 2:
            a, b, c = q[:, 2], q[:, 1], q[:, 0]
            sq = np.sqrt(b * b - 4.0 * a * c)
            sq = np.where((np.conj(b) * sq).real >= 0.0, sq, -sq)
            h = -0.5 * (b + sq)
            roots = np.stack([h / a, c / h], axis=1)
        else:
            comp = np.zeros((q.shape[0], D, D), dtype=np.complex128)
            comp[:, 1:, :-1] = np.eye(D - 1)
            comp[:, :, -1] = -q[:, :-1] / q[:, -1:]
            roots = np.linalg.eigvals(comp)
        return lead + np.log(np.maximum(np.abs(roots), 1.0)).sum(axis=1)


def _jensen_reduced(amps: np.ndarray, expo: np.ndarray, j: int, rev: bool, spec: QuadratureSpec) -> TorusMean:
    """Torus mean of log|F| with variable j integrated by Jensen's formula.

    For fixed remaining angles F is a polynomial in the chosen variable, and
    its circle mean of log|.| is the log Mahler measure. What is left is a
    function on a torus of one dimension less, continuous when that variable
    carries the zeros.
    """
    deg = expo[:, j] - expo[:, j].min()
    if rev:
        deg = deg.max() - deg
    rest = np.delete(expo, j, axis=1).astype(np.float64)
    D = int(deg.max())
    groups = [np.flatnonzero(deg == i) for i in range(D + 1)]

    def coeffs(theta):
        ph = np.exp(1j * (theta @ rest.T)) * amps
        return np.stack([ph[:, g].sum(axis=1) for g in groups], axis=1)

    if rest.shape[1] == 0:
        v = float(_mahler(coeffs(np.zeros((1, 0))))[0])
        return TorusMean(v, 0.0, 1)

    def values_at(theta):
        out = np.empty(theta.shape[0])
        for lo in range(0, theta.shape[0], 1 << 16):
            out[lo:lo + (1 << 16)] = _mahler(coeffs(theta[lo:lo + (1 << 16)]))
        return out

    return _torus_mean(values_at, rest.shape[1], lambda x: x, spec)


def jessen_torus_details(f, sigma: float, m: int | None = None,
                         spec: QuadratureSpec = DEFAULT_SPEC, method: str = "jensen") -> TorusMean:
    """Torus mean of log|f_chi(sigma)| with its node-doubling error.

    ``method="jensen"`` integrates one variable exactly (default);
    ``method="lattice"`` applies the lattice rule to log|F| on the whole torus.
    """
    if method not in ("jensen", "lattice"):
        raise MeanCountError("INVALID", f"unknown torus method {method!r}")
    if sigma < 0:
        raise MeanCountError("DOMAIN", "sigma must be >= 0")
    if isinstance(f, _GeneratorMap):
        r = math.exp(-sigma * f.log_base)
        at = lambda th: f.gen(r * np.exp(1j * th[:, 0])) - f.shift
        return _torus_mean(at, 1, _log_abs, spec)
    if f.is_zero:
        raise MeanCountError("INVALID", "log of the zero series")
    if f.is_constant:
        return TorusMean(math.log(abs(f.value_at_infinity)), 0.0, 1)
    primes, expo, _ = torus_setup(f)
    if m is not None and len(primes) > m:
        raise MeanCountError("INVALID", f"series uses {len(primes)} primes, more than m = {m}")
    amps = _scaled_amps(f, sigma)
    lattice = lambda: _torus_mean(lambda th: K.torus_values(amps, expo, th), len(primes), _log_abs, spec)
    if method == "lattice":
        return lattice()
    best = None
    for j, rev in _variable_order(expo, amps):
        res = _jensen_reduced(amps, expo, j, rev, spec)
        if best is None or res.error < best.error:
            best = res
        if res.error <= TORUS_ACCEPT * max(1.0, abs(res.value)):
            return res
    res = lattice()
    return res if best is None or res.error < best.error else best


def jessen_torus(f, sigma: float, m: int | None = None, spec: QuadratureSpec = DEFAULT_SPEC,
                 method: str = "jensen") -> float:
    """Mean of log|f_chi(sigma)| over the torus of characters on the support primes."""
    res = jessen_torus_details(f, sigma, m, spec, method)
    if not res.error <= max(TORUS_ACCEPT, spec.torus_tol) * max(1.0, abs(res.value)):
        raise MeanCountError(
            "NONCONVERGED",
            f"torus mean still moving by {res.error:.3g} at {res.nodes} nodes",
            diagnostics={"value": res.value, "error": res.error, "nodes": res.nodes},
        )
    return res.value


def torus_min_modulus(f: DirichletPolynomial, sigma: float, per_dim: int = 64) -> float:
    """Grid estimate of min |f_chi(sigma)| over the torus."""
    if f.is_constant:
        return abs(f.value_at_infinity)
    primes, expo, _ = torus_setup(f)
    m = len(primes)
    theta = _tensor_nodes(m, per_dim) if m <= 3 else korobov_nodes(m, per_dim**3)
    return float(np.abs(K.torus_values(_scaled_amps(f, sigma), expo, theta)).min())


def p_mean_torus(f: DirichletPolynomial, sigma: float, p: float,
                 spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Mean of |f_chi(sigma)|^p over the torus."""
    if f.is_constant:
        return abs(f.value_at_infinity) ** p
    primes, expo, _ = torus_setup(f)
    amps = _scaled_amps(f, sigma)
    res = _torus_mean(lambda th: K.torus_values(amps, expo, th), len(primes),
                      lambda v: np.abs(v) ** p, spec)
    return res.value


# -- time averages ----------------------------------------------------------------


def _log_line_integral(a: float, u0: float, u1: float) -> float:
    """Integral of log|a + i u| for u in [u0, u1]."""
    def F(u):
        if a == 0.0:
            return u * math.log(abs(u)) - u if u != 0.0 else 0.0
        return 0.5 * u * math.log(a * a + u * u) - u + a * math.atan(u / a)
    return F(u1) - F(u0)


def _near_zeros(f: DirichletPolynomial, sigma: float, T: float, spec: QuadratureSpec):
    delta = spec.singular_delta
    for k in range(6):
        d = delta * (1.0 + 0.37 * k)
        try:
            zs = find_zeros(f, Rectangle(sigma - d, sigma + d, -T - d, T + d), tol=1e-12, spec=spec)
            return [(z.s, z.multiplicity) for z in zs]
        except MeanCountError as exc:
            if exc.code != "BOUNDARY_ZERO":
                raise
    raise MeanCountError("NONCONVERGED", "could not place the singular strip off the zeros")


def jessen_time_average(f: DirichletPolynomial, sigma: float, T: float,
                        spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """(1/2T) * integral over [-T, T] of log|f(sigma + it)| dt.

    Zeros within ``spec.singular_delta`` of the line are located and their
    log|s - rho| terms are integrated in closed form; the smooth remainder
    goes to adaptive Gauss-Legendre panels.
    """
    if not sigma > 0:
        raise MeanCountError("DOMAIN", "sigma must be > 0")
    if not T > 0:
        raise MeanCountError("DOMAIN", "T must be > 0")
    if f.is_zero:
        raise MeanCountError("INVALID", "log of the zero series")
    if f.is_constant:
        return math.log(abs(f.value_at_infinity))
    near = _near_zeros(f, sigma, T, spec)
    rho = np.array([s for s, _ in near], dtype=np.complex128)
    mult = np.array([m for _, m in near], dtype=np.float64)

    def g(t):
        s = sigma + 1j * t
        out = _log_abs(f.eval(s))
        for lo in range(0, rho.size, 256):
            r, m = rho[lo:lo + 256], mult[lo:lo + 256]
            out = out - (np.log(np.abs(s[:, None] - r[None, :])) * m).sum(axis=1)
        return out

    analytic = sum(
        m * _log_line_integral(sigma - r.real, -T - r.imag, T - r.imag) for r, m in zip(rho, mult)
    )
    numeric = _adaptive_gl(g, -T, T, spec.quad_tol * 2.0 * T, 0.5 / max(f.max_log, 1.0), spec)
    return (analytic + numeric) / (2.0 * T)


def _gl_panels(g, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    t = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    v = g(t).reshape(a.size, _GL_X.size)
    return half * (v @ _GL_W)


def _adaptive_gl(g, lo: float, hi: float, tol: float, h0: float, spec: QuadratureSpec) -> float:
    n = max(1, int(math.ceil((hi - lo) / h0)))
    edges = np.linspace(lo, hi, n + 1)
    a, b = edges[:-1], edges[1:]
    coarse = _gl_panels(g, a, b)
    total = 0.0
    for _ in range(spec.max_depth):
        m = 0.5 * (a + b)
        left, right = _gl_panels(g, a, m), _gl_panels(g, m, b)
        fine = left + right
        err = np.abs(fine - coarse)
        ok = (err <= tol * (b - a) / (hi - lo)) | ((b - a) < 1e-12)
        if not np.all(np.isfinite(fine[ok])):
            raise MeanCountError("NONCONVERGED", "non-finite integrand in the time average")
        total += float(fine[ok].sum())
        if ok.all():
            return total
        keep = ~ok
        a = np.concatenate([a[keep], m[keep]])
        b = np.concatenate([m[keep], b[keep]])
        coarse = np.concatenate([left[keep], right[keep]])
    raise MeanCountError("NONCONVERGED", f"adaptive quadrature depth {spec.max_depth} exhausted")


@dataclass(frozen=True)
class RouteComparison:
    value: float
    torus: float
    time_average: float
    difference: float
    tolerance: float
    T: float


def jessen_details(f: DirichletPolynomial, sigma: float, spec: QuadratureSpec = DEFAULT_SPEC,
                   T: float | None = None) -> RouteComparison:
    if not sigma > 0:
        raise MeanCountError("DOMAIN", "sigma must be > 0")
    tor = jessen_torus_details(f, sigma, spec=spec)
    if f.is_constant:
        return RouteComparison(tor.value, tor.value, tor.value, 0.0, 0.0, 0.0)
    P = f.period
    if T is None:
        T = 0.5 * P if P is not None else 64.0 * f.quasi_period
    tav = jessen_time_average(f, sigma, T, spec)
    tol = 1e-3 + tor.error
    if P is None or abs(2.0 * T / P - round(2.0 * T / P)) > 1e-12:
        # a non-integer number of periods leaves an O(1/T) window error
        half = jessen_time_average(f, sigma, 0.5 * T, spec)
        tol = max(tol, 4.0 * abs(tav - half))
    diff = abs(tav - tor.value)
    out = RouteComparison(tor.value, tor.value, tav, diff, tol, T)
    if diff > tol:
        raise MeanCountError(
            "ROUTE_MISMATCH",
            f"torus {tor.value!r} vs time average {tav!r}",
            diagnostics=out.__dict__,
        )
    return out


def jessen(f: DirichletPolynomial, sigma: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Jessen function at sigma, the torus value cross-checked by a time average."""
    return jessen_details(f, sigma, spec).value


# -- rectangle Jensen identity -------------------------------------------------------


def _bump(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


BUMP_MASS = quad(lambda x: float(_bump(x)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-14)[0]


def zero_free_right_edge(f, start: float, target_ratio: float = 0.5) -> float:
    """A sigma >= start beyond which f has no zeros.

    With leading term a_{n0} n0^{-s}, f has no zeros where
    sum_{n > n0} |a_n| (n/n0)^{-sigma} < target_ratio * |a_{n0}|.
    """
    if isinstance(f, DirichletPolynomial):
        vals, logs = np.abs(np.asarray(f.values)), np.asarray(f.logs)
        lead, l0 = vals[0], logs[0]
        rest, rl = vals[1:], logs[1:] - l0
        maj = lambda s: float(np.sum(rest * np.exp(-s * rl)))
    else:
        lead = abs(f.value_at_infinity)
        maj = f.majorant
    if lead == 0:
        raise MeanCountError("INVALID", "series with no leading term")
    target = target_ratio * lead
    sigma = max(start, 0.0) + 0.5
    step = 1.0
    while maj(sigma) >= target:
        sigma += step
        step *= 2.0
        if sigma > 1e6:
            raise MeanCountError("NONCONVERGED", "no zero-free right edge found")
    return sigma


@dataclass
class LittlewoodCheck:
    residual: float
    sigma0: float
    sigma_right: float
    zero_side: float
    jessen_side: float
    t_ladder: list[float] = field(default_factory=list)
    zero_sides: list[float] = field(default_factory=list)
    zero_counts: list[int] = field(default_factory=list)


_LW_STOP = 1e-5


def _nudge_sigma(f: DirichletPolynomial, sigma0: float) -> float:
    scale = abs(f.value_at_infinity) + f.majorant(max(sigma0, 0.0))
    for k in range(41):
        d = 0.005 * ((k + 1) // 2) * (1 if k % 2 else -1)
        s = sigma0 + d
        if s <= 0:
            continue
        if torus_min_modulus(f, s) >= 0.02 * scale:
            return s
    raise MeanCountError("NONCONVERGED", f"no zero-free vertical line near sigma0 = {sigma0}")


def littlewood_lemma_check(f: DirichletPolynomial, sigma0: float, ladder: LadderSpec | None = None,
                           spec: QuadratureSpec = DEFAULT_SPEC) -> LittlewoodCheck:
    """Smoothly windowed zero sum against J_f(sigma0) - log|f(+inf)|.

    The zero side is 2 pi sum W(gamma/T)(beta - sigma0) / (T * int W) with a
    C-infinity bump W; the boundary argument term then averages out faster
    than with a sharp cutoff.
    """
    a1 = f.value_at_infinity
    if a1 == 0:
        raise MeanCountError("INVALID", "f(+inf) must be nonzero")
    if f.is_constant:
        return LittlewoodCheck(0.0, sigma0, sigma0, 0.0, 0.0)
    # the default ladder stops once two rungs agree; an explicit one runs to its top rung
    adaptive = ladder is None
    if adaptive:
        ladder = LadderSpec(t0=8.0 * f.quasi_period, steps=6)
    s0 = _nudge_sigma(f, sigma0)
    jside = jessen_torus(f, s0, spec=spec) - math.log(abs(a1))
    sr = zero_free_right_edge(f, s0)
    Ts = ladder.t_values(f.quasi_period)
    sides, counts = [], []
    for T in Ts:
        for k in range(6):
            Tk = T * (1.0 + 1e-7 * k)
            try:
                zs = find_zeros(f, Rectangle(s0, sr, -Tk, Tk), tol=1e-10, spec=spec)
                break
            except MeanCountError as exc:
                if exc.code != "BOUNDARY_ZERO":
                    raise
        else:
            raise MeanCountError("NONCONVERGED", "zeros keep landing on the window edge")
        loc = zs.locations
        w = _bump(loc.imag / Tk) * zs.multiplicities
        sides.append(float(TWO_PI * np.sum(w * (loc.real - s0)) / (Tk * BUMP_MASS)))
        counts.append(int(zs.multiplicities.sum()) if len(zs) else 0)
        if adaptive and len(sides) >= 2 and abs(sides[-1] - sides[-2]) < _LW_STOP * max(1.0, abs(sides[-1])):
            break
    return LittlewoodCheck(abs(sides[-1] - jside), s0, sr, sides[-1], jside, Ts[:len(sides)], sides, counts)


def littlewood_lemma_residual(f: DirichletPolynomial, sigma0: float, ladder: LadderSpec | None = None,
                              spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    return littlewood_lemma_check(f, sigma0, ladder, spec).residual


# -- convexity profiles ----------------------------------------------------------------


def second_differences(xs, vs) -> list[float]:
    """Second differences on a possibly non-uniform grid, scaled to match
    v[i-1] - 2 v[i] + v[i+1] when the grid is uniform."""
    out = []
    for i in range(1, len(xs) - 1):
        h1, h2 = xs[i] - xs[i - 1], xs[i + 1] - xs[i]
        out.append(2.0 * (h2 * vs[i - 1] - (h1 + h2) * vs[i] + h1 * vs[i + 1]) / (h1 + h2))
    return out


@dataclass
class JessenProfile:
    sigmas: list[float]
    values: list[float]
    route: str
    second_differences: list[float]
    p: float | None = None
    ap_values: list[float] | None = None
    log_ap_second_differences: list[float] | None = None

    @property
    def first_differences(self) -> list[float]:
        return [b - a for a, b in zip(self.values, self.values[1:])]

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = "sigma,value,second_difference"
        if self.ap_values is not None:
            cols += ",ap_value,log_ap_second_difference"
        buf.write(cols + "\n")
        n = len(self.sigmas)
        for i in range(n):
            sd = repr(self.second_differences[i - 1]) if 0 < i < n - 1 else ""
            row = f"{self.sigmas[i]!r},{self.values[i]!r},{sd}"
            if self.ap_values is not None:
                lsd = repr(self.log_ap_second_differences[i - 1]) if 0 < i < n - 1 else ""
                row += f",{self.ap_values[i]!r},{lsd}"
            buf.write(row + "\n")
        return buf.getvalue()


def convexity_profile(f: DirichletPolynomial, sigmas, spec: QuadratureSpec = DEFAULT_SPEC,
                      p: float | None = None) -> JessenProfile:
    sigmas = [float(x) for x in sigmas]
    if any(b <= a for a, b in zip(sigmas, sigmas[1:])):
        raise MeanCountError("INVALID", "sigmas must be strictly increasing")
    if sigmas and sigmas[0] < 0:
        raise MeanCountError("DOMAIN", "sigmas must be >= 0")
    vals = [jessen_torus(f, s, spec=spec) for s in sigmas]
    prof = JessenProfile(sigmas, vals, "TORUS", second_differences(sigmas, vals))
    if p is not None:
        if not p > 0:
            raise MeanCountError("INVALID", "p must be positive")
        ap = [p_mean_torus(f, s, p, spec) for s in sigmas]
        prof.p = float(p)
        prof.ap_values = ap
        prof.log_ap_second_differences = second_differences(sigmas, [math.log(a) for a in ap])
    return prof
