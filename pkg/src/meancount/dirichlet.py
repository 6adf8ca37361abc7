"""Finite Dirichlet polynomials, characters and composition symbols.

A :class:`DirichletPolynomial` stores exact ``index -> coefficient`` pairs.
Indices are Python integers, so very sparse series such as truncations on
powers of two may reach indices far beyond 2**64.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from . import _kernels as K
from .arith import factor, first_primes, is_power_of
from .errors import MeanCountError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class QuadratureSpec:
    """Node and tolerance settings shared by the numerical modules."""

    tol: float = 1e-6
    grid_nodes: int = 4096
    min_nodes_per_dim: int = 64
    torus_tol: float = 1e-10
    torus_start: int = 64
    torus_max_nodes: int = 1 << 21
    quad_tol: float = 1e-10
    singular_delta: float = 1e-3
    max_depth: int = 40


DEFAULT_SPEC = QuadratureSpec()


class DirichletPolynomial:
    """Immutable finite series sum a_n n^{-s} in canonical trimmed form."""

    def __init__(self, coeffs: Mapping[int, complex] | Iterable = ()):
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        d: dict[int, complex] = {}
        for n, a in items:
            if isinstance(n, float):
                if not n.is_integer():
                    raise ValueError(f"non-integer index {n!r}")
                n = int(n)
            n = operator.index(n)
            if n < 1:
                raise ValueError(f"index must be >= 1, got {n}")
            if n in d:
                raise ValueError(f"duplicate index {n}")
            d[n] = complex(a)
        kept = sorted((n, a) for n, a in d.items() if a != 0)
        self._coeffs = MappingProxyType(dict(kept))
        self._idx = tuple(n for n, _ in kept)
        self._vals = np.array([a for _, a in kept], dtype=np.complex128)
        self._logs = np.array([math.log(n) for n in self._idx], dtype=np.float64)
        self._vals.setflags(write=False)
        self._logs.setflags(write=False)

    @classmethod
    def constant(cls, c: complex) -> "DirichletPolynomial":
        return cls({1: c})

    @classmethod
    def monomial(cls, n: int, a: complex = 1.0) -> "DirichletPolynomial":
        return cls({n: a})

    # -- accessors ---------------------------------------------------------

    @property
    def coeffs(self) -> Mapping[int, complex]:
        return self._coeffs

    @property
    def indices(self) -> tuple[int, ...]:
        return self._idx

    @property
    def values(self) -> np.ndarray:
        return self._vals

    @property
    def logs(self) -> np.ndarray:
        return self._logs

    def __len__(self) -> int:
        return len(self._idx)

    def __iter__(self):
        return iter(self._coeffs.items())

    def coeff(self, n: int) -> complex:
        return self._coeffs.get(n, 0j)

    @property
    def value_at_infinity(self) -> complex:
        return self._coeffs.get(1, 0j)

    @property
    def is_zero(self) -> bool:
        return not self._idx

    @property
    def is_constant(self) -> bool:
        return all(n == 1 for n in self._idx)

    @property
    def min_index(self) -> int | None:
        return self._idx[0] if self._idx else None

    @property
    def max_index(self) -> int | None:
        return self._idx[-1] if self._idx else None

    @property
    def max_log(self) -> float:
        return float(self._logs[-1]) if self._idx else 0.0

    @cached_property
    def support_primes(self) -> tuple[int, ...]:
        ps: set[int] = set()
        for n in self._idx:
            ps.update(p for p, _ in factor(n))
        return tuple(sorted(ps))

    def exponents(self, primes: Iterable[int] | None = None) -> np.ndarray:
        """Exponent vectors of the indices over ``primes`` (rows follow indices)."""
        primes = tuple(self.support_primes if primes is None else primes)
        pos = {p: j for j, p in enumerate(primes)}
        out = np.zeros((len(self._idx), len(primes)), dtype=np.int64)
        for i, n in enumerate(self._idx):
            for p, e in factor(n):
                if p not in pos:
                    raise ValueError(f"index {n} has prime factor {p} outside {primes}")
                out[i, pos[p]] = e
        return out

    @cached_property
    def base(self) -> int | None:
        """The prime p when every index is a power of p (constants excluded)."""
        ps = self.support_primes
        if len(ps) != 1:
            return None
        return ps[0]

    @property
    def period(self) -> float | None:
        p = self.base
        return TWO_PI / math.log(p) if p else None

    @property
    def quasi_period(self) -> float:
        nontrivial = [n for n in self._idx if n > 1]
        return TWO_PI / math.log(nontrivial[0] if nontrivial else 2)

    def majorant(self, sigma: float) -> float:
        """sum over n >= 2 of |a_n| n^{-sigma}."""
        mask = self._logs > 0
        if not mask.any():
            return 0.0
        return float(np.sum(np.abs(self._vals[mask]) * np.exp(-sigma * self._logs[mask])))

    # -- evaluation --------------------------------------------------------

    def __call__(self, s):
        if np.ndim(s) == 0:
            if not self._idx:
                return 0j
            return complex(K.eval_terms(self._logs, self._vals, np.array([s]))[0])
        return self.eval(s)

    def eval(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=np.complex128)
        if not self._idx:
            return np.zeros(s.shape, dtype=np.complex128)
        return K.eval_terms(self._logs, self._vals, s.ravel()).reshape(s.shape)

    def eval_d(self, s) -> tuple[np.ndarray, np.ndarray]:
        s = np.asarray(s, dtype=np.complex128)
        if not self._idx:
            z = np.zeros(s.shape, dtype=np.complex128)
            return z, z.copy()
        f, df = K.eval_terms_d(self._logs, self._vals, s.ravel())
        return f.reshape(s.shape), df.reshape(s.shape)

    def level(self, w: complex) -> "DirichletPolynomial":
        """The series f - w."""
        d = dict(self._coeffs)
        d[1] = d.get(1, 0j) - complex(w)
        return DirichletPolynomial(d)

    # -- algebra -----------------------------------------------------------

    def _combine(self, other, sign):
        if not isinstance(other, DirichletPolynomial):
            other = DirichletPolynomial.constant(other)
        d = dict(self._coeffs)
        for n, b in other._coeffs.items():
            d[n] = d.get(n, 0j) + sign * b
        return DirichletPolynomial(d)

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        return (-self)._combine(other, 1)

    def __neg__(self):
        return DirichletPolynomial({n: -a for n, a in self._coeffs.items()})

    def scale(self, c: complex) -> "DirichletPolynomial":
        return DirichletPolynomial({n: c * a for n, a in self._coeffs.items()})

    def truncate(self, N: int) -> "DirichletPolynomial":
        return DirichletPolynomial({n: a for n, a in self._coeffs.items() if n <= N})

    def __eq__(self, other):
        if not isinstance(other, DirichletPolynomial):
            return NotImplemented
        return dict(self._coeffs) == dict(other._coeffs)

    def __hash__(self):
        return hash(tuple(self._coeffs.items()))

    def allclose(self, other: "DirichletPolynomial", atol: float = 1e-12) -> bool:
        keys = set(self._idx) | set(other._idx)
        return all(abs(self.coeff(n) - other.coeff(n)) <= atol for n in keys)

    def __repr__(self):
        if not self._idx:
            return "DirichletPolynomial(0)"
        terms = ", ".join(f"{n}: {a:.6g}" for n, a in list(self._coeffs.items())[:8])
        more = "" if len(self._idx) <= 8 else f", ... ({len(self._idx)} terms)"
        return f"DirichletPolynomial({{{terms}{more}}})"

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {"coeffs": [[n, a.real, a.imag] for n, a in self._coeffs.items()]}

    @classmethod
    def from_json(cls, doc) -> "DirichletPolynomial":
        if not isinstance(doc, dict) or "coeffs" not in doc:
            raise MeanCountError("PARSE", "expected an object with a 'coeffs' list")
        rows = doc["coeffs"]
        if not isinstance(rows, list):
            raise MeanCountError("PARSE", "'coeffs' must be a list")
        pairs = []
        last = 0
        for row in rows:
            if not isinstance(row, (list, tuple)) or len(row) != 3:
                raise MeanCountError("PARSE", f"bad coefficient row {row!r}")
            n, re, im = row
            if isinstance(n, bool) or not isinstance(n, int):
                raise MeanCountError("PARSE", f"non-integer index {n!r}")
            if n < 1:
                raise MeanCountError("PARSE", f"index must be >= 1, got {n}")
            if n == last:
                raise MeanCountError("PARSE", f"duplicate index {n}")
            if n < last:
                raise MeanCountError("PARSE", "indices must be strictly increasing")
            if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in (re, im)):
                raise MeanCountError("PARSE", f"bad coefficient value in row {row!r}")
            last = n
            pairs.append((n, complex(re, im)))
        return cls(pairs)


def eval_series(f: DirichletPolynomial, s):
    return f(s)


def derivative(f: DirichletPolynomial) -> DirichletPolynomial:
    return DirichletPolynomial({n: -a * math.log(n) for n, a in f if n > 1})


def multiply(f: DirichletPolynomial, g: DirichletPolynomial, N: int) -> DirichletPolynomial:
    """Dirichlet convolution of f and g, keeping indices <= N."""
    if N < 1:
        raise ValueError("cutoff must be >= 1")
    acc: dict[int, complex] = {}
    gi = g.indices
    gv = g.values
    for n, a in f:
        if n > N:
            break
        for m, b in zip(gi, gv):
            nm = n * m
            if nm > N:
                break
            acc[nm] = acc.get(nm, 0j) + a * complex(b)
    return DirichletPolynomial(acc)


def _largest_power(p: int, N: int) -> int:
    k, q = 0, p
    while q <= N:
        k += 1
        q *= p
    return k


def _closure(gens: Iterable[int], N: int) -> list[int]:
    gens = sorted(set(gens))
    seen = {1}
    frontier = [1]
    while frontier:
        nxt = []
        for n in frontier:
            for d in gens:
                m = n * d
                if m > N:
                    break
                if m not in seen:
                    seen.add(m)
                    nxt.append(m)
        frontier = nxt
    return sorted(seen)


def exp_series(g: DirichletPolynomial, N: int) -> DirichletPolynomial:
    """exp(g) truncated at index N; g must vanish at n = 1."""
    if N < 1:
        raise ValueError("cutoff must be >= 1")
    if g.value_at_infinity != 0:
        raise MeanCountError("INVALID", "exp_series needs a zero coefficient at n = 1")
    if g.is_zero:
        return DirichletPolynomial.constant(1.0)
    p = g.base
    if p is not None:
        Kmax = _largest_power(p, N)
        h = np.zeros(Kmax + 1, dtype=np.complex128)
        for n, a in g:
            k = is_power_of(n, p)
            if k <= Kmax:
                h[k] = a
        E = K.power_exp(h, Kmax)
        return DirichletPolynomial({p**k: E[k] for k in range(Kmax + 1)})
    # log-derivative recurrence: log n * E_n = sum_{d e = n} log d * g_d * E_e
    E: dict[int, complex] = {1: 1.0 + 0j}
    gl = [(d, a * math.log(d)) for d, a in g if d <= N]
    for n in _closure([d for d, _ in gl], N)[1:]:
        acc = 0j
        for d, c in gl:
            if d > n:
                break
            if n % d == 0:
                e = E.get(n // d)
                if e is not None:
                    acc += c * e
        E[n] = acc / math.log(n)
    return DirichletPolynomial(E)


def abschnitt(f: DirichletPolynomial, m: int) -> DirichletPolynomial:
    """Keep the coefficients supported on the first m primes."""
    if m < 0:
        raise ValueError("m must be >= 0")
    allowed = set(first_primes(m))
    return DirichletPolynomial(
        {n: a for n, a in f if all(p in allowed for p, _ in factor(n))}
    )


@dataclass(frozen=True)
class FiniteCharacter:
    """Unimodular values on the first m primes, extended completely multiplicatively."""

    values: tuple[complex, ...]

    def __post_init__(self):
        vals = tuple(complex(v) for v in self.values)
        for v in vals:
            if abs(abs(v) - 1.0) > 1e-12:
                raise MeanCountError("INVALID", f"character value {v} is not unimodular")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_angles(cls, angles) -> "FiniteCharacter":
        return cls(tuple(complex(math.cos(a), math.sin(a)) for a in angles))

    def __call__(self, n: int) -> complex:
        primes = first_primes(len(self.values))
        out = 1.0 + 0j
        for p, e in factor(n):
            if p in primes:
                out *= self.values[primes.index(p)] ** e
        return out


def twist(f: DirichletPolynomial, chi: FiniteCharacter) -> DirichletPolynomial:
    return DirichletPolynomial({n: a * chi(n) for n, a in f})


# -- symbols -------------------------------------------------------------------


@dataclass(frozen=True)
class RationalGenerator:
    """A rational function psi(z) = num(z)/den(z) of z = base^{-s}.

    Coefficient tuples list ascending powers; ``den[0]`` must be 1.
    """

    base: int
    num: tuple[complex, ...]
    den: tuple[complex, ...] = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "num", tuple(complex(c) for c in self.num))
        object.__setattr__(self, "den", tuple(complex(c) for c in self.den))
        if self.den[0] != 1:
            raise ValueError("den[0] must be 1")

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        return np.polyval(self.num[::-1], z) / np.polyval(self.den[::-1], z)

    def derivative(self, z):
        z = np.asarray(z, dtype=np.complex128)
        P = np.poly1d(self.num[::-1])
        Q = np.poly1d(self.den[::-1])
        q = Q(z)
        return (P.deriv()(z) * q - P(z) * Q.deriv()(z)) / (q * q)

    @property
    def value_at_zero(self) -> complex:
        return self.num[0]

    def poles(self) -> np.ndarray:
        if len(self.den) == 1:
            return np.zeros(0, dtype=np.complex128)
        return np.roots(self.den[::-1])

    def taylor(self, K: int) -> np.ndarray:
        """Taylor coefficients t_0..t_K (impulse response of num/den)."""
        impulse = np.zeros(K + 1, dtype=np.complex128)
        impulse[0] = 1.0
        return lfilter(np.array(self.num), np.array(self.den), impulse)

    def majorant(self, r: float) -> float:
        """sum_{k>=1} |t_k| r^k for the Taylor coefficients t_k."""
        if r <= 0:
            return 0.0
        if r >= 1:
            return math.inf
        Kmax = min(int(math.ceil(math.log(1e-18) / math.log(r))) + 1, 1 << 20)
        t = np.abs(self.taylor(Kmax))
        powers = r ** np.arange(Kmax + 1)
        head = float(np.sum(t[1:] * powers[1:]))
        tail = float(t[-16:].max()) * r ** (Kmax + 1) / (1.0 - r)
        return head + tail


@dataclass(frozen=True)
class Validation:
    min_real_part_found: float
    tolerance: float
    node_count: int


class _GeneratorMap:
    """psi(base^{-s}) - shift, evaluated exactly from the rational generator."""

    def __init__(self, gen: RationalGenerator, shift: complex = 0j):
        self.gen = gen
        self.shift = complex(shift)
        self.base = gen.base
        self.log_base = math.log(gen.base)
        self.period = TWO_PI / self.log_base
        self.quasi_period = self.period
        self.max_log = self.log_base

    def eval(self, s):
        s = np.asarray(s, dtype=np.complex128)
        return self.gen(np.exp(-s * self.log_base)) - self.shift

    def __call__(self, s):
        out = self.eval(s)
        return complex(out) if np.ndim(s) == 0 else out

    def eval_d(self, s):
        s = np.asarray(s, dtype=np.complex128)
        z = np.exp(-s * self.log_base)
        return self.gen(z) - self.shift, -self.log_base * z * self.gen.derivative(z)

    def majorant(self, sigma: float) -> float:
        return self.gen.majorant(math.exp(-sigma * self.log_base))

    @property
    def value_at_infinity(self) -> complex:
        return self.gen.value_at_zero - self.shift

    @property
    def is_constant(self) -> bool:
        return False

    def level(self, w: complex) -> "_GeneratorMap":
        return _GeneratorMap(self.gen, self.shift + complex(w))


@dataclass(frozen=True)
class SymbolG0:
    """A validated composition symbol with phi(+inf) = nu and Re nu > 1/2.

    ``phi`` holds Dirichlet coefficients; when ``exact`` is set the symbol is the
    full rational map and ``phi`` is its truncation.
    """

    phi: DirichletPolynomial
    nu: complex
    validation: Validation
    exact: RationalGenerator | None = field(default=None)

    @cached_property
    def _map(self):
        return _GeneratorMap(self.exact) if self.exact is not None else self.phi

    def __call__(self, s):
        return self._map(s)

    def eval(self, s):
        return self._map.eval(s)

    def eval_d(self, s):
        return self._map.eval_d(s)

    def majorant(self, sigma: float) -> float:
        return self._map.majorant(sigma)

    def level(self, w: complex):
        return self._map.level(w)

    @property
    def value_at_infinity(self) -> complex:
        return self.nu

    @property
    def is_constant(self) -> bool:
        return self.exact is None and self.phi.is_constant

    @property
    def base(self) -> int | None:
        return self.exact.base if self.exact is not None else self.phi.base

    @property
    def period(self) -> float | None:
        return self._map.period

    @property
    def quasi_period(self) -> float:
        return self._map.quasi_period

    @property
    def max_log(self) -> float:
        return self._map.max_log

    def coefficients(self, N: int) -> DirichletPolynomial:
        """Dirichlet coefficients with index <= N."""
        if self.exact is None:
            return self.phi.truncate(N)
        p = self.exact.base
        Kmax = _largest_power(p, N)
        t = self.exact.taylor(Kmax)
        return DirichletPolynomial({p**k: t[k] for k in range(Kmax + 1)})


def _torus_grid(m: int, per_dim: int) -> np.ndarray:
    axes = [(np.arange(per_dim) + 0.5) * (TWO_PI / per_dim)] * m
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def validate_symbol(
    phi: DirichletPolynomial,
    spec: QuadratureSpec = DEFAULT_SPEC,
    exact: RationalGenerator | None = None,
) -> SymbolG0:
    """Certify that phi maps the right half-plane into Re w > 1/2.

    The infimum of Re phi over Re s > 0 equals the minimum of Re P over the
    distinguished torus, P the polydisc polynomial of phi. It is located by a
    tensor grid followed by Nelder-Mead refinement of the best nodes.
    """
    nu = exact.value_at_zero if exact is not None else phi.value_at_infinity
    if nu.real <= 0.5:
        raise MeanCountError("REJECTED_MEAN", f"Re nu = {nu.real} <= 1/2")
    tol = spec.tol
    if exact is not None:
        n = spec.grid_nodes
        theta = (np.arange(n) + 0.5) * (TWO_PI / n)
        inside = [p for p in exact.poles() if abs(p) < 1.0 - 1e-12]
        if inside:
            raise MeanCountError("REJECTED_RANGE", "generator has a pole inside the disc")
        re = np.real(exact(np.exp(1j * theta)))
        j0 = int(np.argmin(re))
        fun = lambda x: float(np.real(exact(np.exp(1j * x[0]))))
        res = minimize(fun, [theta[j0]], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14})
        found = min(float(re[j0]), float(res.fun))
        count = n
    else:
        primes = phi.support_primes
        m = len(primes)
        if m == 0:
            found, count = nu.real, 1
        else:
            per_dim = max(spec.min_nodes_per_dim, int(math.ceil(spec.grid_nodes ** (1.0 / m))))
            expo = phi.exponents(primes)
            amps = phi.values
            if m <= 3:
                theta = _torus_grid(m, per_dim)
            else:
                from .jessen import korobov_nodes

                theta = korobov_nodes(m, per_dim**3)
            re = np.real(K.torus_values(amps, expo, theta))
            count = theta.shape[0]
            order = np.argsort(re, kind="stable")[: min(8, count)]

            def fun(x):
                return float(np.real(K.torus_values(amps, expo, np.asarray(x)[None, :])[0]))

            found = float(re[order[0]])
            for j in order:
                res = minimize(fun, theta[j], method="Nelder-Mead",
                               options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
                found = min(found, float(res.fun))
    if found < 0.5 - tol:
        raise MeanCountError(
            "REJECTED_RANGE",
            f"min Re phi on the torus is {found:.6g} < 1/2",
            diagnostics={"min_real_part_found": found},
        )
    return SymbolG0(phi, nu, Validation(found, tol, count), exact)


def constant_symbol(nu: complex) -> SymbolG0:
    return validate_symbol(DirichletPolynomial.constant(nu))


def _as_symbol_parts(phi):
    if isinstance(phi, SymbolG0):
        return phi, phi.nu
    if isinstance(phi, DirichletPolynomial):
        return phi, phi.value_at_infinity
    raise TypeError("expected a SymbolG0 or DirichletPolynomial")


def compose(f: DirichletPolynomial, phi, N: int = 256) -> DirichletPolynomial:
    """Coefficients of f(phi(s)) with index <= N.

    Each term uses n^{-phi} = n^{-nu} exp(-log n (phi - nu)); the exponential
    is a terminating series because phi - nu has no constant term.
    """
    phi, nu = _as_symbol_parts(phi)
    if nu.real <= 0.5:
        raise MeanCountError("REJECTED_MEAN", f"Re nu = {nu.real} <= 1/2")
    if N < 1:
        raise ValueError("cutoff must be >= 1")
    coeffs = phi.coefficients(N) if isinstance(phi, SymbolG0) else phi.truncate(N)
    h = coeffs - nu
    consts = [(n, a * np.exp(-nu * math.log(n))) for n, a in f]
    if h.is_zero:
        return DirichletPolynomial.constant(sum(c for _, c in consts))
    p = h.base
    if p is not None:
        Kmax = _largest_power(p, N)
        hz = np.zeros(Kmax + 1, dtype=np.complex128)
        for n, a in h:
            hz[is_power_of(n, p)] = a
        acc = np.zeros(Kmax + 1, dtype=np.complex128)
        for n, c in consts:
            if n == 1:
                acc[0] += c
            else:
                acc += c * K.power_exp(-math.log(n) * hz, Kmax)
        return DirichletPolynomial({p**k: acc[k] for k in range(Kmax + 1)})
    powers = [DirichletPolynomial.constant(1.0)]
    minh = h.min_index
    while powers[-1].min_index is not None and powers[-1].min_index * minh <= N:
        powers.append(multiply(powers[-1], h, N))
    acc: dict[int, complex] = {}
    for n, c in consts:
        lg = -math.log(n)
        weight = c
        for k, hk in enumerate(powers):
            if k:
                weight *= lg / k
            if weight == 0:
                break
            for m, b in hk:
                acc[m] = acc.get(m, 0j) + weight * b
    return DirichletPolynomial(acc)


def compose_tail_bound(f: DirichletPolynomial, phi, N: int, sigma: float = 4.0) -> float:
    """Bound on sup over Re s >= sigma of |f(phi(s)) - compose(f, phi, N)(s)|.

    Uses the majorant series exp(log n * sum |h_d| d^{-s}) whose coefficients
    dominate those of n^{-(phi - nu)}.
    """
    phi, nu = _as_symbol_parts(phi)
    coeffs = phi.coefficients(N) if isinstance(phi, SymbolG0) else phi.truncate(N)
    h = coeffs - nu
    habs = DirichletPolynomial({n: abs(a) for n, a in h})
    full = phi.majorant(sigma)
    total = 0.0
    for n, a in f:
        scale = abs(a) * math.exp(-nu.real * math.log(n))
        if n == 1 or full == 0.0:
            continue
        E = exp_series(habs.scale(math.log(n)), N)
        head = float(np.sum(np.abs(E.values) * np.exp(-sigma * E.logs)))
        total += scale * max(0.0, math.exp(math.log(n) * full) - head)
    return total
