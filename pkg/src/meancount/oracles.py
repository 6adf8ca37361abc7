"""Closed-form fixtures: extremal symbols, univalent periodic symbols and the
geometric zero lattice.

Nothing here calls the zero finder, the counting estimators or the Jessen
quadratures; every exact value is plain arithmetic.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

from .dirichlet import (
    DEFAULT_SPEC,
    DirichletPolynomial,
    QuadratureSpec,
    RationalGenerator,
    SymbolG0,
    validate_symbol,
)
from .errors import MeanCountError

LOG2 = math.log(2.0)


@dataclass
class OracleCase:
    name: str
    series: object
    exact: dict[str, Callable] = field(default_factory=dict)


def extremal_generator(nu: complex) -> RationalGenerator:
    """psi(z) = (nu + (1 - conj(nu)) z) / (1 + z), a Mobius map of the disc
    onto Re w > 1/2 with psi(0) = nu and psi(1) = 1/2 + i Im nu."""
    nu = complex(nu)
    return RationalGenerator(2, (nu, 1.0 - nu.conjugate()), (1.0, 1.0))


def phi_nu(nu: complex, N: int = 256, spec: QuadratureSpec = DEFAULT_SPEC) -> SymbolG0:
    """The extremal symbol with phi(+inf) = nu.

    The returned symbol evaluates the exact rational map; ``.phi`` carries its
    Dirichlet coefficients at indices 2^k <= N.
    """
    nu = complex(nu)
    if nu.real <= 0.5:
        raise MeanCountError("REJECTED_MEAN", f"Re nu = {nu.real} <= 1/2")
    if N < 2:
        raise MeanCountError("INVALID", "N must be >= 2")
    gen = extremal_generator(nu)
    coeffs = {1: nu}
    c = 1.0 - 2.0 * nu.real
    k, n = 1, 2
    while n <= N:
        coeffs[n] = c * (-1) ** (k - 1)
        k, n = k + 1, n * 2
    return validate_symbol(DirichletPolynomial(coeffs), spec, exact=gen)


def phi_nu_value(nu: complex, s: complex) -> complex:
    z = 2.0 ** (-complex(s))
    nu = complex(nu)
    return (nu + (1.0 - nu.conjugate()) * z) / (1.0 + z)


def phi_nu_truncation_bound(nu: complex, N: int, sigma: float) -> float:
    """sup over Re s >= sigma of |phi_nu - truncation at 2^K <= N|."""
    K = int(math.floor(math.log2(N) + 1e-12))
    r = 2.0 ** (-sigma)
    return abs(1.0 - 2.0 * complex(nu).real) * r ** (K + 1) / (1.0 - r)


def phi_nu_counting(nu: complex, w: complex) -> float:
    """log |(conj(w) + nu - 1) / (w - nu)|."""
    nu, w = complex(nu), complex(w)
    if w == nu:
        raise MeanCountError("W_EQUALS_NU", "w coincides with nu")
    return math.log(abs(w.conjugate() + nu - 1.0) / abs(w - nu))


def mobius_inverse(nu: complex) -> Callable[[complex], complex]:
    nu = complex(nu)
    return lambda w: (complex(w) - nu) / (1.0 - nu.conjugate() - complex(w))


def affine_inverse(center: complex, radius: float) -> Callable[[complex], complex]:
    """Inverse of psi(z) = center + radius * z."""
    return lambda w: (complex(w) - center) / radius


def univalent_periodic_counting(psi_inverse: Callable[[complex], complex], w: complex) -> float:
    """log(1/|psi^{-1}(w)|) for a univalent generator psi of the disc."""
    z = complex(psi_inverse(w))
    r = abs(z)
    if r == 0.0:
        return math.inf
    if r >= 1.0:
        raise MeanCountError("DOMAIN", f"w = {w} lies outside the image of the disc")
    return -math.log(r)


def affine_counting(center: complex, radius: float, w: complex) -> float:
    """Counting function of center + radius * 2^{-s}: zero off the image disc."""
    z = abs(complex(w) - center) / radius
    if z == 0.0:
        return math.inf
    return max(0.0, -math.log(z))


def geometric_lattice_case() -> OracleCase:
    """f = 1 - 2 * 2^{-s}: zeros on Re s = 1 spaced 2 pi / log 2 apart."""
    f = DirichletPolynomial({1: 1.0, 2: -2.0})
    step = 2.0 * math.pi / LOG2

    def zeros(T: float) -> list[complex]:
        kmax = int(math.floor(T / step))
        return [complex(1.0, k * step) for k in range(-kmax, kmax + 1) if abs(k * step) < T]

    return OracleCase(
        "geometric_lattice",
        f,
        {
            "zeros": zeros,
            "jessen": lambda sigma: max(0.0, 1.0 - sigma) * LOG2,
            "unweighted": lambda sigma: LOG2 / (2.0 * math.pi) if sigma < 1.0 else 0.0,
            "mean_counting_at_zero": lambda: LOG2,
        },
    )


def mean_log_circle(r: float) -> float:
    """Mean of log|1 - r e^{i theta}| over the circle, equal to log+ r."""
    return max(0.0, math.log(r)) if r > 0 else 0.0


def oracle_battery() -> list[OracleCase]:
    one = complex(1.0)
    skew = complex(1.3, 0.7)
    return [
        OracleCase("phi_1", phi_nu(one), {"counting": lambda w: phi_nu_counting(one, w)}),
        OracleCase("phi_1.3+0.7i", phi_nu(skew), {"counting": lambda w: phi_nu_counting(skew, w)}),
        OracleCase(
            "affine_3/2+1/2",
            validate_symbol(DirichletPolynomial({1: 1.5, 2: 0.5})),
            {"counting": lambda w: affine_counting(1.5, 0.5, w)},
        ),
        OracleCase(
            "constant_1",
            validate_symbol(DirichletPolynomial({1: 1.0})),
            {"counting": lambda w: 0.0},
        ),
        geometric_lattice_case(),
    ]


def theta_inverse_closed(s: complex) -> complex:
    a = math.sinh(math.pi / 2.0)
    v = cmath.sinh(complex(s) * math.pi / 2.0)
    return (v - a) / (v + a)


def phi_nu_composition_norm_sq(nu: complex, f: DirichletPolynomial) -> float:
    """||f o phi_nu||^2 in closed form.

    On the unit circle Re psi = 1/2 and Im psi is Cauchy distributed about
    Im nu with scale Re nu - 1/2, so <m^{-psi}, n^{-psi}> is a Cauchy
    characteristic function.
    """
    nu = complex(nu)
    c = nu.real - 0.5
    total = 0j
    for m, a in f:
        for n, b in f:
            r = math.log(m / n)
            total += a * b.conjugate() * (m * n) ** -0.5 * cmath.exp(-1j * r * nu.imag - abs(r) * c)
    return total.real
