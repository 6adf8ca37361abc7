"""Composition operators on the Hardy space of Dirichlet series.

Norms come from coefficients; the area identities integrate |f'|^2 or
zeta''(2 Re w) against the mean counting function over the half-plane
Re w > 1/2 with an explicit error budget: quadrature error, a far-tail bound
from the pseudo-hyperbolic majorant and a bound for the excluded patch
around nu.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import quad

from .dirichlet import (
    DEFAULT_SPEC,
    DirichletPolynomial,
    QuadratureSpec,
    SymbolG0,
    compose,
)
from .arith import is_power_of
from .errors import MeanCountError
from .jessen import BUMP_MASS, _bump
from .ladder import LadderSpec
from .zeta import zeta, zeta_dd

PATCH_RADIUS = 1e-2
_GX, _GW = np.polynomial.legendre.leggauss(6)


def h2_norm(f: DirichletPolynomial) -> float:
    return float(math.sqrt(np.sum(np.abs(np.asarray(f.values)) ** 2))) if len(f) else 0.0


# -- composition norms -------------------------------------------------------------


@dataclass(frozen=True)
class CompositionNorm:
    value: float
    tail_estimate: float
    error: float
    cutoff: int
    terms: int


_OCTAVES = 5


def _octave_tail(partial) -> float:
    """Geometric tail from the octave increments of the partial sums.

    The decay ratio is a least-squares fit of log increments over several
    octaves, which averages out the oscillation seen for symbols touching
    the boundary.
    """
    inc = np.diff(np.asarray(partial, dtype=np.float64))
    if len(inc) < 2:
        return math.inf
    if inc[-1] <= 0.0:
        return 0.0
    if np.any(inc <= 0.0):
        return math.inf
    rho = math.exp(np.polyfit(np.arange(len(inc)), np.log(inc), 1)[0])
    return float(inc[-1] * rho / (1.0 - rho)) if rho < 1.0 else math.inf


def _partials(f: DirichletPolynomial, phi, cut: int, p: int | None):
    """Squared-norm partial sums at the last few index octaves ending at ``cut``."""
    cuts = [cut >> j for j in range(_OCTAVES)][::-1]
    if p is not None:
        g = compose(f, phi, p**cut)
        c2 = np.zeros(cut + 1)
        for n, a in g:
            c2[is_power_of(n, p)] = abs(a) ** 2
        cum = np.cumsum(c2)
        return [float(cum[k]) for k in cuts], len(g)
    g = compose(f, phi, cut)
    idx = np.array(g.indices, dtype=np.float64)
    a2 = np.abs(np.asarray(g.values)) ** 2
    return [float(a2[idx <= k].sum()) for k in cuts], len(g)


def composition_norm_details(f: DirichletPolynomial, phi, target: float = 1e-3,
                             max_cut: int | None = None, strict: bool = True) -> CompositionNorm:
    """||f o phi|| with the coefficient tail extrapolated over index octaves.

    For a symbol on powers of one prime p the cutoff is p**K with K doubled
    from 64 up to ``max_cut`` (default 16384); otherwise the index cutoff is
    doubled from 256 up to 2**14. The reported error is the change of the
    extrapolated squared norm over the last three cutoffs.
    """
    nu = phi.nu if isinstance(phi, SymbolG0) else phi.value_at_infinity
    if complex(nu).real <= 0.5:
        raise MeanCountError("REJECTED_MEAN", f"Re nu = {complex(nu).real} <= 1/2")
    if f.is_zero:
        return CompositionNorm(0.0, 0.0, 0.0, 0, 0)
    if f.is_constant or phi.is_constant:
        v = abs(sum(complex(a) * np.exp(-complex(nu) * math.log(n)) for n, a in f))
        return CompositionNorm(float(v), 0.0, 0.0, 0, 1)
    p = phi.base
    cut = 64 if p is not None else 256
    top = max_cut or (16384 if p is not None else 1 << 14)
    history: list[float] = []
    while True:
        partial, terms = _partials(f, phi, cut, p)
        tail = _octave_tail(partial)
        est = partial[-1] + tail
        history.append(est)
        # two consecutive small changes, so a lucky crossing does not stop the loop
        err = max(abs(history[-1] - history[-2]), abs(history[-2] - history[-3])) if len(history) >= 3 else math.inf
        if not math.isfinite(err):
            err = math.inf
        if err <= target * max(1.0, partial[-1]) or cut >= top:
            break
        cut *= 2
    if not math.isfinite(est):
        est, tail = partial[-1], math.inf
    if strict and not err <= target * max(1.0, partial[-1]):
        raise MeanCountError(
            "TRUNCATION",
            f"extrapolated squared norm still moving by {err:.3g} at cutoff {cut}",
            diagnostics={"value": math.sqrt(est), "tail_estimate": tail, "error": err},
        )
    return CompositionNorm(math.sqrt(est), tail, err, cut, terms)


def composition_norm(f: DirichletPolynomial, phi, target: float = 1e-3) -> float:
    return composition_norm_details(f, phi, target).value


# -- Littlewood-Paley ------------------------------------------------------------------


def _fixed_panels(lo: float, hi: float, h: float, order: int = 16):
    """Composite Gauss-Legendre nodes and weights with panels no wider than h.

    A trigonometric polynomial of top frequency L is integrated to machine
    precision once h * L <= 1/2 at order 16.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    n = max(1, int(math.ceil((hi - lo) / h)))
    e = np.linspace(lo, hi, n + 1)
    half = 0.5 * (e[1:] - e[:-1])
    mid = 0.5 * (e[1:] + e[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


@dataclass(frozen=True)
class LittlewoodPaley:
    residual: float
    norm_squared: float
    area_term: float
    rungs: list


def littlewood_paley_check(f: DirichletPolynomial, sigma0_ladder=(1e-2, 1e-3), T_ladder=None,
                           spec: QuadratureSpec = DEFAULT_SPEC, sigma_cap: float = 6.0) -> LittlewoodPaley:
    """||f||^2 - |f(+inf)|^2 against 4 * int sigma * <|f'(sigma + it)|^2> d sigma.

    The vertical mean uses a smooth bump window over [-T, T]; the sigma
    integral is Gauss-Legendre on [sigma0, sigma_cap] plus the exact
    coefficient tail beyond sigma_cap.
    """
    norm2 = h2_norm(f) ** 2
    a1 = abs(f.value_at_infinity) ** 2
    if f.is_constant or f.is_zero:
        return LittlewoodPaley(0.0, norm2, 0.0, [(s, None, 0.0) for s in sigma0_ladder])
    qp = f.quasi_period
    if T_ladder is None:
        T_ladder = (64.0 * qp, 128.0 * qp)
    df = DirichletPolynomial({n: -a * math.log(n) for n, a in f if n > 1})
    c2 = np.abs(np.asarray(df.values)) ** 2
    lg = 2.0 * np.asarray(df.logs)
    # 4 * int_{cap}^{inf} sigma e^{-lg sigma} d sigma, term by term
    tail = float(np.sum(c2 * 4.0 * np.exp(-lg * sigma_cap) * (sigma_cap / lg + 1.0 / lg**2)))
    xg, wg = np.polynomial.legendre.leggauss(48)
    rungs = []
    area = 0.0
    for s0 in sigma0_ladder:
        # split at 1 so the fast-decaying start is resolved
        sig, sw = [], []
        for lo, hi in ((s0, min(1.0, sigma_cap)), (min(1.0, sigma_cap), sigma_cap)):
            if hi > lo:
                sig.append(0.5 * (hi - lo) * xg + 0.5 * (hi + lo))
                sw.append(0.5 * (hi - lo) * wg)
        sig, sw = np.concatenate(sig), np.concatenate(sw)
        for T in T_ladder:
            t, tw = _fixed_panels(-T, T, 0.5 / max(f.max_log, 1.0))
            tw = tw * _bump(t / T) / (T * BUMP_MASS)
            means = np.array([float(np.sum(tw * np.abs(df.eval(sg + 1j * t)) ** 2)) for sg in sig])
            area = float(np.sum(sw * 4.0 * sig * means)) + tail
            rungs.append((s0, T, norm2 - a1 - area))
    return LittlewoodPaley(abs(rungs[-1][2]), norm2, area, rungs)


def littlewood_paley_residual(f: DirichletPolynomial, sigma0_ladder=(1e-2, 1e-3), T_ladder=None,
                              spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    return littlewood_paley_check(f, sigma0_ladder, T_ladder, spec).residual


# -- mean counting on many points ------------------------------------------------------------


def _disc_coeffs(phi) -> np.ndarray:
    """Coefficients c_0..c_K of the disc polynomial psi of a one-prime symbol."""
    poly = phi.phi if isinstance(phi, SymbolG0) else phi
    p = poly.base
    pairs = [(is_power_of(n, p), complex(a)) for n, a in poly]
    c = np.zeros(max(k for k, _ in pairs) + 1, dtype=np.complex128)
    for k, a in pairs:
        c[k] = a
    return c


def _circle_values(phi, nodes: int) -> np.ndarray:
    th = (np.arange(nodes) + 0.5) * (2.0 * math.pi / nodes)
    z = np.exp(1j * th)
    if isinstance(phi, SymbolG0) and phi.exact is not None:
        return phi.exact(z)
    return np.polyval(_disc_coeffs(phi)[::-1], z)


def mean_counting_roots(phi: SymbolG0, ws) -> np.ndarray:
    """Mean counting function of a one-prime polynomial symbol.

    M(w) = sum of log(1/|z|) over the roots z of psi(z) = w in the unit disc,
    the roots found as eigenvalues of batched companion matrices.
    """
    ws = np.asarray(ws, dtype=np.complex128)
    flat = ws.ravel()
    if phi.is_constant:
        return np.zeros(ws.shape)
    c = _disc_coeffs(phi)
    d = len(c) - 1
    if d == 1:
        roots = ((flat - c[0]) / c[1])[:, None]
    else:
        comp = np.zeros((flat.size, d, d), dtype=np.complex128)
        comp[:, 1:, :-1] = np.eye(d - 1)
        comp[:, :, -1] = -c[:-1] / c[-1]
        comp[:, 0, -1] = -(c[0] - flat) / c[-1]
        roots = np.linalg.eigvals(comp)
    r = np.abs(roots)
    with np.errstate(divide="ignore"):
        out = np.where(r < 1.0, -np.log(r), 0.0).sum(axis=1)
    return out.reshape(ws.shape)


def mean_counting_circle(phi: SymbolG0, ws, nodes: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """Mean counting function of a one-prime symbol at many w at once.

    Uses M(w) = J_{phi - w}(0) - log|nu - w|, the boundary Jessen value
    computed as the trapezoid mean of log|psi(e^{i theta}) - w|. Returns the
    values (clipped at 0) and |difference| against half the nodes.
    """
    ws = np.asarray(ws, dtype=np.complex128)
    flat = ws.ravel()
    nu = complex(phi.nu)
    if phi.is_constant:
        z = np.zeros(flat.shape)
        return z.reshape(ws.shape), z.reshape(ws.shape)
    if phi.base is None:
        raise MeanCountError("INVALID", "circle route needs a symbol on powers of one prime")
    out = []
    for n in (nodes, nodes // 2):
        V = _circle_values(phi, n)
        acc = np.empty(flat.shape)
        for lo in range(0, flat.size, 2048):
            blk = flat[lo:lo + 2048]
            acc[lo:lo + 2048] = np.log(np.abs(V[None, :] - blk[:, None])).mean(axis=1)
        out.append(acc - np.log(np.abs(nu - flat)))
    val = np.maximum(out[0], 0.0)
    return val.reshape(ws.shape), np.abs(out[0] - out[1]).reshape(ws.shape)


def _closed_form_available(phi) -> bool:
    if not isinstance(phi, SymbolG0) or phi.exact is None:
        return False
    from .oracles import extremal_generator

    return phi.exact == extremal_generator(phi.nu)


def _is_disc_polynomial(phi) -> bool:
    return isinstance(phi, SymbolG0) and phi.exact is None and phi.base is not None


def _support_radius(phi) -> float | None:
    """R with M(w) = 0 for |w - nu| > R, when the image of psi is bounded."""
    if not _is_disc_polynomial(phi):
        return None
    return float(np.sum(np.abs(_disc_coeffs(phi)[1:])))


def _counting_field(phi, route: str):
    """Vectorised w -> (M(w), error) for the requested route."""
    if route == "auto":
        route = "closed" if _closed_form_available(phi) else "roots"
    if route == "closed":
        if not _closed_form_available(phi):
            raise MeanCountError("INVALID", "closed-form route needs an extremal symbol")
        nu = complex(phi.nu)

        def field_(w):
            with np.errstate(divide="ignore"):
                m = np.log(np.abs(np.conj(w) + nu - 1.0) / np.abs(w - nu))
            return m, np.zeros(w.shape)

        return field_, route
    if route == "roots":
        if not _is_disc_polynomial(phi):
            raise MeanCountError("INVALID", "roots route needs a polynomial symbol on powers of one prime")
        return (lambda w: (mean_counting_roots(phi, w), np.zeros(w.shape))), route
    if route == "circle":
        return (lambda w: mean_counting_circle(phi, w)), route
    raise MeanCountError("INVALID", f"unknown counting route {route!r}")


# -- adaptive area quadrature -----------------------------------------------------------------


def _gl_cells(func, cells: np.ndarray):
    """Tensor Gauss-Legendre on each cell; returns (integral, error-mass) per cell."""
    x0, x1, y0, y1 = cells.T
    hx, hy = 0.5 * (x1 - x0), 0.5 * (y1 - y0)
    mx, my = 0.5 * (x1 + x0), 0.5 * (y1 + y0)
    X = mx[:, None, None] + hx[:, None, None] * _GX[None, :, None]
    Y = my[:, None, None] + hy[:, None, None] * _GX[None, None, :]
    val, err = func(X + 1j * Y)
    W = _GW[:, None] * _GW[None, :]
    area = (hx * hy)[:, None, None]
    return (val * W * area).sum(axis=(1, 2)), (err * W * area).sum(axis=(1, 2))


def _quarter(cells: np.ndarray) -> np.ndarray:
    x0, x1, y0, y1 = cells.T
    xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    parts = [
        np.stack([x0, xm, y0, ym], 1),
        np.stack([xm, x1, y0, ym], 1),
        np.stack([x0, xm, ym, y1], 1),
        np.stack([xm, x1, ym, y1], 1),
    ]
    return np.stack(parts, 1).reshape(-1, 4)


@dataclass
class AreaIntegral:
    value: float
    quad_error: float
    field_error: float
    cells: int


def _adaptive_area(func, cells: np.ndarray, target: float, max_cells: int = 40000) -> AreaIntegral:
    coarse, ferr = _gl_cells(func, cells)
    done_val, done_err, done_ferr = 0.0, 0.0, 0.0
    while True:
        kids = _quarter(cells)
        kv, kf = _gl_cells(func, kids)
        kv = kv.reshape(-1, 4)
        kf = kf.reshape(-1, 4)
        fine = kv.sum(axis=1)
        err = np.abs(fine - coarse)
        total_err = done_err + err.sum()
        ncell = cells.shape[0]
        if total_err <= target or ncell * 4 > max_cells:
            return AreaIntegral(done_val + float(fine.sum()), float(total_err),
                                done_ferr + float(kf.sum()), ncell * 4)
        # refine the cells carrying the largest errors until the rest fit the budget
        order = np.argsort(err)[::-1]
        cum = total_err - np.cumsum(err[order])
        nref = int(np.searchsorted(-cum, -0.5 * target)) + 1
        ref = np.zeros(ncell, dtype=bool)
        ref[order[:nref]] = True
        done_val += float(fine[~ref].sum())
        done_err += float(err[~ref].sum())
        done_ferr += float(kf[~ref].sum())
        cells = kids.reshape(-1, 4, 4)[ref].reshape(-1, 4)
        coarse = kv[ref].ravel()


def _breaks_x(sigma_r: float, extra=()) -> np.ndarray:
    xs = [0.5 + 2.0**-k for k in range(14, 0, -1)]
    v = 1.0
    while v < sigma_r:
        xs.append(v)
        v = v * 1.5 if v >= 2 else v + 0.25
    xs.append(sigma_r)
    xs.extend(x for x in extra if 0.5 < x < sigma_r)
    return np.unique(np.array([0.5] + xs))


def _breaks_y(center: float, H: float, extra=()) -> np.ndarray:
    offs = [0.0, 0.125, 0.25, 0.5]
    v = 1.0
    while v < H:
        offs.append(v)
        v *= 2.0
    ys = [center + s * o for o in offs for s in (1.0, -1.0)] + [center - H, center + H]
    ys.extend(y for y in extra if abs(y - center) < H)
    return np.unique(np.array(ys))


def _grid_cells(xb: np.ndarray, yb: np.ndarray) -> np.ndarray:
    X0, Y0 = np.meshgrid(xb[:-1], yb[:-1], indexing="ij")
    X1, Y1 = np.meshgrid(xb[1:], yb[1:], indexing="ij")
    return np.stack([X0.ravel(), X1.ravel(), Y0.ravel(), Y1.ravel()], 1)


def _deriv_majorant(f: DirichletPolynomial):
    a = np.abs(np.asarray(f.values)) * np.asarray(f.logs)
    lg = np.asarray(f.logs)
    return lambda x: float(np.sum(a * np.exp(-x * lg)))


def _tail_bounds(weight_sup, nu: complex, sigma_r: float, H: float) -> tuple[float, float]:
    """Bounds for the area integral of weight * M outside the box.

    Uses M(w) <= 2 (Re w - 1/2)(Re nu - 1/2) / |w - nu|^2. ``weight_sup(x)``
    bounds the weight on the vertical line Re w = x.
    """
    c = nu.real - 0.5
    brk = [0.5 + 2.0**-k for k in range(1, 12) if 0.5 + 2.0**-k < sigma_r]
    far = quad(lambda x: weight_sup(x) * 2.0 * (x - 0.5) * c * 2.0 / H, 0.5, sigma_r, limit=400, points=brk)[0]
    right = quad(
        lambda x: weight_sup(x) * 2.0 * math.pi * (x - 0.5) * c / (x - nu.real), sigma_r, math.inf,
        limit=200,
    )[0]
    return 2.0 / math.pi * far, 2.0 / math.pi * right


def _patch_bound(weight_sup_patch: float, nu: complex, delta: float) -> float:
    """(2/pi) * sup weight * integral over |w - nu| < delta of log|(conj(w)+nu-1)/(w-nu)|."""
    lead = max(0.0, math.log(2.0 * nu.real - 1.0 + delta))
    return 2.0 / math.pi * weight_sup_patch * math.pi * delta**2 * (math.log(1.0 / delta) + 0.5 + lead)


@dataclass
class StantonReport:
    lhs: float
    rhs: float
    abs_gap: float
    rel_gap: float
    quad_cells: int
    tail_bound: float
    singular_patch_bound: float
    quad_error: float = 0.0
    counting_error: float = 0.0
    lhs_tail: float = 0.0
    error_budget: float = 0.0
    counting_route: str = ""
    region: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        d = asdict(self)
        d.pop("region")
        keys = list(d)
        return ",".join(keys) + "\n" + ",".join(repr(d[k]) if not isinstance(d[k], str) else d[k] for k in keys) + "\n"


def _area_setup(nu: complex, weight_sup, scale: float, H0: float = 64.0, sigma_r0: float = 6.0,
                frac: float = 2.5e-3):
    """Grow sigma_R and H until the outside bounds are below frac * scale."""
    budget = frac * max(scale, 1e-6)
    sigma_r = max(sigma_r0, nu.real + 2.0)
    while True:
        far, right = _tail_bounds(weight_sup, nu, sigma_r, H0)
        if right <= 0.5 * budget or sigma_r > 64:
            break
        sigma_r += 2.0
    H = H0
    while far > 0.5 * budget and H < 8192:
        H *= 2.0
        far, right = _tail_bounds(weight_sup, nu, sigma_r, H)
    return sigma_r, H, far + right


def _masked(integrand, nu: complex, delta: float):
    def g(w):
        v, e = integrand(w)
        mask = np.abs(w - nu) < delta
        return np.where(mask, 0.0, v), np.where(mask, 0.0, e)
    return g


def stanton_check(f: DirichletPolynomial, phi: SymbolG0, spec: QuadratureSpec = DEFAULT_SPEC,
                  route: str = "auto", rel_target: float = 2.5e-3) -> StantonReport:
    """||f o phi||^2 against |f(nu)|^2 + (2/pi) * area integral of |f'|^2 M."""
    nu = complex(phi.nu)
    cn = composition_norm_details(f, phi, strict=False)
    lhs = cn.value**2
    fnu = complex(sum(complex(a) * np.exp(-nu * math.log(n)) for n, a in f)) if len(f) else 0j
    head = abs(fnu) ** 2
    if phi.is_constant or all(n == 1 for n in f.indices):
        gap = abs(lhs - head)
        return StantonReport(lhs, head, gap, gap / max(lhs, 1e-300), 0, 0.0, 0.0, 0.0, 0.0, cn.error,
                             0.0, "none", {})
    field_, used = _counting_field(phi, route)
    dmaj = _deriv_majorant(f)
    wsup = lambda x: dmaj(x) ** 2
    R = _support_radius(phi) if used == "roots" else None
    if R is not None:
        # bounded image: M vanishes outside the disc |w - nu| <= R
        sigma_r, H, tail = nu.real + R, R, 0.0
    else:
        sigma_r, H, tail = _area_setup(nu, wsup, lhs, frac=rel_target)
    delta = PATCH_RADIUS
    patch = _patch_bound(wsup(nu.real - delta), nu, delta)

    def integrand(w):
        _, d = f.eval_d(w.ravel())
        m, me = field_(w.ravel())
        wgt = 2.0 / math.pi * np.abs(d) ** 2
        return (wgt * m).reshape(w.shape), (wgt * me).reshape(w.shape)

    xb = _breaks_x(sigma_r, (nu.real - delta, nu.real + delta))
    yb = _breaks_y(nu.imag, H, (nu.imag - delta, nu.imag + delta))
    res = _adaptive_area(_masked(integrand, nu, delta), _grid_cells(xb, yb),
                         target=rel_target * max(lhs, 1e-6))
    rhs = head + res.value
    gap = abs(lhs - rhs)
    budget = res.quad_error + res.field_error + tail + patch + cn.error
    return StantonReport(
        lhs, rhs, gap, gap / max(lhs, 1e-300), res.cells, tail, patch, res.quad_error, res.field_error,
        cn.error, budget, used, {"sigma_right": sigma_r, "height": H, "patch_radius": delta},
    )


# -- Hilbert-Schmidt ---------------------------------------------------------------------------


@dataclass
class HilbertSchmidt:
    value: float
    divergent: bool
    head: float
    area: float
    quad_error: float
    tail_bound: float
    singular_patch_bound: float
    shell_integrals: list
    cells: int = 0

    def to_json(self) -> str:
        d = asdict(self)
        if not math.isfinite(d["value"]):
            d["value"] = "inf"
        return json.dumps(d, sort_keys=True, indent=2)


def hilbert_schmidt_details(phi: SymbolG0, spec: QuadratureSpec = DEFAULT_SPEC, route: str = "auto",
                            shells: int = 10, abs_target: float = 1e-6) -> HilbertSchmidt:
    """Squared Hilbert-Schmidt norm zeta(2 Re nu) + (2/pi) * int zeta''(2 Re w) M(w) dA.

    Divergence is declared when the integrals over the dyadic shells
    1/2 + 2^{-k-1} < Re w < 1/2 + 2^{-k} stop decaying (ratio >= 0.9 for the
    last two shells) while still non-negligible.
    """
    nu = complex(phi.nu)
    head = zeta(2.0 * nu.real)
    if phi.is_constant:
        return HilbertSchmidt(head, False, head, 0.0, 0.0, 0.0, 0.0, [], 0)
    field_, used = _counting_field(phi, route)

    def integrand(w):
        m, me = field_(w.ravel())
        x = w.real.ravel()
        wgt = 2.0 / math.pi * zeta_dd(2.0 * x)
        return (wgt * m).reshape(w.shape), (wgt * me).reshape(w.shape)

    delta = PATCH_RADIUS
    wsup = lambda x: zeta_dd(2.0 * x)
    R = _support_radius(phi) if used == "roots" else None
    near = 0.5 + 2.0 ** (-shells - 1)
    if R is not None:
        sigma_r, H, tail = nu.real + R, R, 0.0
    else:
        # the envelope bound is only integrable against zeta'' away from Re w = 1/2
        wfar = lambda x: zeta_dd(2.0 * max(x, near))
        sigma_r, H, tail = _area_setup(nu, wfar, 1.0, frac=abs_target * 10)
    yb = _breaks_y(nu.imag, H, (nu.imag - delta, nu.imag + delta))
    g = _masked(integrand, nu, delta)
    shell_vals = []
    for k in range(1, shells + 1):
        lo, hi = 0.5 + 2.0 ** (-k - 1), 0.5 + 2.0**-k
        r = _adaptive_area(g, _grid_cells(np.array([lo, hi]), yb), target=abs_target, max_cells=8000)
        shell_vals.append(r.value)
    scale = max(max(shell_vals), 1e-300)
    ratios = [b / a if a > 0 else 0.0 for a, b in zip(shell_vals, shell_vals[1:])]
    if shell_vals[-1] > 1e-9 * max(scale, 1.0) and len(ratios) >= 2 and min(ratios[-2:]) >= 0.9:
        return HilbertSchmidt(math.inf, True, head, math.inf, 0.0, tail, 0.0, shell_vals, 0)
    xb = _breaks_x(sigma_r, (nu.real - delta, nu.real + delta))
    # the shells already cover (near, 1]
    xb = np.unique(np.concatenate([[1.0], xb[xb > 1.0]]))
    res = _adaptive_area(g, _grid_cells(xb, yb), target=abs_target)
    # the strip below the last shell: bounded by the last shell value times its decay
    strip = shell_vals[-1] * (ratios[-1] / (1.0 - ratios[-1]) if ratios and ratios[-1] < 1 else 1.0)
    patch = _patch_bound(zeta_dd(2.0 * (nu.real - delta)), nu, delta)
    area = res.value + sum(shell_vals) + strip
    return HilbertSchmidt(head + area, False, head, area, res.quad_error + res.field_error + strip,
                          tail, patch, shell_vals, res.cells)


def hilbert_schmidt_norm(phi: SymbolG0, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Squared Hilbert-Schmidt norm, or +inf when the area integral diverges."""
    return hilbert_schmidt_details(phi, spec).value


def hs_partial_sum(phi: SymbolG0, N: int) -> float:
    """sum over n <= N of ||n^{-s} o phi||^2."""
    return float(sum(composition_norm(DirichletPolynomial({n: 1.0}), phi) ** 2 for n in range(1, N + 1)))


# -- compactness -------------------------------------------------------------------------------

DEFAULT_PATH = tuple(complex(0.5 + 2.0**-k, 0.1) for k in range(1, 8))


@dataclass
class CompactnessProfile:
    samples: list
    verdict: str

    def to_json(self) -> str:
        rows = [
            {"w": [s["w"].real, s["w"].imag], "m_value": s["m_value"], "ratio": s["ratio"]}
            for s in self.samples
        ]
        return json.dumps({"samples": rows, "verdict": self.verdict}, sort_keys=True, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("w_re,w_im,m_value,ratio\n")
        for s in self.samples:
            buf.write(f"{s['w'].real!r},{s['w'].imag!r},{s['m_value']!r},{s['ratio']!r}\n")
        return buf.getvalue()


def _verdict(ratios: list[float]) -> str:
    top = max(ratios) if ratios else 0.0
    if top <= 1e-12:
        return "COMPACT_CONSISTENT"
    if ratios[-1] < 0.1 * top:
        return "COMPACT_CONSISTENT"
    tail = ratios[-3:]
    if len(tail) == 3 and min(tail) > 0.1 * top and (max(tail) - min(tail)) <= 0.2 * max(tail):
        return "NONCOMPACT_CONSISTENT"
    return "INCONCLUSIVE"


def compactness_profile(phi: SymbolG0, approach_path=DEFAULT_PATH, ladder: LadderSpec | None = None,
                        spec: QuadratureSpec = DEFAULT_SPEC) -> CompactnessProfile:
    """M(w)/(Re w - 1/2) along a path approaching the line Re w = 1/2."""
    from .counting import mean_counting

    nu = complex(phi.nu)
    samples = []
    for w in approach_path:
        w = complex(w)
        if w.real <= 0.5 or w == nu:
            raise MeanCountError("DOMAIN", f"path point {w} must lie in Re w > 1/2 and differ from nu")
        m = mean_counting(phi, w, ladder, spec=spec).value
        samples.append({"w": w, "m_value": m, "ratio": max(m, 0.0) / (w.real - 0.5)})
    return CompactnessProfile(samples, _verdict([s["ratio"] for s in samples]))


@dataclass(frozen=True)
class KernelNorms:
    points: list
    values: list
    kernel_tails: list


def kernel_norms(phi: SymbolG0, approach_path=DEFAULT_PATH, N: int = 4096) -> KernelNorms:
    """||C_phi k_w|| for unit-normalised reproducing kernels truncated at N.

    ``kernel_tails`` is the share of ||K_w||^2 = zeta(2 Re w) cut off by the
    truncation.
    """
    vals, tails = [], []
    n = np.arange(1, N + 1, dtype=np.float64)
    for w in approach_path:
        w = complex(w)
        c = np.exp(-np.conj(w) * np.log(n))
        norm2 = float(np.sum(np.abs(c) ** 2))
        k = DirichletPolynomial({i + 1: c[i] / math.sqrt(norm2) for i in range(N)})
        vals.append(composition_norm_details(k, phi, max_cut=256, strict=False).value)
        tails.append(1.0 - norm2 / zeta(2.0 * w.real))
    return KernelNorms([complex(w) for w in approach_path], vals, tails)
