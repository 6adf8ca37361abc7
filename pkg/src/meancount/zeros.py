"""Argument-principle zero localization in closed vertical rectangles.

The boundary phase of f is tracked with adaptive bisection; cells are
subdivided until each holds at most one zero (or a tight cluster), then
simple zeros are polished by Newton and clusters are located from contour
moments.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .dirichlet import DEFAULT_SPEC, QuadratureSpec, SymbolG0
from .errors import MeanCountError

_EPS = np.finfo(float).eps
_PHASE_STEP = 0.5 * math.pi
_MOD_STEP = math.log(4.0)
CLUSTER_DIAMETER = 1e-3
CLUSTER_SPREAD = 1e-6
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


@dataclass(frozen=True)
class Rectangle:
    sigma_min: float
    sigma_max: float
    t_min: float
    t_max: float

    def __post_init__(self):
        vals = (self.sigma_min, self.sigma_max, self.t_min, self.t_max)
        if not all(math.isfinite(v) for v in vals):
            raise MeanCountError("INVALID", "rectangle bounds must be finite")
        if not (self.sigma_min < self.sigma_max and self.t_min < self.t_max):
            raise MeanCountError("INVALID", f"degenerate rectangle {vals}")

    @property
    def width(self) -> float:
        return self.sigma_max - self.sigma_min

    @property
    def height(self) -> float:
        return self.t_max - self.t_min

    @property
    def diameter(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.sigma_min + self.sigma_max), 0.5 * (self.t_min + self.t_max))

    def contains(self, s: complex, slack: float = 0.0) -> bool:
        return (
            self.sigma_min - slack < s.real < self.sigma_max + slack
            and self.t_min - slack < s.imag < self.t_max + slack
        )

    def corners(self) -> list[complex]:
        return [
            complex(self.sigma_min, self.t_min),
            complex(self.sigma_max, self.t_min),
            complex(self.sigma_max, self.t_max),
            complex(self.sigma_min, self.t_max),
        ]


@dataclass(frozen=True)
class Zero:
    s: complex
    multiplicity: int
    residual: float


@dataclass
class ZeroSet:
    zeros: list[Zero] = field(default_factory=list)
    total_winding: int = 0

    def __len__(self):
        return len(self.zeros)

    def __iter__(self):
        return iter(self.zeros)

    @property
    def locations(self) -> np.ndarray:
        return np.array([z.s for z in self.zeros], dtype=np.complex128)

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([z.multiplicity for z in self.zeros], dtype=int)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("re,im,multiplicity,residual\n")
        for z in self.zeros:
            buf.write(f"{z.s.real!r},{z.s.imag!r},{z.multiplicity},{z.residual!r}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class WindingResult:
    winding: int
    rounding_gap: float
    min_modulus: float
    samples: int


def _scale(f, sigma: float) -> float:
    base = abs(f.value_at_infinity) + f.majorant(sigma)
    return base if math.isfinite(base) and base > 0 else 1.0


def _perimeter(rect: Rectangle, h: float) -> np.ndarray:
    pts = []
    for a, b in zip(rect.corners(), rect.corners()[1:] + rect.corners()[:1]):
        n = max(8, int(math.ceil(abs(b - a) / h)))
        pts.append(a + (b - a) * (np.arange(n) / n))
    pts = np.concatenate(pts)
    return np.append(pts, pts[0])


def winding_details(f, rect: Rectangle, spec: QuadratureSpec = DEFAULT_SPEC) -> WindingResult:
    """Winding number of f around the boundary of ``rect``, with diagnostics."""
    h = min(0.25 / max(f.max_log, 1.0), rect.diameter / 16.0)
    s = _perimeter(rect, h)
    F, dF = f.eval_d(s)
    scale = _scale(f, rect.sigma_min)
    floor = 64.0 * _EPS * scale
    for _ in range(spec.max_depth + 1):
        if not (np.all(np.isfinite(F)) and np.all(np.isfinite(dF))):
            raise MeanCountError("NONCONVERGED", "non-finite values on the contour")
        mod = np.abs(F)
        if mod.min() <= floor:
            raise MeanCountError("BOUNDARY_ZERO", f"|f| = {mod.min():.3g} on the contour of {rect}")
        ratio = F[1:] / F[:-1]
        seg = np.abs(s[1:] - s[:-1])
        # |f|/|f'| estimates the distance to the nearest zero; a segment longer
        # than that could step over a zero lying just off the contour
        reach = mod / np.maximum(np.abs(dF), 1e-300)
        near = np.minimum(reach[1:], reach[:-1]) < seg
        bad = (
            (np.abs(np.angle(ratio)) >= _PHASE_STEP)
            | (np.abs(np.log(np.abs(ratio))) > _MOD_STEP)
            | near
        )
        if not bad.any():
            break
        idx = np.nonzero(bad)[0]
        if seg[idx].min() < 4.0 * _EPS * max(1.0, float(np.abs(s[idx]).max())):
            raise MeanCountError("BOUNDARY_ZERO", f"zero within machine resolution of {rect}")
        mid = 0.5 * (s[idx] + s[idx + 1])
        Fm, dFm = f.eval_d(mid)
        s = np.insert(s, idx + 1, mid)
        F = np.insert(F, idx + 1, Fm)
        dF = np.insert(dF, idx + 1, dFm)
    else:
        if np.min(np.minimum(reach[1:], reach[:-1])[bad]) < 1e-9 * max(1.0, float(np.abs(s).max())):
            raise MeanCountError("BOUNDARY_ZERO", f"zero within 1e-9 of the contour of {rect}")
        raise MeanCountError(
            "NONCONVERGED",
            f"phase steps not below pi/2 after {spec.max_depth} refinements on {rect}",
        )
    total = float(np.sum(np.angle(F[1:] / F[:-1]))) / (2.0 * math.pi)
    w = int(round(total))
    return WindingResult(w, abs(total - w), float(np.abs(F).min()), int(s.size))


def winding_count(f, rect: Rectangle, spec: QuadratureSpec = DEFAULT_SPEC) -> int:
    return winding_details(f, rect, spec).winding


def _splits(rect: Rectangle, tol: float):
    """Candidate split points, the exact midpoint first, then deterministic jitters."""
    offsets = [0.0, tol / 10.0, -tol / 10.0]
    rel = [0.0123, -0.0217, 0.0331, -0.0449, 0.0571]
    cs = 0.5 * (rect.sigma_min + rect.sigma_max)
    ct = 0.5 * (rect.t_min + rect.t_max)
    for o in offsets:
        yield cs + o, ct + o
    for r in rel:
        yield cs + r * rect.width, ct - r * rect.height


def _children(rect: Rectangle, xs: float, yt: float) -> list[Rectangle]:
    split_s = rect.width > 0.5 * rect.height
    split_t = rect.height > 0.5 * rect.width
    sig = [(rect.sigma_min, xs), (xs, rect.sigma_max)] if split_s else [(rect.sigma_min, rect.sigma_max)]
    tt = [(rect.t_min, yt), (yt, rect.t_max)] if split_t else [(rect.t_min, rect.t_max)]
    return [Rectangle(a, b, c, d) for (c, d) in tt for (a, b) in sig]


def _newton(f, s0: complex, mult: int = 1, tol: float = 1e-12, maxit: int = 60,
            radius: float = math.inf):
    s = complex(s0)
    for _ in range(maxit):
        with np.errstate(all="ignore"):
            F, dF = f.eval_d(np.array([s]))
        F, dF = complex(F[0]), complex(dF[0])
        if F == 0:
            return s, True
        if dF == 0 or not (np.isfinite(F) and np.isfinite(dF)):
            return s, False
        step = mult * F / dF
        if abs(s - step - s0) > radius:
            return s, False
        s -= step
        if abs(step) <= tol * max(1.0, abs(s)):
            return s, True
    return s, False


def _contour_moments(f, rect: Rectangle, kmax: int, center: complex) -> np.ndarray:
    """(1/2 pi i) * contour integral of (s - c)^k f'/f ds for k = 0..kmax."""
    corners = rect.corners()
    out = np.zeros(kmax + 1, dtype=np.complex128)
    panels = 8
    for a, b in zip(corners, corners[1:] + corners[:1]):
        for j in range(panels):
            pa = a + (b - a) * j / panels
            pb = a + (b - a) * (j + 1) / panels
            s = 0.5 * (pa + pb) + 0.5 * (pb - pa) * _GL_NODES
            F, dF = f.eval_d(s)
            g = dF / F * (0.5 * (pb - pa)) * _GL_WEIGHTS
            u = s - center
            for k in range(kmax + 1):
                out[k] += np.sum(g * u**k)
    return out / (2j * math.pi)


def _cluster(f, rect: Rectangle, mult: int) -> list[tuple[complex, int]]:
    """Locate the ``mult`` zeros inside a small cell from contour power sums."""
    c = rect.center
    p = _contour_moments(f, rect, mult, c)
    # Newton's identities: power sums -> monic polynomial coefficients
    e = [1.0 + 0j]
    for k in range(1, mult + 1):
        acc = 0j
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * p[i]
        e.append(acc / k)
    coeffs = [(-1) ** k * e[k] for k in range(mult + 1)]
    roots = np.roots(coeffs) if mult > 1 else np.array([p[1]])
    centroid = c + p[1] / mult
    if np.max(np.abs(roots - p[1] / mult)) <= CLUSTER_SPREAD:
        return [(centroid, mult)]
    return [(c + r, 1) for r in roots]


def find_zeros(f, rect: Rectangle, tol: float = 1e-10, spec: QuadratureSpec = DEFAULT_SPEC) -> ZeroSet:
    """All zeros of f strictly inside ``rect`` with multiplicities."""
    if getattr(f, "is_constant", False):
        c = f.value_at_infinity
        if c == 0:
            raise MeanCountError("INVALID", "the zero function has no isolated zeros")
        return ZeroSet([], 0)
    total = winding_details(f, rect, spec).winding
    if total < 0:
        raise MeanCountError("NONCONVERGED", f"negative winding {total}: poles inside {rect}")
    found: list[tuple[complex, int]] = []
    stack = [(rect, total)] if total else []
    while stack:
        cell, w = stack.pop()
        leaf = _leaf(f, cell, w, tol)
        if leaf is not None:
            found.extend(leaf)
            continue
        kids = _split_cell(f, cell, w, tol, spec)
        for kid, kw in reversed(kids):
            if kw:
                stack.append((kid, kw))
    zeros = []
    for s, m in sorted(found, key=lambda z: (z[0].imag, z[0].real)):
        zeros.append(Zero(s, m, float(abs(f.eval(np.array([s]))[0]))))
    if sum(z.multiplicity for z in zeros) != total:
        raise MeanCountError("NONCONVERGED", "winding conservation failed during subdivision")
    return ZeroSet(zeros, total)


def _leaf(f, cell: Rectangle, w: int, tol: float):
    if w == 1:
        s, ok = _newton(f, cell.center, tol=min(tol, 1e-12), radius=cell.diameter)
        if ok and cell.contains(s):
            return [(s, 1)]
        if cell.diameter < tol:
            return [(cell.center, 1)]
        return None
    if cell.diameter < max(tol, CLUSTER_DIAMETER):
        got = _cluster(f, cell, w)
        out = []
        for s, m in got:
            if m == 1:
                s2, ok = _newton(f, s, tol=min(tol, 1e-12))
                if ok and abs(s2 - s) < cell.diameter:
                    s = s2
            out.append((s, m))
        return out
    return None


def _split_cell(f, cell: Rectangle, w: int, tol: float, spec: QuadratureSpec):
    last = None
    for xs, yt in _splits(cell, tol):
        kids = _children(cell, xs, yt)
        try:
            ws = [winding_details(f, k, spec).winding for k in kids]
        except MeanCountError as exc:
            if exc.code != "BOUNDARY_ZERO":
                raise
            last = exc
            continue
        if sum(ws) == w and min(ws) >= 0:
            return list(zip(kids, ws))
        last = MeanCountError("NONCONVERGED", f"child windings {ws} do not add up to {w}")
    raise last


def solve_level(phi, w: complex, rect: Rectangle, tol: float = 1e-10,
                spec: QuadratureSpec = DEFAULT_SPEC) -> ZeroSet:
    """Solutions of phi(s) = w inside ``rect``."""
    nu = phi.nu if isinstance(phi, SymbolG0) else phi.value_at_infinity
    if complex(w) == complex(nu):
        raise MeanCountError("W_EQUALS_NU", "w coincides with phi(+inf)")
    if getattr(phi, "is_constant", False):
        return ZeroSet([], 0)
    return find_zeros(phi.level(w), rect, tol, spec)
