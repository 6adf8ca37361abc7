"""zeta(x) and its second derivative for real x > 1.

A short direct sum followed by an Euler-Maclaurin tail with four Bernoulli
corrections. The x-derivatives of the tail are taken term by term in closed
form, so zeta'' carries the same accuracy as zeta.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import MeanCountError

_CUT = 64
_BERNOULLI = (1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0)
_N = np.arange(1, _CUT, dtype=np.float64)
_LOGN = np.log(_N)
_L = math.log(_CUT)


def _rising(j: int) -> np.poly1d:
    p = np.poly1d([1.0])
    for i in range(j):
        p = p * np.poly1d([1.0, float(i)])
    return p


_CORR = [(b / math.factorial(2 * j + 2), _rising(2 * j + 1), 2 * j + 1) for j, b in enumerate(_BERNOULLI)]


def _tail(x: np.ndarray, order: int) -> np.ndarray:
    """d^order/dx^order of sum_{n >= CUT} n^{-x} via Euler-Maclaurin."""
    u = np.exp((1.0 - x) * _L)
    v = 1.0 / (x - 1.0)
    if order == 0:
        out = u * v + 0.5 * np.exp(-x * _L)
    else:
        out = u * (_L**2 * v + 2.0 * _L * v**2 + 2.0 * v**3) + 0.5 * _L**2 * np.exp(-x * _L)
    for c, p, a in _CORR:
        e = np.exp(-(x + a) * _L)
        if order == 0:
            out = out + c * p(x) * e
        else:
            out = out + c * e * (p.deriv(2)(x) - 2.0 * _L * p.deriv(1)(x) + _L**2 * p(x))
    return out


def _check(x):
    x = np.asarray(x, dtype=np.float64)
    if np.any(~(x > 1.0)):
        raise MeanCountError("DOMAIN", "zeta needs real arguments > 1")
    return x


def zeta(x):
    x = _check(x)
    flat = x.ravel()
    head = np.exp(-np.outer(flat, _LOGN)).sum(axis=1)
    out = (head + _tail(flat, 0)).reshape(x.shape)
    return float(out) if out.ndim == 0 else out


def zeta_dd(x):
    """sum_n (log n)^2 n^{-x}."""
    x = _check(x)
    flat = x.ravel()
    head = (np.exp(-np.outer(flat, _LOGN)) * _LOGN**2).sum(axis=1)
    out = (head + _tail(flat, 2)).reshape(x.shape)
    return float(out) if out.ndim == 0 else out
