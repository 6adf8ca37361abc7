"""Hot loops: Dirichlet polynomial evaluation on point sets and torus nodes.

Every kernel has a numba version and a numpy version with identical
signatures. The numba path is used when numba imports cleanly and the
environment variable ``MEANCOUNT_DISABLE_NUMBA`` is unset or ``0``.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("MEANCOUNT_DISABLE_NUMBA", "0").strip() not in ("", "0")

try:
    if _DISABLED:
        raise ImportError("numba disabled by MEANCOUNT_DISABLE_NUMBA")
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag
    HAS_NUMBA = False

_CHUNK = 4096


# -- numpy versions ---------------------------------------------------------


def eval_terms_numpy(logs, coeffs, s):
    s = np.asarray(s, dtype=np.complex128).ravel()
    out = np.empty(s.shape[0], dtype=np.complex128)
    for lo in range(0, s.shape[0], _CHUNK):
        blk = s[lo:lo + _CHUNK]
        out[lo:lo + _CHUNK] = np.exp(-np.outer(blk, logs)) @ coeffs
    return out


def eval_terms_d_numpy(logs, coeffs, s):
    s = np.asarray(s, dtype=np.complex128).ravel()
    f = np.empty(s.shape[0], dtype=np.complex128)
    df = np.empty(s.shape[0], dtype=np.complex128)
    dcoef = -coeffs * logs
    for lo in range(0, s.shape[0], _CHUNK):
        e = np.exp(-np.outer(s[lo:lo + _CHUNK], logs))
        f[lo:lo + _CHUNK] = e @ coeffs
        df[lo:lo + _CHUNK] = e @ dcoef
    return f, df


def torus_values_numpy(amps, expo, theta):
    """Values of sum_k amps[k] * exp(i <expo[k], theta_j>) for each node j."""
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    out = np.empty(theta.shape[0], dtype=np.complex128)
    ex = expo.astype(np.float64)
    for lo in range(0, theta.shape[0], _CHUNK):
        ph = theta[lo:lo + _CHUNK] @ ex.T
        out[lo:lo + _CHUNK] = np.exp(1j * ph) @ amps
    return out


def log_abs_mean_numpy(values):
    a = np.abs(values)
    return float(np.mean(np.log(a)))


# -- numba versions ---------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True)
    def eval_terms_numba(logs, coeffs, s):
        n = s.shape[0]
        out = np.empty(n, dtype=np.complex128)
        for j in range(n):
            acc = 0.0 + 0.0j
            sj = s[j]
            for k in range(logs.shape[0]):
                acc += coeffs[k] * np.exp(-sj * logs[k])
            out[j] = acc
        return out

    @njit(cache=True)
    def eval_terms_d_numba(logs, coeffs, s):
        n = s.shape[0]
        f = np.empty(n, dtype=np.complex128)
        df = np.empty(n, dtype=np.complex128)
        for j in range(n):
            a = 0.0 + 0.0j
            b = 0.0 + 0.0j
            sj = s[j]
            for k in range(logs.shape[0]):
                e = coeffs[k] * np.exp(-sj * logs[k])
                a += e
                b -= logs[k] * e
            f[j] = a
            df[j] = b
        return f, df

    @njit(cache=True)
    def torus_values_numba(amps, expo, theta):
        n = theta.shape[0]
        m = theta.shape[1]
        out = np.empty(n, dtype=np.complex128)
        for j in range(n):
            acc = 0.0 + 0.0j
            for k in range(amps.shape[0]):
                ph = 0.0
                for d in range(m):
                    ph += expo[k, d] * theta[j, d]
                acc += amps[k] * (np.cos(ph) + 1j * np.sin(ph))
            out[j] = acc
        return out

    @njit(cache=True)
    def log_abs_mean_numba(values):
        acc = 0.0
        for j in range(values.shape[0]):
            acc += np.log(np.abs(values[j]))
        return acc / values.shape[0]


def _pick(name):
    if HAS_NUMBA:
        return globals()[name + "_numba"]
    return globals()[name + "_numpy"]


def eval_terms(logs, coeffs, s):
    s = np.ascontiguousarray(np.asarray(s, dtype=np.complex128).ravel())
    return _pick("eval_terms")(logs, coeffs, s)


def eval_terms_d(logs, coeffs, s):
    s = np.ascontiguousarray(np.asarray(s, dtype=np.complex128).ravel())
    return _pick("eval_terms_d")(logs, coeffs, s)


def torus_values(amps, expo, theta):
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    if theta.ndim == 1:
        theta = theta[:, None]
    expo = np.ascontiguousarray(expo, dtype=np.int64)
    amps = np.ascontiguousarray(amps, dtype=np.complex128)
    return _pick("torus_values")(amps, expo, theta)


def log_abs_mean(values):
    values = np.ascontiguousarray(values, dtype=np.complex128)
    return float(_pick("log_abs_mean")(values))


def backend() -> str:
    return "numba" if HAS_NUMBA else "numpy"


# -- power-series exponential ----------------------------------------------


def power_exp_numpy(h, K):
    """Taylor coefficients of exp(h(z)) up to z**K, given h with h[0] == 0."""
    h = np.asarray(h, dtype=np.complex128)
    E = np.zeros(K + 1, dtype=np.complex128)
    E[0] = 1.0
    L = min(K, h.shape[0] - 1)
    jh = np.arange(L + 1) * h[: L + 1]
    for k in range(1, K + 1):
        j = min(k, L)
        E[k] = np.dot(jh[1 : j + 1], E[k - 1 :: -1][:j]) / k
    return E


if HAS_NUMBA:

    @njit(cache=True)
    def power_exp_numba(h, K):
        E = np.zeros(K + 1, dtype=np.complex128)
        E[0] = 1.0
        L = min(K, h.shape[0] - 1)
        for k in range(1, K + 1):
            acc = 0.0 + 0.0j
            for j in range(1, min(k, L) + 1):
                acc += j * h[j] * E[k - j]
            E[k] = acc / k
        return E


def power_exp(h, K):
    h = np.ascontiguousarray(h, dtype=np.complex128)
    return _pick("power_exp")(h, int(K))
