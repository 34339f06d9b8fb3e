"""Floating-point Fourier/Chebyshev transforms shared by the numerical stages.

Chebyshev data uses the same storage convention as `seqspace`: a series
``[c_0, c_1, ..., c_N]`` represents ``c_0 + 2 sum_{n>=1} c_n T_n(eta)``.
Fourier data is centered, column ``j`` holding mode ``k = j - K`` of
``sum_k c_k e^{-i k t}``.  All functions act on the last axis.
"""

from __future__ import annotations

import numpy as np


def cheb_nodes(N: int) -> np.ndarray:
    """Collocation nodes -cos(pi*l/N), l = 0..N (ascending, -1 to 1)."""
    return -np.cos(np.pi * np.arange(N + 1) / N)


def _basis_matrix(N: int, etas: np.ndarray) -> np.ndarray:
    """Rows: evaluation points; columns: scaled basis (1, 2T_1, ..., 2T_N)."""
    theta = np.arccos(np.clip(etas, -1.0, 1.0))
    n = np.arange(N + 1)
    M = np.cos(np.outer(theta, n))
    M[:, 1:] *= 2.0
    return M


_NODE_SOLVE_CACHE: dict = {}


def vals_to_coeffs(vals: np.ndarray) -> np.ndarray:
    """Interpolate values at cheb_nodes(N) (last axis) into stored coefficients."""
    N = vals.shape[-1] - 1
    key = N
    lu = _NODE_SOLVE_CACHE.get(key)
    if lu is None:
        import scipy.linalg
        M = _basis_matrix(N, cheb_nodes(N))
        lu = scipy.linalg.lu_factor(M)
        _NODE_SOLVE_CACHE[key] = lu
    import scipy.linalg
    flat = vals.reshape(-1, N + 1).T
    coeffs = scipy.linalg.lu_solve(lu, flat)
    return np.ascontiguousarray(coeffs.T).reshape(vals.shape)


def coeffs_to_vals(coeffs: np.ndarray, etas: np.ndarray) -> np.ndarray:
    """Evaluate stored coefficients (last axis) at the given eta points."""
    N = coeffs.shape[-1] - 1
    M = _basis_matrix(N, np.asarray(etas, dtype=float))
    return coeffs @ M.T


def t_grid(M: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(M) / M


def fourier_vals(coeffs: np.ndarray, M: int) -> np.ndarray:
    """Evaluate centered Fourier coefficients on the uniform t-grid of size M."""
    K = (coeffs.shape[-1] - 1) // 2
    assert M >= 2 * K + 1
    full = np.zeros(coeffs.shape[:-1] + (M,), dtype=np.complex128)
    ks = np.arange(-K, K + 1)
    full[..., ks % M] = coeffs
    return np.fft.fft(full, axis=-1)


def fourier_coeffs(vals: np.ndarray, K: int) -> np.ndarray:
    """Centered Fourier coefficients (modes -K..K) from t-grid samples."""
    M = vals.shape[-1]
    ch = np.fft.ifft(vals, axis=-1)
    ks = np.arange(-K, K + 1)
    return np.ascontiguousarray(ch[..., ks % M])
