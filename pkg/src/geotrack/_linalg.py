"""Small covariance-matrix helpers shared by the filters and noise builders."""

from __future__ import annotations

import numpy as np


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def project_psd(m: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix (Frobenius) via eigenvalue clipping at zero."""
    sym = symmetrize(np.asarray(m, dtype=float))
    w, v = np.linalg.eigh(sym)
    if w[0] >= 0.0:
        return sym
    return symmetrize((v * np.clip(w, 0.0, None)) @ v.T)


def sqrt_psd(m: np.ndarray) -> np.ndarray:
    """Symmetric matrix square root; tolerates zero eigenvalues."""
    sym = symmetrize(np.asarray(m, dtype=float))
    w, v = np.linalg.eigh(sym)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
