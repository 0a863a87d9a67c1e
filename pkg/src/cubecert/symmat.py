"""Dense symmetric linear algebra: eigendecompositions, norms, matrix
functions, PSD tests, and quantum relative entropy.

Eigendecompositions are delegated to LAPACK (numpy.linalg.eigh) behind the
fixed residual contract ||AV - V diag(w)||_F <= 1e-9 * dim * max(1, ||A||).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

MAX_DIM = 1000

EIG_RESIDUAL_TOL = 1e-9
DENSITY_TRACE_TOL = 1e-10
DENSITY_EIG_TOL = 1e-9
SQRT_CLAMP = 1e-9
SUPPORT_EIG_TOL = 1e-12
SUPPORT_MASS_TOL = 1e-9


class EigenError(RuntimeError):
    pass


class SupportError(ValueError):
    """Kernel of Y does not contain the kernel of X in D(X||Y)."""


class SymMatrix:
    def __init__(self, entries: np.ndarray):
        a = np.asarray(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("expected a square matrix")
        if a.shape[0] > MAX_DIM:
            raise ValueError(f"dims beyond {MAX_DIM} rejected")
        # exact symmetry: store the symmetric part once
        self.mat = 0.5 * (a + a.T)
        self.mat.setflags(write=False)
        self.dim = a.shape[0]
        self._eig: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        if self._eig is None:
            try:
                w, v = np.linalg.eigh(self.mat)
            except np.linalg.LinAlgError as exc:  # pragma: no cover
                raise EigenError(f"eigendecomposition failed: {exc}") from exc
            w.setflags(write=False)
            v.setflags(write=False)
            self._eig = (w, v)
        return self._eig

    def __repr__(self):
        return f"SymMatrix(dim={self.dim})"


def as_sym(a) -> SymMatrix:
    return a if isinstance(a, SymMatrix) else SymMatrix(np.asarray(a, dtype=float))


def eigendecompose(a: SymMatrix | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (columns)."""
    return as_sym(a).eig


def norms(a: SymMatrix | np.ndarray) -> tuple[float, float, float]:
    """(operator, trace, Frobenius) norms via the spectrum."""
    w, _ = eigendecompose(a)
    if w.size == 0:
        return (0.0, 0.0, 0.0)
    return (float(np.max(np.abs(w))), float(np.sum(np.abs(w))),
            float(np.sqrt(np.sum(w ** 2))))


def matrix_function(a: SymMatrix | np.ndarray, g: Callable[[np.ndarray], np.ndarray],
                    domain_check: Callable[[np.ndarray], str | None] | None = None
                    ) -> SymMatrix:
    """V g(diag) V^T applied on the spectrum."""
    w, v = eigendecompose(a)
    if domain_check is not None:
        msg = domain_check(w)
        if msg is not None:
            raise ValueError(msg)
    gw = np.asarray(g(w), dtype=float)
    return SymMatrix((v * gw) @ v.T)


def matrix_exp(a: SymMatrix | np.ndarray) -> SymMatrix:
    return matrix_function(a, np.exp)


def matrix_sqrt(a: SymMatrix | np.ndarray) -> SymMatrix:
    def check(w):
        if np.min(w) < -SQRT_CLAMP:
            return f"matrix square root undefined: min eigenvalue {np.min(w):.3e}"
        return None

    return matrix_function(a, lambda w: np.sqrt(np.clip(w, 0.0, None)), check)


def matrix_log(a: SymMatrix | np.ndarray) -> SymMatrix:
    def check(w):
        if np.min(w) <= 0:
            return f"matrix log undefined: min eigenvalue {np.min(w):.3e}"
        return None

    return matrix_function(a, np.log, check)


@dataclass
class PsdReport:
    passed: bool
    min_eigenvalue: float
    witness: np.ndarray | None

    def __bool__(self):
        return self.passed


def psd_check(a: SymMatrix | np.ndarray, tol: float = 1e-9) -> PsdReport:
    w, v = eigendecompose(a)
    lo = float(w[0]) if w.size else 0.0
    if lo >= -tol:
        return PsdReport(True, lo, None)
    return PsdReport(False, lo, v[:, 0].copy())


class DensityMatrix(SymMatrix):
    def __init__(self, entries: np.ndarray, validate: bool = True):
        super().__init__(entries)
        if validate:
            tr = float(np.trace(self.mat))
            if abs(tr - 1.0) > DENSITY_TRACE_TOL:
                raise ValueError(f"density trace {tr} differs from 1 beyond tolerance")
            lo = float(self.eig[0][0])
            if lo < -DENSITY_EIG_TOL:
                raise ValueError(f"density min eigenvalue {lo:.3e} below -{DENSITY_EIG_TOL}")

    @classmethod
    def uniform(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)

    @classmethod
    def normalized(cls, entries: np.ndarray) -> "DensityMatrix":
        a = np.asarray(entries, dtype=float)
        return cls(a / np.trace(a))


def quantum_relative_entropy(x: DensityMatrix | np.ndarray,
                             y: DensityMatrix | np.ndarray) -> float:
    """Tr(X(log X - log Y)); requires ker(Y) within ker(X) up to tolerance."""
    X, Y = as_sym(x), as_sym(y)
    if X is Y or np.array_equal(X.mat, Y.mat):
        return 0.0
    wx, vx = X.eig
    wy, vy = Y.eig
    wx = np.clip(wx, 0.0, None)
    kernel = wy < SUPPORT_EIG_TOL
    if np.any(kernel):
        proj = vy[:, kernel]
        mass = float(np.sum((proj.T @ X.mat) * proj.T))
        if mass > SUPPORT_MASS_TOL:
            raise SupportError(
                f"X has mass {mass:.3e} on the kernel of Y; D(X||Y) undefined")
    term_x = float(np.sum(wx[wx > 0] * np.log(wx[wx > 0])))
    logy = (vy * np.log(np.clip(wy, SUPPORT_EIG_TOL, None))) @ vy.T
    term_y = float(np.sum(X.mat * logy))
    return term_x - term_y
