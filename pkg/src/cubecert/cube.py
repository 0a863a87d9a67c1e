"""Real-valued functions on the boolean cube {0,1}^n.

Canonical storage is a dense table over 0/1 assignments in x-lexicographic
order with x_1 as the least significant bit; index(x) = sum_i x_i 2^(i-1).
Fourier coefficients are indexed by subset bitmasks under the same bit
order, with characters chi_alpha(x) = (-1)^{|alpha & x|}.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

MAX_DENSE_N = 24
DEGREE_CUTOFF = 1e-12


class CapacityError(ValueError):
    pass


def _check_n(n: int) -> None:
    if not 0 <= n <= MAX_DENSE_N:
        raise CapacityError(f"dense tables support 0 <= n <= {MAX_DENSE_N}, got {n}")


def index_of_point(x: Sequence[int]) -> int:
    idx = 0
    for i, xi in enumerate(x):
        if xi not in (0, 1):
            raise ValueError(f"assignment entries must be 0/1, got {xi}")
        idx |= int(xi) << i
    return idx


def point_of_index(idx: int, n: int) -> tuple[int, ...]:
    return tuple((idx >> i) & 1 for i in range(n))


def fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform, out[a] = sum_x (-1)^{|a&x|} v[x]."""
    a = np.array(values, dtype=float)
    h = 1
    while h < a.size:
        a = a.reshape(-1, 2, h)
        top = a[:, 0, :] + a[:, 1, :]
        bot = a[:, 0, :] - a[:, 1, :]
        a = np.stack([top, bot], axis=1).reshape(-1)
        h *= 2
    return a


class CubeFunction:
    def __init__(self, n: int, values: Iterable[float]):
        _check_n(n)
        vals = np.array(list(values) if not isinstance(values, np.ndarray) else values,
                        dtype=float)
        if vals.shape != (1 << n,):
            raise ValueError(f"expected {1 << n} values for n={n}, got {vals.shape}")
        self.n = n
        self.values = vals
        self.values.setflags(write=False)
        self._fourier: np.ndarray | None = None

    @classmethod
    def from_callable(cls, n: int, fn: Callable[[tuple[int, ...]], float]) -> "CubeFunction":
        _check_n(n)
        return cls(n, [fn(point_of_index(i, n)) for i in range(1 << n)])

    @classmethod
    def from_fourier(cls, n: int, coeffs: Iterable[float]) -> "CubeFunction":
        _check_n(n)
        c = np.array(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs,
                     dtype=float)
        if c.shape != (1 << n,):
            raise ValueError("coefficient table has wrong length")
        f = cls(n, fwht(c))
        f._fourier = c.copy()
        f._fourier.setflags(write=False)
        return f

    @property
    def fourier(self) -> np.ndarray:
        if self._fourier is None:
            self._fourier = fwht(self.values) / self.values.size
            self._fourier.setflags(write=False)
        return self._fourier

    def degree(self) -> int:
        masks = np.nonzero(np.abs(self.fourier) > DEGREE_CUTOFF)[0]
        if masks.size == 0:
            return 0
        return max(int(m).bit_count() for m in masks)

    def __call__(self, x: Sequence[int]) -> float:
        return float(self.values[index_of_point(x)])

    def mean(self) -> float:
        return float(np.mean(self.values))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __add__(self, other):
        if isinstance(other, CubeFunction):
            if other.n != self.n:
                raise ValueError("dimension mismatch")
            return CubeFunction(self.n, self.values + other.values)
        return CubeFunction(self.n, self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (other * -1 if isinstance(other, CubeFunction) else -float(other))

    def __rsub__(self, other):
        return CubeFunction(self.n, float(other) - self.values)

    def __mul__(self, other):
        if isinstance(other, CubeFunction):
            if other.n != self.n:
                raise ValueError("dimension mismatch")
            return CubeFunction(self.n, self.values * other.values)
        return CubeFunction(self.n, self.values * float(other))

    __rmul__ = __mul__

    def __repr__(self):
        return f"CubeFunction(n={self.n})"


def walsh_transform(f: CubeFunction) -> np.ndarray:
    return f.fourier


def degree(f: CubeFunction) -> int:
    return f.degree()


def restrict_point(x: Sequence[int], S: Sequence[int]) -> tuple[int, ...]:
    """Coordinates of x on the sorted 1-based index set S, in ascending order."""
    S = list(S)
    if any(S[i] >= S[i + 1] for i in range(len(S) - 1)):
        raise ValueError("S must be sorted ascending without repeats")
    n = len(x)
    for i in S:
        if not 1 <= i <= n:
            raise IndexError(f"index {i} out of range for n={n}")
    return tuple(x[i - 1] for i in S)


def _gather_indices(S: Sequence[int], n: int) -> np.ndarray:
    """restricted_index[x] for all x in {0,1}^n, vectorized over the table."""
    xs = np.arange(1 << n, dtype=np.int64)
    out = np.zeros(1 << n, dtype=np.int64)
    for pos, i in enumerate(S):
        out |= ((xs >> (i - 1)) & 1) << pos
    return out


def lift_function(f: CubeFunction, S: Sequence[int], n: int) -> CubeFunction:
    """The S-junta on {0,1}^n with value f(x_S)."""
    S = list(S)
    if len(S) != f.n:
        raise ValueError(f"|S|={len(S)} does not match function arity m={f.n}")
    if f.n > n:
        raise ValueError("cannot lift to fewer variables")
    restrict_point((0,) * n, S)  # validates sortedness and range
    return CubeFunction(n, f.values[_gather_indices(S, n)])


class MatrixValuedCubeFunction:
    def __init__(self, n: int, values: np.ndarray):
        _check_n(n)
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 3 or vals.shape[0] != (1 << n) or vals.shape[1] != vals.shape[2]:
            raise ValueError("expected shape (2^n, k, k)")
        if not np.allclose(vals, vals.transpose(0, 2, 1), atol=0):
            vals = 0.5 * (vals + vals.transpose(0, 2, 1))
        self.n = n
        self.k = vals.shape[1]
        self.values = vals
        self.values.setflags(write=False)
        self._fourier: np.ndarray | None = None

    @property
    def fourier(self) -> np.ndarray:
        """Entrywise coefficients, shape (2^n, k, k) indexed by subset mask."""
        if self._fourier is None:
            flat = self.values.reshape(1 << self.n, -1)
            co = np.empty_like(flat)
            for j in range(flat.shape[1]):
                co[:, j] = fwht(flat[:, j]) / flat.shape[0]
            self._fourier = co.reshape(self.values.shape)
            self._fourier.setflags(write=False)
        return self._fourier

    @classmethod
    def from_fourier(cls, n: int, coeffs: np.ndarray) -> "MatrixValuedCubeFunction":
        co = np.asarray(coeffs, dtype=float)
        flat = co.reshape(1 << n, -1)
        vals = np.empty_like(flat)
        for j in range(flat.shape[1]):
            vals[:, j] = fwht(flat[:, j])
        out = cls(n, vals.reshape(co.shape))
        return out

    def degree(self) -> int:
        masks = np.nonzero(np.abs(self.fourier).max(axis=(1, 2)) > DEGREE_CUTOFF)[0]
        if masks.size == 0:
            return 0
        return max(int(m).bit_count() for m in masks)

    def __repr__(self):
        return f"MatrixValuedCubeFunction(n={self.n}, k={self.k})"


class ProductMeasure:
    def __init__(self, ps: Iterable[float]):
        p = np.array(list(ps), dtype=float)
        if p.size and not np.all((p > 0) & (p < 1)):
            raise ValueError("per-coordinate probabilities must lie in (0,1)")
        self.n = p.size
        self.ps = p
        self.ps.setflags(write=False)
        self._weights: np.ndarray | None = None

    @classmethod
    def uniform(cls, n: int) -> "ProductMeasure":
        return cls([0.5] * n)

    @property
    def weights(self) -> np.ndarray:
        if self._weights is None:
            w = np.ones(1 << self.n)
            xs = np.arange(1 << self.n)
            for i, p in enumerate(self.ps):
                bit = (xs >> i) & 1
                w *= np.where(bit == 1, p, 1.0 - p)
            self._weights = w
            self._weights.setflags(write=False)
        return self._weights

    def expectation(self, f: CubeFunction | np.ndarray) -> float:
        vals = f.values if isinstance(f, CubeFunction) else np.asarray(f)
        return float(np.dot(self.weights, vals))

    def __repr__(self):
        return f"ProductMeasure({self.ps.tolist()})"
