"""Bounded orthonormal systems tabulated exactly on their natural grids.

Walsh and Fourier character tables on n points carry exact (or
round-off-exact) orthonormality, so norm identities downstream hold without
quadrature error. All norms in the package are taken with respect to the
uniform probability weights on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coset import fwht
from .errors import ConfigError


@dataclass(eq=False)
class OrthonormalSystem:
    """n functions tabulated on m0 sample points with uniform weights."""

    values: np.ndarray  # (n, m0) complex amplitudes
    linf_bound: float = 1.0
    label: str = ""
    group_xor: bool = False  # pointwise products follow the index-XOR law

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.ndim != 2:
            raise ValueError("values must be an (n, m0) table")
        if self.linf_bound < 1.0:
            raise ValueError("the sup-norm bound of an orthonormal system is at least 1")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m0(self) -> int:
        return self.values.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.m0, 1.0 / self.m0)

    def synth(self, coeffs: np.ndarray) -> np.ndarray:
        """Function values of sum_i coeffs[i] * phi_i; batched over leading axes."""
        return np.asarray(coeffs, dtype=np.complex128) @ self.values

    def coeffs(self, y: np.ndarray) -> np.ndarray:
        """Weighted inner products <phi_i, y> for all i; batched over leading axes."""
        y = np.asarray(y, dtype=np.complex128)
        return (y / self.m0) @ self.values.conj().T

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        """<f, g> under the uniform weights, conjugate-linear in f."""
        return complex(np.sum(np.conj(f) * g) / self.m0)


@dataclass
class SpanElement:
    """Coefficient vector restricted to a support set of indices."""

    coefficients: np.ndarray  # (n,) complex
    support: np.ndarray | None = None  # indices; None means full support

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=np.complex128)
        if self.support is not None:
            self.support = np.asarray(sorted(int(i) for i in self.support))
            off = np.ones(self.coefficients.size, dtype=bool)
            off[self.support] = False
            if np.any(self.coefficients[off] != 0):
                raise ValueError("coefficients must vanish off the declared support")

    def synth(self, sys: OrthonormalSystem) -> np.ndarray:
        return sys.synth(self.coefficients)


def gen_walsh(N: int) -> OrthonormalSystem:
    """The 2^N x 2^N Walsh table in natural (Hadamard) order.

    Row j at point x is (-1)^popcount(j & x); rows multiply by index XOR.
    Memory grows as 4^N, so N above ~12 is impractical even though allowed.
    """
    if not 1 <= N <= 20:
        raise ConfigError("walsh order N must be between 1 and 20")
    h = np.ones((1, 1), dtype=np.int8)
    for _ in range(N):
        h = np.block([[h, h], [h, -h]])
    return OrthonormalSystem(h.astype(np.complex128), 1.0, f"walsh:{N}", group_xor=True)


def gen_fourier(n: int) -> OrthonormalSystem:
    """The n discrete Fourier characters on the n-point cyclic grid."""
    if not 2 <= n <= 2**20:
        raise ConfigError("fourier size n must be between 2 and 2^20")
    j = np.arange(n)
    values = np.exp((2j * np.pi / n) * np.outer(j, j))
    return OrthonormalSystem(values, 1.0, f"fourier:{n}")


@dataclass
class ValidationReport:
    max_gram_deviation: float
    max_abs_value: float
    gram_ok: bool
    linf_ok: bool
    passed: bool
    tol: float

    def to_dict(self) -> dict:
        return {
            "max_gram_deviation": self.max_gram_deviation,
            "max_abs_value": self.max_abs_value,
            "gram_ok": self.gram_ok,
            "linf_ok": self.linf_ok,
            "passed": self.passed,
            "tol": self.tol,
        }


def validate_system(sys: OrthonormalSystem, tol: float) -> ValidationReport:
    """Orthonormality and boundedness report; degenerate inputs fail, never raise."""
    if tol <= 0:
        raise ConfigError("tolerance must be positive")
    v = sys.values
    gram = (v.conj() / sys.m0) @ v.T
    dev = float(np.abs(gram - np.eye(sys.n)).max())
    mx = float(np.abs(v).max())
    gram_ok = dev <= tol
    linf_ok = mx <= sys.linf_bound + tol
    return ValidationReport(dev, mx, gram_ok, linf_ok, gram_ok and linf_ok, tol)


def walsh_gram_exact(sys: OrthonormalSystem) -> bool:
    """Exact integer check that the Gram matrix is the identity.

    Transforming each row must give m0 times the matching unit vector; this
    is the full Gram row in exact arithmetic.
    """
    r = sys.values.real
    table = r.astype(np.int64)
    if np.abs(sys.values.imag).max(initial=0.0) != 0.0 or not np.array_equal(table, r):
        return False
    t = fwht(table)
    return np.array_equal(t, sys.m0 * np.eye(sys.n, dtype=np.int64))


def walsh_product_law_exact(sys: OrthonormalSystem) -> bool:
    """Exact check of row_j * row_k == row_{j XOR k} for all index pairs.

    Rows are packed to sign bits so each pair check is a byte-wise XOR.
    """
    bits = np.packbits(sys.values.real < 0, axis=1)
    idx = np.arange(sys.n)
    for j in range(sys.n):
        if not np.array_equal(bits[j] ^ bits, bits[idx ^ j]):
            return False
    return True


def save_system(sys: OrthonormalSystem, path) -> None:
    """Write a plain-text table: header `n m0 L`, then interleaved re/im rows."""
    flat = np.empty((sys.n, 2 * sys.m0))
    flat[:, 0::2] = sys.values.real
    flat[:, 1::2] = sys.values.imag
    np.savetxt(path, flat, fmt="%.17g", header=f"{sys.n} {sys.m0} {sys.linf_bound!r}")


def load_system(path, label: str = "", group_xor: bool = False) -> OrthonormalSystem:
    path = Path(path)
    with path.open() as fh:
        head = fh.readline().lstrip("#").split()
    if len(head) != 3:
        raise ConfigError(f"malformed system header in {path}")
    n, m0, bound = int(head[0]), int(head[1]), float(head[2])
    flat = np.loadtxt(path, ndmin=2)
    if flat.shape != (n, 2 * m0):
        raise ConfigError(f"system table shape {flat.shape} does not match header")
    values = flat[:, 0::2] + 1j * flat[:, 1::2]
    return OrthonormalSystem(values, bound, label or path.stem, group_xor)


def parse_system_spec(spec: str) -> OrthonormalSystem:
    """Build a system from a CLI spec: walsh:N, fourier:n, or file:PATH."""
    kind, _, arg = spec.partition(":")
    if kind == "walsh":
        return gen_walsh(int(arg))
    if kind == "fourier":
        return gen_fourier(int(arg))
    if kind == "file":
        return load_system(arg)
    raise ConfigError(f"unknown system spec {spec!r}; use walsh:N, fourier:n or file:PATH")
