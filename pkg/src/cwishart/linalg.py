"""Dense linear algebra kernels, seeded Gaussian sampling, and matrix JSON IO.

Everything downstream (models, bounds, certificates, Monte Carlo checks) is
built on the functions in this module.  All values are immutable after
construction and every sampler is a pure function of its seed, so the whole
module is safe to use from concurrent workers without synchronization.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidMatrixError, NotPositiveDefiniteError

__all__ = [
    "SpdMatrix",
    "as_matrix",
    "spectral_norm",
    "frobenius_norm",
    "spd_sqrt",
    "check_seed",
    "splitmix64",
    "mix_seed",
    "generator",
    "sample_standard_gaussian_matrix",
    "matrix_to_dict",
    "matrix_from_dict",
    "dumps_matrix",
    "save_matrix",
    "load_matrix",
    "canonical_dumps",
]

# Symmetry and positivity tolerances for SPD inputs.
SYMMETRY_RTOL = 1e-12
SPD_EIG_TOL = 1e-10

# Spectral norm switches from a full symmetric eigensolve of the Gram matrix
# to power iteration once the smaller matrix dimension exceeds this.
_EIGH_DIM_CAP = 64
_POWER_TOL = 1e-12
_POWER_MAX_ITER = 10_000

_U64_MASK = 0xFFFFFFFFFFFFFFFF


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a 2-D float64 array, rejecting non-finite entries."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidMatrixError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidMatrixError(f"{name} must have positive dimensions, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrixError(f"{name} contains non-finite entries")
    return arr


def frobenius_norm(a) -> float:
    """Square root of the sum of squared entries, sqrt(Tr(A A^T))."""
    arr = as_matrix(a)
    return float(np.sqrt(np.sum(arr * arr)))


def spectral_norm(a) -> float:
    """Largest singular value of a rectangular matrix.

    Uses a symmetric eigensolve of the smaller Gram matrix when
    min(rows, cols) <= 64 and power iteration on A^T A beyond that
    (relative tolerance 1e-12, iteration cap 10000).
    """
    arr = as_matrix(a)
    rows, cols = arr.shape
    if min(rows, cols) <= _EIGH_DIM_CAP:
        gram = arr @ arr.T if rows <= cols else arr.T @ arr
        top = float(np.linalg.eigvalsh(gram)[-1])
        return math.sqrt(max(top, 0.0))
    return _power_spectral_norm(arr)


def _power_spectral_norm(arr: np.ndarray) -> float:
    # Iterate v <- A^T A v on the smaller side; deterministic seeded start.
    work = arr if arr.shape[0] >= arr.shape[1] else arr.T
    dim = work.shape[1]
    v = generator(0x5EED_CA11).standard_normal(dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(_POWER_MAX_ITER):
        w = work @ v
        v_next = work.T @ w
        norm_next = float(np.linalg.norm(v_next))
        if norm_next == 0.0:
            return 0.0
        lam_next = float(w @ w)
        v = v_next / norm_next
        if abs(lam_next - lam) <= _POWER_TOL * lam_next:
            lam = lam_next
            break
        lam = lam_next
    return math.sqrt(max(lam, 0.0))


@dataclass(frozen=True, eq=False)
class SpdMatrix:
    """Symmetric positive definite matrix with certified positivity.

    Construction validates symmetry (|e_ij - e_ji| <= 1e-12 * max(1, |e_ij|))
    and that the minimal eigenvalue exceeds the positivity tolerance.  The
    stored array is a read-only copy.
    """

    array: np.ndarray
    tolerance: float = SPD_EIG_TOL

    def __post_init__(self):
        arr = as_matrix(self.array, "SPD matrix")
        if arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"SPD matrix must be square, got {arr.shape}")
        skew = np.abs(arr - arr.T)
        if np.any(skew > SYMMETRY_RTOL * np.maximum(1.0, np.abs(arr))):
            raise InvalidMatrixError("SPD matrix is not symmetric within tolerance")
        arr = np.array(arr, order="C")
        arr.setflags(write=False)
        min_eig = float(np.linalg.eigvalsh(arr)[0])
        if min_eig <= self.tolerance:
            raise NotPositiveDefiniteError(min_eig, self.tolerance)
        object.__setattr__(self, "array", arr)

    @property
    def p(self) -> int:
        return self.array.shape[0]

    @classmethod
    def identity(cls, p: int) -> "SpdMatrix":
        return cls(np.eye(p))

    @classmethod
    def diagonal(cls, entries) -> "SpdMatrix":
        return cls(np.diag(np.asarray(entries, dtype=np.float64)))

    def is_identity(self, rtol: float = 1e-12) -> bool:
        return bool(np.allclose(self.array, np.eye(self.p), rtol=0.0, atol=rtol))


def spd_sqrt(s: SpdMatrix) -> SpdMatrix:
    """Symmetric positive definite square root via full eigendecomposition."""
    eigvals, eigvecs = np.linalg.eigh(s.array)
    min_eig = float(eigvals[0])
    if min_eig <= s.tolerance:
        raise NotPositiveDefiniteError(min_eig, s.tolerance)
    root = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
    root = 0.5 * (root + root.T)
    return SpdMatrix(root, tolerance=min(s.tolerance, math.sqrt(min_eig) / 2))


# ---------------------------------------------------------------------------
# Seeding and Gaussian sampling
# ---------------------------------------------------------------------------

def check_seed(seed: int) -> int:
    """Validate a 64-bit unsigned seed."""
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= _U64_MASK:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


def splitmix64(z: int) -> int:
    """One output of the splitmix64 mixing function (Steele et al.)."""
    z = (z + 0x9E3779B97F4A7C15) & _U64_MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64_MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64_MASK
    return z ^ (z >> 31)


def mix_seed(seed: int, tag: int) -> int:
    """Derive a disjoint substream seed from ``seed`` and a small ``tag``.

    Substream seeds are splitmix64(seed XOR splitmix64(tag + 1)); the mixing
    is the documented determinism contract for per-trial and per-stream seeds.
    """
    seed = check_seed(seed)
    if tag < 0:
        raise ValueError(f"stream tag must be nonnegative, got {tag}")
    return splitmix64(seed ^ splitmix64(int(tag) + 1))


def generator(seed: int) -> np.random.Generator:
    """PCG64 generator for ``seed``; the sample stream is a release-level contract."""
    return np.random.Generator(np.random.PCG64(check_seed(seed)))


def sample_standard_gaussian_matrix(p: int, n: int, seed: int) -> np.ndarray:
    """p x n matrix of i.i.d. standard normal draws, deterministic given seed."""
    if p < 1 or n < 1:
        raise DimensionError(f"matrix dimensions must be positive, got {p} x {n}")
    return generator(seed).standard_normal((p, n))


# ---------------------------------------------------------------------------
# Matrix file format
# ---------------------------------------------------------------------------

def matrix_to_dict(a) -> dict:
    """Row-major JSON object {"rows", "cols", "entries"} for a matrix."""
    arr = as_matrix(a)
    return {
        "rows": int(arr.shape[0]),
        "cols": int(arr.shape[1]),
        "entries": [float(v) for v in arr.ravel(order="C")],
    }


def matrix_from_dict(d: dict) -> np.ndarray:
    """Parse the {"rows", "cols", "entries"} matrix object."""
    try:
        rows, cols = int(d["rows"]), int(d["cols"])
        entries = d["entries"]
    except (KeyError, TypeError) as exc:
        raise InvalidMatrixError(f"malformed matrix object: {exc}") from exc
    if rows < 1 or cols < 1:
        raise InvalidMatrixError(f"matrix dimensions must be positive, got {rows} x {cols}")
    arr = np.asarray(entries, dtype=np.float64)
    if arr.ndim != 1 or arr.size != rows * cols:
        raise InvalidMatrixError(
            f"entries length {arr.size} does not equal rows*cols = {rows * cols}"
        )
    return as_matrix(arr.reshape(rows, cols))


def dumps_matrix(a) -> str:
    """Serialize a matrix with all floats at 17 significant digits."""
    arr = as_matrix(a)
    entries = ", ".join(f"{float(v):.17g}" for v in arr.ravel(order="C"))
    return (
        f'{{"rows": {arr.shape[0]}, "cols": {arr.shape[1]}, '
        f'"entries": [{entries}]}}'
    )


def save_matrix(path, a) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_matrix(a))
        fh.write("\n")


def load_matrix(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        return matrix_from_dict(json.load(fh))


def canonical_dumps(obj) -> str:
    """Deterministic JSON text: sorted keys, fixed separators."""
    return json.dumps(obj, sort_keys=True, separators=(", ", ": "))
