"""Exact generation of d-dimensional fractional Brownian motion on a uniform grid.

A path is built by coloring an array of i.i.d. standard normals ("driving
noise") with a factor of the fractional-Gaussian-noise covariance and
cumulatively summing the resulting increments.  Two exact-in-law backends:

* ``cholesky`` -- dense lower Cholesky factor of the n x n Toeplitz
  increment covariance; works for any n; the driving noise has shape (n, d).
* ``circulant`` -- FFT application of the symmetric square root of the
  2n x 2n nonnegative-definite circulant embedding (Davies-Harte family);
  requires n to be a power of two; the driving noise has shape (2n, d),
  the embedding's full set of Gaussian degrees of freedom.

Both backends implement the same distributional contract: when the noise is
standard normal, each coordinate of the increment vector is exact fGn, so
the cumulative sums are exact fBm marginals on the grid.  The map from
noise to path is deterministic and linear, which is what the pCN sampler
relies on.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky as _dense_cholesky
from scipy.linalg import toeplitz as _toeplitz

__all__ = [
    "HurstModel",
    "TimeGrid",
    "Path",
    "GenerationError",
    "fbm_covariance",
    "fgn_autocovariance",
    "fgn_covariance_matrix",
    "get_coloring",
    "noise_to_path",
    "sample_fbm",
    "sample_fbm_batch",
    "iter_fbm_batches",
]

# Dense Cholesky is the fallback when the circulant embedding is indefinite;
# beyond this n the O(n^3) cost is considered a configuration error.
MAX_DENSE_N = 8192

# Relative magnitude below which a negative circulant eigenvalue is treated
# as roundoff and clipped; anything larger triggers the dense fallback.
NEG_EIG_REL_TOL = 1e-10

# Batch generation draws noise in fixed-size chunks with per-chunk child
# seeds, so results are independent of how work is distributed.
BATCH_CHUNK = 1024


class GenerationError(RuntimeError):
    """Raised when no exact backend is available for the requested grid."""


@dataclass(frozen=True)
class HurstModel:
    """Hurst index H in (0,1) and spatial dimension d >= 1."""

    H: float
    d: int

    def __post_init__(self):
        if not 0.0 < self.H < 1.0:
            raise ValueError(f"Hurst index must lie in (0,1), got H={self.H}")
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got d={self.d}")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of n steps on [0, T]; grid points are k*dt, k=0..n."""

    T: float
    n: int

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError(f"horizon must be positive, got T={self.T}")
        if self.n < 1:
            raise ValueError(f"step count must be >= 1, got n={self.n}")

    @property
    def dt(self) -> float:
        return self.T / self.n

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.dt


@dataclass
class Path:
    """Discretized d-dimensional trajectory; values has shape (n+1, d), row 0 is the origin."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.grid.n + 1:
            raise ValueError(
                f"values must have shape (n+1, d) = ({self.grid.n + 1}, d), "
                f"got {self.values.shape}"
            )
        if np.any(self.values[0] != 0.0):
            raise ValueError("path must start at the origin")

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def left_values(self) -> np.ndarray:
        """Values at the left endpoints t_0 .. t_{n-1}, the quadrature nodes."""
        return self.values[:-1]


def fbm_covariance(s, t, H: float):
    """Covariance (t^2H + s^2H - |t-s|^2H) / 2 of one fBm coordinate.

    Accepts scalars or arrays; symmetric in (s, t), equals t^2H on the
    diagonal, and reduces to min(s, t) at H = 1/2.
    """
    if not 0.0 < H < 1.0:
        raise ValueError(f"Hurst index must lie in (0,1), got H={H}")
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise ValueError("times must be nonnegative")
    out = 0.5 * (t ** (2 * H) + s ** (2 * H) - np.abs(t - s) ** (2 * H))
    return out if out.ndim else float(out)


def fgn_autocovariance(k, H: float, dt: float):
    """Autocovariance at lag k of fGn increments on a grid of step dt.

    gamma(k) = (dt^2H / 2) (|k+1|^2H + |k-1|^2H - 2|k|^2H); gamma(0) = dt^2H.
    """
    if not 0.0 < H < 1.0:
        raise ValueError(f"Hurst index must lie in (0,1), got H={H}")
    if dt <= 0:
        raise ValueError(f"step must be positive, got dt={dt}")
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ValueError("lag must be nonnegative")
    e = 2 * H
    out = 0.5 * dt**e * (np.abs(k + 1) ** e + np.abs(k - 1) ** e - 2 * np.abs(k) ** e)
    return out if out.ndim else float(out)


def fgn_covariance_matrix(H: float, n: int, dt: float) -> np.ndarray:
    """The n x n Toeplitz covariance of the increment vector."""
    return _toeplitz(fgn_autocovariance(np.arange(n), H, dt))


# ----------------------------------------------------------------------
# Coloring backends: linear maps noise -> fGn increments.
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class CholeskyColoring:
    """Dense lower-triangular factor L with L L^T = Toeplitz fGn covariance."""

    H: float
    n: int
    dt: float
    factor: np.ndarray = field(repr=False)

    kind = "cholesky"

    @property
    def noise_dim(self) -> int:
        return self.n

    def apply(self, xi: np.ndarray) -> np.ndarray:
        """Color noise of shape (n, d) into fGn increments of shape (n, d)."""
        return self.factor @ xi

    def apply_batch(self, xi: np.ndarray) -> np.ndarray:
        """Color a batch of shape (B, n, d) into increments (B, n, d)."""
        b, n, d = xi.shape
        flat = xi.transpose(1, 0, 2).reshape(n, b * d)
        return (self.factor @ flat).reshape(n, b, d).transpose(1, 0, 2)


@dataclass(frozen=True)
class CirculantColoring:
    """Symmetric square root of the 2n circulant embedding, applied by FFT."""

    H: float
    n: int
    dt: float
    sqrt_eigs: np.ndarray = field(repr=False)

    kind = "circulant"

    @property
    def noise_dim(self) -> int:
        return 2 * self.n

    def apply(self, xi: np.ndarray) -> np.ndarray:
        """Color noise of shape (2n, d) into fGn increments of shape (n, d)."""
        spectrum = np.fft.fft(xi, axis=0) * self.sqrt_eigs[:, None]
        return np.fft.ifft(spectrum, axis=0).real[: self.n]

    def apply_batch(self, xi: np.ndarray) -> np.ndarray:
        spectrum = np.fft.fft(xi, axis=1) * self.sqrt_eigs[None, :, None]
        return np.fft.ifft(spectrum, axis=1).real[:, : self.n]


_coloring_cache: dict = {}
_cache_lock = threading.Lock()


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _build_cholesky(H: float, n: int, dt: float) -> CholeskyColoring:
    if n > MAX_DENSE_N:
        raise GenerationError(
            f"dense Cholesky refused for n={n} > {MAX_DENSE_N} "
            "(circulant embedding unavailable or indefinite)"
        )
    factor = _dense_cholesky(fgn_covariance_matrix(H, n, dt), lower=True)
    return CholeskyColoring(H, n, dt, factor)


def _build_circulant(H: float, n: int, dt: float) -> CirculantColoring | None:
    """Circulant square root, or None if the embedding is indefinite."""
    gamma = fgn_autocovariance(np.arange(n + 1), H, dt)
    first_row = np.concatenate([gamma, gamma[-2:0:-1]])  # length 2n, even
    eigs = np.fft.fft(first_row).real
    floor = -NEG_EIG_REL_TOL * eigs.max()
    if eigs.min() < floor:
        return None
    # remaining negatives are roundoff
    np.clip(eigs, 0.0, None, out=eigs)
    return CirculantColoring(H, n, dt, np.sqrt(eigs))


def get_coloring(H: float, n: int, dt: float, backend: str = "auto"):
    """Coloring for (H, n, dt), cached; safe for concurrent readers.

    backend: "auto" picks circulant for power-of-two n >= 512 and dense
    Cholesky otherwise; "cholesky" and "circulant" force a backend.  An
    indefinite embedding falls back to Cholesky (auto) or raises (forced).
    """
    if backend not in ("auto", "cholesky", "circulant"):
        raise ValueError(f"unknown backend {backend!r}")
    key = (float(H), int(n), float(dt), backend)
    got = _coloring_cache.get(key)
    if got is not None:
        return got
    with _cache_lock:
        got = _coloring_cache.get(key)
        if got is not None:
            return got
        if backend == "cholesky":
            built = _build_cholesky(H, n, dt)
        elif backend == "circulant":
            if not _is_pow2(n):
                raise GenerationError(f"circulant backend requires n a power of two, got n={n}")
            built = _build_circulant(H, n, dt)
            if built is None:
                raise GenerationError(
                    f"circulant embedding indefinite for H={H}, n={n}, dt={dt}"
                )
        else:
            built = None
            if n >= 512 and _is_pow2(n):
                built = _build_circulant(H, n, dt)
            if built is None:
                built = _build_cholesky(H, n, dt)
        _coloring_cache[key] = built
        return built


def _path_from_increments(grid: TimeGrid, increments: np.ndarray) -> Path:
    values = np.zeros((grid.n + 1, increments.shape[1]))
    np.cumsum(increments, axis=0, out=values[1:])
    return Path(grid, values)


def noise_to_path(
    xi: np.ndarray, model: HurstModel, grid: TimeGrid, backend: str = "auto"
) -> Path:
    """Deterministically color driving noise into a d-dimensional fBm path.

    xi must have shape (noise_dim, d) with noise_dim given by the backend
    (n for Cholesky, 2n for circulant).  Linear in xi; all-zero noise maps
    to the identically-zero path.
    """
    coloring = get_coloring(model.H, grid.n, grid.dt, backend)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (coloring.noise_dim, model.d):
        raise ValueError(
            f"noise shape {xi.shape} does not match "
            f"({coloring.noise_dim}, {model.d}) for backend {coloring.kind!r}"
        )
    return _path_from_increments(grid, coloring.apply(xi))


def sample_fbm(model: HurstModel, grid: TimeGrid, seed: int, backend: str = "auto") -> Path:
    """One fBm path from a seeded generator; identical seeds give identical paths."""
    coloring = get_coloring(model.H, grid.n, grid.dt, backend)
    rng = np.random.Generator(np.random.PCG64(seed))
    xi = rng.standard_normal((coloring.noise_dim, model.d))
    return _path_from_increments(grid, coloring.apply(xi))


def iter_fbm_batches(
    model: HurstModel,
    grid: TimeGrid,
    count: int,
    seed: int,
    backend: str = "auto",
    chunk: int = BATCH_CHUNK,
):
    """Yield (start_index, values) blocks of fBm paths, values (b, n+1, d).

    Noise for chunk c is drawn from the child seed mix64(seed, c), so the
    stream of paths is a pure function of (seed, chunk) and a sweep can be
    replayed or parallelized without changing any sample.
    """
    from .seeds import rng_for

    coloring = get_coloring(model.H, grid.n, grid.dt, backend)
    done = 0
    chunk_index = 0
    while done < count:
        b = min(chunk, count - done)
        rng = rng_for(seed, chunk_index)
        xi = rng.standard_normal((b, coloring.noise_dim, model.d))
        increments = coloring.apply_batch(xi)
        values = np.zeros((b, grid.n + 1, model.d))
        np.cumsum(increments, axis=1, out=values[:, 1:])
        yield done, values
        done += b
        chunk_index += 1


def sample_fbm_batch(
    model: HurstModel,
    grid: TimeGrid,
    count: int,
    seed: int,
    backend: str = "auto",
) -> np.ndarray:
    """All path values stacked into one array of shape (count, n+1, d)."""
    out = np.empty((count, grid.n + 1, model.d))
    for start, values in iter_fbm_batches(model, grid, count, seed, backend):
        out[start : start + values.shape[0]] = values
    return out
