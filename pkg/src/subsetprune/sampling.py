"""Seeded sampling of every random object used here: normal tensors,
normally-scaled normal (NSN) ensembles, half-normal scalars, uniforms.

Determinism contract
--------------------
All draws are pure functions of a :class:`SeedSpec`. The byte stream comes
from the counter-based Philox generator keyed by ``(master_seed, stream_id)``;
uniforms are 53-bit integers mapped into the open interval (0, 1); normals are
produced by the Box-Muller transform on consecutive uniform pairs. Hence
``(seed, stream, draw index)`` fully determines every value, independent of
how work is scheduled. Distinct stream ids give independent streams; a single
stream must be consumed sequentially.

Substreams for parallel fan-out are derived with :meth:`SeedSpec.substream`,
a splitmix64-style mix of ``(stream_id, index)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .tensors import FeatureMap, Tensor4

__all__ = [
    "SeedSpec",
    "NsnEnsemble",
    "standard_normals",
    "sample_uniform",
    "sample_uniform_map",
    "sample_normal_tensor",
    "sample_nsn",
    "sample_half_normal",
]

_MASK64 = (1 << 64) - 1


def _mix64(a: int, b: int) -> int:
    # splitmix64 finaliser over a*phi + b; enough avalanche for substream ids
    x = (a * 0x9E3779B97F4A7C15 + b) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


@dataclass(frozen=True)
class SeedSpec:
    """Identifies one deterministic random stream."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "master_seed", int(self.master_seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    def substream(self, index: int) -> "SeedSpec":
        """Pure derived stream; distinct indices give independent streams."""
        return SeedSpec(self.master_seed, _mix64(self.stream_id, int(index) & _MASK64))


def _generator(seed: SeedSpec) -> np.random.Generator:
    key = np.array([seed.master_seed, seed.stream_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _uniform_open01(rng: np.random.Generator, n: int) -> np.ndarray:
    bits = rng.integers(0, 1 << 53, size=int(n), dtype=np.uint64)
    return (bits.astype(np.float64) + 0.5) * (2.0**-53)


def _normals(rng: np.random.Generator, n: int) -> np.ndarray:
    """Box-Muller on consecutive uniform pairs; draw i uses uniforms 2i, 2i+1."""
    if n == 0:
        return np.empty(0)
    pairs = (n + 1) // 2
    u1 = _uniform_open01(rng, pairs)
    u2 = _uniform_open01(rng, pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    theta = (2.0 * np.pi) * u2
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(theta)
    out[1::2] = radius * np.sin(theta)
    return out[:n]


def standard_normals(n: int, seed: SeedSpec) -> np.ndarray:
    """``n`` i.i.d. N(0, 1) draws from the given stream."""
    if n < 0:
        raise ParameterError("n must be nonnegative")
    return _normals(_generator(seed), n)


def sample_uniform(n: int, seed: SeedSpec, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    """``n`` i.i.d. uniforms on the open interval (low, high)."""
    if n < 0:
        raise ParameterError("n must be nonnegative")
    if not high > low:
        raise ParameterError("need high > low")
    u = _uniform_open01(_generator(seed), n)
    return low + (high - low) * u


def sample_uniform_map(
    height: int, width: int, channels: int, seed: SeedSpec, magnitude: float = 1.0
) -> FeatureMap:
    """Uniform probe input on ``(-magnitude, magnitude)^(height x width x channels)``."""
    if min(height, width, channels) < 1:
        raise ShapeError("all dimensions must be positive")
    vals = sample_uniform(height * width * channels, seed, -magnitude, magnitude)
    return FeatureMap(vals.reshape(height, width, channels))


def sample_normal_tensor(shape: tuple[int, int, int, int], seed: SeedSpec) -> Tensor4:
    """Kernel tensor with i.i.d. N(0, 1) entries, filled in row-major order."""
    if len(shape) != 4:
        raise ShapeError(f"expected 4 dimensions, got {len(shape)}")
    if min(shape) < 1:
        raise ShapeError(f"all dimensions must be positive, got {shape}")
    total = int(np.prod(shape))
    return Tensor4(standard_normals(total, seed).reshape(shape))


@dataclass(frozen=True, eq=False)
class NsnEnsemble:
    """``n`` sampled d-dimensional NSN vectors with their generating parts retained.

    Row ``i`` of :attr:`vectors` is ``scalars[i] * directions[i, :]`` exactly as
    stored, where the scalar and the d direction entries are i.i.d. standard
    normals. Keeping the parts lets diagnostics condition on the scalars.
    """

    scalars: np.ndarray  # (n,)
    directions: np.ndarray  # (n, d)
    vectors: np.ndarray  # (n, d)

    def __post_init__(self) -> None:
        scalars = np.ascontiguousarray(np.asarray(self.scalars, dtype=np.float64))
        directions = np.ascontiguousarray(np.asarray(self.directions, dtype=np.float64))
        vectors = np.ascontiguousarray(np.asarray(self.vectors, dtype=np.float64))
        if scalars.ndim != 1 or directions.ndim != 2 or vectors.ndim != 2:
            raise ShapeError("scalars must be 1-D; directions and vectors 2-D")
        if directions.shape != vectors.shape or directions.shape[0] != scalars.shape[0]:
            raise ShapeError("inconsistent ensemble shapes")
        if not np.array_equal(vectors, scalars[:, None] * directions):
            raise ValueError("vectors must equal scalars[:, None] * directions exactly")
        object.__setattr__(self, "scalars", scalars)
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "vectors", vectors)

    @classmethod
    def from_parts(cls, scalars, directions) -> "NsnEnsemble":
        scalars = np.asarray(scalars, dtype=np.float64)
        directions = np.asarray(directions, dtype=np.float64)
        if directions.ndim == 1:
            directions = directions[:, None]
        return cls(scalars, directions, scalars[:, None] * directions)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def take(self, count: int) -> "NsnEnsemble":
        """Prefix sub-ensemble; used for paired sweeps over growing n."""
        if not 0 <= count <= self.n:
            raise ParameterError(f"count must be in [0, {self.n}]")
        return NsnEnsemble(
            self.scalars[:count], self.directions[:count], self.vectors[:count]
        )


def sample_nsn(n: int, d: int, seed: SeedSpec) -> NsnEnsemble:
    """``n`` i.i.d. d-dimensional NSN vectors: fresh scalar and directions per vector."""
    if n < 1 or d < 1:
        raise ParameterError("n and d must be >= 1")
    rng = _generator(seed)
    scalars = _normals(rng, n)
    directions = _normals(rng, n * d).reshape(n, d)
    return NsnEnsemble.from_parts(scalars, directions)


def sample_half_normal(n: int, seed: SeedSpec) -> np.ndarray:
    """``n`` draws of |N(0, 1)|."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    return np.abs(standard_normals(n, seed))
