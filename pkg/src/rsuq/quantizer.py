"""Rejection-sampled universal quantization with error uniform over a ball.

The encoder redraws shared dithers until the reconstruction lands within
radius r of the input, then transmits the stopping index K and the lattice
point M.  With the cell scaled by gamma = r / packing_radius the ball fits
inside the scaled Voronoi cell, the acceptance probability per draw equals
the packing density of the lattice, and the error is exactly uniform over
the r-ball and independent of the input.

Batched entry points derive one stream seed per row (derive_seed mixed
with the row index), so batch results are reproducible and independent of
batch splitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dither import derive_seeds, fold_rows, gathered_uniforms, stream_uniforms
from .lattices import Lattice, LatticePoint, packing_density


class RejectionCapError(RuntimeError):
    """The safety cap on rejection rounds was hit (mis-configured cap)."""


@dataclass
class RsuqConfig:
    """Ball-error quantizer configuration.

    gamma is pinned to r / packing_radius so that the r-ball is inscribed
    in the scaled Voronoi cell; the acceptance probability of every dither
    is then the packing density of the lattice.
    """

    lat: Lattice
    r: float
    seed: int = 0
    max_iters: int | None = None

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("ball radius must be positive")
        if self.max_iters is None:
            # Geometric tail: failure probability below e**-50.
            self.max_iters = int(math.ceil(50.0 / packing_density(self.lat)))
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")

    @property
    def gamma(self) -> float:
        return self.r / self.lat.packing_radius

    @property
    def acceptance_probability(self) -> float:
        return packing_density(self.lat)


@dataclass
class Description:
    """Compressible output of an encode: stopping index K and lattice point M."""

    K: int
    M: LatticePoint


def _reject_rows(lat, gamma, X_over_gamma, X, r2, seeds, reserved, max_iters,
                 accept=None):
    """Shared rejection loop over rows; returns stopping indices and coords.

    Acceptance is squared-norm against r2 (scalar or per-row), or an
    arbitrary membership predicate on the error rows when `accept` is given.
    """
    N, n = X.shape
    K = np.zeros(N, dtype=np.int64)
    J = np.zeros((N, n), dtype=np.int64)
    if N == 0:
        return K, J
    r2 = np.broadcast_to(np.asarray(r2, dtype=np.float64), (N,))
    active = np.arange(N)
    for t in range(max_iters):
        first = reserved + t * n
        u = stream_uniforms(seeds[active], first, n)
        v = fold_rows(lat, u)
        j = lat.nearest_rows(X_over_gamma[active] - v)
        y = gamma * (lat.embed_rows(j) + v)
        err = y - X[active]
        if accept is None:
            ok = np.einsum("ij,ij->i", err, err) <= r2[active]
        else:
            ok = accept(err, active)
        hit = active[ok]
        K[hit] = t + 1
        J[hit] = j[ok]
        active = active[~ok]
        if active.size == 0:
            return K, J
    raise RejectionCapError(
        f"no acceptance within {max_iters} rounds for {active.size} input(s); "
        "raise max_iters")


def _dithers_at(lat, seeds, draws, reserved):
    """Unscaled cell dithers at per-row draw indices (vectorized jump)."""
    n = lat.n
    draws = np.asarray(draws, dtype=np.uint64)
    idx = np.uint64(reserved) + draws[:, None] * np.uint64(n) + np.arange(n, dtype=np.uint64)[None, :]
    return fold_rows(lat, gathered_uniforms(seeds, idx))


def rsuq_encode(cfg: RsuqConfig, x) -> Description:
    """Encode one vector with a fresh dither stream from cfg.seed."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cfg.lat.n,):
        raise ValueError(f"expected vector of dimension {cfg.lat.n}, got shape {x.shape}")
    seeds = np.asarray([cfg.seed], dtype=np.uint64)
    X = x[None, :]
    K, J = _reject_rows(cfg.lat, cfg.gamma, X / cfg.gamma, X, cfg.r ** 2,
                        seeds, 0, cfg.max_iters)
    j = J[0]
    return Description(K=int(K[0]),
                       M=LatticePoint(coords=j, embedding=cfg.gamma * cfg.lat.embed_rows(J)[0]))


def rsuq_decode(cfg: RsuqConfig, d: Description):
    """Reconstruct M + V_K, bit-identical to the encoder's accepted value.

    A seed/lattice/radius mismatch with the encoder is undetectable by
    construction; supplying the encoding configuration is the contract.
    """
    if d.K < 1:
        raise ValueError("stopping index must be >= 1")
    seeds = np.asarray([cfg.seed], dtype=np.uint64)
    v = _dithers_at(cfg.lat, seeds, [d.K - 1], 0)
    J = np.asarray(d.M.coords, dtype=np.int64)[None, :]
    return (cfg.gamma * (cfg.lat.embed_rows(J) + v))[0]


def error_sample(cfg: RsuqConfig, x):
    """decode(encode(x)) - x; distributed uniformly over the r-ball."""
    x = np.asarray(x, dtype=np.float64)
    return rsuq_decode(cfg, rsuq_encode(cfg, x)) - x


def rsuq_encode_general(lat: Lattice, gamma: float, seed: int, x, member,
                        max_iters: int) -> Description:
    """Rejection quantizer for an arbitrary target subset of the scaled cell.

    `member(z) -> bool` decides acceptance of the error vector z.  Only the
    ball instantiation is first-class; this hook covers other subsets.
    """
    x = np.asarray(x, dtype=np.float64)
    seeds = np.asarray([seed], dtype=np.uint64)
    X = x[None, :]

    def accept(err, active):
        return np.asarray([bool(member(e)) for e in err])

    K, J = _reject_rows(lat, gamma, X / gamma, X, 0.0, seeds, 0, max_iters,
                        accept=accept)
    j = J[0]
    return Description(K=int(K[0]),
                       M=LatticePoint(coords=j, embedding=gamma * lat.embed_rows(J)[0]))


# -- batched drivers ---------------------------------------------------------


def batch_seeds(seed: int, count: int):
    """Per-row stream seeds for a batch (row i uses derive_seed(seed, i))."""
    return derive_seeds(seed, np.arange(count, dtype=np.uint64))


def encode_batch(cfg: RsuqConfig, X):
    """Encode rows of X with per-row derived streams; returns (K, J, Y).

    K are stopping indices, J integer coordinates of the lattice points,
    Y the reconstructions accepted by the encoder.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != cfg.lat.n:
        raise ValueError(f"expected dimension {cfg.lat.n}, got {X.shape[1]}")
    seeds = batch_seeds(cfg.seed, X.shape[0])
    K, J = _reject_rows(cfg.lat, cfg.gamma, X / cfg.gamma, X, cfg.r ** 2,
                        seeds, 0, cfg.max_iters)
    v = _dithers_at(cfg.lat, seeds, K - 1, 0)
    Y = cfg.gamma * (cfg.lat.embed_rows(J) + v)
    return K, J, Y


def decode_batch(cfg: RsuqConfig, K, J):
    """Reconstructions for a batch of descriptions (inverse of encode_batch)."""
    K = np.asarray(K, dtype=np.int64)
    J = np.atleast_2d(np.asarray(J, dtype=np.int64))
    seeds = batch_seeds(cfg.seed, K.shape[0])
    v = _dithers_at(cfg.lat, seeds, K - 1, 0)
    return cfg.gamma * (cfg.lat.embed_rows(J) + v)
