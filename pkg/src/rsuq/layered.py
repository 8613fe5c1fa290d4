"""Layered rejection-sampled quantization for arbitrary continuous error laws.

A continuous density f is a mixture of uniform laws over its superlevel
sets.  The encoder first draws a level T from the density t -> volume of
the superlevel set at t (consuming a fixed reserved prefix of generator
words, before any dither), then runs the ball/set rejection quantizer for
that level set against the Voronoi cell scaled by beta(T).  The decoder
regenerates T and the accepted dither from the shared stream, so
reconstructions are bit-identical.

The built-in model is the standard Gaussian: its level sets are balls of
radius sqrt(V) with V chi-square distributed on n + 2 degrees of freedom,
and the minimal valid scale is beta = sqrt(V) / packing_radius, which
makes the per-dither acceptance probability exactly the packing density.
Custom models supply sample_level / in_level_set / beta; checking that the
level sets are bounded and integrable is the caller's obligation.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaincinv

from .dither import stream_uniforms
from .lattices import Lattice, LatticePoint, log2_ball_volume, packing_density
from .quantizer import Description, _dithers_at, _reject_rows, batch_seeds


class NoiseModel:
    """Continuous error law exposed through its superlevel-set geometry.

    Subclasses define sample_level(u) mapping `level_words` uniforms to a
    density level t, the membership predicate in_level_set(z, t), and the
    cell scale beta(t) with superlevel(t) contained in beta(t) * Voronoi.
    level_log_volume(t) (log2 of the level-set volume) is optional and only
    used by diagnostics.  Models whose level sets are centered balls set
    level_ball = True and provide level_radius(t); those get the fast
    vectorized encode path.
    """

    n: int
    level_words = 1
    level_ball = False

    def sample_level(self, u):
        raise NotImplementedError

    def in_level_set(self, z, t) -> bool:
        raise NotImplementedError

    def beta(self, t) -> float:
        raise NotImplementedError

    def level_radius(self, t) -> float:
        raise NotImplementedError

    def level_log_volume(self, t) -> float:
        raise NotImplementedError


class GaussianNoise(NoiseModel):
    """Standard n-dimensional Gaussian error, simulated exactly.

    Levels are parameterized internally by v with t = (2 pi)^(-n/2) e^(-v/2);
    the superlevel set at t is the ball of radius sqrt(v), and v follows the
    chi-square law with n + 2 degrees of freedom.  The level draw inverts
    the chi-square CDF on one stream uniform, so it is a pure function of
    the stream and the decoder regenerates it bit-exactly.
    """

    level_ball = True

    def __init__(self, n: int, lat: Lattice):
        if lat.n != n:
            raise ValueError(f"lattice dimension {lat.n} != noise dimension {n}")
        self.n = n
        self.lat = lat
        self._log_t_offset = -(n / 2.0) * math.log(2.0 * math.pi)

    def _v_of_t(self, t):
        return -2.0 * (np.log(t) - self._log_t_offset)

    def _t_of_v(self, v):
        return np.exp(-0.5 * v + self._log_t_offset)

    def sample_level(self, u):
        v = 2.0 * gammaincinv((self.n + 2) / 2.0, np.asarray(u)[..., 0])
        return self._t_of_v(v)

    def in_level_set(self, z, t) -> bool:
        z = np.asarray(z, dtype=np.float64)
        return bool(float(z @ z) <= self._v_of_t(t))

    def beta(self, t):
        return np.sqrt(self._v_of_t(t)) / self.lat.packing_radius

    def level_radius(self, t):
        return np.sqrt(self._v_of_t(t))

    def level_log_volume(self, t):
        return (self.n / 2.0) * np.log2(self._v_of_t(t)) + log2_ball_volume(self.n)


def acceptance_probability_given_level(noise: NoiseModel, lat: Lattice, t) -> float:
    """Per-dither acceptance probability conditioned on the drawn level."""
    log2_cell = noise.n * math.log2(float(noise.beta(t))) + math.log2(lat.det)
    if noise.level_ball:
        log2_set = noise.n * math.log2(float(noise.level_radius(t))) + log2_ball_volume(noise.n)
    else:
        log2_set = float(noise.level_log_volume(t))
    return 2.0 ** (log2_set - log2_cell)


def _default_cap(lat):
    return int(math.ceil(50.0 / packing_density(lat)))


def _levels_for(noise, seeds):
    """Level draws for each row seed, consuming the reserved word prefix."""
    u = stream_uniforms(seeds, 0, noise.level_words)
    return noise.sample_level(u)


def lrsuq_encode(noise: NoiseModel, lat: Lattice, seed: int, x,
                 max_iters: int | None = None) -> Description:
    """Layered encode of one vector; returns the stopping index and point."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (lat.n,):
        raise ValueError(f"expected vector of dimension {lat.n}, got shape {x.shape}")
    K, J, _, _ = _lrsuq_encode_rows(noise, lat,
                                    np.asarray([seed], dtype=np.uint64),
                                    x[None, :], max_iters)
    j = J[0]
    return Description(K=int(K[0]),
                       M=LatticePoint(coords=j, embedding=lat.embed_rows(J)[0]))


def lrsuq_decode(noise: NoiseModel, lat: Lattice, seed: int, d: Description):
    """Regenerate the level and dither K; returns beta(T) * (M + V_K).

    A configuration mismatch with the encoder is undetectable by
    construction; supplying the encoding configuration is the contract.
    """
    if d.K < 1:
        raise ValueError("stopping index must be >= 1")
    seeds = np.asarray([seed], dtype=np.uint64)
    J = np.asarray(d.M.coords, dtype=np.int64)[None, :]
    return _lrsuq_decode_rows(noise, lat, seeds, np.asarray([d.K]), J)[0]


def _betas_for(noise, t):
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    beta = np.asarray(noise.beta(t), dtype=np.float64)
    if not np.all(beta > 0):
        raise ValueError("noise model produced a nonpositive cell scale")
    return beta


def _lrsuq_encode_rows(noise, lat, seeds, X, max_iters):
    if noise.n != lat.n:
        raise ValueError("noise/lattice dimension mismatch")
    cap = _default_cap(lat) if max_iters is None else max_iters
    t = _levels_for(noise, seeds)
    beta = _betas_for(noise, t)
    if noise.level_ball:
        # In x/beta coordinates the level set is a ball of this radius
        # around the input; for the minimal beta it equals the packing radius.
        r_scaled = np.asarray(noise.level_radius(t), dtype=np.float64) / beta
        Xs = X / beta[:, None]
        K, J = _reject_rows(lat, 1.0, Xs, Xs, r_scaled ** 2, seeds,
                            noise.level_words, cap)
    else:
        K, J = _lrsuq_generic_rows(noise, lat, seeds, X, t, beta, cap)
    return K, J, beta, t


def _lrsuq_generic_rows(noise, lat, seeds, X, t, beta, cap):
    # Membership-predicate path for custom models; scalar acceptance test.
    t = np.atleast_1d(t)

    def accept(err_scaled, active):
        return np.asarray([
            bool(noise.in_level_set(err_scaled[i] * beta[row], t[row]))
            for i, row in enumerate(active)
        ])

    Xs = X / beta[:, None]
    return _reject_rows(lat, 1.0, Xs, Xs, 0.0, seeds, noise.level_words, cap,
                        accept=accept)


def _lrsuq_decode_rows(noise, lat, seeds, K, J):
    t = _levels_for(noise, seeds)
    beta = _betas_for(noise, t)
    v = _dithers_at(lat, seeds, np.asarray(K, dtype=np.int64) - 1, noise.level_words)
    return beta[:, None] * (lat.embed_rows(J) + v)


# -- batched drivers ---------------------------------------------------------


def lrsuq_encode_batch(noise: NoiseModel, lat: Lattice, seed: int, X,
                       max_iters: int | None = None):
    """Encode rows of X with per-row derived streams; returns (K, J, Y, levels).

    Y are the encoder-side reconstructions; levels are the drawn density
    levels (useful for conditional diagnostics).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != lat.n:
        raise ValueError(f"expected dimension {lat.n}, got {X.shape[1]}")
    seeds = batch_seeds(seed, X.shape[0])
    K, J, beta, t = _lrsuq_encode_rows(noise, lat, seeds, X, max_iters)
    v = _dithers_at(lat, seeds, K - 1, noise.level_words)
    Y = beta[:, None] * (lat.embed_rows(J) + v)
    return K, J, Y, t


def lrsuq_decode_batch(noise: NoiseModel, lat: Lattice, seed: int, K, J):
    """Reconstructions for a batch of descriptions (inverse of encode batch)."""
    K = np.asarray(K, dtype=np.int64)
    J = np.atleast_2d(np.asarray(J, dtype=np.int64))
    seeds = batch_seeds(seed, K.shape[0])
    return _lrsuq_decode_rows(noise, lat, seeds, K, J)
