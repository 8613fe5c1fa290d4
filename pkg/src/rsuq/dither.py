"""Deterministic, seed-reproducible dithers uniform over the scaled Voronoi cell.

A counter-based 64-bit generator drives everything: word i of a stream is
a pure function of (seed, i), so decoders can jump straight to the draw
they need without replaying the sequence.  Uniform deviates take the top
53 bits of a word.  Dither draw k of an n-dimensional stream consumes the
fixed word stride [reserved + k*n, reserved + (k+1)*n).

All state updates are plain uint64 arithmetic (wrapping mod 2**64), so
streams are bit-identical across platforms and between encoder and decoder.
"""

from __future__ import annotations

import numpy as np

from .lattices import Lattice

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_DERIVE = np.uint64(0xD1342543DE82EF95)
_U53 = 2.0 ** -53


def mix64(x):
    """Scramble uint64 values (array in, array out)."""
    x = np.asarray(x, dtype=np.uint64)
    x = (x ^ (x >> np.uint64(30))) * _MIX1
    x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


def rand_words(seed, index):
    """Word(s) of the counter-based stream: word i = mix64(seed + (i+1)*golden)."""
    idx = np.asarray(index, dtype=np.uint64)
    return mix64(np.uint64(seed) + (idx + np.uint64(1)) * _GOLDEN)


def uniform53(words):
    """Map 64-bit words to [0, 1) doubles from their top 53 bits."""
    return (np.asarray(words, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) * _U53


def derive_seed(seed, index) -> int:
    """Decorrelated stream seed for batch element `index`.

    Part of the container format: vector i of an encoded stream uses the
    stream seeded with derive_seed(header.seed, i).
    """
    return int(derive_seeds(seed, np.asarray([index], dtype=np.uint64))[0])


def derive_seeds(seed, indices):
    """Vectorized derive_seed over an array of element indices."""
    a = mix64(np.asarray([seed], dtype=np.uint64))
    b = mix64(np.asarray(indices, dtype=np.uint64) * _DERIVE + np.uint64(1))
    return mix64(a + b)


def stream_uniforms(seeds, first_word, count):
    """(len(seeds), count) uniforms at words [first_word, first_word+count)."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    idx = np.arange(first_word, first_word + count, dtype=np.uint64)
    return uniform53(mix64(seeds[:, None] + (idx[None, :] + np.uint64(1)) * _GOLDEN))


def gathered_uniforms(seeds, word_index):
    """Uniforms at per-row word positions; word_index has shape (N, count)."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    idx = np.asarray(word_index, dtype=np.uint64)
    return uniform53(mix64(seeds[:, None] + (idx + np.uint64(1)) * _GOLDEN))


def fold_rows(lat: Lattice, U):
    """Measure-preserving fold of cube samples into the Voronoi cell.

    U in [0,1)^n is mapped through the fundamental parallelepiped G U and
    reduced mod the lattice, landing uniformly in the (unscaled) cell.
    """
    W = lat.embed_rows(U)
    J = lat.nearest_rows(W)
    return W - lat.embed_rows(J)


class DitherStream:
    """Seeded random-access source of dithers uniform over scale * Voronoi cell.

    Identical (seed, lattice, scale) always reproduce the identical
    sequence.  `reserved_words` skips a fixed prefix of generator words
    (used by the layered quantizer for its level draw).
    """

    def __init__(self, seed: int, lat: Lattice, scale: float = 1.0,
                 reserved_words: int = 0):
        if not scale > 0:
            raise ValueError("scale must be positive")
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.lat = lat
        self.scale = float(scale)
        self.reserved_words = int(reserved_words)
        self.counter = 0

    def uniforms_at(self, draw_index: int, count: int = 1):
        """(count, n) uniforms backing draws draw_index, ..., draw_index+count-1."""
        n = self.lat.n
        first = self.reserved_words + draw_index * n
        u = stream_uniforms([self.seed], first, count * n)
        return u.reshape(count, n)

    def take(self, count: int):
        """Next `count` dithers as a (count, n) array, advancing the stream."""
        u = self.uniforms_at(self.counter, count)
        self.counter += count
        return self.scale * fold_rows(self.lat, u)

    def next_dither(self):
        """Next dither vector, uniform over scale * Voronoi(lat)."""
        return self.take(1)[0]

    def jump_to(self, draw_index: int) -> "DitherStream":
        """Copy of this stream positioned so the next draw is number draw_index."""
        if draw_index < 0:
            raise ValueError("draw index must be nonnegative")
        s = DitherStream(self.seed, self.lat, self.scale, self.reserved_words)
        s.counter = int(draw_index)
        return s
