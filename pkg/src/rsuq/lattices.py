"""Lattice geometry and exact nearest-point (Voronoi) quantization.

Built-in families: the integer lattice Zn (any n), the checkerboard
lattice Dn (n >= 2), the hexagonal lattice A2 and the Gosset lattice E8,
all with closed-form decoders and exact geometric constants.  User
generator matrices fall back to bounded enumeration around the rounded
basis coordinates, which gets slow beyond n ~ 10.

Basis vectors are the *columns* of the generator matrix G, so the lattice
is {G j : j integer vector}.  Voronoi ties are broken toward the
lexicographically smallest integer coordinate vector j; on the boundary
set (measure zero) this is implemented exactly for Zn and by a fixed
deterministic rule for the other decoders.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass

import numpy as np

LN2 = math.log(2.0)

_BUILTIN_FAMILIES = ("Zn", "Dn", "A2", "E8")

# Sizes above this the generic enumeration decoder refuses to scan.
_MAX_ENUM_CANDIDATES = 4_000_000


def log2_ball_volume(n: int) -> float:
    """log2 of the volume of the unit n-ball, via log-Gamma (no overflow)."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    return (n / 2.0) * math.log2(math.pi) - math.lgamma(n / 2.0 + 1.0) / LN2


def ball_volume(n: int) -> float:
    """Volume of the unit n-ball."""
    return 2.0 ** log2_ball_volume(n)


@dataclass
class LatticePoint:
    """A lattice point: integer coordinates j and its embedding G j."""

    coords: np.ndarray
    embedding: np.ndarray


class Lattice:
    """Immutable lattice with cached geometric constants.

    Attributes
    ----------
    name : str
    n : int
    G : (n, n) generator matrix, columns are basis vectors
    det : |det G| > 0
    packing_radius : half the minimal nonzero vector norm
    covering_radius : optional
    nsm : normalized second moment of the Voronoi cell, where known
    """

    def __init__(self, name, G, packing_radius, covering_radius=None,
                 nsm=None, det=None, family="generic"):
        G = np.array(G, dtype=np.float64)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise ValueError("generator matrix must be square")
        n = G.shape[0]
        if det is None:
            det = abs(float(np.linalg.det(G)))
        if not det > 0:
            raise ValueError("generator matrix must be full rank")
        if not packing_radius > 0:
            raise ValueError("packing radius must be positive")
        if covering_radius is not None and covering_radius < packing_radius:
            raise ValueError("covering radius cannot be below packing radius")
        self.name = str(name)
        self.n = n
        self.G = G
        self.det = float(det)
        self.packing_radius = float(packing_radius)
        self.covering_radius = None if covering_radius is None else float(covering_radius)
        self.nsm = None if nsm is None else float(nsm)
        self.family = family
        self._invG = np.linalg.inv(G)
        # Column/row views used by the fixed-order accumulation loops below.
        self._g_cols = [np.ascontiguousarray(G[:, k]) for k in range(n)]
        self._inv_rows_for_col = [np.ascontiguousarray(self._invG[:, k]) for k in range(n)]
        self._enum_offsets = None
        self.G.setflags(write=False)
        self._invG.setflags(write=False)

    def __repr__(self):
        return f"Lattice({self.name!r}, n={self.n})"

    # -- embedding / coordinates -------------------------------------------
    #
    # Accumulation runs column by column so every row sees the identical
    # sequence of float operations regardless of batch size; this keeps
    # single-vector and batched paths bit-identical.

    def embed_rows(self, J):
        J = np.asarray(J, dtype=np.float64)
        out = np.zeros_like(J)
        for k in range(self.n):
            out += J[:, k : k + 1] * self._g_cols[k]
        return out

    def coords_rows(self, X):
        X = np.asarray(X, dtype=np.float64)
        out = np.zeros_like(X)
        for k in range(self.n):
            out += X[:, k : k + 1] * self._inv_rows_for_col[k]
        return out

    # -- nearest point ------------------------------------------------------

    def nearest_rows(self, X):
        """Nearest-point integer coordinates for each row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n:
            raise ValueError(f"expected dimension {self.n}, got {X.shape[1]}")
        if self.family == "Zn":
            return _round_half_down(X)
        if self.family == "Dn":
            z = _nearest_dn_points(X)
            return _round_exact(self.coords_rows(z))
        if self.family == "A2":
            return _nearest_a2(self, X)
        if self.family == "E8":
            z = _nearest_e8_points(X)
            return _round_exact(self.coords_rows(z))
        return self._nearest_enum(X)

    def _nearest_enum(self, X):
        # Bounded enumeration: the nearest point satisfies |x - G j| <= R,
        # hence |c_i - j_i| <= |row_i(G^-1)| * R in basis coordinates.
        if self.covering_radius is not None:
            R = self.covering_radius
        else:
            R = math.sqrt(self.n) * max(np.linalg.norm(c) for c in self._g_cols)
        if self._enum_offsets is None:
            half = [int(math.ceil(np.linalg.norm(self._invG[i]) * R + 0.5))
                    for i in range(self.n)]
            total = 1
            for h in half:
                total *= 2 * h + 1
            if total > _MAX_ENUM_CANDIDATES:
                raise ValueError(
                    f"enumeration would scan {total} candidates; supply "
                    "covering_radius in the lattice config or use a built-in family")
            self._enum_offsets = np.array(
                list(itertools.product(*[range(-h, h + 1) for h in half])),
                dtype=np.int64)
        C = self.coords_rows(X)
        base = _round_half_down(C)
        best_j = None
        best_d = None
        # Offsets are scanned in lexicographic order; strict improvement keeps
        # the first (lexicographically smallest) minimizer on exact ties.
        for off in self._enum_offsets:
            j = base + off
            d = _sqnorm_rows(X - self.embed_rows(j))
            if best_j is None:
                best_j, best_d = j, d
            else:
                better = d < best_d
                best_j[better] = j[better]
                best_d[better] = d[better]
        return best_j

    # -- sanity -------------------------------------------------------------

    def validate(self):
        """Check the cached constants against their defining inequalities."""
        if self.covering_radius is not None and self.packing_radius > self.covering_radius:
            raise ValueError("packing radius exceeds covering radius")
        dens = packing_density(self)
        if not 0.0 < dens <= 1.0 + 1e-12:
            raise ValueError(f"packing density {dens} outside (0, 1]")
        if self.covering_radius is not None and covering_density(self) < 1.0 - 1e-12:
            raise ValueError("covering density below 1")
        return self


def _sqnorm_rows(X):
    # pairwise-accumulated sum of squares: tie comparisons between candidate
    # distances use exact float ordering (no epsilon), so accumulation noise
    # is kept down rather than absorbed by a tolerance
    return (X * X).sum(axis=1)


def _round_half_down(X):
    # Half-integer ties round toward the smaller integer, which realizes the
    # lexicographically-smallest minimizer rule coordinate by coordinate.
    return np.ceil(np.asarray(X) - 0.5).astype(np.int64)


def _round_exact(C):
    # C is integer-valued up to float dust (products of exact generators).
    return np.floor(np.asarray(C) + 0.5).astype(np.int64)


def _nearest_dn_points(X):
    """Nearest point of {z integer : sum z even} for each row, in Z^n coords."""
    f = np.ceil(X - 0.5)
    e = X - f
    odd = (f.sum(axis=1).astype(np.int64) & 1) == 1
    rows = np.arange(X.shape[0])
    k = np.argmax(np.abs(e), axis=1)
    step = np.where(e[rows, k] > 0, 1.0, -1.0)
    g = f.copy()
    g[rows, k] += step
    return np.where(odd[:, None], g, f)


def _nearest_e8_points(X):
    """Nearest E8 point via the D8 / D8 + (1/2)^8 coset decomposition."""
    y0 = _nearest_dn_points(X)
    y1 = _nearest_dn_points(X - 0.5) + 0.5
    d0 = _sqnorm_rows(X - y0)
    d1 = _sqnorm_rows(X - y1)
    return np.where((d0 <= d1)[:, None], y0, y1)


def _nearest_a2(lat, X):
    # |c - j| <= covering_radius / sigma_min(G) < 1 per coordinate, so the
    # four corners of the basis-coordinate cell cover every minimizer.
    C = lat.coords_rows(X)
    base = np.floor(C).astype(np.int64)
    best_j = None
    best_d = None
    for off in ((0, 0), (0, 1), (1, 0), (1, 1)):  # lexicographic order
        j = base + np.array(off, dtype=np.int64)
        d = _sqnorm_rows(X - lat.embed_rows(j))
        if best_j is None:
            best_j, best_d = j.copy(), d
        else:
            better = d < best_d
            best_j[better] = j[better]
            best_d[better] = d[better]
    return best_j


# -- public operations -------------------------------------------------------


def nearest_point(lat: Lattice, x) -> LatticePoint:
    """Exact nearest lattice point of x, ties to lexicographically least j."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (lat.n,):
        raise ValueError(f"expected vector of dimension {lat.n}, got shape {x.shape}")
    j = lat.nearest_rows(x[None, :])[0]
    return LatticePoint(coords=j, embedding=lat.embed_rows(j[None, :])[0])


def packing_density(lat: Lattice) -> float:
    """Fraction of space filled by disjoint packing balls of radius lambda_min."""
    return 2.0 ** (lat.n * math.log2(lat.packing_radius)
                   + log2_ball_volume(lat.n) - math.log2(lat.det))


def covering_density(lat: Lattice) -> float:
    """Average covering multiplicity of balls with the covering radius."""
    if lat.covering_radius is None:
        raise ValueError(f"lattice {lat.name} has no covering radius recorded")
    return 2.0 ** (lat.n * math.log2(lat.covering_radius)
                   + log2_ball_volume(lat.n) - math.log2(lat.det))


def builtin_lattice(name: str, n: int) -> Lattice:
    """Construct a built-in lattice with exact analytic constants.

    Families: "Zn" (any n >= 1), "Dn" (n >= 2), "A2" (n = 2), "E8" (n = 8).
    """
    if name == "Zn":
        if n < 1:
            raise ValueError("Zn needs n >= 1")
        return Lattice("Zn", np.eye(n), packing_radius=0.5,
                       covering_radius=math.sqrt(n) / 2.0, nsm=1.0 / 12.0,
                       det=1.0, family="Zn")
    if name == "Dn":
        if n < 2:
            raise ValueError("Dn needs n >= 2")
        G = np.zeros((n, n))
        for i in range(n - 1):
            G[i, i] = 1.0
            G[i + 1, i] = -1.0
        G[n - 2, n - 1] = 1.0
        G[n - 1, n - 1] = 1.0
        cov = 1.0 if n <= 4 else math.sqrt(n) / 2.0
        nsm = 13.0 / (120.0 * math.sqrt(2.0)) if n == 4 else None
        return Lattice("Dn", G, packing_radius=math.sqrt(2.0) / 2.0,
                       covering_radius=cov, nsm=nsm, det=2.0, family="Dn")
    if name == "A2":
        if n != 2:
            raise ValueError("A2 is two-dimensional")
        G = np.array([[1.0, 0.5], [0.0, math.sqrt(3.0) / 2.0]])
        return Lattice("A2", G, packing_radius=0.5,
                       covering_radius=1.0 / math.sqrt(3.0),
                       nsm=5.0 / (36.0 * math.sqrt(3.0)),
                       det=math.sqrt(3.0) / 2.0, family="A2")
    if name == "E8":
        if n != 8:
            raise ValueError("E8 is eight-dimensional")
        G = np.zeros((8, 8))
        G[0, 0] = 2.0
        for i in range(1, 7):
            G[i - 1, i] = -1.0
            G[i, i] = 1.0
        G[:, 7] = 0.5
        return Lattice("E8", G, packing_radius=math.sqrt(2.0) / 2.0,
                       covering_radius=1.0, nsm=929.0 / 12960.0,
                       det=1.0, family="E8")
    raise ValueError(f"unknown lattice family {name!r}; expected one of {_BUILTIN_FAMILIES}")


def lattice_from_config(text: str, name: str = "user") -> Lattice:
    """Parse a user lattice from its text config.

    Format: first line n, then n rows of n reals (row-major G), then
    optional "packing_radius=", "covering_radius=", "nsm=" lines.
    """
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty lattice config")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise ValueError(f"first config line must be the dimension: {lines[0]!r}") from exc
    if n < 1 or len(lines) < 1 + n:
        raise ValueError("config does not contain a full generator matrix")
    rows = []
    for ln in lines[1 : 1 + n]:
        vals = [float(v) for v in ln.replace(",", " ").split()]
        if len(vals) != n:
            raise ValueError(f"expected {n} entries per generator row, got {len(vals)}")
        rows.append(vals)
    G = np.array(rows, dtype=np.float64)
    opts = {}
    for ln in lines[1 + n :]:
        if "=" not in ln:
            raise ValueError(f"unrecognized config line: {ln!r}")
        key, val = (s.strip() for s in ln.split("=", 1))
        if key not in ("packing_radius", "covering_radius", "nsm"):
            raise ValueError(f"unknown config key: {key!r}")
        opts[key] = float(val)
    packing = opts.get("packing_radius")
    if packing is None:
        packing = 0.5 * _min_nonzero_norm(G)
    return Lattice(name, G, packing_radius=packing,
                   covering_radius=opts.get("covering_radius"),
                   nsm=opts.get("nsm"), family="generic").validate()


def load_lattice(path) -> Lattice:
    """Load a user lattice config file."""
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    return lattice_from_config(text, name=os.path.basename(str(path)))


def _min_nonzero_norm(G):
    # Shortest-vector search over the box that must contain any vector no
    # longer than the shortest generator column.  Exponential in n.
    n = G.shape[0]
    invG = np.linalg.inv(G)
    s = min(np.linalg.norm(G[:, k]) for k in range(n))
    half = [int(math.ceil(np.linalg.norm(invG[i]) * s)) for i in range(n)]
    total = 1
    for h in half:
        total *= 2 * h + 1
    if total > _MAX_ENUM_CANDIDATES:
        raise ValueError("shortest-vector enumeration too large; supply packing_radius")
    best = s
    for j in itertools.product(*[range(-h, h + 1) for h in half]):
        if not any(j):
            continue
        v = G @ np.array(j, dtype=np.float64)
        norm = math.sqrt(float(v @ v))
        if norm < best:
            best = norm
    return best
