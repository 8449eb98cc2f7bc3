"""Grid partitioners: map points to integer bin ids and sample points back.

Three schemes share one interface:

* ``RegularGrid``  - axis-aligned hypercubes of a single width h;
  bin(x)_i = floor(x_i / h).
* ``AlignedGrid``  - axis-aligned boxes with one width per axis;
  bin(x)_i = floor(x_i / h_i).
* ``LshGrid``      - a grid over d Gaussian random projections with uniform
  offsets; bin(x)_i = floor((<x, w_i> + b_i) / h). Cells are parallelepipeds.

Cells are half-open on every axis, so each point belongs to exactly one bin
and mathematical floor is used throughout (floor(-0.7) == -1). Bin ids are
plain tuples of Python ints; bulk operations use (N, d) int64 arrays.

All partitioners are immutable after construction and safe for concurrent
reads. Random sampling takes a caller-owned ``numpy.random.Generator``.
"""

import numpy as np
from scipy.linalg import lu_factor, lu_solve

BinId = tuple[int, ...]

# guard against float->int64 overflow when binning absurd coordinates
_MAX_BIN = float(2**62)

# |det W| below this counts as singular; Gaussian matrices essentially never
# trip it, the guard exists for pathological seeds only
DET_EPSILON = 1e-6
_MAX_REDRAWS = 16


def _as_matrix(points, dim: int) -> np.ndarray:
    """Validate points as a finite (N, dim) float64 array."""
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != dim:
        raise ValueError(
            f"expected points of dimension {dim}, got array of shape {np.shape(points)}"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError("points must be finite (no NaN or Inf)")
    return X


def _as_bins(bins, dim: int) -> np.ndarray:
    B = np.asarray(bins, dtype=np.int64)
    if B.ndim == 1:
        B = B.reshape(1, -1)
    if B.ndim != 2 or B.shape[1] != dim:
        raise ValueError(f"expected bin ids of dimension {dim}")
    return B


def _floor_to_int64(Z: np.ndarray) -> np.ndarray:
    Z = np.floor(Z)
    if np.any(np.abs(Z) >= _MAX_BIN):
        raise ValueError("coordinate too large to bin (index exceeds int64 range)")
    return Z.astype(np.int64)


class _Grid:
    """Shared interface of the three partitioning schemes."""

    scheme: str
    dim: int

    def bin_of(self, x) -> BinId:
        """Bin id of a single point."""
        return tuple(self.bin_of_many(_as_matrix(x, self.dim))[0].tolist())

    def bin_of_many(self, points) -> np.ndarray:
        """Bin ids of an (N, d) batch as an (N, d) int64 array."""
        raise NotImplementedError

    def bin_volume(self) -> float:
        """Volume of one cell (identical for every bin of a fixed grid)."""
        raise NotImplementedError

    def sample_in_bin(self, bin_id, rng) -> np.ndarray:
        """One point drawn uniformly from the given cell."""
        return self.sample_in_bins(_as_bins(bin_id, self.dim), rng)[0]

    def sample_in_bins(self, bins, rng) -> np.ndarray:
        """Uniform draws from the cells listed in an (N, d) bin-id array."""
        raise NotImplementedError

    # (name, value) pairs used for merge-compatibility diagnostics
    def _fields(self):
        raise NotImplementedError

    def __eq__(self, other):
        if type(self) is not type(other):
            return False
        for (_, a), (_, b) in zip(self._fields(), other._fields()):
            if isinstance(a, np.ndarray):
                if a.tobytes() != b.tobytes():
                    return False
            elif a != b:
                return False
        return True

    def __hash__(self):
        return hash((self.scheme, self.dim))


class RegularGrid(_Grid):
    """Hypercube grid with a single width on every axis."""

    scheme = "regular"

    def __init__(self, dim: int, width: float):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if not (width > 0 and np.isfinite(width)):
            raise ValueError("width must be a positive finite real")
        self.dim = int(dim)
        self.width = float(width)

    def bin_of_many(self, points):
        X = _as_matrix(points, self.dim)
        return _floor_to_int64(X / self.width)

    def bin_volume(self):
        return self.width**self.dim

    def sample_in_bins(self, bins, rng):
        B = _as_bins(bins, self.dim)
        r = rng.random(B.shape)
        return self.width * (B + r)

    def _fields(self):
        return [("scheme", self.scheme), ("dim", self.dim), ("width", self.width)]

    def __repr__(self):
        return f"RegularGrid(dim={self.dim}, width={self.width})"


class AlignedGrid(_Grid):
    """Axis-aligned grid with one width per axis."""

    scheme = "aligned"

    def __init__(self, widths):
        w = np.asarray(widths, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("widths must be a 1-D sequence of positive reals")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("widths must be positive finite reals")
        self.dim = int(w.size)
        self.widths = w
        self.widths.flags.writeable = False

    def bin_of_many(self, points):
        X = _as_matrix(points, self.dim)
        return _floor_to_int64(X / self.widths)

    def bin_volume(self):
        return float(np.prod(self.widths))

    def sample_in_bins(self, bins, rng):
        B = _as_bins(bins, self.dim)
        r = rng.random(B.shape)
        return self.widths * (B + r)

    def _fields(self):
        return [("scheme", self.scheme), ("dim", self.dim), ("widths", self.widths)]

    def __repr__(self):
        return f"AlignedGrid(widths={self.widths.tolist()})"


class LshGrid(_Grid):
    """Random-projection grid: bin(x)_i = floor((<x, w_i> + b_i) / h).

    Rows of the projection matrix W are i.i.d. standard normal and the
    offsets b_i are uniform on [0, h), both drawn from a generator seeded
    with ``seed`` so the grid is reproducible bit-exactly. Cells are the
    preimages of hypercubes under W: parallelepipeds of volume
    h**d / |det W|. If a draw of W is numerically singular the generator
    advances and redraws (bounded retries).

    Sampling inverts the projection: pick y uniformly inside the image
    cube, then solve W s = y - b via a cached LU factorization.
    """

    scheme = "lsh"

    def __init__(self, dim: int, width: float, seed: int, *, projection=None, offsets=None):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if not (width > 0 and np.isfinite(width)):
            raise ValueError("width must be a positive finite real")
        self.dim = int(dim)
        self.width = float(width)
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF

        if projection is None:
            W, b = self._generate(self.dim, self.width, self.seed)
        else:
            W = np.array(projection, dtype=np.float64)
            b = np.array(offsets, dtype=np.float64)
            if W.shape != (dim, dim) or b.shape != (dim,):
                raise ValueError("projection must be (d, d) and offsets (d,)")
        det = float(np.linalg.det(W))
        if abs(det) <= DET_EPSILON:
            raise ValueError("projection matrix is singular or near-singular")
        self.projection = W
        self.offsets = b
        self.projection.flags.writeable = False
        self.offsets.flags.writeable = False
        self._abs_det = abs(det)
        self._lu = lu_factor(W)

    @staticmethod
    def _generate(dim, width, seed):
        rng = np.random.default_rng(seed)
        for _ in range(_MAX_REDRAWS):
            W = rng.standard_normal((dim, dim))
            b = rng.uniform(0.0, width, dim)
            if abs(np.linalg.det(W)) > DET_EPSILON:
                return W, b
        raise ValueError(
            f"could not draw a well-conditioned projection in {_MAX_REDRAWS} tries (seed {seed})"
        )

    def bin_of_many(self, points):
        X = _as_matrix(points, self.dim)
        # accumulate the projection column by column so the arithmetic (and
        # therefore the floor) is identical for every batch size
        Z = np.tile(self.offsets, (X.shape[0], 1))
        for j in range(self.dim):
            Z += X[:, j, None] * self.projection[:, j]
        return _floor_to_int64(Z / self.width)

    def bin_volume(self):
        return self.width**self.dim / self._abs_det

    def sample_in_bins(self, bins, rng):
        B = _as_bins(bins, self.dim)
        r = rng.random(B.shape)
        Y = self.width * (B + r) - self.offsets
        return lu_solve(self._lu, Y.T).T

    def _fields(self):
        return [
            ("scheme", self.scheme),
            ("dim", self.dim),
            ("width", self.width),
            ("lsh seed", self.seed),
            ("projection", self.projection),
            ("offsets", self.offsets),
        ]

    def __repr__(self):
        return f"LshGrid(dim={self.dim}, width={self.width}, seed={self.seed})"


def new_lsh(dim: int, width: float, seed: int) -> LshGrid:
    """Fresh l2-LSH grid; same (dim, width, seed) always yields the same grid."""
    return LshGrid(dim, width, seed)
