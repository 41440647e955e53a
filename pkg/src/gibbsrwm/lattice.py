"""Lattice windows, interaction neighborhoods, and window-growth diagnostics.

Vertices live on the integer lattice Z^d and are represented as plain tuples
of ints.  A Window is a finite vertex set together with its boundary (the
sites whose full neighborhood sticks out of the window) and a frozen
configuration on the outside sites that the boundary interacts with.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

Vertex = tuple[int, ...]


def _as_vertex(v) -> Vertex:
    out = tuple(int(c) for c in v)
    if len(out) == 0:
        raise ValueError("vertex must have dimension >= 1")
    return out


def _add(a: Vertex, b: Vertex) -> Vertex:
    return tuple(x + y for x, y in zip(a, b))


def _neg(a: Vertex) -> Vertex:
    return tuple(-x for x in a)


@dataclass(frozen=True)
class Neighborhood:
    """Finite symmetric offset set: which relative sites a local potential sees.

    Canonical form: offsets are distinct, lexicographically sorted, contain
    the origin, and are closed under negation.  Use :meth:`from_offsets` to
    build one from an arbitrary offset collection.
    """

    offsets: tuple[Vertex, ...]

    def __post_init__(self):
        if not self.offsets:
            raise ValueError("neighborhood needs at least the origin offset")
        d = len(self.offsets[0])
        if any(len(v) != d for v in self.offsets):
            raise ValueError("offsets have mixed dimensions")
        if len(set(self.offsets)) != len(self.offsets):
            raise ValueError("offsets are not distinct")
        if tuple(sorted(self.offsets)) != self.offsets:
            raise ValueError("offsets are not in canonical sorted order")
        if (0,) * d not in self.offsets:
            raise ValueError("origin offset missing")
        missing = [v for v in self.offsets if _neg(v) not in self.offsets]
        if missing:
            raise ValueError(f"offset set not symmetric, missing {_neg(missing[0])}")

    @staticmethod
    def from_offsets(offsets) -> "Neighborhood":
        """Canonicalize: add the origin, close under negation, dedupe, sort."""
        vs = {_as_vertex(v) for v in offsets}
        if not vs:
            raise ValueError("empty offset collection")
        d = len(next(iter(vs)))
        vs.add((0,) * d)
        vs |= {_neg(v) for v in vs}
        return Neighborhood(tuple(sorted(vs)))

    @property
    def d(self) -> int:
        return len(self.offsets[0])

    @property
    def origin(self) -> Vertex:
        return (0,) * self.d

    @property
    def nonzero_offsets(self) -> tuple[Vertex, ...]:
        return tuple(v for v in self.offsets if v != self.origin)

    def to_json_dict(self) -> dict:
        return {"offsets": [list(v) for v in self.offsets]}

    @staticmethod
    def from_json_dict(obj: dict) -> "Neighborhood":
        return Neighborhood.from_offsets(obj["offsets"])


def self_neighborhood(d: int) -> Neighborhood:
    """The trivial neighborhood {0}: purely on-site potentials."""
    return Neighborhood(((0,) * d,))


def nearest_neighbor(d: int) -> Neighborhood:
    """Origin plus the 2d unit offsets."""
    offs = [(0,) * d]
    for axis in range(d):
        for sgn in (-1, 1):
            v = [0] * d
            v[axis] = sgn
            offs.append(tuple(v))
    return Neighborhood.from_offsets(offs)


def boundary_of(vertices, neighborhood: Neighborhood) -> frozenset[Vertex]:
    """Sites k in the window with k + offsets not fully inside the window."""
    vs = frozenset(_as_vertex(v) for v in vertices)
    nz = neighborhood.nonzero_offsets
    return frozenset(k for k in vs if any(_add(k, v) not in vs for v in nz))


def exterior_halo(vertices, neighborhood: Neighborhood) -> frozenset[Vertex]:
    """Outside sites reachable from the boundary: (offsets + bdry) minus window."""
    vs = frozenset(_as_vertex(v) for v in vertices)
    bdry = boundary_of(vs, neighborhood)
    halo = {_add(k, v) for k in bdry for v in neighborhood.offsets}
    return frozenset(halo - vs)


class MissingBoundaryValueError(KeyError):
    def __init__(self, vertex: Vertex):
        super().__init__(f"no boundary value for outside vertex {vertex}")
        self.vertex = vertex


@dataclass(frozen=True)
class SiteTables:
    """Per-slot neighbor bookkeeping for vectorized Hamiltonian evaluation.

    Slot s of site i points at the value the s-th neighbor term of site i
    reads: ``x[idx[s, i]]`` when ``inside[s, i]`` else the frozen value
    ``bval[s, i]``.  Inactive slots (free-boundary drops, adjacency padding)
    contribute nothing.  For lattice windows slot s corresponds to the s-th
    nonzero offset of the neighborhood.
    """

    offsets: tuple[Vertex, ...] | None  # None for adjacency-form windows
    idx: np.ndarray      # (S, n) int
    inside: np.ndarray   # (S, n) bool
    bval: np.ndarray     # (S, n) float
    active: np.ndarray   # (S, n) bool

    @property
    def n_slots(self) -> int:
        return self.idx.shape[0]

    @property
    def n(self) -> int:
        return self.idx.shape[1]


BOUNDARY_MODES = ("zero", "constant", "free", "explicit")


class Window:
    """Finite vertex set V_n with boundary and frozen outside configuration.

    Immutable after construction.  ``boundary_mode`` fixes the outside
    configuration: "zero" and "constant" define it everywhere outside,
    "free" drops potential terms that reach outside, "explicit" reads from
    a user-supplied map.
    """

    def __init__(self, vertices, neighborhood: Neighborhood, boundary_mode="zero",
                 boundary_constant=0.0, explicit_values=None, box=None,
                 adjacency=None):
        if boundary_mode not in BOUNDARY_MODES:
            raise ValueError(f"unknown boundary_mode {boundary_mode!r}")
        self.vertices: tuple[Vertex, ...] = tuple(_as_vertex(v) for v in vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("window vertices are not distinct")
        if any(len(v) != neighborhood.d for v in self.vertices):
            raise ValueError("vertex dimension does not match neighborhood")
        self.neighborhood = neighborhood
        self.boundary_mode = boundary_mode
        self.boundary_constant = float(boundary_constant)
        self.index_of: dict[Vertex, int] = {v: i for i, v in enumerate(self.vertices)}
        self.box = box  # (d, L) when built by build_box
        self._explicit = dict(explicit_values or {})
        self.adjacency = None
        if adjacency is not None:
            self.adjacency = tuple(tuple(int(j) for j in nbrs) for nbrs in adjacency)
            if len(self.adjacency) != self.n:
                raise ValueError("adjacency list length does not match vertex count")
            for i, nbrs in enumerate(self.adjacency):
                for j in nbrs:
                    if not 0 <= j < self.n:
                        raise ValueError(f"adjacency index {j} out of range")
                    if i not in self.adjacency[j]:
                        raise ValueError("adjacency relation is not symmetric")
        if self.adjacency is not None:
            self.boundary = frozenset()
        else:
            self.boundary = boundary_of(self.vertices, neighborhood)
        self.boundary_values: dict[Vertex, float] = {}
        if self.adjacency is None and boundary_mode in ("zero", "constant", "explicit"):
            for v in sorted(exterior_halo(self.vertices, neighborhood)):
                self.boundary_values[v] = self.boundary_value_at(v)
        self._tables_cache: dict[Neighborhood, SiteTables] = {}

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def d(self) -> int:
        return self.neighborhood.d

    def boundary_value_at(self, vertex: Vertex):
        """Frozen value at an outside vertex, or None when dropped (free mode)."""
        if vertex in self.index_of:
            raise ValueError(f"{vertex} is inside the window")
        if self.boundary_mode == "zero":
            return 0.0
        if self.boundary_mode == "constant":
            return self.boundary_constant
        if self.boundary_mode == "free":
            return None
        if vertex not in self._explicit:
            raise MissingBoundaryValueError(vertex)
        return float(self._explicit[vertex])

    def interior_indices(self) -> np.ndarray:
        return np.array(
            [i for i, v in enumerate(self.vertices) if v not in self.boundary],
            dtype=np.intp,
        )

    def site_tables(self, neighborhood: Neighborhood | None = None) -> SiteTables:
        """Neighbor tables for the given (default: the window's) neighborhood."""
        nb = neighborhood or self.neighborhood
        cached = self._tables_cache.get(nb)
        if cached is not None:
            return cached
        tables = self._build_tables(nb)
        self._tables_cache[nb] = tables
        return tables

    def _build_tables(self, nb: Neighborhood) -> SiteTables:
        n = self.n
        if self.adjacency is not None:
            degree = max((len(a) for a in self.adjacency), default=0)
            idx = np.zeros((degree, n), dtype=np.intp)
            active = np.zeros((degree, n), dtype=bool)
            for i, nbrs in enumerate(self.adjacency):
                for s, j in enumerate(nbrs):
                    idx[s, i] = j
                    active[s, i] = True
            inside = active.copy()
            bval = np.zeros((degree, n))
            return SiteTables(None, idx, inside, bval, active)

        offs = nb.nonzero_offsets
        S = len(offs)
        idx = np.zeros((S, n), dtype=np.intp)
        inside = np.zeros((S, n), dtype=bool)
        bval = np.zeros((S, n))
        active = np.ones((S, n), dtype=bool)
        for s, off in enumerate(offs):
            for i, k in enumerate(self.vertices):
                tgt = _add(k, off)
                j = self.index_of.get(tgt)
                if j is not None:
                    idx[s, i] = j
                    inside[s, i] = True
                else:
                    val = self.boundary_value_at(tgt)
                    if val is None:
                        active[s, i] = False
                    else:
                        bval[s, i] = val
        for arr in (idx, inside, bval, active):
            arr.setflags(write=False)
        return SiteTables(offs, idx, inside, bval, active)

    def to_json_dict(self) -> dict:
        obj = {
            "offsets": [list(v) for v in self.neighborhood.offsets],
            "boundary_mode": self.boundary_mode,
            "boundary_constant": self.boundary_constant,
        }
        if self.box is not None:
            obj["d"], obj["L"] = self.box
        else:
            obj["vertex_list"] = [list(v) for v in self.vertices]
        return obj

    @staticmethod
    def from_json_dict(obj: dict) -> "Window":
        nb = Neighborhood.from_offsets(obj["offsets"])
        mode = obj.get("boundary_mode", "zero")
        const = obj.get("boundary_constant", 0.0)
        if "vertex_list" in obj:
            return Window(obj["vertex_list"], nb, mode, const)
        return build_box(obj["d"], obj["L"], nb, mode, const)


def build_box(d: int, L: int, neighborhood: Neighborhood, boundary_mode="zero",
              boundary_constant=0.0) -> Window:
    """Centered box window [-L, L]^d with n = (2L+1)^d vertices."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if L < 0:
        raise ValueError("L must be >= 0")
    if neighborhood.d != d:
        raise ValueError("neighborhood dimension does not match d")
    vertices = sorted(itertools.product(range(-L, L + 1), repeat=d))
    return Window(vertices, neighborhood, boundary_mode, boundary_constant,
                  box=(d, L))


def build_line(n: int, neighborhood: Neighborhood | None = None,
               boundary_mode="zero", boundary_constant=0.0) -> Window:
    """1D window of exactly n sites 0..n-1 (any n, unlike centered boxes)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    nb = neighborhood or self_neighborhood(1)
    return Window([(i,) for i in range(n)], nb, boundary_mode, boundary_constant)


# -- Window-sequence growth diagnostics ------------------------------------


@dataclass(frozen=True)
class H2Row:
    n: int
    hull_ratio: float
    inradius: float
    boundary_ratio: float


@dataclass(frozen=True)
class WindowSequenceReport:
    rows: tuple[H2Row, ...]

    def __post_init__(self):
        ns = [r.n for r in self.rows]
        if ns != sorted(set(ns)):
            raise ValueError("rows must be sorted by strictly increasing n")
        for r in self.rows:
            if r.hull_ratio < 0 or r.boundary_ratio < 0:
                raise ValueError("ratios must be nonnegative")


def count_hull_lattice_points(vertices) -> int:
    """Number of integer points inside the convex hull of the vertex set."""
    pts = np.array([_as_vertex(v) for v in vertices], dtype=float)
    n, d = pts.shape
    if n == 1:
        return 1
    if d == 1:
        lo, hi = int(pts.min()), int(pts.max())
        return hi - lo + 1
    from scipy.spatial import ConvexHull

    hull = ConvexHull(pts)
    lo = pts.min(axis=0).astype(int)
    hi = pts.max(axis=0).astype(int)
    grids = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    cand = np.array(list(itertools.product(*grids)), dtype=float)
    # A @ x + b <= 0 within tolerance means inside or on the hull.
    A = hull.equations[:, :-1]
    b = hull.equations[:, -1]
    inside = np.all(cand @ A.T + b <= 1e-9, axis=1)
    return int(inside.sum())


def discrete_inradius(vertices) -> float:
    """Radius of the largest sphere around a window site avoiding the outside.

    Distance from the best-centered site to the nearest outside lattice point,
    minus one; equals L for the box [-L, L]^d.
    """
    from scipy.spatial import cKDTree

    vs = {_as_vertex(v) for v in vertices}
    pts = np.array(sorted(vs))
    lo = pts.min(axis=0) - 1
    hi = pts.max(axis=0) + 1
    grids = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    outside = np.array([p for p in itertools.product(*grids) if p not in vs])
    tree = cKDTree(outside)
    dist, _ = tree.query(pts)
    return float(dist.max() - 1.0)


def boundary_ratio(vertices, neighborhood: Neighborhood) -> float:
    """Outside sites the boundary reaches, relative to the window size."""
    vs = [_as_vertex(v) for v in vertices]
    return len(exterior_halo(vs, neighborhood)) / len(vs)


def h2_diagnostics(d: int, L_list, neighborhood: Neighborhood) -> WindowSequenceReport:
    """Growth diagnostics for the box family [-L, L]^d along increasing L."""
    Ls = [int(L) for L in L_list]
    if Ls != sorted(set(Ls)):
        raise ValueError("L_list must be strictly increasing")
    rows = []
    for L in Ls:
        w = build_box(d, L, neighborhood)
        rows.append(H2Row(
            n=w.n,
            hull_ratio=count_hull_lattice_points(w.vertices) / w.n,
            inradius=discrete_inradius(w.vertices),
            boundary_ratio=boundary_ratio(w.vertices, neighborhood),
        ))
    return WindowSequenceReport(tuple(rows))


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x); y entries must be > 0."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])
