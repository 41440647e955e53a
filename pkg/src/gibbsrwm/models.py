"""Translation-invariant finite-range Gibbs models on lattice windows.

Sign convention used everywhere: the window energy is H = sum_k eps_k(x) with
per-site energies eps_k, and the target density is proportional to exp(-H).
Each eps_k is a self term in x_k plus quadratic pair terms coupling x_k to
its neighbors:

    eps_k(x) = self(x_k) + sum_{v != 0} [ diag_v * x_k^2 - cross_v * x_k * x_{k+v} ]

Neighbors outside the window read the frozen boundary configuration; under
free boundary conditions those pair terms are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .lattice import (Neighborhood, SiteTables, Vertex, Window,
                      nearest_neighbor, self_neighborhood)


@dataclass(frozen=True)
class InteractionModel:
    """A local potential family plus the coupling structure it induces."""

    family: str
    params: tuple[tuple[str, float], ...]
    neighborhood: Neighborhood
    self_energy: Callable[[np.ndarray], np.ndarray]
    d_self_energy: Callable[[np.ndarray], np.ndarray]
    pair_diag: dict[Vertex, float] = field(default_factory=dict)
    pair_cross: dict[Vertex, float] = field(default_factory=dict)
    self_quad_coeff: float | None = None  # self(x) == coeff * x^2 when quadratic
    grad2_bound: float | None = None
    supports_free_boundary: bool = True

    def __post_init__(self):
        nz = set(self.neighborhood.nonzero_offsets)
        if set(self.pair_diag) != nz or set(self.pair_cross) != nz:
            raise ValueError("pair coefficients must cover the nonzero offsets")
        for v in nz:
            nv = tuple(-c for c in v)
            if abs(self.pair_cross[v] - self.pair_cross[nv]) > 0:
                raise ValueError(f"cross coupling must satisfy J(v) == J(-v), differs at {v}")
            if abs(self.pair_diag[v] - self.pair_diag[nv]) > 0:
                raise ValueError(f"diagonal coupling must be symmetric, differs at {v}")

    @property
    def is_quadratic(self) -> bool:
        return self.self_quad_coeff is not None

    @property
    def param_dict(self) -> dict[str, float]:
        return dict(self.params)

    def slot_coeffs(self, tables: SiteTables) -> tuple[np.ndarray, np.ndarray]:
        """Per-slot (diag, cross) coefficient vectors matching the tables."""
        if tables.offsets is not None:
            diag = np.array([self.pair_diag[v] for v in tables.offsets])
            cross = np.array([self.pair_cross[v] for v in tables.offsets])
            return diag, cross
        # Adjacency-form windows carry no offsets: couplings must be uniform.
        diags = set(self.pair_diag.values())
        crosses = set(self.pair_cross.values())
        if len(diags) > 1 or len(crosses) > 1:
            raise ValueError("adjacency-form windows need offset-independent couplings")
        d = diags.pop() if diags else 0.0
        c = crosses.pop() if crosses else 0.0
        S = tables.n_slots
        return np.full(S, d), np.full(S, c)


@dataclass(eq=False)
class Configuration:
    """Real values on a window's sites; boundary values live on the window."""

    window: Window
    values: np.ndarray
    source: str = "given"

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.window.n,):
            raise ValueError(f"need {self.window.n} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("configuration values must be finite")
        vals.setflags(write=False)
        self.values = vals


def zeros_configuration(window: Window) -> Configuration:
    return Configuration(window, np.zeros(window.n), source="given")


def _check_model_window(model: InteractionModel, window: Window):
    if window.adjacency is None and window.neighborhood.d != model.neighborhood.d:
        raise ValueError("model and window dimensions differ")
    if window.boundary_mode == "free" and not model.supports_free_boundary:
        raise ValueError(f"{model.family} does not support free boundary conditions")


def site_energies(model: InteractionModel, window: Window, values: np.ndarray) -> np.ndarray:
    """Per-site energies eps_k; `values` may carry leading batch axes."""
    _check_model_window(model, window)
    x = np.asarray(values, dtype=float)
    t = window.site_tables(model.neighborhood)
    diag, cross = model.slot_coeffs(t)
    eps = model.self_energy(x)
    for s in range(t.n_slots):
        nv = np.where(t.inside[s], x[..., t.idx[s]], t.bval[s])
        term = diag[s] * x * x - cross[s] * x * nv
        eps = eps + np.where(t.active[s], term, 0.0)
    return eps


def hamiltonian(model: InteractionModel, config: Configuration) -> float:
    """Window energy H(x) = sum of per-site energies; density is exp(-H)/Z."""
    return float(site_energies(model, config.window, config.values).sum())


def delta_hamiltonian(model: InteractionModel, x: Configuration, y: Configuration) -> float:
    """H(y) - H(x) accumulated as per-site differences (no cancellation of big sums)."""
    if y.window is not x.window:
        raise ValueError("configurations live on different windows")
    ex = site_energies(model, x.window, x.values)
    ey = site_energies(model, y.window, y.values)
    return float((ey - ex).sum())


def log_density_ratio(model: InteractionModel, x: Configuration, y: Configuration) -> float:
    """log(psi(y)/psi(x)) = -(H(y) - H(x)); antisymmetric by construction."""
    return -delta_hamiltonian(model, x, y)


def hamiltonian_gradient(model: InteractionModel, window: Window, values: np.ndarray) -> np.ndarray:
    """Gradient of the window energy at every site; batch axes allowed."""
    _check_model_window(model, window)
    x = np.asarray(values, dtype=float)
    t = window.site_tables(model.neighborhood)
    diag, cross = model.slot_coeffs(t)
    g = model.d_self_energy(x)
    for s in range(t.n_slots):
        nv = np.where(t.inside[s], x[..., t.idx[s]], t.bval[s])
        g = g + np.where(t.active[s], 2.0 * diag[s] * x - cross[s] * nv, 0.0)
        # Mirror term: site i also appears as the neighbor of i-v.  For a
        # symmetric offset set with J(v) == J(-v) this gathers through the
        # same slot, restricted to in-window sources.
        g = g - np.where(t.active[s] & t.inside[s], cross[s] * x[..., t.idx[s]], 0.0)
    return g


def grad_hamiltonian(model: InteractionModel, config: Configuration, k,
                     allow_boundary: bool = False) -> float:
    """Energy gradient at vertex k.

    For interior k this equals the infinite-volume gradient of the
    translation-invariant potential; boundary sites need allow_boundary=True
    and return the window-energy gradient instead.
    """
    vertex = tuple(int(c) for c in k)
    w = config.window
    if vertex not in w.index_of:
        raise KeyError(f"vertex {vertex} not in window")
    if vertex in w.boundary and not allow_boundary:
        raise ValueError(f"vertex {vertex} is on the window boundary; "
                         "pass allow_boundary=True for the window gradient")
    g = hamiltonian_gradient(model, w, config.values)
    return float(g[w.index_of[vertex]])


# -- Model zoo ---------------------------------------------------------------


def gaussian_product(variance: float = 1.0, d: int = 1) -> InteractionModel:
    """Independent N(0, variance) at every site."""
    if variance <= 0:
        raise ValueError("variance must be positive")
    inv2v = 0.5 / variance
    return InteractionModel(
        family="gaussian_product",
        params=(("variance", float(variance)),),
        neighborhood=self_neighborhood(d),
        self_energy=lambda x: inv2v * x * x,
        d_self_energy=lambda x: (2.0 * inv2v) * x,
        self_quad_coeff=inv2v,
        grad2_bound=1.0 / variance,
    )


def gff(beta: float = 1.0, m2: float = 1.0, d: int = 2,
        neighborhood: Neighborhood | None = None) -> InteractionModel:
    """Massive Gaussian free field: H = (beta/2) x'Lx + (m2/2)|x|^2.

    L is the Dirichlet lattice Laplacian of the window (degree 2d on the
    diagonal, -1 across window edges), so boundary edges enter at full
    weight and the zero-boundary precision matrix is beta*L + m2*I.
    """
    if beta < 0 or m2 < 0 or (beta == 0 and m2 == 0):
        raise ValueError("need beta >= 0, m2 >= 0, not both zero")
    nb = neighborhood or nearest_neighbor(d)
    q = len(nb.nonzero_offsets)
    return InteractionModel(
        family="gff",
        params=(("beta", float(beta)), ("m2", float(m2))),
        neighborhood=nb,
        self_energy=lambda x: (0.5 * m2) * x * x,
        d_self_energy=lambda x: m2 * x,
        pair_diag={v: 0.5 * beta for v in nb.nonzero_offsets},
        pair_cross={v: 0.5 * beta for v in nb.nonzero_offsets},
        self_quad_coeff=0.5 * m2,
        grad2_bound=beta * q + m2,
    )


def phi4(a: float, b: float, coupling: float = 1.0, d: int = 1,
         neighborhood: Neighborhood | None = None) -> InteractionModel:
    """Quartic per-site potential a*x^4 + b*x^2 with quadratic neighbor coupling.

    Out-of-assumptions stress model: the second derivative of the quartic is
    unbounded, so no curvature bound is advertised.
    """
    if a <= 0:
        raise ValueError("a must be positive for a normalizable density")
    nb = neighborhood or nearest_neighbor(d)
    return InteractionModel(
        family="phi4",
        params=(("a", float(a)), ("b", float(b)), ("coupling", float(coupling))),
        neighborhood=nb,
        self_energy=lambda x: (a * x * x + b) * x * x,
        d_self_energy=lambda x: (4.0 * a * x * x + 2.0 * b) * x,
        pair_diag={v: 0.5 * coupling for v in nb.nonzero_offsets},
        pair_cross={v: 0.5 * coupling for v in nb.nonzero_offsets},
        grad2_bound=None,
    )


def custom_pairwise(couplings: dict, self_potential: Callable, d_self_potential: Callable,
                    grad2_bound: float | None = None,
                    supports_free_boundary: bool = True) -> InteractionModel:
    """User-supplied pairwise model: eps_k = u(x_k) - sum_v J(v) x_k x_{k+v} / 2.

    J must be symmetric (J(v) == J(-v)); the neighborhood is derived from the
    coupling support.  u and its derivative must be numpy-vectorized.
    """
    J = {tuple(int(c) for c in v): float(cv) for v, cv in couplings.items()}
    nb = Neighborhood.from_offsets(list(J))
    for v in nb.nonzero_offsets:
        J.setdefault(v, 0.0)
    origin = nb.origin
    if J.get(origin):
        raise ValueError("origin coupling belongs in the self potential")
    J.pop(origin, None)
    return InteractionModel(
        family="custom_pairwise",
        params=tuple((f"J{v}", J[v]) for v in sorted(J)),
        neighborhood=nb,
        self_energy=self_potential,
        d_self_energy=d_self_potential,
        pair_diag={v: 0.0 for v in nb.nonzero_offsets},
        pair_cross={v: 0.5 * J[v] for v in nb.nonzero_offsets},
        grad2_bound=grad2_bound,
        supports_free_boundary=supports_free_boundary,
    )
