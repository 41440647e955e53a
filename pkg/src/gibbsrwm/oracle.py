"""Independent exact references: Gaussian precision algebra and quadrature.

Everything here validates the sampling/estimation path from the side:
closed-form Gaussian sampling and moments for quadratic energies, and
deterministic quadrature for one- and two-site windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.linalg import cho_factor, cho_solve, cholesky, solve_triangular

from .models import Configuration, InteractionModel, site_energies
from .lattice import Window


@dataclass(frozen=True)
class PrecisionMatrix:
    """Quadratic window energy H(x) = x'Qx/2 - b'x with Q positive definite."""

    matrix: np.ndarray  # Q, (n, n)
    shift: np.ndarray   # b, (n,)
    window: Window

    def __post_init__(self):
        Q = self.matrix
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("precision matrix must be square")
        if not np.allclose(Q, Q.T, atol=1e-12):
            raise ValueError("precision matrix must be symmetric")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def chol_upper(self) -> np.ndarray:
        return cholesky(self.matrix, lower=False)

    def mean(self) -> np.ndarray:
        if not self.shift.any():
            return np.zeros(self.n)
        return cho_solve(cho_factor(self.matrix), self.shift)

    def covariance(self) -> np.ndarray:
        return cho_solve(cho_factor(self.matrix), np.eye(self.n))


def build_precision(model: InteractionModel, window: Window) -> PrecisionMatrix:
    """Assemble Q and b from the model's quadratic structure."""
    if not model.is_quadratic:
        raise ValueError(f"{model.family} has no quadratic Hamiltonian")
    t = window.site_tables(model.neighborhood)
    diag, cross = model.slot_coeffs(t)
    n = window.n
    Q = np.zeros((n, n))
    b = np.zeros(n)
    Q[np.diag_indices(n)] += 2.0 * model.self_quad_coeff
    sites = np.arange(n)
    for s in range(t.n_slots):
        act = t.active[s]
        Q[sites[act], sites[act]] += 2.0 * diag[s]
        # A pair term -cross * x_i * x_j adds -cross to both Q_ij and Q_ji.
        ins = act & t.inside[s]
        Q[sites[ins], t.idx[s][ins]] -= cross[s]
        Q[t.idx[s][ins], sites[ins]] -= cross[s]
        outs = act & ~t.inside[s]
        b[sites[outs]] += cross[s] * t.bval[s][outs]
    return PrecisionMatrix(Q, b, window)


def gaussian_exact_sample(precision: PrecisionMatrix, rng: np.random.Generator) -> Configuration:
    """One exact draw from exp(-H)/Z via x = mu + U^{-1} z, U'U = Q."""
    U = precision.chol_upper()
    z = rng.standard_normal(precision.n)
    x = precision.mean() + solve_triangular(U, z, lower=False)
    return Configuration(precision.window, x, source="exact")


def gaussian_exact_samples(precision: PrecisionMatrix, rng: np.random.Generator,
                           count: int) -> np.ndarray:
    """(count, n) exact draws sharing one factorization."""
    U = precision.chol_upper()
    z = rng.standard_normal((precision.n, count))
    return (precision.mean()[:, None] + solve_triangular(U, z, lower=False)).T


def central_interior_vertex(window: Window):
    """Interior vertex farthest from the boundary (lexicographic tie-break)."""
    interior = [v for v in window.vertices if v not in window.boundary]
    if not interior:
        raise ValueError("window has no interior vertex")
    if not window.boundary:
        return interior[len(interior) // 2]

    def dist(v):
        return min(max(abs(a - b) for a, b in zip(v, w)) for w in window.boundary)

    best = max(dist(v) for v in interior)
    return min(v for v in interior if dist(v) == best)


def gaussian_s2_exact(model: InteractionModel, window: Window) -> float:
    """Exact stationary second moment of the energy gradient at a central site.

    D_k H is linear, a'x - b_k with a the k-th row of Q, so the expectation
    is the Gaussian quadratic form a' Q^{-1} a.
    """
    prec = build_precision(model, window)
    k = central_interior_vertex(window)
    a = prec.matrix[window.index_of[k]]
    return float(a @ cho_solve(cho_factor(prec.matrix), a))


# -- Quadrature --------------------------------------------------------------


def quad_expectation_1d(g, mu: float = 0.0, var: float = 1.0,
                        rule: str = "gauss_hermite", order: int = 200) -> float:
    """E[g(X)] for X ~ N(mu, var), to ~1e-8 or better for smooth bounded g."""
    if var <= 0:
        raise ValueError("var must be positive")
    if rule == "gauss_hermite":
        nodes, weights = hermegauss(order)
        vals = np.asarray(g(mu + math.sqrt(var) * nodes), dtype=float)
        return float((weights * vals).sum() / math.sqrt(2.0 * math.pi))
    if rule == "adaptive":
        from scipy.integrate import quad

        sd = math.sqrt(var)

        def integrand(x):
            return g(x) * math.exp(-0.5 * ((x - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))

        val, _ = quad(integrand, mu - 12 * sd, mu + 12 * sd, epsabs=1e-12, limit=200)
        return float(val)
    raise ValueError(f"unknown rule {rule!r}")


def _state_bounds(model: InteractionModel, window: Window) -> tuple[np.ndarray, np.ndarray]:
    """Per-site integration bounds covering essentially all of exp(-H)."""
    if model.is_quadratic:
        prec = build_precision(model, window)
        mu = prec.mean()
        sd = np.sqrt(np.diag(prec.covariance()))
        return mu - 10.0 * sd, mu + 10.0 * sd
    # Scan outward along each axis until the density is negligible.
    n = window.n
    lo = np.zeros(n)
    hi = np.zeros(n)
    base = site_energies(model, window, np.zeros(n)).sum()
    for i in range(n):
        r = 1.0
        while True:
            x = np.zeros(n)
            x[i] = r
            up = site_energies(model, window, x).sum() - base
            x[i] = -r
            down = site_energies(model, window, x).sum() - base
            if min(up, down) > 35.0 or r > 1e6:
                break
            r *= 1.2
        hi[i] = r
        lo[i] = -r
    return lo, hi


def _gauss_legendre_grid(lo: float, hi: float, m: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(m)
    half = 0.5 * (hi - lo)
    return lo + half * (nodes + 1.0), half * weights


def _increment_density(family: str):
    if family == "standard_normal":
        lim = 9.0
        def pdf(r):
            return np.exp(-0.5 * r * r) / math.sqrt(2.0 * math.pi)
        return pdf, lim
    if family == "uniform":
        lim = math.sqrt(3.0)
        def pdf(r):
            return np.where(np.abs(r) <= lim, 0.5 / lim, 0.0)
        return pdf, lim
    raise ValueError(f"unknown increment family {family!r}")


def _accept_integral_rows(model: InteractionModel, window: Window, sigma: float,
                          X: np.ndarray, r_rest: np.ndarray | None, pdf, rlim: float,
                          gl_order: int = 48, scan_points: int = 257) -> np.ndarray:
    """Per context row, integral over the first increment coordinate r1 of
    min(1, exp(-dH(x, x + sigma*r))) * pdf(r1).

    dH is smooth in r1, so the integrand is piecewise smooth with kinks at
    the roots of dH: the roots are bracketed on a scan grid, polished by
    bisection, and each smooth piece gets its own Gauss-Legendre rule.
    """
    n = window.n
    rows = X.shape[0]
    eps_x = site_energies(model, window, X).sum(axis=-1)
    out = np.empty(rows)
    nodes01, w01 = np.polynomial.legendre.leggauss(gl_order)
    chunk = max(1, int(4e6) // (scan_points * max(n, 1)))
    for start in range(0, rows, chunk):
        sl = slice(start, min(start + chunk, rows))
        Xc = X[sl]
        rc = r_rest[sl] if r_rest is not None else None
        eps_c = eps_x[sl]
        m = Xc.shape[0]

        def dh_c(r1):
            r = np.empty(r1.shape + (n,))
            r[..., 0] = r1
            if n == 2:
                r[..., 1] = rc[:, None]
            y = Xc[:, None, :] + sigma * r
            return site_energies(model, window, y).sum(axis=-1) - eps_c[:, None]

        rs = np.linspace(-rlim, rlim, scan_points)
        sign = dh_c(np.broadcast_to(rs, (m, scan_points)).copy()) > 0
        flips = sign[:, 1:] != sign[:, :-1]
        ridx, cidx = np.nonzero(flips)
        counts = np.bincount(ridx, minlength=m)
        maxk = int(counts.max()) if ridx.size else 0
        # Degenerate padded slots collapse to the right endpoint.
        lo = np.full((m, maxk), rlim)
        hi = np.full((m, maxk), rlim)
        lo_pos = np.zeros((m, maxk), dtype=bool)
        if maxk:
            slot = np.arange(ridx.size) - np.repeat(np.cumsum(counts) - counts, counts)
            lo[ridx, slot] = rs[cidx]
            hi[ridx, slot] = rs[cidx + 1]
            lo_pos[ridx, slot] = sign[ridx, cidx]
            for _ in range(54):
                mid = 0.5 * (lo + hi)
                mid_pos = dh_c(mid) > 0
                same = mid_pos == lo_pos
                lo = np.where(same, mid, lo)
                hi = np.where(same, hi, mid)
        cuts = np.concatenate([np.full((m, 1), -rlim), 0.5 * (lo + hi),
                               np.full((m, 1), rlim)], axis=1)
        total = np.zeros(m)
        for p in range(cuts.shape[1] - 1):
            a, b = cuts[:, p], cuts[:, p + 1]
            half = 0.5 * (b - a)
            pts = a[:, None] + half[:, None] * (nodes01 + 1.0)
            dh = dh_c(pts)
            with np.errstate(under="ignore"):
                acc = np.where(dh <= 0, 1.0, np.exp(-np.minimum(dh, 700.0)))
            total += half * ((acc * pdf(pts)) @ w01)
        out[sl] = total
    return out


class QuadratureConvergenceError(RuntimeError):
    pass


def _quad_acceptance_quadratic(model: InteractionModel, window: Window, tau: float,
                               increment_family: str, tol: float) -> float:
    """Expected acceptance for quadratic energies, with the state integrated
    out exactly.

    Given the increment r, dH is Gaussian over the stationary state with
    mean sigma^2 r'Qr / 2 and variance sigma^2 r'Qr, so the conditional
    acceptance is 2*Phi(-sigma*sqrt(r'Qr)/2).  Only a smooth integral over
    r remains.
    """
    from scipy.special import erfc as _erfc

    n = window.n
    sigma = tau / math.sqrt(n)
    Q = build_precision(model, window).matrix
    pdf, rlim = _increment_density(increment_family)

    def conditional(rr_quad):
        # 2*Phi(-z/2) = erfc(z / (2*sqrt(2))) with z = sigma*sqrt(r'Qr)
        return _erfc(sigma * np.sqrt(rr_quad) / (2.0 * math.sqrt(2.0)))

    if n == 1:
        def estimate(m: int) -> float:
            r, w = _gauss_legendre_grid(0.0, rlim, m)
            vals = conditional(Q[0, 0] * r * r) * pdf(r)
            mass = (w * pdf(r)).sum()
            return float((w * vals).sum() / mass)
    else:
        if increment_family == "standard_normal":
            theta_pieces = [(0.0, 2.0 * math.pi)]
            def rho_max(theta):
                return np.full_like(theta, rlim)
            def pdf2(rho):
                return np.exp(-0.5 * rho * rho) / (2.0 * math.pi)
        else:
            # Square support: split at the corner directions.
            theta_pieces = [(k * math.pi / 4.0, (k + 1) * math.pi / 4.0)
                            for k in range(8)]
            def rho_max(theta):
                return rlim / np.maximum(np.abs(np.cos(theta)), np.abs(np.sin(theta)))
            def pdf2(rho):
                return np.full_like(rho, 1.0 / (2.0 * rlim) ** 2)

        def estimate(m: int) -> float:
            ts, tw = _gauss_legendre_grid(0.0, 1.0, m)
            num = 0.0
            mass = 0.0
            for a, b in theta_pieces:
                th, thw = _gauss_legendre_grid(a, b, m)
                rmax = rho_max(th)
                c, s = np.cos(th), np.sin(th)
                qdir = Q[0, 0] * c * c + (Q[0, 1] + Q[1, 0]) * c * s + Q[1, 1] * s * s
                rho = ts[:, None] * rmax[None, :]
                jac = (tw[:, None] * thw[None, :]) * rmax[None, :] * rho * pdf2(rho)
                num += float((conditional(qdir[None, :] * rho * rho) * jac).sum())
                mass += float(jac.sum())
            return num / mass

    m = 32
    prev = estimate(m)
    while m < 2048:
        m *= 2
        cur = estimate(m)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise QuadratureConvergenceError(
        f"radial quadrature not stable within {tol:g}")


def quad_acceptance(model: InteractionModel, window: Window, tau: float,
                    increment_family: str = "standard_normal",
                    tol: float = 1e-5) -> float:
    """Exact expected acceptance E[1 ^ exp(-dH)] for one- or two-site windows.

    Quadratic energies integrate the state out analytically and reduce to a
    smooth integral over the increment.  Other models use an outer tensor
    Gauss-Legendre rule, refined by doubling until stable within tol, with
    the innermost increment integral split exactly at the acceptance kink.
    """
    n = window.n
    if n > 2:
        raise ValueError("quadrature oracle supports windows of size 1 or 2 only")
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if tau == 0.0:
        return 1.0
    if model.is_quadratic:
        return _quad_acceptance_quadratic(model, window, tau, increment_family, tol)
    sigma = tau / math.sqrt(n)
    pdf, rlim = _increment_density(increment_family)
    lo, hi = _state_bounds(model, window)
    # Total mass of the (possibly truncated) increment density on [-rlim, rlim].
    rg, rw = _gauss_legendre_grid(-rlim, rlim, 256)
    pdf_mass = float((rw * pdf(rg)).sum())

    def estimate(m: int) -> float:
        axes = [_gauss_legendre_grid(lo[i], hi[i], m) for i in range(n)]
        if n == 1:
            X = axes[0][0][:, None]
            WX = axes[0][1]
            r_rest = None
        else:
            r2g, r2w = _gauss_legendre_grid(-rlim, rlim, m)
            xg = np.meshgrid(axes[0][0], axes[1][0], r2g, indexing="ij")
            X = np.stack([xg[0].ravel(), xg[1].ravel()], axis=-1)
            r_rest = xg[2].ravel()
            WX = (axes[0][1][:, None, None] * axes[1][1][None, :, None]
                  * (r2w * pdf(r2g))[None, None, :]).ravel()
        eps_x = site_energies(model, window, X).sum(axis=-1)
        dens = np.exp(-(eps_x - eps_x.min()))
        inner = _accept_integral_rows(model, window, sigma, X, r_rest, pdf, rlim)
        num = float((WX * dens) @ inner)
        den = float((WX * dens).sum()) * pdf_mass
        return num / den

    m = 32 if n == 1 else 16
    cap = 1024 if n == 1 else 128
    prev = estimate(m)
    diff = math.inf
    while m < cap:
        m *= 2
        cur = estimate(m)
        diff = abs(cur - prev)
        if diff < tol:
            return cur
        prev = cur
    raise QuadratureConvergenceError(
        f"grid refinement stalled at change {diff:.2e} > {tol:g}; "
        "non-quadratic two-site windows need a looser tol")
