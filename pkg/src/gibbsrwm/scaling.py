"""Closed-form limit curves and the sweep harness around them.

The limiting acceptance is c(tau) = 2 * Phi(-tau * s / 2), where s is the
stationary root-mean-square energy gradient at a single site.  (Parts of the
optimal-scaling literature write the argument with sqrt(s); conventions
differ only in whether the symbol names the gradient's second moment or its
square root.  Here s is the root itself, so s = 1 for the unit product
Gaussian and both conventions coincide.)  Efficiency is tau^2 c(tau); its
maximizer sits at tau ~ 2.381 / s with acceptance ~ 0.234, independent of
the model.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import erfc

from .estimators import (CylinderFunction, EstimateWithError,
                         acceptance_from_summary, esjd_from_summary,
                         dirichlet_form_empirical, estimate_s2, limiting_form,
                         pool_replicas)
from .lattice import Window, build_line
from .models import InteractionModel, gaussian_product
from .oracle import (build_precision, gaussian_exact_samples,
                     gaussian_s2_exact, quad_expectation_1d)
from .sampler import ProposalSpec, chain_rng, run_chain, run_replicas

REFERENCE_CHAIN_ID = 0xFFFF_FFFF  # reserved stream for the s-hat reference run


def c_theoretical(tau: float, s: float) -> float:
    """Limiting acceptance 2*Phi(-tau*s/2), via erfc for tail accuracy."""
    if s <= 0:
        raise ValueError("s must be positive")
    if tau < 0:
        raise ValueError("tau must be >= 0")
    return float(erfc(tau * s / (2.0 * math.sqrt(2.0))))


def c_mc_oracle(tau: float, s: float, m: int, seed: int) -> EstimateWithError:
    """Monte Carlo of E[1 ^ exp(-tau*s*Z - tau^2 s^2 / 2)] over m draws."""
    if m < 1:
        raise ValueError("m must be >= 1")
    z = chain_rng(seed).standard_normal(m)
    expo = -tau * s * z - 0.5 * (tau * s) ** 2
    vals = np.minimum(1.0, np.exp(np.minimum(expo, 50.0)))
    return EstimateWithError(float(vals.mean()),
                             float(vals.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0,
                             m)


def efficiency(tau: float, s: float) -> float:
    return tau * tau * c_theoretical(tau, s)


def tau_star(s: float) -> float:
    """Golden-section maximizer of tau^2 c(tau) on [0, 20/s]."""
    if s <= 0:
        raise ValueError("s must be positive")
    res = minimize_scalar(lambda t: -efficiency(t, s),
                          bracket=(1e-8, 2.38 / s, 20.0 / s),
                          method="golden", options={"xtol": 1e-10})
    return float(res.x)


# -- tau sweep ---------------------------------------------------------------


@dataclass(frozen=True)
class ScalingCurveRow:
    tau: float
    acceptance: EstimateWithError
    esjd: EstimateWithError
    c_theory: float
    efficiency_theory: float


@dataclass(frozen=True)
class ScalingCurve:
    rows: tuple[ScalingCurveRow, ...]
    s_hat: float


def _check_grid(grid):
    taus = [float(t) for t in grid]
    if not taus:
        raise ValueError("tau grid is empty")
    if any(t < 0 for t in taus):
        raise ValueError("tau values must be >= 0")
    if taus != sorted(taus) or len(set(taus)) != len(taus):
        raise ValueError("tau grid must be strictly increasing")
    return taus


def reference_s_hat(model: InteractionModel, window: Window, seed: int,
                    steps: int = 20_000, tau: float | None = None,
                    thin: int = 10, init: str = "exact_gaussian") -> float:
    """One reference chain, squared-gradient average, reused across a sweep."""
    if tau is None:
        # Rough curvature scale so the reference chain mixes reasonably.
        s0 = math.sqrt(gaussian_s2_exact(model, window)) if model.is_quadratic else 1.0
        tau = 2.38 / s0
    run = run_chain(model, window, ProposalSpec(tau, window.n), steps, seed,
                    chain_id=REFERENCE_CHAIN_ID, recording="thinned", thin=thin,
                    init=init)
    return math.sqrt(estimate_s2(model, run).value)


def sweep_tau(model: InteractionModel, window: Window, tau_grid, steps: int,
              replicas: int, seed: int, threads: int = 1,
              increment_family: str = "standard_normal",
              init: str = "exact_gaussian", s_hat: float | None = None,
              burn_steps: int | None = None) -> ScalingCurve:
    """Acceptance and ESJD across a tau grid, joined with the theory curve."""
    taus = _check_grid(tau_grid)
    if s_hat is None:
        s_hat = reference_s_hat(model, window, seed, init=init)

    def one_tau(ti: int):
        tau = taus[ti]
        spec = ProposalSpec(tau, window.n, increment_family)
        ids = [ti * replicas + r for r in range(replicas)]
        runs = run_replicas(model, window, spec, steps, seed, replicas,
                            chain_ids=ids, recording="summary", init=init,
                            burn_steps=burn_steps)
        acc = pool_replicas(acceptance_from_summary(r.summary) for r in runs)
        esjd = pool_replicas(esjd_from_summary(r.summary, window.n) for r in runs)
        return ScalingCurveRow(tau, acc, esjd, c_theoretical(tau, s_hat),
                               efficiency(tau, s_hat))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one_tau, range(len(taus))))
    else:
        rows = [one_tau(ti) for ti in range(len(taus))]
    return ScalingCurve(tuple(rows), s_hat)


# -- n sweep -----------------------------------------------------------------


@dataclass(frozen=True)
class SweepNRow:
    n: int
    acceptance: EstimateWithError
    c_theory: float
    gap: float


def product_chain_family(variance: float = 1.0) -> Callable[[int], tuple[InteractionModel, Window]]:
    """n -> (product-Gaussian model, line window of exactly n sites)."""
    model = gaussian_product(variance, d=1)

    def make(n: int):
        return model, build_line(n, model.neighborhood)

    return make


def sweep_n(make_model_window: Callable[[int], tuple[InteractionModel, Window]],
            n_list, tau: float, steps: int, seed: int, replicas: int = 4,
            init: str = "exact_gaussian", s_hat: float | None = None,
            threads: int = 1, burn_steps: int | None = None) -> list[SweepNRow]:
    """Acceptance against window size at fixed tau, with the limiting value."""
    ns = [int(n) for n in n_list]
    if ns != sorted(set(ns)):
        raise ValueError("n_list must be strictly increasing")
    if s_hat is None:
        model_max, window_max = make_model_window(ns[-1])
        if model_max.is_quadratic:
            s_hat = math.sqrt(gaussian_s2_exact(model_max, window_max))
        else:
            s_hat = reference_s_hat(model_max, window_max, seed, init=init)
    c_lim = c_theoretical(tau, s_hat)

    def one_n(ni: int):
        n = ns[ni]
        model, window = make_model_window(n)
        ids = [ni * replicas + r for r in range(replicas)]
        runs = run_replicas(model, window, ProposalSpec(tau, window.n), steps,
                            seed, replicas, chain_ids=ids, recording="summary",
                            init=init, burn_steps=burn_steps)
        acc = pool_replicas(acceptance_from_summary(r.summary) for r in runs)
        return SweepNRow(n, acc, c_lim, abs(acc.value - c_lim))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one_n, range(len(ns))))
    return [one_n(ni) for ni in range(len(ns))]


# -- Dirichlet-form convergence table ---------------------------------------


@dataclass(frozen=True)
class M2Row:
    n: int
    empirical: EstimateWithError
    limiting: EstimateWithError
    gap: float


@dataclass(frozen=True)
class M2Table:
    rows: tuple[M2Row, ...]
    limiting: EstimateWithError
    s_hat: float


def limiting_form_quadrature(f: CylinderFunction, model: InteractionModel,
                             tau: float, s_hat: float) -> EstimateWithError:
    """Deterministic limiting form for single-coordinate f on product Gaussians."""
    if f.n_coords != 1 or model.family != "gaussian_product":
        raise ValueError("quadrature route needs a 1-coordinate cylinder function "
                         "on a product Gaussian model")
    var = model.param_dict["variance"]

    def grad_sq(x):
        return f.gradient(np.asarray(x)[..., None])[..., 0] ** 2

    integral = quad_expectation_1d(grad_sq, 0.0, var)
    scale = 0.5 * tau * tau * c_theoretical(tau, s_hat)
    return EstimateWithError(scale * integral, 0.0, 0)


def mosco_m2_check(f: CylinderFunction,
                   make_model_window: Callable[[int], tuple[InteractionModel, Window]],
                   n_list, tau: float, steps: int, seed: int, replicas: int = 4,
                   init: str = "exact_gaussian", s_hat: float | None = None,
                   limiting: str = "auto", mc_samples: int = 200_000,
                   threads: int = 1, burn_steps: int | None = None) -> M2Table:
    """Empirical one-step form per window size against its limiting value."""
    ns = [int(n) for n in n_list]
    if ns != sorted(set(ns)):
        raise ValueError("n_list must be strictly increasing")
    if f.n_coords > ns[0]:
        raise ValueError(f"{f.name} needs {f.n_coords} coordinates, smallest n is {ns[0]}")

    model_max, window_max = make_model_window(ns[-1])
    if s_hat is None:
        if model_max.is_quadratic:
            s_hat = math.sqrt(gaussian_s2_exact(model_max, window_max))
        else:
            s_hat = reference_s_hat(model_max, window_max, seed, init=init)

    if limiting == "auto":
        if f.n_coords == 1 and model_max.family == "gaussian_product":
            limiting = "quadrature"
        elif model_max.is_quadratic:
            limiting = "exact_mc"
        else:
            limiting = "chain_mc"
    if limiting == "quadrature":
        lim = limiting_form_quadrature(f, model_max, tau, s_hat)
    elif limiting == "exact_mc":
        prec = build_precision(model_max, window_max)
        rng = chain_rng(seed, REFERENCE_CHAIN_ID - 1)
        draws = gaussian_exact_samples(prec, rng, mc_samples)[:, : f.n_coords]
        lim = limiting_form(f, model_max, tau, s_hat, draws)
    elif limiting == "chain_mc":
        run = run_chain(model_max, window_max, ProposalSpec(tau, window_max.n),
                        steps, seed, chain_id=REFERENCE_CHAIN_ID - 2,
                        recording="thinned", init=init, burn_steps=burn_steps)
        lim = limiting_form(f, model_max, tau, s_hat, run.states[:, : f.n_coords])
    else:
        raise ValueError(f"unknown limiting route {limiting!r}")

    def one_n(ni: int):
        n = ns[ni]
        model, window = make_model_window(n)
        ids = [ni * replicas + r for r in range(replicas)]
        runs = run_replicas(model, window, ProposalSpec(tau, window.n), steps,
                            seed, replicas, chain_ids=ids, recording="summary",
                            track_first=f.n_coords, init=init,
                            burn_steps=burn_steps)
        emp = pool_replicas(dirichlet_form_empirical(f, r) for r in runs)
        return M2Row(n, emp, lim, abs(emp.value - lim.value))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one_n, range(len(ns))))
    else:
        rows = [one_n(ni) for ni in range(len(ns))]
    return M2Table(tuple(rows), lim, s_hat)
