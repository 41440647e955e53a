"""Random-walk Metropolis kernel with proposal scale tau / sqrt(n).

Randomness comes from counter-based Philox streams keyed by (seed, chain id),
so replicas are independent and every run is bit-reproducible.  Within a
chain, draws are consumed in a fixed order: per chunk of steps, first the
increment block, then the uniforms.  The chunk length is a constant, which
makes single-chain and batched execution produce identical chains.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .lattice import Window
from .models import Configuration, InteractionModel, site_energies
from .oracle import build_precision, gaussian_exact_sample

CHUNK = 256
_MASK64 = (1 << 64) - 1

INCREMENT_FAMILIES = ("standard_normal", "uniform")
RECORDING_MODES = ("full", "thinned", "summary")
N_BATCHES = 50


def chain_rng(seed: int, chain_id: int = 0) -> np.random.Generator:
    """Philox stream keyed by (seed, chain id): disjoint across chains."""
    key = np.array([seed & _MASK64, chain_id & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class ProposalSpec:
    """Symmetric unit-variance increments scaled by tau / sqrt(n)."""

    tau: float
    n: int
    increment_family: str = "standard_normal"

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.increment_family not in INCREMENT_FAMILIES:
            raise ValueError(f"unknown increment family {self.increment_family!r}")

    @property
    def sigma(self) -> float:
        return self.tau / math.sqrt(self.n)

    def draw_increments(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.increment_family == "standard_normal":
            return rng.standard_normal(shape)
        half = math.sqrt(3.0)  # unit variance on [-sqrt(3), sqrt(3)]
        return rng.uniform(-half, half, shape)


@dataclass(frozen=True)
class StepRecord:
    delta_h: float
    accepted: bool
    u: float
    jump_sq_first_coord: float


@dataclass(frozen=True)
class StepRecords:
    """Per-step record columns of a chain run."""

    delta_h: np.ndarray
    accepted: np.ndarray
    u: np.ndarray
    jump_sq_first_coord: np.ndarray

    def __len__(self) -> int:
        return self.delta_h.shape[0]


@dataclass(frozen=True)
class ChainSummary:
    """Streaming aggregates kept even when per-step records are dropped."""

    steps: int
    accept_count: int
    jump_sq_sum: float
    dh_sum: float
    dh_sq_sum: float
    batch_acc: np.ndarray   # per-batch acceptance means
    batch_jump: np.ndarray  # per-batch jump_sq means
    batch_dh: np.ndarray    # per-batch delta_h means

    @property
    def acceptance(self) -> float:
        return self.accept_count / self.steps

    @property
    def mean_jump_sq(self) -> float:
        return self.jump_sq_sum / self.steps


def summarize_records(delta_h, accepted, jump_sq, n_batches: int = N_BATCHES) -> ChainSummary:
    steps = len(delta_h)
    nb = max(1, min(n_batches, steps))
    size = steps // nb
    trimmed = slice(0, nb * size)

    def bmeans(x):
        return np.asarray(x, dtype=float)[trimmed].reshape(nb, size).mean(axis=1)

    return ChainSummary(
        steps=steps,
        accept_count=int(np.count_nonzero(accepted)),
        jump_sq_sum=float(np.sum(jump_sq)),
        dh_sum=float(np.sum(delta_h)),
        dh_sq_sum=float(np.sum(np.square(delta_h))),
        batch_acc=bmeans(accepted),
        batch_jump=bmeans(jump_sq),
        batch_dh=bmeans(delta_h),
    )


@dataclass(frozen=True)
class ChainRun:
    """One chain's trajectory summary; records/states depend on recording mode."""

    seed: int
    chain_id: int
    steps: int
    tau: float
    n: int
    summary: ChainSummary
    records: StepRecords | None
    states: np.ndarray | None            # thinned post-step states, (T, n)
    first_coord_path: np.ndarray | None  # (steps + 1, m) leading coordinates
    initial_source: str
    final_state: Configuration
    wall_time: float

    @property
    def window(self) -> Window:
        return self.final_state.window


def accept_prob(model: InteractionModel, x: Configuration, y: Configuration) -> float:
    """min(1, exp(-dH)) evaluated without exponentiating large positives."""
    from .models import delta_hamiltonian

    dh = delta_hamiltonian(model, x, y)
    if dh <= 0:
        return 1.0
    return math.exp(-dh)  # underflows to 0.0 for huge uphill moves


def propose(state: Configuration, spec: ProposalSpec, rng: np.random.Generator) -> Configuration:
    if spec.n != state.window.n:
        raise ValueError("proposal spec n does not match window size")
    incr = spec.draw_increments(rng, state.window.n)
    return Configuration(state.window, state.values + spec.sigma * incr)


def step(model: InteractionModel, state: Configuration, spec: ProposalSpec,
         rng: np.random.Generator, u_override: float | None = None
         ) -> tuple[Configuration, StepRecord]:
    """One Metropolis step: one proposal, one uniform; state is not modified.

    u_override replaces the uniform draw (test hook; skips the rng draw).
    """
    candidate = propose(state, spec, rng)
    u = float(rng.random()) if u_override is None else float(u_override)
    from .models import delta_hamiltonian

    dh = delta_hamiltonian(model, state, candidate)
    p = 1.0 if dh <= 0 else math.exp(-dh)
    accepted = u < p
    jump = (candidate.values[0] - state.values[0]) ** 2 if accepted else 0.0
    new_state = candidate if accepted else state
    return new_state, StepRecord(dh, bool(accepted), u, float(jump))


def init_state(model: InteractionModel, window: Window, mode: str = "exact_gaussian",
               rng: np.random.Generator | None = None, seed: int | None = None,
               chain_id: int = 0, burn_steps: int | None = None,
               burn_tau: float = 2.38, given: Configuration | None = None,
               increment_family: str = "standard_normal") -> Configuration:
    """Initial chain state: exact stationary draw, burn-in end state, or given."""
    if mode == "given":
        if given is None:
            raise ValueError("mode='given' needs a configuration")
        if given.window is not window:
            raise ValueError("given configuration lives on a different window")
        return given
    if rng is None:
        if seed is None:
            raise ValueError("need an rng or a seed")
        rng = chain_rng(seed, chain_id)
    if mode == "exact_gaussian":
        if not model.is_quadratic:
            raise ValueError(f"exact stationary sampling unavailable for {model.family}")
        return gaussian_exact_sample(build_precision(model, window), rng)
    if mode == "burn_in":
        steps = burn_steps if burn_steps is not None else 50 * window.n
        spec = ProposalSpec(burn_tau, window.n, increment_family)
        x0 = np.zeros((1, window.n))
        x, *_ = _drive(model, window, spec, steps, [rng], x0,
                       keep_arrays=False, thin=0, track_first=0)
        return Configuration(window, x[0], source="burn_in")
    raise ValueError(f"unknown init mode {mode!r}")


def _drive(model: InteractionModel, window: Window, spec: ProposalSpec, steps: int,
           rngs: list[np.random.Generator], x0: np.ndarray, keep_arrays: bool,
           thin: int, track_first: int):
    """Batched Metropolis driver over len(rngs) replicas sharing one window."""
    R = len(rngs)
    n = window.n
    sigma = spec.sigma
    x = np.array(x0, dtype=float)
    eps_x = site_energies(model, window, x)

    dh_all = np.empty((R, steps))
    acc_all = np.empty((R, steps), dtype=bool)
    u_all = np.empty((R, steps)) if keep_arrays else None
    jump_all = np.empty((R, steps))
    n_snaps = steps // thin if thin else 0
    states = np.empty((R, n_snaps, n)) if n_snaps else None
    path = np.empty((R, steps + 1, track_first)) if track_first else None
    if path is not None:
        path[:, 0] = x[:, :track_first]

    t = 0
    while t < steps:
        c = min(CHUNK, steps - t)
        incr = np.empty((R, c, n))
        us = np.empty((R, c))
        for r in range(R):
            incr[r] = spec.draw_increments(rngs[r], (c, n))
            us[r] = rngs[r].random(c)
        for j in range(c):
            y = x + sigma * incr[:, j]
            eps_y = site_energies(model, window, y)
            dh = (eps_y - eps_x).sum(axis=-1)
            with np.errstate(under="ignore"):
                p = np.where(dh > 0, np.exp(-np.maximum(dh, 0.0)), 1.0)
            acc = us[:, j] < p
            k = t + j
            dh_all[:, k] = dh
            acc_all[:, k] = acc
            if u_all is not None:
                u_all[:, k] = us[:, j]
            jump_all[:, k] = np.where(acc, (sigma * incr[:, j, 0]) ** 2, 0.0)
            x = np.where(acc[:, None], y, x)
            eps_x = np.where(acc[:, None], eps_y, eps_x)
            if path is not None:
                path[:, k + 1] = x[:, :track_first]
            if thin and (k + 1) % thin == 0:
                states[:, (k + 1) // thin - 1] = x
        t += c
    return x, dh_all, acc_all, u_all, jump_all, states, path


def run_replicas(model: InteractionModel, window: Window, spec: ProposalSpec,
                 steps: int, seed: int, n_replicas: int = 1,
                 chain_ids=None, recording: str = "summary", thin: int = 10,
                 track_first: int = 0, init: str = "exact_gaussian",
                 init_config: Configuration | None = None,
                 burn_steps: int | None = None, burn_tau: float = 2.38
                 ) -> list[ChainRun]:
    """Run replicas with disjoint RNG streams; results in chain-id order."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if recording not in RECORDING_MODES:
        raise ValueError(f"unknown recording mode {recording!r}")
    if spec.n != window.n:
        raise ValueError("proposal spec n does not match window size")
    if track_first > window.n:
        raise ValueError("track_first exceeds window size")
    ids = list(chain_ids) if chain_ids is not None else list(range(n_replicas))
    if len(ids) != n_replicas:
        raise ValueError("need one chain id per replica")
    started = time.perf_counter()
    rngs = [chain_rng(seed, cid) for cid in ids]
    inits = [init_state(model, window, init, rng=rngs[r], given=init_config,
                        burn_steps=burn_steps, burn_tau=burn_tau,
                        increment_family=spec.increment_family)
             for r in range(n_replicas)]
    x0 = np.stack([cfg.values for cfg in inits])
    keep_arrays = recording == "full"
    want_states = recording in ("full", "thinned") and thin > 0
    x, dh, acc, u, jump, states, path = _drive(
        model, window, spec, steps, rngs, x0,
        keep_arrays=keep_arrays, thin=thin if want_states else 0,
        track_first=track_first)
    wall = time.perf_counter() - started
    runs = []
    for r in range(n_replicas):
        summary = summarize_records(dh[r], acc[r], jump[r])
        records = None
        if keep_arrays:
            records = StepRecords(dh[r].copy(), acc[r].copy(), u[r].copy(), jump[r].copy())
        runs.append(ChainRun(
            seed=seed, chain_id=ids[r], steps=steps, tau=spec.tau, n=window.n,
            summary=summary, records=records,
            states=states[r].copy() if states is not None else None,
            first_coord_path=path[r].copy() if path is not None else None,
            initial_source=inits[r].source,
            final_state=Configuration(window, x[r], source=inits[r].source),
            wall_time=wall,
        ))
    return runs


def run_chain(model: InteractionModel, window: Window, spec: ProposalSpec,
              steps: int, seed: int, chain_id: int = 0, recording: str = "full",
              thin: int = 10, track_first: int = 0, init: str = "exact_gaussian",
              init_config: Configuration | None = None,
              burn_steps: int | None = None, burn_tau: float = 2.38) -> ChainRun:
    """Single chain; identical to the matching replica of a batched run."""
    return run_replicas(model, window, spec, steps, seed, n_replicas=1,
                        chain_ids=[chain_id], recording=recording, thin=thin,
                        track_first=track_first, init=init,
                        init_config=init_config, burn_steps=burn_steps,
                        burn_tau=burn_tau)[0]
