"""Command-line entry point.

One subcommand per experiment kind; every command reads a single JSON config
document, writes CSV/JSON artifacts plus a manifest into the output
directory, and is byte-reproducible given (config, seed).

Exit codes: 0 success, 2 config error, 3 runtime error, 4 check failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import time

from scipy.stats import kstest

from .checks import BATTERY, run_battery
from .config import (ConfigError, ExperimentConfig, build_model, build_window,
                     load_config, parse_config)
from .estimators import (CYLINDER_FUNCTIONS, acceptance_rate, delta_h_stats,
                         esjd_first_coord, estimate_s2)
from .oracle import gaussian_s2_exact
from .runio import (ManifestWriter, write_csv, write_estimates_csv,
                    write_json)
from .sampler import ProposalSpec, run_chain
from .scaling import mosco_m2_check, sweep_n, sweep_tau

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_CHECK = 4


class CheckFailure(RuntimeError):
    pass


def _require(cfg: ExperimentConfig, what: str, ok: bool):
    if not ok:
        raise ConfigError(f"run: this command needs {what}")


def _make_family(cfg: ExperimentConfig, model):
    def make(n: int):
        return model, build_window(cfg, model, n_override=n)

    return make


def cmd_sample(cfg: ExperimentConfig, threads: int, writer: ManifestWriter):
    _require(cfg, "a single tau", cfg.run.tau is not None)
    model = build_model(cfg)
    window = build_window(cfg, model)
    spec = ProposalSpec(cfg.run.tau, window.n, cfg.run.increment_family)
    run = run_chain(model, window, spec, cfg.run.steps, cfg.seed,
                    recording="full", thin=cfg.run.thin, init=cfg.run.init,
                    burn_steps=cfg.run.burn_steps)
    rec = run.records
    rows = [[t, rec.delta_h[t], rec.accepted[t], rec.jump_sq_first_coord[t]]
            for t in range(len(rec))]
    writer.register(write_csv(writer.path("trajectory.csv"),
                              ["t", "delta_h", "accepted", "jump_sq_first_coord"],
                              rows))
    acc = acceptance_rate(rec)
    esjd = esjd_first_coord(rec, window.n)
    dh = delta_h_stats(rec)
    writer.register(write_json(writer.path("summary.json"), {
        "n": window.n, "tau": cfg.run.tau, "steps": cfg.run.steps,
        "acceptance": acc.value, "acceptance_se": acc.std_error,
        "esjd": esjd.value, "esjd_se": esjd.std_error,
        "dh_mean": dh.mean.value, "dh_mean_se": dh.mean.std_error,
        "dh_var": dh.variance.value, "dh_var_se": dh.variance.std_error,
    }))
    writer.register(write_estimates_csv(writer.path("estimates.csv"), cfg.raw, [
        ("acceptance", acc), ("esjd_first_coord", esjd),
        ("dh_mean", dh.mean), ("dh_var", dh.variance)]))


def cmd_sweep_tau(cfg: ExperimentConfig, threads: int, writer: ManifestWriter):
    _require(cfg, "a tau_grid", cfg.run.tau_grid is not None)
    model = build_model(cfg)
    window = build_window(cfg, model)
    curve = sweep_tau(model, window, cfg.run.tau_grid, cfg.run.steps,
                      cfg.run.replicas, cfg.seed, threads=threads,
                      increment_family=cfg.run.increment_family,
                      init=cfg.run.init, burn_steps=cfg.run.burn_steps)
    rows = [[r.tau, r.acceptance.value, r.acceptance.std_error,
             r.esjd.value, r.esjd.std_error, r.c_theory, r.efficiency_theory]
            for r in curve.rows]
    writer.register(write_csv(
        writer.path("scaling_curve.csv"),
        ["tau", "acc", "acc_se", "esjd", "esjd_se", "c_theory", "eff_theory"],
        rows))
    writer.register(write_json(writer.path("sweep_info.json"),
                               {"s_hat": curve.s_hat}))


def cmd_sweep_n(cfg: ExperimentConfig, threads: int, writer: ManifestWriter):
    _require(cfg, "an n_list", cfg.run.n_list is not None)
    _require(cfg, "a single tau", cfg.run.tau is not None)
    model = build_model(cfg)
    rows = sweep_n(_make_family(cfg, model), cfg.run.n_list, cfg.run.tau,
                   cfg.run.steps, cfg.seed, replicas=cfg.run.replicas,
                   init=cfg.run.init, threads=threads,
                   burn_steps=cfg.run.burn_steps)
    writer.register(write_csv(
        writer.path("acceptance_vs_n.csv"),
        ["n", "acc", "acc_se", "c_theory", "gap"],
        [[r.n, r.acceptance.value, r.acceptance.std_error, r.c_theory, r.gap]
         for r in rows]))


def cmd_estimate_s(cfg: ExperimentConfig, threads: int, writer: ManifestWriter):
    _require(cfg, "a single tau", cfg.run.tau is not None)
    model = build_model(cfg)
    window = build_window(cfg, model)
    spec = ProposalSpec(cfg.run.tau, window.n, cfg.run.increment_family)
    run = run_chain(model, window, spec, cfg.run.steps, cfg.seed,
                    recording="thinned", thin=cfg.run.thin, init=cfg.run.init,
                    burn_steps=cfg.run.burn_steps)
    s2 = estimate_s2(model, run)
    out = {"s2_hat": s2.value, "s2_se": s2.std_error, "n_states": s2.n_samples}
    if model.is_quadratic:
        out["s2_exact"] = gaussian_s2_exact(model, window)
    writer.register(write_json(writer.path("s2.json"), out))
    writer.register(write_estimates_csv(writer.path("estimates.csv"), cfg.raw,
                                        [("s2_hat", s2)]))


def cmd_dirichlet_check(cfg: ExperimentConfig, threads: int, writer: ManifestWriter):
    _require(cfg, "an n_list", cfg.run.n_list is not None)
    _require(cfg, "a single tau", cfg.run.tau is not None)
    _require(cfg, "a cylinder function name", cfg.run.cylinder is not None)
    model = build_model(cfg)
    f = CYLINDER_FUNCTIONS[cfg.run.cylinder]
    table = mosco_m2_check(f, _make_family(cfg, model), cfg.run.n_list,
                           cfg.run.tau, cfg.run.steps, cfg.seed,
                           replicas=cfg.run.replicas, init=cfg.run.init,
                           threads=threads, burn_steps=cfg.run.burn_steps)
    writer.register(write_csv(
        writer.path("m2_table.csv"),
        ["n", "empirical_En_f", "empirical_se", "limiting_E_f", "limiting_se",
         "gap"],
        [[r.n, r.empirical.value, r.empirical.std_error, r.limiting.value,
          r.limiting.std_error, r.gap] for r in table.rows]))
    writer.register(write_json(writer.path("m2_info.json"),
                               {"cylinder": f.name, "s_hat": table.s_hat}))


def cmd_clt_check(cfg: ExperimentConfig, threads: int, writer: ManifestWriter):
    _require(cfg, "a single tau", cfg.run.tau is not None)
    model = build_model(cfg)
    window = build_window(cfg, model)
    spec = ProposalSpec(cfg.run.tau, window.n, cfg.run.increment_family)
    run = run_chain(model, window, spec, cfg.run.steps, cfg.seed,
                    recording="full", thin=cfg.run.thin, init=cfg.run.init,
                    burn_steps=cfg.run.burn_steps)
    dh = delta_h_stats(run.records)
    if model.is_quadratic:
        s2 = gaussian_s2_exact(model, window)
    else:
        s2 = estimate_s2(model, run).value if run.states is not None else float("nan")
    tau = cfg.run.tau
    # KS on thinned proposals: the spacing keeps the samples near-independent.
    thinned = run.records.delta_h[:: cfg.run.thin]
    std = thinned.std(ddof=1)
    ks = float(kstest((thinned - thinned.mean()) / std, "norm").statistic) \
        if std > 0 else 0.0
    out = {
        "dh_mean": dh.mean.value, "dh_mean_se": dh.mean.std_error,
        "dh_var": dh.variance.value, "dh_var_se": dh.variance.std_error,
        "target_mean": 0.5 * tau * tau * s2,
        "target_var": tau * tau * s2,
        "ks_stat": ks,
        "ks_critical_1pct": 1.6276 / math.sqrt(len(thinned)),
        "ks_samples": len(thinned),
    }
    writer.register(write_json(writer.path("clt.json"), out))


def cmd_oracle_check(cfg: ExperimentConfig, threads: int, writer: ManifestWriter):
    names = cfg.run.battery if cfg.run.battery is not None else list(BATTERY)
    results = run_battery(names, cfg.seed,
                          corrupt_determinism=cfg.run.corrupt_determinism)
    writer.register(write_csv(
        writer.path("checks.csv"),
        ["check", "status", "detail"],
        [[r.name, "PASS" if r.passed else "FAIL", r.detail.replace(",", ";")]
         for r in results]))
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise CheckFailure(f"checks failed: {', '.join(failed)}")


COMMANDS = {
    "sample": cmd_sample,
    "sweep-tau": cmd_sweep_tau,
    "sweep-n": cmd_sweep_n,
    "estimate-s": cmd_estimate_s,
    "dirichlet-check": cmd_dirichlet_check,
    "clt-check": cmd_clt_check,
    "oracle-check": cmd_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gibbsrwm",
        description="Random-walk Metropolis scaling experiments on lattice "
                    "Gibbs fields")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--seed-override", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed_override is not None or args.out is not None:
            doc = dict(cfg.raw)
            if args.seed_override is not None:
                doc["seed"] = args.seed_override
            if args.out is not None:
                doc["output_dir"] = args.out
            cfg = parse_config(doc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    writer = ManifestWriter(cfg.output_dir, cfg.raw, cfg.seed)
    started = time.perf_counter()
    try:
        COMMANDS[args.command](cfg, max(1, args.threads), writer)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailure as exc:
        writer.write()
        print(f"check failure: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    writer.wall_time = time.perf_counter() - started
    writer.write()
    return EXIT_OK


def entrypoint():  # console_scripts hook
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
