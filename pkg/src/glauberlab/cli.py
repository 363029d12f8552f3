"""Batch front-end: ``glauberlab verify|report|decay|simulate --config f.json``.

Every run writes its full resolved configuration and a version stamp into
the report; identical config + seed give byte-identical outputs apart from
the stamp.  Exit codes: 0 success, 1 assertion failure (report still
written), 2 configuration error (the message names the offending key).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .bochner import (
    GammaMeasure,
    admissible_r,
    bochner_identities_batch,
    check_admissibility,
    gamma_positivity_batch,
    key_inequality,
    residual_report,
)
from .config import ConfigError, ExperimentConfig, TASKS, continuum_from_config, load_config
from .generator import assemble, check_reversibility
from .models import (
    BoundReport,
    Model,
    bound_for_model,
    glauber_kappa_bound,
    epsilon_beta,
    model_from_config,
    two_site_bound,
)
from .montecarlo import (
    empirical_distribution,
    export_histogram_csv,
    export_trajectory_csv,
    simulate_continuum_ensemble,
    simulate_ensemble,
)
from .spectral import decay_curves, export_decay_csv, full_report
from .statespace import StateSpaceTooLarge

# every number in a report traces back to one producing operation
PRODUCED_BY = {
    "reversibility_residual": "generator.check_reversibility",
    "condition_a": "bochner.check_admissibility",
    "condition_b": "bochner.check_admissibility",
    "condition_c": "bochner.check_admissibility",
    "truncation": "bochner.check_admissibility",
    "boch1": "bochner.bochner_identities_batch",
    "boch2": "bochner.bochner_identities_batch",
    "gamma_positivity_min": "bochner.gamma_positivity_batch",
    "key_inequality": "bochner.key_inequality",
    "bounds": "models.bound_for_model",
    "gap": "spectral.spectral_gap",
    "alpha_hat": "spectral.best_constant_search",
    "kappa_hat": "spectral.best_constant_search",
    "curves": "spectral.decay_curves",
    "histogram": "montecarlo.empirical_distribution",
    "trajectory": "montecarlo.simulate_finite/simulate_continuum",
}


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _base_payload(cfg: ExperimentConfig) -> dict:
    return {
        "config": cfg.resolved_dict(),
        "version": __version__,
        "produced_by": PRODUCED_BY,
    }


def _assemble_or_config_error(model: Model, cfg: ExperimentConfig):
    try:
        return assemble(model, max_states=cfg.max_states)
    except StateSpaceTooLarge as exc:
        raise ConfigError("max_states", str(exc)) from None


def _task_verify(cfg: ExperimentConfig) -> int:
    model = model_from_config(cfg.model)
    asm = _assemble_or_config_error(model, cfg)
    rev = check_reversibility(asm.kernel, asm.pi)
    r = admissible_r(model, asm.space)
    gm = GammaMeasure.build(asm.kernel, asm.pi, r)
    adm = check_admissibility(r, asm.kernel, asm.pi)

    rng = np.random.default_rng(cfg.seed)
    n = asm.space.n_states
    F = np.exp(rng.uniform(-2.0, 2.0, size=(cfg.n_functions, n)))
    G = np.exp(rng.uniform(-2.0, 2.0, size=(cfg.n_functions, n)))
    res1, s1, res2, s2 = bochner_identities_batch(gm, F, G)
    rel1 = float((res1 / np.maximum(s1, 1e-300)).max())
    rel2 = float((res2 / np.maximum(s2, 1e-300)).max())

    gamma_err = None
    gamma_min = None
    try:
        gamma_min = float(gamma_positivity_batch(gm, F).min())
    except ArithmeticError as exc:
        gamma_err = str(exc)

    a = np.exp(rng.uniform(math.log(1e-6), math.log(1e6), size=cfg.key_samples))
    b = np.exp(rng.uniform(math.log(1e-6), math.log(1e6), size=cfg.key_samples))
    lhs, rhs, holds = key_inequality(a, b)
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    min_slack_scaled = float(((lhs - rhs) / scale).min())

    checks = {
        "reversibility": rev <= 1e-10,
        "condition_a": adm.condition_a <= 1e-12,
        "condition_b": adm.condition_b <= 1e-12,
        "condition_c": adm.condition_c <= 1e-12,
        "boch1": rel1 <= 1e-10,
        "boch2": rel2 <= 1e-10,
        "gamma_positivity": gamma_err is None,
        "key_inequality": bool(holds.all()),
    }
    payload = _base_payload(cfg)
    payload.update(
        {
            "reversibility_residual": rev,
            "residuals": residual_report(adm),
            "bochner": {
                "boch1_max_abs": float(res1.max()),
                "boch2_max_abs": float(res2.max()),
                "boch1_max_scaled": rel1,
                "boch2_max_scaled": rel2,
                "n_functions": cfg.n_functions,
            },
            "gamma_positivity_min": gamma_min,
            "gamma_positivity_error": gamma_err,
            "key_inequality": {
                "n_samples": cfg.key_samples,
                "min_slack_scaled": min_slack_scaled,
                "holds_all": bool(holds.all()),
            },
            "checks": checks,
            "pass": all(checks.values()),
        }
    )
    _write_json(os.path.join(cfg.out_dir, "verify.json"), payload)
    return 0 if payload["pass"] else 1


def _closed_form_bound(model: Model) -> BoundReport:
    """Bound without enumerating the state space (for models past the cap)."""
    note = "occupancy scan skipped (state space too large); family closed form"
    rho = float(np.max(model.intensity))
    if model.family == "hard-rods" and model.rod_k is not None:
        k = model.rod_k
        kappa = 1.0 - rho * (k * k + 4 * k)
        return BoundReport(
            kappa_bound=kappa,
            applicable=rho * (k * k + 4 * k + 1) <= 1.0,
            message=note,
            epsilon0=rho * (k * k + 4 * k + 1),
            epsilon1=rho,
            kappa_family=kappa,
            family_formula="1 - rho*(k^2 + 4k)",
        )
    if model.family == "hardcore-graph":
        degree = int(model.conflict.sum(axis=1).max())
        kappa = 1.0 - rho * (degree - 1)
        return BoundReport(
            kappa_bound=kappa,
            applicable=rho * degree <= 1.0,
            message=note,
            epsilon0=rho * degree,
            epsilon1=rho,
            kappa_family=kappa,
            family_formula="1 - rho*(Delta - 1)",
        )
    if model.family == "lattice-gas":
        return glauber_kappa_bound(rho, epsilon_beta(model))
    if model.family == "two-site-convex":
        return two_site_bound(model)
    return BoundReport(
        kappa_bound=float("nan"),
        applicable=False,
        message="no closed-form bound for this family without enumeration",
    )


def _task_report(cfg: ExperimentConfig) -> int:
    model = model_from_config(cfg.model)
    payload = _base_payload(cfg)
    try:
        asm = assemble(model, max_states=cfg.max_states)
    except StateSpaceTooLarge as exc:
        bound = _closed_form_bound(model)
        payload.update(
            {
                "bounds": bound.as_dict(),
                "constants": None,
                "note": f"{exc}; constants not computed, closed-form bound only",
                "pass": True,
            }
        )
        _write_json(os.path.join(cfg.out_dir, "report.json"), payload)
        return 0
    bound = bound_for_model(model, asm.space)
    payload["bounds"] = bound.as_dict()
    try:
        rep = full_report(
            asm,
            kappa_bound=bound.kappa_bound if bound.applicable else None,
            seed=cfg.seed,
            budget=cfg.budget,
            n_probes=cfg.n_probes,
            restarts=cfg.restarts,
            threads=cfg.threads,
        )
        payload.update({"constants": rep.constants_dict(), "pass": True})
        code = 0
    except ArithmeticError as exc:
        payload.update({"constants": None, "error": str(exc), "pass": False})
        code = 1
    _write_json(os.path.join(cfg.out_dir, "report.json"), payload)
    return code


def _task_decay(cfg: ExperimentConfig) -> int:
    model = model_from_config(cfg.model)
    asm = _assemble_or_config_error(model, cfg)
    bound = bound_for_model(model, asm.space)
    kb = bound.kappa_bound if (bound.applicable and bound.kappa_bound > 0) else None
    rng = np.random.default_rng(cfg.seed)
    f0 = np.exp(rng.uniform(-1.0, 1.0, size=asm.space.n_states))
    curves = decay_curves(asm.kernel, asm.pi, f0, cfg.t_grid, kappa_bound=None)
    export_decay_csv(os.path.join(cfg.out_dir, "decay.csv"), curves, kb)
    payload = _base_payload(cfg)
    payload["bounds"] = bound.as_dict()
    try:
        decay_curves(asm.kernel, asm.pi, f0, cfg.t_grid, kappa_bound=kb)
        payload.update({"envelope_pass": True, "pass": True})
        code = 0
    except ArithmeticError as exc:
        payload.update({"envelope_pass": False, "error": str(exc), "pass": False})
        code = 1
    payload["n_grid_points"] = int(cfg.t_grid.size)
    _write_json(os.path.join(cfg.out_dir, "decay.json"), payload)
    return code


def _task_simulate(cfg: ExperimentConfig) -> int:
    payload = _base_payload(cfg)
    if cfg.continuum is not None:
        spec = continuum_from_config(cfg.continuum)
        trajs = simulate_continuum_ensemble(
            spec, cfg.t_end, cfg.n_trajectories, cfg.seed, cutoff=cfg.cutoff
        )
        emp = empirical_distribution(trajs, cfg.t_end)
    else:
        model = model_from_config(cfg.model)
        asm = _assemble_or_config_error(model, cfg)
        trajs = simulate_ensemble(
            asm, cfg.t_end, cfg.n_trajectories, cfg.seed, init_state=cfg.init_state
        )
        emp = empirical_distribution(trajs, cfg.t_end, n_states=asm.space.n_states)
    export_trajectory_csv(os.path.join(cfg.out_dir, "trajectory.csv"), trajs[0])
    export_histogram_csv(os.path.join(cfg.out_dir, "histogram.csv"), emp)
    payload.update(
        {
            "n_trajectories": cfg.n_trajectories,
            "mean_jumps": float(np.mean([t.n_jumps for t in trajs])),
            "absorbed": int(sum(t.absorbed for t in trajs)),
            "histogram_kind": emp.kind,
            "pass": True,
        }
    )
    _write_json(os.path.join(cfg.out_dir, "simulate.json"), payload)
    return 0


_TASK_RUNNERS = {
    "verify": _task_verify,
    "report": _task_report,
    "decay": _task_decay,
    "simulate": _task_simulate,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="glauberlab",
        description="verification, constants, decay curves, and simulation "
        "for reversible birth-death dynamics on finite and continuum spaces",
    )
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task, help=f"run the {task} task from a config file")
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=None, help="worker threads")
    args = parser.parse_args(argv)
    default_out = os.environ.get("GLAUBERLAB_OUTDIR", ".")
    try:
        cfg = load_config(
            args.config,
            args.task,
            seed_override=args.seed,
            out_override=args.out,
            threads_override=args.threads,
            default_out=default_out,
        )
        os.makedirs(cfg.out_dir, exist_ok=True)
        return _TASK_RUNNERS[cfg.task](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
