"""Deterministic experiment harness writing CSV sweeps.

Each scenario reproduces one figure-style sweep: noise robustness with and
without truncation, threshold selection, the auto-tuned walk, eigenvector
heuristics, the coupling scatter, the a-priori rate, the truncation-only
bound sweep, and the projection-error tightness study.  Per-trial seeds are
``base_seed XOR trial_index`` so identical configs give byte-identical CSV
regardless of the worker count.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bnd
from .errors import ConfigError, QsdThreshError
from .linalg import DefinitePair, HermitianMatrix, spectral_norm, toeplitz_hermitian
from .models import ModelSpec, model_system, synthetic_pair
from .noise import dense_gaussian_hermitian, monte_carlo_estimate, toeplitz_gaussian_noise
from .pairio import load_pair, save_pair
from .qsd import TINY_THRESHOLD_FACTOR, TimeGrid, build_qsd_instance, overlaps, projected_pair, krylov_matrix
from .thresholding import auto_threshold_solve, heuristic_scores, heuristic_select, threshold_solve
from .linalg import hermitian_eig

__all__ = [
    "SCENARIOS",
    "ExperimentConfig",
    "TrialRecord",
    "parse_config",
    "load_config",
    "run_scenario",
    "cache_pair",
    "read_records",
]

SCENARIOS = (
    "doing-nothing",
    "fixed-threshold",
    "threshold-sweep",
    "threshold-choice",
    "auto-threshold",
    "heuristics",
    "alpha-scatter",
    "noiseless-k",
    "bound-validation",
    "tightness",
)

CSV_COLUMNS = (
    "kind",
    "scenario",
    "cell",
    "variant",
    "seed",
    "sigma",
    "epsilon",
    "recovered_E",
    "reference_E",
    "exact_E",
    "abs_error",
    "bound",
    "hypothesis_flags",
    "error",
)

_NOISE_SCENARIOS = (
    "doing-nothing",
    "fixed-threshold",
    "threshold-sweep",
    "threshold-choice",
    "auto-threshold",
    "heuristics",
)

_LATTICE_SCENARIOS = _NOISE_SCENARIOS + ("alpha-scatter",)

# synthetic operator/state pairs for the a-priori rate scenario
_RATE_INSTANCES = {
    "I": ("sm_H1", "sm_xi1"),
    "II": ("sm_H1", "sm_xi2"),
    "III": ("sm_H2", "sm_xi3"),
    "IV": ("sm_H2", "sm_xi4"),
}


@dataclass(frozen=True)
class TrialRecord:
    """One CSV row.  ``kind`` is "trial" for measurements and "median"/"max"
    for per-cell summary rows; ``cell`` names the (sigma, epsilon) cell the
    row belongs to.  ``wall_time`` is kept in memory only so identical
    configs produce byte-identical files."""

    kind: str
    scenario: str
    cell: str
    variant: str
    seed: int
    sigma: float
    epsilon: float
    recovered_e: float
    reference_e: float
    exact_e: float
    abs_error: float
    bound: float
    hypothesis_flags: str
    error: str
    wall_time: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    output_path: str
    trials: int = 1
    base_seed: int = 0
    model: ModelSpec | None = None
    grid_n: int = 0
    grid_dt: float = 0.0
    noise_model: str = "toeplitz-gaussian"
    mc_m: int = 1
    mc_bound_h: float | None = None
    mc_bound_s: float = 1.0
    sigma_list: tuple[float, ...] = ()
    epsilon_rule: tuple = ("scaled", 25.0)
    r_list: tuple[float, ...] = (1e-3,)
    epsilon0_multiplier: float = 1e-3
    heuristic_top_k: int = 5
    heuristic_h0_multiplier: float = 1e-2
    tiny_multiplier: float = TINY_THRESHOLD_FACTOR
    floor_ratio: float = 1e-16
    instance: str = "I"
    k_list: tuple[int, ...] = ()
    cond: float = 1e3


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _expect(cond: bool, where: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{where}: {msg}")


def _check_keys(doc: dict, allowed: set[str], where: str) -> None:
    unknown = set(doc) - allowed
    _expect(not unknown, where, f"unknown keys {sorted(unknown)}")


def _parse_model(doc, where: str) -> ModelSpec:
    _expect(isinstance(doc, dict), where, "must be an object")
    _check_keys(doc, {"kind", "L", "g", "U", "Ne", "seed"}, where)
    kind = doc.get("kind")
    _expect(kind in ("tfim", "hubbard"), f"{where}.kind", "must be 'tfim' or 'hubbard'")
    _expect(isinstance(doc.get("L"), int), f"{where}.L", "must be an integer")
    if kind == "tfim":
        _expect(
            isinstance(doc.get("g"), (int, float)), f"{where}.g", "must be a number"
        )
        return ModelSpec(kind="tfim", L=doc["L"], g=float(doc["g"]))
    _expect(isinstance(doc.get("U"), (int, float)), f"{where}.U", "must be a number")
    _expect(isinstance(doc.get("Ne"), int), f"{where}.Ne", "must be an integer")
    return ModelSpec(kind="hubbard", L=doc["L"], U=float(doc["U"]), Ne=doc["Ne"])


def _parse_grid(doc, where: str) -> tuple[int, float]:
    _expect(isinstance(doc, dict), where, "must be an object")
    _check_keys(doc, {"kind", "n", "dt"}, where)
    _expect(doc.get("kind", "forward") == "forward", f"{where}.kind", "must be 'forward'")
    n, dt = doc.get("n"), doc.get("dt")
    _expect(isinstance(n, int) and n >= 1, f"{where}.n", "must be a positive integer")
    _expect(
        isinstance(dt, (int, float)) and dt > 0, f"{where}.dt", "must be positive"
    )
    return n, float(dt)


def _parse_epsilon_rule(doc, where: str) -> tuple:
    _expect(isinstance(doc, dict), where, "must be an object")
    kind = doc.get("kind")
    if kind == "fixed":
        _check_keys(doc, {"kind", "values"}, where)
        vals = doc.get("values")
        _expect(
            isinstance(vals, list) and vals and all(isinstance(v, (int, float)) and v >= 0 for v in vals),
            f"{where}.values",
            "must be a nonempty list of nonnegative numbers",
        )
        return ("fixed", tuple(float(v) for v in vals))
    if kind == "scaled":
        _check_keys(doc, {"kind", "multiplier"}, where)
        mult = doc.get("multiplier")
        _expect(
            isinstance(mult, (int, float)) and mult > 0,
            f"{where}.multiplier",
            "must be positive",
        )
        return ("scaled", float(mult))
    raise ConfigError(f"{where}.kind: must be 'fixed' or 'scaled'")


_COMMON_KEYS = {"scenario", "output_path", "trials", "base_seed"}
_SCENARIO_KEYS = {
    "doing-nothing": {"model", "grid", "noise", "sigma_list"},
    "fixed-threshold": {"model", "grid", "noise", "sigma_list", "epsilon_rule"},
    "threshold-sweep": {"model", "grid", "noise", "sigma_list", "epsilon_rule"},
    "threshold-choice": {"model", "grid", "noise", "sigma_list", "epsilon_rule"},
    "auto-threshold": {
        "model", "grid", "noise", "sigma_list", "r_list", "epsilon0_multiplier",
    },
    "heuristics": {
        "model", "grid", "noise", "sigma_list", "heuristic_top_k",
        "heuristic_h0_multiplier", "tiny_multiplier",
    },
    "alpha-scatter": {"model", "grid", "floor_ratio"},
    "noiseless-k": {"instance", "k_list", "epsilon_rule"},
    "bound-validation": {"epsilon_rule", "cond"},
    "tightness": set(),
}


def parse_config(doc: dict, source: str = "config") -> ExperimentConfig:
    """Validate a config document; unknown keys are rejected with the
    offending JSON path named."""
    _expect(isinstance(doc, dict), source, "must be a JSON object")
    scenario = doc.get("scenario")
    _expect(
        scenario in SCENARIOS,
        f"{source}.scenario",
        f"must be one of {', '.join(SCENARIOS)}",
    )
    _check_keys(doc, _COMMON_KEYS | _SCENARIO_KEYS[scenario], source)
    out_path = doc.get("output_path")
    _expect(
        isinstance(out_path, str) and out_path, f"{source}.output_path", "required"
    )
    trials = doc.get("trials", 1)
    _expect(
        isinstance(trials, int) and trials >= 1,
        f"{source}.trials",
        "must be a positive integer",
    )
    base_seed = doc.get("base_seed", 0)
    _expect(
        isinstance(base_seed, int) and 0 <= base_seed < 2**64,
        f"{source}.base_seed",
        "must be a 64-bit unsigned integer",
    )
    kw: dict = {
        "scenario": scenario,
        "output_path": out_path,
        "trials": trials,
        "base_seed": base_seed,
    }

    if scenario in _LATTICE_SCENARIOS:
        _expect("model" in doc, f"{source}.model", "required for this scenario")
        _expect("grid" in doc, f"{source}.grid", "required for this scenario")
        kw["model"] = _parse_model(doc["model"], f"{source}.model")
        kw["grid_n"], kw["grid_dt"] = _parse_grid(doc["grid"], f"{source}.grid")

    if scenario in _NOISE_SCENARIOS:
        sig = doc.get("sigma_list")
        _expect(
            isinstance(sig, list) and sig and all(isinstance(x, (int, float)) and x >= 0 for x in sig),
            f"{source}.sigma_list",
            "must be a nonempty list of nonnegative numbers",
        )
        kw["sigma_list"] = tuple(float(x) for x in sig)
        noise = doc.get("noise", {"model": "toeplitz-gaussian"})
        _expect(isinstance(noise, dict), f"{source}.noise", "must be an object")
        _check_keys(noise, {"model", "m", "bound_h", "bound_s"}, f"{source}.noise")
        nm = noise.get("model", "toeplitz-gaussian")
        _expect(
            nm in ("toeplitz-gaussian", "dense-gaussian", "monte-carlo"),
            f"{source}.noise.model",
            "unknown noise model",
        )
        kw["noise_model"] = nm
        if nm == "monte-carlo":
            m = noise.get("m")
            _expect(
                isinstance(m, int) and m >= 1, f"{source}.noise.m", "must be >= 1"
            )
            kw["mc_m"] = m
            if "bound_h" in noise:
                _expect(
                    isinstance(noise["bound_h"], (int, float)) and noise["bound_h"] > 0,
                    f"{source}.noise.bound_h",
                    "must be positive",
                )
                kw["mc_bound_h"] = float(noise["bound_h"])
            if "bound_s" in noise:
                _expect(
                    isinstance(noise["bound_s"], (int, float)) and noise["bound_s"] > 0,
                    f"{source}.noise.bound_s",
                    "must be positive",
                )
                kw["mc_bound_s"] = float(noise["bound_s"])

    if scenario in ("fixed-threshold", "threshold-sweep", "threshold-choice"):
        _expect("epsilon_rule" in doc, f"{source}.epsilon_rule", "required")
        rule = _parse_epsilon_rule(doc["epsilon_rule"], f"{source}.epsilon_rule")
        if scenario == "threshold-sweep":
            _expect(
                rule[0] == "scaled",
                f"{source}.epsilon_rule.kind",
                "threshold-sweep uses the scaled rule",
            )
        kw["epsilon_rule"] = rule

    if scenario == "auto-threshold":
        rl = doc.get("r_list", [1e-3])
        _expect(
            isinstance(rl, list) and rl and all(isinstance(x, (int, float)) and x > 0 for x in rl),
            f"{source}.r_list",
            "must be a nonempty list of positive numbers",
        )
        kw["r_list"] = tuple(float(x) for x in rl)
        e0m = doc.get("epsilon0_multiplier", 1e-3)
        _expect(
            isinstance(e0m, (int, float)) and e0m > 0,
            f"{source}.epsilon0_multiplier",
            "must be positive",
        )
        kw["epsilon0_multiplier"] = float(e0m)

    if scenario == "heuristics":
        k = doc.get("heuristic_top_k", 5)
        _expect(
            isinstance(k, int) and k >= 1, f"{source}.heuristic_top_k", "must be >= 1"
        )
        kw["heuristic_top_k"] = k
        h0m = doc.get("heuristic_h0_multiplier", 1e-2)
        _expect(
            isinstance(h0m, (int, float)) and h0m > 0,
            f"{source}.heuristic_h0_multiplier",
            "must be positive",
        )
        kw["heuristic_h0_multiplier"] = float(h0m)
        tm = doc.get("tiny_multiplier", TINY_THRESHOLD_FACTOR)
        _expect(
            isinstance(tm, (int, float)) and tm > 0,
            f"{source}.tiny_multiplier",
            "must be positive",
        )
        kw["tiny_multiplier"] = float(tm)

    if scenario == "alpha-scatter":
        fr = doc.get("floor_ratio", 1e-16)
        _expect(
            isinstance(fr, (int, float)) and 0 < fr <= 1,
            f"{source}.floor_ratio",
            "must lie in (0, 1]",
        )
        kw["floor_ratio"] = float(fr)

    if scenario == "noiseless-k":
        inst = doc.get("instance", "I")
        _expect(
            inst in _RATE_INSTANCES,
            f"{source}.instance",
            f"must be one of {', '.join(_RATE_INSTANCES)}",
        )
        kw["instance"] = inst
        kl = doc.get("k_list")
        _expect(
            isinstance(kl, list) and kl and all(isinstance(x, int) and x >= 1 for x in kl),
            f"{source}.k_list",
            "must be a nonempty list of positive integers",
        )
        kw["k_list"] = tuple(kl)
        if "epsilon_rule" in doc:
            rule = _parse_epsilon_rule(doc["epsilon_rule"], f"{source}.epsilon_rule")
            _expect(
                rule[0] == "fixed" and len(rule[1]) == 1,
                f"{source}.epsilon_rule",
                "noiseless-k uses a single fixed value",
            )
            kw["epsilon_rule"] = rule
        else:
            kw["epsilon_rule"] = ("fixed", (1e-6,))

    if scenario == "bound-validation":
        if "epsilon_rule" in doc:
            rule = _parse_epsilon_rule(doc["epsilon_rule"], f"{source}.epsilon_rule")
            _expect(
                rule[0] == "fixed",
                f"{source}.epsilon_rule.kind",
                "bound-validation sweeps fixed values",
            )
            kw["epsilon_rule"] = rule
        else:
            kw["epsilon_rule"] = ("fixed", tuple(np.logspace(-12, -2, 21).tolist()))
        cond = doc.get("cond", 1e3)
        _expect(
            isinstance(cond, (int, float)) and cond >= 1,
            f"{source}.cond",
            "must be at least 1",
        )
        kw["cond"] = float(cond)

    return ExperimentConfig(**kw)


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    """Parse a JSON config file; syntax errors carry line and column."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
        ) from exc
    return parse_config(doc, source=str(path))


# ---------------------------------------------------------------------------
# shared preparation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _LatticeContext:
    pair: DefinitePair
    norm_s: float
    norm_h_op: float
    reference_e: float
    exact_e: float
    max_ritz: float


def _prepare_lattice(config: ExperimentConfig) -> _LatticeContext:
    h_op, phi0 = model_system(config.model)
    grid = TimeGrid.forward(config.grid_n, config.grid_dt)
    mode = "toeplitz" if config.noise_model == "monte-carlo" else "direct"
    inst = build_qsd_instance(h_op, phi0, grid, mode=mode)
    norm_s = spectral_norm(inst.pair.s)
    ref = threshold_solve(
        inst.pair.h, inst.pair.s, TINY_THRESHOLD_FACTOR * norm_s
    )
    return _LatticeContext(
        pair=inst.pair,
        norm_s=norm_s,
        norm_h_op=float(np.abs(inst.energies).max()),
        reference_e=ref.e0,
        exact_e=float(inst.energies[0]),
        max_ritz=float(np.abs(ref.e_all).max()),
    )


def _draw_noisy_pair(
    config: ExperimentConfig, ctx: _LatticeContext, sigma: float, rng: np.random.Generator
) -> tuple[HermitianMatrix, HermitianMatrix]:
    n = ctx.pair.dim
    if config.noise_model == "toeplitz-gaussian":
        dh = toeplitz_gaussian_noise(n, sigma, rng)
        ds = toeplitz_gaussian_noise(n, sigma, rng)
    elif config.noise_model == "dense-gaussian":
        dh = dense_gaussian_hermitian(n, sigma, rng)
        ds = dense_gaussian_hermitian(n, sigma, rng)
    else:  # monte-carlo readout of the Toeplitz first rows
        bound_h = config.mc_bound_h if config.mc_bound_h is not None else ctx.norm_h_op
        row_h = monte_carlo_estimate(ctx.pair.first_row_h, config.mc_m, bound_h, rng)
        row_s = monte_carlo_estimate(
            ctx.pair.first_row_s, config.mc_m, config.mc_bound_s, rng
        )
        return toeplitz_hermitian(row_h), toeplitz_hermitian(row_s)
    return (
        HermitianMatrix(ctx.pair.h.mat + dh.mat),
        HermitianMatrix(ctx.pair.s.mat + ds.mat),
    )


def _flags_str(flags: dict) -> str:
    return ";".join(f"{k}={int(bool(v))}" for k, v in flags.items())


def _trial(
    config: ExperimentConfig,
    *,
    cell: str,
    variant: str = "",
    seed: int = 0,
    sigma: float = float("nan"),
    epsilon: float = float("nan"),
    recovered: float = float("nan"),
    reference: float = float("nan"),
    exact: float = float("nan"),
    bound: float = float("nan"),
    flags: str = "",
    error: str = "",
) -> TrialRecord:
    abs_error = abs(recovered - reference)
    return TrialRecord(
        kind="trial",
        scenario=config.scenario,
        cell=cell,
        variant=variant,
        seed=seed,
        sigma=sigma,
        epsilon=epsilon,
        recovered_e=recovered,
        reference_e=reference,
        exact_e=exact,
        abs_error=abs_error,
        bound=bound,
        hypothesis_flags=flags,
        error=error,
    )


# ---------------------------------------------------------------------------
# scenario task bodies
# ---------------------------------------------------------------------------

def _noise_tasks(config: ExperimentConfig, ctx: _LatticeContext) -> list:
    """Task list for the per-trial noise scenarios, in canonical order."""
    tasks = []
    if config.scenario in ("doing-nothing",):
        cells = [(s, ("zero", 0.0)) for s in config.sigma_list]
    elif config.scenario == "threshold-sweep":
        cells = [(s, ("scaled", config.epsilon_rule[1])) for s in config.sigma_list]
    elif config.scenario in ("fixed-threshold", "threshold-choice"):
        cells = [
            (s, ("fixed", e)) for s in config.sigma_list for e in config.epsilon_rule[1]
        ]
    elif config.scenario == "auto-threshold":
        cells = [(s, ("auto", r)) for s in config.sigma_list for r in config.r_list]
    else:  # heuristics
        cells = [(s, ("tiny", config.tiny_multiplier)) for s in config.sigma_list]
    for sigma, eps_spec in cells:
        for trial in range(config.trials):
            tasks.append((sigma, eps_spec, trial))
    return tasks


def _run_noise_task(
    config: ExperimentConfig, ctx: _LatticeContext, task
) -> list[TrialRecord]:
    sigma, eps_spec, trial = task
    seed = config.base_seed ^ trial
    rng = np.random.default_rng(seed)
    kind, value = eps_spec
    cell = f"sigma={sigma:g}|{kind}={value:g}"
    common = dict(
        cell=cell, seed=seed, sigma=sigma,
        reference=ctx.reference_e, exact=ctx.exact_e,
    )
    try:
        h_t, s_t = _draw_noisy_pair(config, ctx, sigma, rng)
        norm_st = spectral_norm(s_t)
        if kind == "zero":
            rep = threshold_solve(h_t, s_t, 0.0)
            return [_trial(config, epsilon=0.0, recovered=rep.e0, **common)]
        if kind == "fixed":
            rep = threshold_solve(h_t, s_t, value)
            return [_trial(config, epsilon=value, recovered=rep.e0, **common)]
        if kind == "scaled":
            eps = value * sigma * norm_st
            rep = threshold_solve(h_t, s_t, eps)
            return [_trial(config, epsilon=eps, recovered=rep.e0, **common)]
        if kind == "auto":
            eps0 = config.epsilon0_multiplier * norm_st
            trace = auto_threshold_solve(h_t, s_t, eps0, value)
            return [
                _trial(
                    config,
                    variant=f"r={value:g}",
                    epsilon=trace.final_epsilon,
                    recovered=trace.final_energy,
                    flags=f"stop={trace.stop_reason}",
                    **common,
                )
            ]
        # heuristics: six records per draw
        tiny = value * norm_st
        scores = heuristic_scores(h_t, s_t, tiny)
        h0 = config.heuristic_h0_multiplier * norm_st
        out = []
        for strategy in ("a", "b", "c"):
            for metric in ("h1", "h2"):
                picked = heuristic_select(
                    scores, strategy, k=config.heuristic_top_k, h0=h0, metric=metric
                )
                out.append(
                    _trial(
                        config,
                        variant=f"{strategy}:{metric}",
                        epsilon=tiny,
                        recovered=picked,
                        **common,
                    )
                )
        return out
    except QsdThreshError as exc:
        rec = _trial(
            config,
            epsilon=float("nan"),
            recovered=float("inf"),
            error=type(exc).__name__,
            **common,
        )
        return [rec]


def _run_alpha_scatter(config: ExperimentConfig, ctx: _LatticeContext) -> list[TrialRecord]:
    fit = bnd.alpha_fit(ctx.pair.h, ctx.pair.s, config.floor_ratio)
    mu_ref = ctx.max_ritz
    records = []
    for i, (x, y) in enumerate(zip(fit.x, fit.y)):
        curve34 = mu_ref * x**0.75
        curve12 = mu_ref * np.sqrt(x)
        records.append(
            _trial(
                config,
                cell="scatter",
                seed=i,
                sigma=float(x),
                epsilon=config.floor_ratio,
                recovered=float(y),
                reference=float(curve34),
                exact=mu_ref,
                bound=float(curve12),
                flags=f"below34={int(y <= curve34)};below12={int(y <= curve12 * (1 + 1e-10))}",
            )
        )
    return records


def _run_noiseless_k(config: ExperimentConfig) -> list[TrialRecord]:
    op_name, xi_name = _RATE_INSTANCES[config.instance]
    h_op = synthetic_pair(op_name)
    phi0 = synthetic_pair(xi_name)
    eig = hermitian_eig(h_op)
    energies, gammas = overlaps(h_op, phi0, eig=eig)
    m_index = energies.size - 1
    delta_em = float(energies[m_index] - energies[0])
    epsilon = config.epsilon_rule[1][0]
    records = []
    for k in config.k_list:
        grid = TimeGrid.symmetric(k, delta_em)
        kmat = krylov_matrix(h_op, phi0, grid, eig=eig)
        pair = projected_pair(h_op, kmat, mode="direct")
        rep = threshold_solve(pair.h, pair.s, epsilon)
        bound = bnd.a_priori_bound(
            energies, gammas, m_index, k, epsilon, rep.epsilon_total_clipped
        )
        records.append(
            _trial(
                config,
                cell=f"k={k}",
                variant=f"k={k}",
                seed=config.base_seed,
                sigma=0.0,
                epsilon=epsilon,
                recovered=rep.e0,
                reference=float(energies[0]),
                exact=float(energies[0]),
                bound=bound,
            )
        )
    return records


def _run_bound_validation(config: ExperimentConfig) -> list[TrialRecord]:
    pair = synthetic_pair("sm_thresh_only", seed=config.base_seed, cond=config.cond)
    full = threshold_solve(pair.h, pair.s, 0.0)
    c0 = float(np.linalg.norm(full.solution.vectors[:, 0]))
    delta_e = float(full.e_all[-1] - full.e_all[0])
    records = []
    for eps in config.epsilon_rule[1]:
        rep = threshold_solve(pair.h, pair.s, eps)
        ok = 2.0 * np.sqrt(eps) * c0 < 1.0
        bound = (
            bnd.thresholding_only_bound(delta_e, eps, c0) if ok else float("nan")
        )
        records.append(
            _trial(
                config,
                cell=f"eps={eps:g}",
                seed=config.base_seed,
                sigma=0.0,
                epsilon=eps,
                recovered=rep.e0,
                reference=full.e0,
                exact=full.e0,
                bound=bound,
                flags=f"hypothesis={int(ok)}",
            )
        )
    return records


def _run_tightness(config: ExperimentConfig) -> list[TrialRecord]:
    records = []
    for trial in range(config.trials):
        seed = config.base_seed ^ trial
        bundle = synthetic_pair("sm_tightness", seed=seed)
        eps = bundle["epsilon"]
        s_noisy = HermitianMatrix(bundle["s"].mat + bundle["delta_s"].mat)
        chi_h, _, _ = bnd.projection_error_direct(
            bundle["h"], bundle["s"], s_noisy, eps
        )
        eta_s = spectral_norm(bundle["delta_s"])
        lam_desc = np.sort(np.linalg.eigvalsh(bundle["s"].mat))[::-1]
        m = int((lam_desc > eps).sum())
        rho = float(lam_desc[m - 1] / eps - 1.0)
        n = bundle["s"].dim
        mu = bundle["mu"]
        alpha_free = 3.0 * mu * n**3 * (1.0 + 1.0 / rho) * eta_s
        full_bound = bnd.chi_h_bound(
            mu, 0.5, n, rho, spectral_norm(bundle["s"]), eps, eta_s
        )
        in_band = 1e-8 <= chi_h <= 1e-6
        records.append(
            _trial(
                config,
                cell=f"seed={trial}",
                seed=seed,
                sigma=eta_s,
                epsilon=eps,
                recovered=chi_h,
                reference=alpha_free,
                exact=0.0,
                bound=full_bound,
                flags=f"in_band={int(in_band)};above_alpha_free={int(chi_h > alpha_free)}",
            )
        )
    return records


# ---------------------------------------------------------------------------
# driver, CSV output, summaries
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _as_row(rec: TrialRecord) -> list[str]:
    return [
        rec.kind,
        rec.scenario,
        rec.cell,
        rec.variant,
        str(rec.seed),
        _fmt(rec.sigma),
        _fmt(rec.epsilon),
        _fmt(rec.recovered_e),
        _fmt(rec.reference_e),
        _fmt(rec.exact_e),
        _fmt(rec.abs_error),
        _fmt(rec.bound),
        rec.hypothesis_flags,
        rec.error,
    ]


def _summaries(records: list[TrialRecord]) -> list[TrialRecord]:
    cells: dict[tuple[str, str], list[TrialRecord]] = {}
    order: list[tuple[str, str]] = []
    for rec in records:
        key = (rec.cell, rec.variant)
        if key not in cells:
            cells[key] = []
            order.append(key)
        cells[key].append(rec)
    out = []
    for key in order:
        group = cells[key]
        errs = np.array([r.abs_error for r in group])
        for kind, stat in (("median", float(np.median(errs))), ("max", float(errs.max()))):
            first = group[0]
            out.append(
                TrialRecord(
                    kind=kind,
                    scenario=first.scenario,
                    cell=first.cell,
                    variant=first.variant,
                    seed=-1,
                    sigma=first.sigma,
                    epsilon=float("nan"),
                    recovered_e=float("nan"),
                    reference_e=first.reference_e,
                    exact_e=first.exact_e,
                    abs_error=stat,
                    bound=float("nan"),
                    hypothesis_flags="",
                    error="",
                )
            )
    return out


def _worker_count() -> int:
    raw = os.environ.get("QSDTHRESH_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_scenario(config: ExperimentConfig) -> list[TrialRecord]:
    """Execute a scenario, write its CSV to ``config.output_path``, and
    return the trial records (summary rows appear in the file only)."""
    if config.scenario in _NOISE_SCENARIOS:
        ctx = _prepare_lattice(config)
        tasks = _noise_tasks(config, ctx)
        workers = _worker_count()
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                chunks = list(pool.map(lambda t: _run_noise_task(config, ctx, t), tasks))
        else:
            chunks = [_run_noise_task(config, ctx, t) for t in tasks]
        records = [rec for chunk in chunks for rec in chunk]
        with_summaries = True
    elif config.scenario == "alpha-scatter":
        ctx = _prepare_lattice(config)
        records = _run_alpha_scatter(config, ctx)
        with_summaries = False
    elif config.scenario == "noiseless-k":
        records = _run_noiseless_k(config)
        with_summaries = False
    elif config.scenario == "bound-validation":
        records = _run_bound_validation(config)
        with_summaries = False
    else:  # tightness
        records = _run_tightness(config)
        with_summaries = True

    rows = records + (_summaries(records) if with_summaries else [])
    with open(config.output_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in rows:
            writer.writerow(_as_row(rec))
    return records


def read_records(path: str | os.PathLike) -> list[dict]:
    """Independent CSV reader: list of dicts with floats parsed back."""
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            parsed: dict = dict(row)
            for key in (
                "sigma", "epsilon", "recovered_E", "reference_E",
                "exact_E", "abs_error", "bound",
            ):
                parsed[key] = float(row[key])
            parsed["seed"] = int(row["seed"])
            out.append(parsed)
    return out


def cache_pair(config: ExperimentConfig, path: str | os.PathLike, mode: str = "toeplitz") -> None:
    """Build the exact pair of a lattice config and store it as JSON."""
    if config.model is None:
        raise ConfigError("cache_pair needs a lattice model in the config")
    h_op, phi0 = model_system(config.model)
    grid = TimeGrid.forward(config.grid_n, config.grid_dt)
    inst = build_qsd_instance(h_op, phi0, grid, mode=mode)
    meta = {
        "model": {
            "kind": config.model.kind,
            "L": config.model.L,
            "g": config.model.g,
            "U": config.model.U,
            "Ne": config.model.Ne,
        },
        "grid": {"kind": "forward", "n": config.grid_n, "dt": config.grid_dt},
    }
    save_pair(inst.pair, path, meta=meta)
