"""Scenario execution, adversarial demon search, guarantee probe, reports.

run_scenario drives the pipeline selected by the scenario's mode:
classify -> predict -> (sweep mode) exact sweep + fit + coefficient
agreement; demon/probe modes run the corresponding searches. Reports are
deterministic for fixed configuration and seeds.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .criteria import Guarantee, GuaranteeVerdict, Witness, classify
from .errors import EnergyViolation, PreconditionViolated, ScatentropyError
from .linalg import eig_hermitian, max_abs
from .oracle import SweepFit, evolve_exact, exact_delta_entropy, sweep_and_fit
from .perturb import PerturbativePrediction, predict, thermal_delta_s
from .qstate import (
    BipartiteState,
    a_spectral_data,
    gray_zone_eigenvalues,
    von_neumann_entropy,
)
from .scenarios import (
    ScenarioConfig,
    StructuredTSpec,
    ThermalStateSpec,
    build_h2,
    build_state,
    build_t1,
    t_sampler,
)
from .smatrix import complete_second_order, exact_s, sample_hermitian

PROBE_LAMBDA = 1e-3
GUARANTEE_TOL = 1e-10
REL_ERR_FLOOR = 1e-12
GRAY_ZONE_KERNEL_TOL = 1e-6
DEMON_STAGNATION_LIMIT = 20


@dataclass(frozen=True)
class OracleSanity:
    """Worst-case exact-evolution defects across the sweep."""

    trace_defect: float
    spectrum_defect: float
    full_entropy_defect: float


@dataclass(frozen=True)
class DemonResult:
    best_delta_s: float
    best_t1: np.ndarray
    trace: tuple[tuple[int, float], ...]
    samples_used: int
    lam: float
    seed: int


@dataclass(frozen=True)
class ProbeResult:
    min_delta_s: float
    argmin_sample: int
    samples: int
    lam: float
    seed: int


@dataclass(frozen=True)
class Report:
    config: ScenarioConfig
    verdict: GuaranteeVerdict
    prediction: PerturbativePrediction | None = None
    wide_kernel_prediction: PerturbativePrediction | None = None
    fit: SweepFit | None = None
    agreements: tuple[tuple[str, float], ...] = field(default=())
    oracle_sanity: OracleSanity | None = None
    thermal_coeff: float | None = None
    demon: DemonResult | None = None
    probe: ProbeResult | None = None
    warnings: tuple[str, ...] = field(default=())
    seeds: tuple[tuple[str, int], ...] = field(default=())

    @property
    def guarantee_violation(self) -> bool:
        """True when a search found dS < -tolerance under a StrictIncrease verdict."""
        if self.verdict.overall is not Guarantee.STRICT_INCREASE:
            return False
        found = []
        if self.probe is not None:
            found.append(self.probe.min_delta_s)
        if self.demon is not None:
            found.append(self.demon.best_delta_s)
        return any(x < -GUARANTEE_TOL for x in found)


def _rel_err(pred: float, fitted: float) -> float:
    return abs(pred - fitted) / max(abs(fitted), REL_ERR_FLOOR)


def _sanity(state: BipartiteState, t1: np.ndarray, lambdas) -> OracleSanity:
    spectrum_in = eig_hermitian(0.5 * (state.rho + state.rho.conj().T)).eigenvalues
    entropy_in = von_neumann_entropy(state.rho)
    worst_trace = 0.0
    worst_spec = 0.0
    worst_entropy = 0.0
    for lam in lambdas:
        out = evolve_exact(state, exact_s(t1, lam))
        worst_trace = max(worst_trace, abs(complex(np.trace(out.rho)) - 1.0))
        spectrum_out = eig_hermitian(0.5 * (out.rho + out.rho.conj().T)).eigenvalues
        worst_spec = max(worst_spec, max_abs(spectrum_out - spectrum_in))
        worst_entropy = max(worst_entropy, abs(von_neumann_entropy(out.rho) - entropy_in))
    return OracleSanity(
        trace_defect=worst_trace,
        spectrum_defect=worst_spec,
        full_entropy_defect=worst_entropy,
    )


def _predictions(cfg: ScenarioConfig, state: BipartiteState, pair):
    """Primary prediction, optional wide-kernel variant, and warnings."""
    adata = a_spectral_data(state, cfg.kernel_tol, cfg.degen_tol)
    gray = gray_zone_eigenvalues(adata, GRAY_ZONE_KERNEL_TOL)
    warnings: list[str] = []
    if not gray:
        return predict(state, pair, adata, commutator_tol=cfg.commutator_tol), None, ()
    warnings.append(
        f"reduced eigenvalues {tuple(gray)} lie between kernel_tol and "
        f"{GRAY_ZONE_KERNEL_TOL:g}; reporting both branch readings"
    )
    wide = a_spectral_data(state, GRAY_ZONE_KERNEL_TOL, cfg.degen_tol)
    wide_prediction = predict(state, pair, wide, commutator_tol=cfg.commutator_tol)
    try:
        strict = predict(state, pair, adata, commutator_tol=cfg.commutator_tol, gray_guard=False)
    except PreconditionViolated:
        strict = None
        warnings.append("strict-kernel prediction unavailable for this state")
    return strict, wide_prediction, tuple(warnings)


def run_scenario(
    cfg: ScenarioConfig,
    *,
    budget: int = 500,
    samples: int = 1000,
    seed: int = 0,
) -> Report:
    """Execute the pipeline for the scenario's mode and assemble the report.

    Module errors are re-raised with the scenario name prepended, keeping
    their type (and hence the CLI exit code) intact.
    """
    try:
        return _run_scenario(cfg, budget=budget, samples=samples, seed=seed)
    except ScatentropyError as exc:
        if str(exc).startswith(f"[{cfg.name}]"):
            raise
        raise type(exc)(f"[{cfg.name}] {exc}") from exc


def _run_scenario(cfg: ScenarioConfig, *, budget: int, samples: int, seed: int) -> Report:
    state = build_state(cfg)
    t1 = build_t1(cfg)
    pair = complete_second_order(t1, build_h2(cfg), d_a=cfg.d_a, d_b=cfg.d_b)
    verdict = classify(
        state,
        t1,
        kernel_tol=cfg.kernel_tol,
        degen_tol=cfg.degen_tol,
        commutator_tol=cfg.commutator_tol,
    )
    seeds = [("run_seed", seed)]
    if hasattr(cfg.t, "seed"):
        seeds.append(("t_seed", cfg.t.seed))

    if cfg.mode == "check":
        return Report(config=cfg, verdict=verdict, seeds=tuple(seeds))

    if cfg.mode == "probe":
        probe = guarantee_probe(cfg, samples, seed, state=state, verdict=verdict)
        return Report(config=cfg, verdict=verdict, probe=probe, seeds=tuple(seeds))

    prediction, wide_prediction, warnings = _predictions(cfg, state, pair)

    thermal_coeff = None
    if isinstance(cfg.state, ThermalStateSpec) and isinstance(cfg.t, StructuredTSpec):
        try:
            thermal_coeff = thermal_delta_s(
                cfg.state.a_energies, cfg.state.beta, cfg.state.b_index, t1, cfg.state.b_energies
            )
        except EnergyViolation as exc:
            warnings = warnings + (f"thermal closed form not applicable: {exc}",)

    if cfg.mode == "demon":
        demon = demon_search(cfg, budget, seed, state=state)
        return Report(
            config=cfg,
            verdict=verdict,
            prediction=prediction,
            wide_kernel_prediction=wide_prediction,
            thermal_coeff=thermal_coeff,
            demon=demon,
            warnings=warnings,
            seeds=tuple(seeds),
        )

    if cfg.mode == "predict":
        return Report(
            config=cfg,
            verdict=verdict,
            prediction=prediction,
            wide_kernel_prediction=wide_prediction,
            thermal_coeff=thermal_coeff,
            warnings=warnings,
            seeds=tuple(seeds),
        )

    # sweep
    fit = sweep_and_fit(state, t1, cfg.lambdas)
    sanity = _sanity(state, t1, cfg.lambdas)
    agreements = []
    if prediction is not None:
        agreements.append(("a", _rel_err(prediction.order1_coeff, fit.a)))
        if prediction.log_coeff is not None:
            agreements.append(("b", _rel_err(prediction.log_coeff, fit.b)))
        if prediction.order2_coeff is not None:
            agreements.append(("c", _rel_err(prediction.order2_coeff, fit.c)))
    return Report(
        config=cfg,
        verdict=verdict,
        prediction=prediction,
        wide_kernel_prediction=wide_prediction,
        fit=fit,
        agreements=tuple(agreements),
        oracle_sanity=sanity,
        thermal_coeff=thermal_coeff,
        warnings=warnings,
        seeds=tuple(seeds),
    )


def demon_search(
    cfg: ScenarioConfig,
    budget: int,
    seed: int,
    *,
    state: BipartiteState | None = None,
) -> DemonResult:
    """Random-restart adversarial search for the most entropy-decreasing T1.

    Moves: fresh Gaussian Hermitian restarts, sign flips of the incumbent,
    and single-coordinate Hermitian perturbations whose step halves after
    20 stagnant evaluations. The objective is the exact dS at the scenario's
    adversarial coupling (demon_lambda); best-effort, no failure modes.
    """
    if budget < 1:
        raise PreconditionViolated("demon budget must be >= 1")
    if state is None:
        state = build_state(cfg)
    lam = cfg.demon_lambda
    dim = cfg.dim
    rng = np.random.default_rng(seed)
    best_t1 = None
    best = math.inf
    step = 1.0
    stagnant = 0
    trace: list[tuple[int, float]] = []
    for k in range(budget):
        if best_t1 is None:
            candidate = sample_hermitian(rng, dim)
        else:
            move = rng.random()
            if move < 0.3:
                candidate = sample_hermitian(rng, dim)
            elif move < 0.4:
                candidate = -best_t1
            else:
                candidate = best_t1.copy()
                i = int(rng.integers(dim))
                j = int(rng.integers(dim))
                if i == j:
                    candidate[i, i] += step * rng.standard_normal()
                else:
                    g1, g2 = rng.standard_normal(2)
                    bump = 0.5 * step * (g1 + 1j * g2)
                    candidate[i, j] += bump
                    candidate[j, i] += np.conj(bump)
        value = exact_delta_entropy(state, candidate, lam)
        if value < best:
            best = value
            best_t1 = candidate
            stagnant = 0
            trace.append((k, value))
        else:
            stagnant += 1
            if stagnant >= DEMON_STAGNATION_LIMIT:
                step *= 0.5
                stagnant = 0
    return DemonResult(
        best_delta_s=best,
        best_t1=best_t1,
        trace=tuple(trace),
        samples_used=budget,
        lam=lam,
        seed=seed,
    )


def guarantee_probe(
    cfg: ScenarioConfig,
    samples: int,
    seed: int,
    *,
    state: BipartiteState | None = None,
    verdict: GuaranteeVerdict | None = None,
    lam: float = PROBE_LAMBDA,
) -> ProbeResult:
    """Minimum exact dS over sampled T1 at lam = 1e-3.

    Only defined for scenarios classified StrictIncrease or
    NonNegativeAtLogOrder; raises PreconditionViolated otherwise.
    """
    if samples < 1:
        raise PreconditionViolated("probe needs at least one sample")
    if state is None:
        state = build_state(cfg)
    if verdict is None:
        verdict = classify(
            state,
            build_t1(cfg),
            kernel_tol=cfg.kernel_tol,
            degen_tol=cfg.degen_tol,
            commutator_tol=cfg.commutator_tol,
        )
    if verdict.overall is Guarantee.NO_GUARANTEE:
        raise PreconditionViolated("guarantee probe requires a guarantee-class verdict")
    sampler = t_sampler(cfg, seed)
    best = math.inf
    argmin = -1
    for k in range(samples):
        value = exact_delta_entropy(state, sampler(k), lam)
        if value < best:
            best = value
            argmin = k
    return ProbeResult(min_delta_s=best, argmin_sample=argmin, samples=samples, lam=lam, seed=seed)


# ------------------------------------------------------------- rendering

def _witness_dict(w: Witness) -> dict:
    return {"kind": w.kind, "indices": list(w.indices), "defect": w.defect}


def _prediction_dict(p: PerturbativePrediction) -> dict:
    return {
        "order1_coeff": p.order1_coeff,
        "log_coeff": p.log_coeff,
        "order2_coeff": p.order2_coeff,
        "branch": p.branch.value,
        "nonkernel_order2_partial": p.nonkernel_order2_partial,
        "order2_excluded_pairs": [list(pair) for pair in p.order2_excluded_pairs],
        "shifts": [
            {
                "indices": list(s.indices),
                "eigenvalue": s.eigenvalue,
                "order1": list(s.order1),
                "order2": list(s.order2),
            }
            for s in p.shifts
        ],
    }


def _complex_matrix_list(m: np.ndarray) -> list:
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def report_to_dict(report: Report) -> dict:
    """Full JSON-serializable report with tolerances and seeds echoed."""
    cfg = report.config
    out: dict = {
        "scenario": cfg.name,
        "mode": cfg.mode,
        "dA": cfg.d_a,
        "dB": cfg.d_b,
        "tolerances": {
            "kernel_tol": cfg.kernel_tol,
            "degen_tol": cfg.degen_tol,
            "commutator_tol": cfg.commutator_tol,
        },
        "lambda_grid": list(cfg.lambdas),
        "seeds": {name: value for name, value in report.seeds},
        "verdict": {
            "kernel_nonempty": report.verdict.kernel_nonempty,
            "commutation_ok": report.verdict.commutation_ok,
            "t_mixes_kernel": report.verdict.t_mixes_kernel,
            "t_nontrivial_on_b": report.verdict.t_nontrivial_on_b,
            "overall": report.verdict.overall.value,
            "witnesses": [_witness_dict(w) for w in report.verdict.witnesses],
        },
        "warnings": list(report.warnings),
        "guarantee_violation": report.guarantee_violation,
    }
    if report.prediction is not None:
        out["prediction"] = _prediction_dict(report.prediction)
    if report.wide_kernel_prediction is not None:
        out["wide_kernel_prediction"] = _prediction_dict(report.wide_kernel_prediction)
    if report.thermal_coeff is not None:
        out["thermal_coeff"] = report.thermal_coeff
    if report.fit is not None:
        fit = report.fit
        out["fit"] = {
            "a": fit.a,
            "b": fit.b,
            "c": fit.c,
            "lambda_grid": list(fit.lambda_grid),
            "delta_s": list(fit.delta_s),
            "residual_max": fit.residual_max,
            "condition_estimate": fit.condition_estimate,
        }
        out["agreements"] = {name: value for name, value in report.agreements}
    if report.oracle_sanity is not None:
        out["oracle_sanity"] = {
            "trace_defect": report.oracle_sanity.trace_defect,
            "spectrum_defect": report.oracle_sanity.spectrum_defect,
            "full_entropy_defect": report.oracle_sanity.full_entropy_defect,
        }
    if report.demon is not None:
        out["demon"] = {
            "best_delta_s": report.demon.best_delta_s,
            "lambda": report.demon.lam,
            "seed": report.demon.seed,
            "samples_used": report.demon.samples_used,
            "trace": [[k, v] for k, v in report.demon.trace],
            "best_t1": _complex_matrix_list(report.demon.best_t1),
        }
    if report.probe is not None:
        out["probe"] = {
            "min_delta_s": report.probe.min_delta_s,
            "argmin_sample": report.probe.argmin_sample,
            "samples": report.probe.samples,
            "lambda": report.probe.lam,
            "seed": report.probe.seed,
        }
    return out


def report_to_json(report: Report) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True)


def _fmt(x: float | None) -> str:
    return "n/a" if x is None else f"{x: .6e}"


def render_text(report: Report) -> str:
    """Human-readable report."""
    cfg = report.config
    lines = [
        f"scenario: {cfg.name}  (mode={cfg.mode}, dA={cfg.d_a}, dB={cfg.d_b})",
        f"tolerances: kernel_tol={cfg.kernel_tol:g} degen_tol={cfg.degen_tol:g} "
        f"commutator_tol={cfg.commutator_tol:g}",
        f"seeds: {', '.join(f'{k}={v}' for k, v in report.seeds) or 'none'}",
        f"verdict: {report.verdict.overall.value}"
        f"  [kernel={report.verdict.kernel_nonempty}"
        f" commutes={report.verdict.commutation_ok}"
        f" t_mixes={report.verdict.t_mixes_kernel}"
        f" t_nontrivial_b={report.verdict.t_nontrivial_on_b}]",
    ]
    if report.verdict.witnesses:
        worst = max(report.verdict.witnesses, key=lambda w: w.defect)
        lines.append(
            f"witnesses: {len(report.verdict.witnesses)} "
            f"(worst {worst.kind} at {worst.indices}: {worst.defect:.3e})"
        )
    for label, pred in (
        ("prediction", report.prediction),
        ("wide-kernel prediction", report.wide_kernel_prediction),
    ):
        if pred is not None:
            lines.append(
                f"{label}: branch={pred.branch.value}  a={_fmt(pred.order1_coeff)}"
                f"  b={_fmt(pred.log_coeff)}  c={_fmt(pred.order2_coeff)}"
            )
            if pred.nonkernel_order2_partial is not None:
                lines.append(
                    f"  non-kernel analytic partial: {_fmt(pred.nonkernel_order2_partial)}"
                )
    if report.thermal_coeff is not None:
        lines.append(f"thermal closed form c: {_fmt(report.thermal_coeff)}")
    if report.fit is not None:
        fit = report.fit
        lines.append(
            f"fit: a={_fmt(fit.a)}  b={_fmt(fit.b)}  c={_fmt(fit.c)}"
            f"  residual_max={fit.residual_max:.3e}  cond={fit.condition_estimate:.3e}"
        )
        for name, value in report.agreements:
            lines.append(f"  agreement[{name}]: rel err {value:.3e}")
    if report.oracle_sanity is not None:
        s = report.oracle_sanity
        lines.append(
            f"oracle sanity: trace {s.trace_defect:.3e}  spectrum {s.spectrum_defect:.3e}"
            f"  full-entropy {s.full_entropy_defect:.3e}"
        )
    if report.demon is not None:
        d = report.demon
        lines.append(
            f"demon: best dS = {d.best_delta_s:.6e} at lambda={d.lam:g} "
            f"({d.samples_used} samples, seed {d.seed}, {len(d.trace)} improvements)"
        )
    if report.probe is not None:
        p = report.probe
        lines.append(
            f"probe: min dS = {p.min_delta_s:.6e} at lambda={p.lam:g} "
            f"(sample {p.argmin_sample} of {p.samples}, seed {p.seed})"
        )
    for warning in report.warnings:
        lines.append(f"warning: {warning}")
    if report.guarantee_violation:
        lines.append("GUARANTEE VIOLATION: dS below -1e-10 under a StrictIncrease verdict")
    return "\n".join(lines)


def render_csv(reports) -> str:
    """Per-lambda sweep rows: scenario, lambda, exact dS, fitted model, residual."""
    buffer = io.StringIO()
    if isinstance(reports, Report):
        reports = [reports]
    writer = csv.writer(buffer)
    writer.writerow(["scenario", "lambda", "delta_s_exact", "model_value", "residual"])
    for report in reports:
        if report.fit is None:
            continue
        for lam, exact in zip(report.fit.lambda_grid, report.fit.delta_s):
            model = report.fit.model(lam)
            writer.writerow(
                [report.config.name, repr(lam), repr(exact), repr(model), repr(float(exact - model))]
            )
    return buffer.getvalue()


def write_csv(reports, path) -> None:
    """Write render_csv output to a file."""
    with open(path, "w", newline="") as handle:
        handle.write(render_csv(reports))
