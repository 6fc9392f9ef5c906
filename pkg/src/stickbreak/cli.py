"""Batch command-line front end: validated YAML experiment configs in, CSV tables and a manifest out."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import __version__
from .bounds import eta, functional_bound, strong_error_bound, wasserstein_bound
from .distributions import derive_stream
from .errors import ConfigError, NumericFailure, ParameterDomainError
from .estimators import (
    chebyshev_ci, clt_ci, debias_law, fit_slope, ladder_statistics, mc_estimate, mc_estimate_many,
    mlmc_calibrate, mlmc_estimate, popoviciu_variance_bound, unbiased_estimate,
)
from .levy_models import LevyModel, make_model, model_summary
from .oracles import reference_value
from .payoffs import Payoff, payoff_metadata
from .samplers import sba_sample

JOBS = ("sample", "estimate", "mlmc", "unbiased", "bounds", "convergence", "figure1", "figure2", "figure3")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


# ---------------------------------------------------------------- config schema


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class _ModelSpec(_Strict):
    @model_validator(mode="after")
    def _domain(self):
        try:
            self.build()
        except ParameterDomainError as exc:
            raise ValueError(str(exc)) from None
        return self

    def build(self) -> LevyModel:
        params = self.model_dump(exclude={"kind"})
        return make_model(self.kind, **params)


class BrownianSpec(_ModelSpec):
    kind: Literal["BrownianDrift"]
    sigma: float = Field(gt=0)
    mu: float = 0.0


class JumpDiffusionSpec(_ModelSpec):
    kind: Literal["JumpDiffusion"]
    sigma: float = Field(gt=0)
    mu: float = 0.0
    intensity: float = Field(gt=0)
    jump_mean: float = 0.0
    jump_sd: float = Field(gt=0)


class VarianceGammaSpec(_ModelSpec):
    kind: Literal["VarianceGamma"]
    sigma: float = Field(gt=0)
    theta: float = 0.0
    kappa: float = Field(gt=0)
    b: float = 0.0


class NIGSpec(_ModelSpec):
    kind: Literal["NIG"]
    sigma: float = Field(gt=0)
    theta: float = 0.0
    kappa: float = Field(gt=0)
    b: float = 0.0


class TSBMSpec(_ModelSpec):
    kind: Literal["TemperedStableSubordinatedBM"]
    alpha: float = Field(ge=0, lt=1)
    gamma: float = Field(gt=0)
    lam: float = Field(gt=0)
    sigma_z: float = Field(ge=0)
    b: float = 0.0


ModelSpec = Annotated[Union[BrownianSpec, JumpDiffusionSpec, VarianceGammaSpec, NIGSpec, TSBMSpec],
                      Field(discriminator="kind")]


class PayoffSpec(_Strict):
    kind: Literal["lookback_put", "hindsight_put", "hindsight_call", "up_and_out_call",
                  "perpetual_put_factor", "raw_supremum", "raw_tau"]
    S0: float = Field(1.0, gt=0)
    K0: float = Field(0.0, ge=0)
    M: Optional[float] = Field(None, gt=0)
    r: float = Field(0.0, ge=0)

    def build(self, T: float, kind: Optional[str] = None) -> Payoff:
        M = math.inf if self.M is None else self.M
        return Payoff(kind or self.kind, self.S0, self.K0, M, self.r, T)


class JobParams(_Strict):
    n: int = Field(20, ge=0)
    N: int = Field(10_000, ge=2)
    levels: list[Annotated[int, Field(ge=0)]] = [1, 2, 4, 8, 12, 16, 20]
    ci_kind: Literal["clt", "chebyshev", "none"] = "clt"
    ci_level: float = Field(0.99, gt=0, lt=1)
    method: Literal["sba", "rwa"] = "sba"
    epsilons: list[Annotated[float, Field(gt=0)]] = [2.0**-5, 2.0**-6, 2.0**-7]
    replications: int = Field(1, ge=1)
    pilot_levels: int = Field(12, ge=4)
    pilot_N: int = Field(100_000, ge=2)
    fit_from: int = Field(3, ge=1)
    law: Literal["ST", "IS"] = "ST"
    n_ref: int = Field(30, ge=30)
    N_ref: int = Field(0, ge=0)
    p_values: list[Annotated[float, Field(gt=0)]] = [1.0, 2.0]
    rwa_max_level: int = Field(12, ge=0, le=24)
    delta: float = Field(0.05, gt=0, lt=1)
    batch_size: int = Field(100_000, ge=1)


class ExperimentConfig(_Strict):
    job: Optional[Literal[JOBS]] = None
    model: ModelSpec
    payoff: Optional[PayoffSpec] = None
    T: float = Field(1.0, gt=0)
    seed: int = Field(0, ge=0, lt=2**64)
    output: str = "out"
    workers: int = Field(1, ge=1)
    params: JobParams = JobParams()

    @model_validator(mode="after")
    def _payoff_domain(self):
        if self.payoff is not None:
            try:
                self.payoff.build(self.T)
            except ParameterDomainError as exc:
                raise ValueError(f"payoff: {exc}") from None
        if self.job not in (None, "sample", "bounds") and self.payoff is None:
            raise ValueError(f"job {self.job!r} needs a payoff")
        return self


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "; ".join(lines)


def parse_config(text: str) -> ExperimentConfig:
    """Strictly validated config from YAML text; errors carry the offending key path."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"<document>: malformed YAML ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError("<document>: top level must be a mapping")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def serialize_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(serialize_config(config).encode()).hexdigest()


# ---------------------------------------------------------------- output helpers


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, header: list[str], rows: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


class _Job:
    def __init__(self, config: ExperimentConfig, out: Path):
        self.cfg = config
        self.p = config.params
        self.out = out
        self.model = config.model.build()
        self.payoff = config.payoff.build(config.T) if config.payoff else None
        self.rng = derive_stream(config.seed, 0)
        self.cost = 0
        self.files: list[str] = []
        self.extra: dict = {}

    def emit(self, name: str, header: list[str], rows: list) -> None:
        write_csv(self.out / name, header, rows)
        self.files.append(name)

    def mc(self, payoffs, n, N, key, method="sba"):
        res = mc_estimate_many(self.model, payoffs, self.cfg.T, n, N, self.rng.derive(key, n),
                               ci_kind="none", ci_level=self.p.ci_level, method=method,
                               workers=self.cfg.workers, batch_size=self.p.batch_size)
        self.cost += res[0].cost
        return res

    def reference(self, payoff) -> tuple[float, float]:
        if self.p.N_ref == 0:
            return math.nan, math.nan
        value, se, _ = reference_value(self.model, payoff, self.cfg.T, self.p.n_ref, self.p.N_ref,
                                       self.rng.derive(90), workers=self.cfg.workers)
        self.cost += self.p.N_ref * (self.p.n_ref + 1)
        return value, se


def _job_sample(job: _Job) -> None:
    p = job.p
    rows = []
    start = 0
    for b in range(math.ceil(p.N / p.batch_size)):
        size = min(p.batch_size, p.N - start)
        chi = sba_sample(job.model, job.cfg.T, p.n, job.rng.derive(1, b), size=size)
        for i in range(size):
            rows.append((start + i, float(chi.position[i]), float(chi.supremum[i]), float(chi.tau[i])))
        start += size
    job.cost += p.N * (p.n + 1)
    job.emit("sample.csv", ["index", "position", "supremum", "tau"], rows)


def _ci_for(job: _Job, payoff: Payoff, res, n: int):
    p = job.p
    if p.ci_kind == "clt":
        return clt_ci(res.estimate, res.std_error, p.ci_level)
    if p.ci_kind == "none":
        return None
    meta = payoff_metadata(payoff)
    if meta.payoff_class != "lipschitz" or not meta.bounded:
        raise ConfigError("params.ci_kind: chebyshev intervals need a bounded Lipschitz payoff")
    r1 = functional_bound("lipschitz", meta.bound_inputs(1.0), job.model, job.cfg.T, n, p.delta)
    var = popoviciu_variance_bound(meta.value_range)
    return chebyshev_ci(res.estimate, var, res.n_samples, 1 - p.ci_level, r1, meta.nonincreasing_in_supremum)


def _job_estimate(job: _Job) -> None:
    p = job.p
    res = job.mc([job.payoff], p.n, p.N, 2, method=p.method)[0]
    ci = _ci_for(job, job.payoff, res, p.n)
    lo, hi = (ci.lo, ci.hi) if ci else (math.nan, math.nan)
    job.emit("estimate.csv", ["n", "N", "estimate", "std_error", "ci_lo", "ci_hi", "ci_level", "ci_kind", "cost"],
             [(p.n, p.N, res.estimate, res.std_error, lo, hi, p.ci_level, p.ci_kind, res.cost)])


def _mlmc_rows(job: _Job, key: int) -> list:
    p, T = job.p, job.cfg.T
    cal = mlmc_calibrate(job.model, job.payoff, T, p.pilot_levels, p.pilot_N, job.rng.derive(key),
                         fit_from=p.fit_from, workers=job.cfg.workers, batch_size=p.batch_size)
    job.cost += cal.cost
    job.extra["calibration"] = {"c1": cal.c1, "q1": cal.q1, "c2": cal.c2, "q2": cal.q2}
    ref, _ = job.reference(job.payoff)
    rows = []
    for i, eps in enumerate(p.epsilons):
        plan = cal.plan(eps)
        for rep in range(p.replications):
            res = mlmc_estimate(job.model, job.payoff, T, plan, job.rng.derive(key + 1, i, rep),
                                workers=job.cfg.workers, batch_size=p.batch_size)
            job.cost += res.cost
            rows.append((eps, plan.n_levels, res.cost, res.estimate, ref, res.estimate - ref))
    return rows


MLMC_HEADER = ["epsilon", "n_levels", "total_cost", "estimate", "ref", "error"]
CONVERGENCE_HEADER = ["n", "mean", "variance", "bias_vs_ref", "level_var", "cost"]


def _job_mlmc(job: _Job) -> None:
    job.emit("mlmc.csv", MLMC_HEADER, _mlmc_rows(job, 3))


def _convergence(job: _Job, prefix: str) -> None:
    p, T = job.p, job.cfg.T
    L = p.pilot_levels
    gs, ds = ladder_statistics(job.model, job.payoff, T, L, p.pilot_N, job.rng.derive(5),
                               job.cfg.workers, p.batch_size)
    job.cost += p.pilot_N * (L + 1)
    ref, _ = job.reference(job.payoff)
    target = gs[-1].mean if math.isnan(ref) else ref
    rows = [(g.level, g.mean, g.variance, g.mean - target, d.variance, p.pilot_N * (g.level + 1))
            for g, d in zip(gs, ds)]
    job.emit(f"{prefix}.csv", CONVERGENCE_HEADER, rows)
    if L - p.fit_from < 2:
        raise ConfigError("params.fit_from: need at least three levels to fit")
    fits = []
    for name, ys in (("log2_abs_mean_diff", [abs(d.mean) for d in ds]),
                     ("log2_var_diff", [d.variance for d in ds])):
        # levels whose statistic vanished in the sample carry no slope information
        ks = [k for k in range(p.fit_from, L + 1) if ys[k] > 0]
        if len(ks) < 3:
            raise NumericFailure(f"{name}: fewer than three levels with nonzero statistics; increase pilot_N")
        slope, _, se = fit_slope(ks, [math.log2(ys[k]) for k in ks])
        fits.append((name, slope, se, ks[0], ks[-1]))
    job.emit(f"{prefix}_fit.csv", ["quantity", "slope", "slope_se", "fit_from", "fit_to"], fits)


def _job_convergence(job: _Job) -> None:
    _convergence(job, "convergence")


def _job_unbiased(job: _Job) -> None:
    p = job.p
    meta = payoff_metadata(job.payoff)
    constants: dict = {}
    if meta.payoff_class == "loclip":
        constants = {"q": 2.0}
    elif meta.payoff_class == "barrier":
        constants = {"gamma": 1.0, "q": 1.0, "eta_q": eta(model_summary(job.model, p.delta), 1.0)}
    law = debias_law(p.law, meta.payoff_class, constants)
    rows = []
    for rep in range(p.replications):
        res = unbiased_estimate(job.model, job.payoff, job.cfg.T, law, p.N, job.rng.derive(6, rep))
        job.cost += res.cost
        rows.append((rep, p.law, res.estimate, res.std_error, res.cost))
    job.emit("unbiased.csv", ["replication", "law", "estimate", "std_error", "cost"], rows)


def _job_bounds(job: _Job) -> None:
    p, T = job.p, job.cfg.T
    rows = []
    for q in p.p_values:
        for n in p.levels:
            rows.append(("strong_error", q, n, strong_error_bound(job.model, q, T, n, delta=p.delta)))
            rows.append(("strong_error_star", q, n, strong_error_bound(job.model, q, T, n, True, p.delta)))
            rows.append(("wasserstein", q, n, wasserstein_bound(job.model, q, T, n, p.delta)))
            if job.payoff is not None:
                meta = payoff_metadata(job.payoff)
                if meta.payoff_class == "lipschitz":
                    inputs = meta.bound_inputs(q)
                elif meta.payoff_class == "loclip":
                    inputs = {**meta.bound_inputs(q), "q": 2.0}
                else:
                    continue  # barrier bounds need the Hölder constant of the supremum law
                value = functional_bound(meta.payoff_class, inputs, job.model, T, n, p.delta)
                rows.append((f"functional_{meta.payoff_class}", q, n, value))
    job.emit("bounds.csv", ["quantity", "p/q", "n", "value"], rows)


FIGURE_HEADER = ["n", "payoff", "method", "estimate", "std_error", "ci_lo", "ci_hi", "cost"]


def _job_figure1(job: _Job) -> None:
    """Lookback put and up-and-out call, SBA at level n against RWA with 2^n steps."""
    p = job.p
    spec = job.cfg.payoff
    payoffs = [spec.build(job.cfg.T, "lookback_put"), spec.build(job.cfg.T, "up_and_out_call")]
    rows = []
    for n in p.levels:
        for method, steps in (("sba", n), ("rwa", 2**n)):
            if method == "rwa" and n > p.rwa_max_level:
                continue
            for payoff, res in zip(payoffs, job.mc(payoffs, steps, p.N, 7 if method == "sba" else 8, method)):
                ci = clt_ci(res.estimate, res.std_error, p.ci_level)
                rows.append((n, payoff.kind, method, res.estimate, res.std_error, ci.lo, ci.hi, res.cost))
    job.emit("figure1.csv", FIGURE_HEADER, rows)


def _job_figure2(job: _Job) -> None:
    """Hindsight put with CLT and one-sided Chebyshev intervals, barrier call with CLT intervals."""
    p = job.p
    spec = job.cfg.payoff
    put = spec.build(job.cfg.T, "hindsight_put")
    barrier = spec.build(job.cfg.T, "up_and_out_call")
    meta = payoff_metadata(put)
    var = popoviciu_variance_bound(meta.value_range)
    rows = []
    for n in p.levels:
        r_put, r_bar = job.mc([put, barrier], n, p.N, 9)
        r1 = functional_bound("lipschitz", meta.bound_inputs(1.0), job.model, job.cfg.T, n, p.delta)
        cheb = chebyshev_ci(r_put.estimate, var, p.N, 1 - p.ci_level, r1, True)
        for payoff, res, kind, ci in (
            (put, r_put, "chebyshev", cheb),
            (put, r_put, "clt", clt_ci(r_put.estimate, r_put.std_error, p.ci_level)),
            (barrier, r_bar, "clt", clt_ci(r_bar.estimate, r_bar.std_error, p.ci_level)),
        ):
            rows.append((n, payoff.kind, kind, res.estimate, res.std_error, ci.lo, ci.hi, res.cost))
    job.emit("figure2.csv", ["n", "payoff", "ci_kind", "estimate", "std_error", "ci_lo", "ci_hi", "cost"], rows)


def _job_figure3(job: _Job) -> None:
    _convergence(job, "figure3_levels")
    job.emit("figure3_mlmc.csv", MLMC_HEADER, _mlmc_rows(job, 10))


RUNNERS = {
    "sample": _job_sample, "estimate": _job_estimate, "mlmc": _job_mlmc, "unbiased": _job_unbiased,
    "bounds": _job_bounds, "convergence": _job_convergence, "figure1": _job_figure1,
    "figure2": _job_figure2, "figure3": _job_figure3,
}


def run_job(config: ExperimentConfig, out_dir: Optional[str] = None) -> Path:
    """Run the configured job; writes its CSV tables and ``manifest.json`` and returns the directory."""
    if config.job is None:
        raise ConfigError("job: no job selected")
    if config.job not in ("sample", "bounds") and config.payoff is None:
        raise ConfigError(f"payoff: job {config.job!r} needs a payoff")
    if config.job in ("figure1", "figure2", "figure3") and config.payoff.M is None:
        raise ConfigError("payoff.M: figure jobs need a barrier level")
    out = Path(out_dir or config.output)
    out.mkdir(parents=True, exist_ok=True)
    job = _Job(config, out)
    t0 = time.perf_counter()
    RUNNERS[config.job](job)
    manifest = {
        "job": config.job,
        "config_hash": config_hash(config),
        "seed": config.seed,
        "version": __version__,
        "workers": config.workers,
        "wall_time_s": time.perf_counter() - t0,
        "cost_total": job.cost,
        "files": job.files,
        **job.extra,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    (out / "config.yaml").write_text(serialize_config(config))
    return out


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stickbreak", description=__doc__)
    sub = parser.add_subparsers(dest="job", required=True)
    for name in JOBS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="YAML experiment config")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--workers", type=int, help="worker threads for sample loops")
        sp.add_argument("--out", help="output directory (overrides the config)")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise ConfigError(f"--config: {exc}") from None
    cfg = parse_config(text)
    if cfg.job is not None and cfg.job != args.job:
        raise ConfigError(f"job: config is for {cfg.job!r} but {args.job!r} was requested")
    updates = {"job": args.job}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.out is not None:
        updates["output"] = args.out
    data = {**cfg.model_dump(mode="json"), **updates}
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        out = run_job(cfg)
    except (ConfigError, ParameterDomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
