"""Monte Carlo, multilevel and randomised unbiased estimators built on the stick-breaking sampler.

Level convention: ``P_k = g(chi_k)`` for ``k >= 0``. The multilevel and unbiased
estimators use a base term ``E g(chi_0)`` plus differences
``D_k = g(chi_k) - g(chi_{k-1})`` for ``k >= 1``, each drawn from a fresh coupled
ladder of depth ``k`` (``k + 1`` increment draws).

Randomness is split by purpose, level and batch through ``RngStream.derive``.
Batches are reduced in index order, so results do not depend on the worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import special

from .distributions import RngStream
from .errors import NumericFailure, ParameterDomainError
from .levy_models import LevyModel
from .payoffs import Payoff, evaluate
from .samplers import rwa_sample, sba_ladder, sba_sample

DEFAULT_BATCH = 100_000
TRUNCATION_MASS = 1e-12
MAX_PLAN_SAMPLES = 1e11

# stream purposes
_MC, _BASE, _LEVEL, _STRATA = 1, 2, 3, 4


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    level: float
    kind: str  # clt | chebyshev | none


@dataclass(frozen=True)
class LevelStats:
    level: int
    mean: float
    variance: float
    samples: int
    cost_per_sample: int


@dataclass
class EstimatorResult:
    estimate: float
    std_error: float
    ci: ConfidenceInterval
    n_samples: int
    levels: list = field(default_factory=list)
    cost: int = 0
    seed: dict = field(default_factory=dict)
    workers: int = 1


# ---------------------------------------------------------------- reductions


@dataclass
class _Moments:
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values: np.ndarray) -> "_Moments":
        v = np.asarray(values, float)
        if v.size == 0:
            return cls()
        mu = float(np.mean(v))
        return cls(v.size, mu, float(np.sum((v - mu) ** 2)))

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.count + other.count
        if n == 0:
            return _Moments()
        d = other.mean - self.mean
        mean = self.mean + d * other.count / n
        return _Moments(n, mean, self.m2 + other.m2 + d * d * self.count * other.count / n)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0


def _batches(N: int, batch: int):
    start, b = 0, 0
    while start < N:
        size = min(batch, N - start)
        yield b, size
        start += size
        b += 1


def _run(fn, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: fn(*t), tasks))


def _tolerant_ceil(x: float) -> int:
    r = round(x)
    return int(r) if abs(x - r) < 1e-9 else math.ceil(x)


# ---------------------------------------------------------------- confidence intervals


def clt_ci(estimate: float, std_error: float, level: float) -> ConfidenceInterval:
    if not 0 < level < 1:
        raise ParameterDomainError("confidence level must lie in (0, 1)")
    z = float(special.ndtri(0.5 + level / 2))
    return ConfidenceInterval(estimate - z * std_error, estimate + z * std_error, level, "clt")


def chebyshev_ci(estimate: float, variance_bound: float, N: int, epsilon: float,
                 bias_bound_r1: float = 0.0, one_sided_bias: bool = False) -> ConfidenceInterval:
    """Non-asymptotic interval holding with probability at least ``1 - epsilon``.

    ``r2 = sqrt(variance_bound / (epsilon N))``. When the approximation is known to
    overestimate (``one_sided_bias``) the upper end only carries ``r2``.
    """
    if not 0 < epsilon < 1:
        raise ParameterDomainError("epsilon must lie in (0, 1)")
    r2 = math.sqrt(variance_bound / (epsilon * N))
    hi = estimate + r2 if one_sided_bias else estimate + bias_bound_r1 + r2
    return ConfidenceInterval(estimate - bias_bound_r1 - r2, hi, 1 - epsilon, "chebyshev")


def popoviciu_variance_bound(value_range: tuple[float, float]) -> float:
    lo, hi = value_range
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ParameterDomainError("a bounded payoff range is needed for the variance bound")
    return (hi - lo) ** 2 / 4.0


def clt_schedule(eta_g: float, N: int) -> int:
    """Level ``ceil(log N / log eta_g^2)``, at least 1."""
    if eta_g <= 1 or N < 1:
        raise ParameterDomainError("clt_schedule needs eta_g > 1 and N >= 1")
    return max(1, _tolerant_ceil(math.log(N) / math.log(eta_g**2)))


# ---------------------------------------------------------------- plain Monte Carlo


def _mc_batch(model, payoffs, T, n, size, stream, method):
    if method == "sba":
        chi = sba_sample(model, T, n, stream, size=size)
    else:
        chi = rwa_sample(model, T, n, stream, size=size)
    return [_Moments.of(evaluate(p, chi)) for p in payoffs]


def mc_estimate_many(model: LevyModel, payoffs: Sequence[Payoff], T: float, n: int, N: int,
                     rng: RngStream, ci_kind: str = "clt", ci_level: float = 0.99,
                     method: str = "sba", workers: int = 1, batch_size: int = DEFAULT_BATCH,
                     bias_bound: float = 0.0, variance_bounds: Optional[Sequence[float]] = None,
                     one_sided_bias: Sequence[bool] = ()) -> list[EstimatorResult]:
    """Plain Monte Carlo of several payoffs on the same samples.

    ``method="rwa"`` uses the random walk with ``n`` steps instead of stick breaking.
    """
    if N < 2:
        raise ParameterDomainError("N must be at least 2")
    if method not in ("sba", "rwa"):
        raise ParameterDomainError("method must be 'sba' or 'rwa'")
    tasks = [(model, payoffs, T, n, size, rng.derive(_MC, b), method) for b, size in _batches(N, batch_size)]
    parts = _run(_mc_batch, tasks, workers)
    cost = N * (n + 1 if method == "sba" else n)
    out = []
    for i, _ in enumerate(payoffs):
        acc = _Moments()
        for part in parts:
            acc = acc.merge(part[i])
        se = math.sqrt(acc.variance / N)
        if ci_kind == "clt":
            ci = clt_ci(acc.mean, se, ci_level)
        elif ci_kind == "chebyshev":
            if variance_bounds is None:
                raise ParameterDomainError("chebyshev intervals need a variance bound")
            one = bool(one_sided_bias[i]) if len(one_sided_bias) > i else False
            ci = chebyshev_ci(acc.mean, variance_bounds[i], N, 1 - ci_level, bias_bound, one)
        elif ci_kind == "none":
            ci = ConfidenceInterval(acc.mean, acc.mean, ci_level, "none")
        else:
            raise ParameterDomainError(f"unknown ci kind {ci_kind!r}")
        levels = [LevelStats(n, acc.mean, acc.variance, N, n + 1 if method == "sba" else n)]
        out.append(EstimatorResult(acc.mean, se, ci, N, levels, cost, rng.identity, workers))
    return out


def mc_estimate(model: LevyModel, payoff: Payoff, T: float, n: int, N: int, rng: RngStream,
                ci_kind: str = "clt", ci_level: float = 0.99, **kwargs) -> EstimatorResult:
    return mc_estimate_many(model, [payoff], T, n, N, rng, ci_kind, ci_level, **kwargs)[0]


def result_from_samples(values: np.ndarray, cost: int, ci_level: float = 0.99) -> EstimatorResult:
    """Estimator result for an explicit sample vector (CLT interval)."""
    m = _Moments.of(values)
    if m.count < 2:
        raise ParameterDomainError("need at least two samples")
    se = math.sqrt(m.variance / m.count)
    return EstimatorResult(m.mean, se, clt_ci(m.mean, se, ci_level), m.count, [], cost)


# ---------------------------------------------------------------- multilevel


def level_differences(model: LevyModel, payoff: Payoff, T: float, k: int, size: int, rng: RngStream) -> np.ndarray:
    """``size`` draws of ``D_k`` (``g(chi_0)`` for ``k = 0``) from fresh ladders of depth k."""
    ladder = sba_ladder(model, T, k, rng, size=size)
    top = evaluate(payoff, ladder.level(k))
    if k == 0:
        return np.asarray(top, float)
    return np.asarray(top - evaluate(payoff, ladder.level(k - 1)), float)


@dataclass(frozen=True)
class MlmcPlan:
    epsilon: float
    c1: float
    q1: float
    c2: float
    q2: float
    c3: float
    q3: float
    n_levels: int
    N_k: tuple[int, ...]  # samples for levels 0..n_levels

    @property
    def planned_cost(self) -> int:
        """Increment draws ``sum_k N_k (k + 1)``."""
        return sum(N * (k + 1) for k, N in enumerate(self.N_k))

    @property
    def model_cost(self) -> float:
        return sum(N * self.c3 * 2 ** (self.q3 * k) for k, N in enumerate(self.N_k))


def mlmc_plan(c1: float, q1: float, c2: float, q2: float, c3: float = 1.0, q3: Optional[float] = None,
              epsilon: float = 2**-5) -> MlmcPlan:
    """Number of levels and per-level sample sizes for mean-square error below ``epsilon**2``.

    Levels run over ``k = 0..n`` with ``V[D_k] <= c2 2^{-k q2}`` and bias
    ``|E P - E P_n| <= c1 2^{-n q1}``.
    """
    if q3 is None:
        q3 = q2 / 2
    if min(c1, q1, c2, q2, c3, q3, epsilon) <= 0:
        raise ParameterDomainError("plan constants and epsilon must be positive")
    if q1 < min(q2, q3) / 2:
        raise ParameterDomainError("need q1 >= min(q2, q3) / 2")
    n = max(1, _tolerant_ceil(math.log2(math.sqrt(2) * c1 / epsilon) / q1))
    scale = 2 * c2 / epsilon**2
    Ns = []
    for k in range(n + 1):
        if q2 > q3:
            v = scale * 2 ** (-(q2 + q3) * k / 2) / (1 - 2 ** (-(q2 - q3) / 2))
        elif q2 == q3:
            v = scale * (n + 1) * 2 ** (-q3 * k)
        else:
            v = scale * 2 ** (n * (q3 - q2) / 2 - (q2 + q3) * k / 2) / (1 - 2 ** (-(q3 - q2) / 2))
        if not v < MAX_PLAN_SAMPLES:
            raise NumericFailure(f"plan needs about {v:.3g} samples at level {k}; constants are implausible")
        Ns.append(max(2, math.ceil(v)))
    return MlmcPlan(epsilon, c1, q1, c2, q2, c3, q3, n, tuple(Ns))


@dataclass(frozen=True)
class Calibration:
    levels: tuple[LevelStats, ...]
    c1: float
    q1: float
    c2: float
    q2: float
    fit_from: int
    bias_slope_se: float
    var_slope_se: float
    floored: bool
    cost: int

    def plan(self, epsilon: float, c3: float = 1.0, q3: Optional[float] = None) -> MlmcPlan:
        return mlmc_plan(self.c1, self.q1, self.c2, self.q2, c3, q3, epsilon)


def fit_slope(ks: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares line ``y = a + s k``; returns ``(s, a, standard error of s)``."""
    k = np.asarray(ks, float)
    y = np.asarray(ys, float)
    A = np.vstack([k, np.ones_like(k)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    dof = len(k) - 2
    resid = y - A @ coef
    s2 = float(resid @ resid) / dof if dof > 0 else 0.0
    se = math.sqrt(s2 / float(np.sum((k - k.mean()) ** 2))) if dof > 0 else 0.0
    return float(coef[0]), float(coef[1]), se


def _ladder_batch(model, payoff, T, L, size, stream):
    ladder = sba_ladder(model, T, L, stream, size=size)
    g = np.stack([evaluate(payoff, ladder.level(k)) for k in range(L + 1)], axis=-1)
    d = np.concatenate([g[:, :1], np.diff(g, axis=-1)], axis=-1)
    return [_Moments.of(g[:, k]) for k in range(L + 1)], [_Moments.of(d[:, k]) for k in range(L + 1)]


def ladder_statistics(model: LevyModel, payoff: Payoff, T: float, L: int, N: int, rng: RngStream,
                      workers: int = 1, batch_size: int = DEFAULT_BATCH) -> tuple[list, list]:
    """Per-level statistics of ``P_k`` and ``D_k`` from ``N`` coupled ladders of depth ``L``.

    Returns two lists of ``LevelStats``; variances are not floored here.
    """
    tasks = [(model, payoff, T, L, size, rng.derive(_LEVEL, L, b)) for b, size in _batches(N, batch_size)]
    parts = _run(_ladder_batch, tasks, workers)
    gs = [_Moments() for _ in range(L + 1)]
    ds = [_Moments() for _ in range(L + 1)]
    for g_part, d_part in parts:
        gs = [a.merge(p) for a, p in zip(gs, g_part)]
        ds = [a.merge(p) for a, p in zip(ds, d_part)]
    as_stats = lambda accs: [LevelStats(k, a.mean, a.variance, a.count, k + 1) for k, a in enumerate(accs)]
    return as_stats(gs), as_stats(ds)


def mlmc_calibrate(model: LevyModel, payoff: Payoff, T: float, pilot_levels: int, pilot_N: int,
                   rng: RngStream, fit_from: int = 3, workers: int = 1,
                   batch_size: int = DEFAULT_BATCH) -> Calibration:
    """Pilot run on coupled ladders of depth ``pilot_levels`` and log-linear decay fits.

    The fitted rates are the negated least-squares slopes of ``log2|mean D_k|`` and
    ``log2 V[D_k]`` over ``k >= fit_from``. The constants are envelopes: ``c2``
    bounds ``V[D_k] 2^{k q2}`` on every pilot level, and ``c1`` turns the envelope
    of ``|mean D_k| 2^{k q1}`` into a bound on the remaining telescoping tail.
    """
    if pilot_levels < 4:
        raise ParameterDomainError("pilot_levels must be at least 4")
    if not 1 <= fit_from <= pilot_levels - 2:
        raise ParameterDomainError("fit_from must leave at least three fitted levels")
    _, raw = ladder_statistics(model, payoff, T, pilot_levels, pilot_N, rng, workers, batch_size)
    floor = np.finfo(float).eps
    floored = any(st.variance <= 0 for st in raw)
    stats = [LevelStats(st.level, st.mean, st.variance if st.variance > 0 else floor,
                        st.samples, st.cost_per_sample) for st in raw]
    if floored:
        warnings.warn("non-positive level variance replaced by machine epsilon", RuntimeWarning)
    # levels whose statistics vanish in the pilot carry no slope information
    ks1 = [k for k in range(fit_from, pilot_levels + 1) if stats[k].mean != 0]
    ks2 = [k for k in range(fit_from, pilot_levels + 1) if raw[k].variance > 0]
    if min(len(ks1), len(ks2)) < 3:
        raise NumericFailure("too few pilot levels with nonzero statistics; increase pilot_N")
    s1, _, se1 = fit_slope(ks1, np.log2([abs(stats[k].mean) for k in ks1]))
    s2, _, se2 = fit_slope(ks2, np.log2([stats[k].variance for k in ks2]))
    q1, q2 = -s1, -s2
    if q1 <= 0 or q2 <= 0:
        raise NumericFailure(f"level statistics do not decay (bias slope {s1:.3f}, variance slope {s2:.3f})")
    c1_env = max(abs(stats[k].mean) * 2 ** (k * q1) for k in ks1)
    c1 = c1_env * 2 ** (-q1) / (1 - 2 ** (-q1))
    c2 = max(st.variance * 2 ** (st.level * q2) for st in stats)
    return Calibration(tuple(stats), c1, q1, c2, q2, fit_from, se1, se2, floored,
                       pilot_N * (pilot_levels + 1))


def _level_batch(model, payoff, T, k, size, stream):
    return _Moments.of(level_differences(model, payoff, T, k, size, stream))


def mlmc_estimate(model: LevyModel, payoff: Payoff, T: float, plan_or_calibration: Union[MlmcPlan, Calibration],
                  rng: RngStream, epsilon: Optional[float] = None, ci_level: float = 0.99,
                  workers: int = 1, batch_size: int = DEFAULT_BATCH) -> EstimatorResult:
    """Telescoping estimator ``sum_k mean(D_k)`` targeting ``E g(chi_n)``."""
    plan = plan_or_calibration
    if isinstance(plan, Calibration):
        if epsilon is None:
            raise ParameterDomainError("an epsilon is needed to plan from a calibration")
        plan = plan.plan(epsilon)
    tasks = []
    for k, Nk in enumerate(plan.N_k):
        tasks += [(model, payoff, T, k, size, rng.derive(_LEVEL, k, b)) for b, size in _batches(Nk, batch_size)]
    parts = iter(_run(_level_batch, tasks, workers))
    levels = []
    estimate = 0.0
    var = 0.0
    for k, Nk in enumerate(plan.N_k):
        acc = _Moments()
        for _ in _batches(Nk, batch_size):
            acc = acc.merge(next(parts))
        levels.append(LevelStats(k, acc.mean, acc.variance, Nk, k + 1))
        estimate += acc.mean
        var += acc.variance / Nk
    se = math.sqrt(var)
    return EstimatorResult(estimate, se, clt_ci(estimate, se, ci_level), sum(plan.N_k), levels,
                           plan.planned_cost, rng.identity, workers)


# ---------------------------------------------------------------- randomised unbiased estimators


@dataclass(frozen=True)
class DebiasLaw:
    """Level law on ``1..n_max``: ``probs[j-1] = p_j``, ``tails[j-1] = P(R >= j)``."""

    kind: str
    payoff_class: str
    constants: dict
    decay: float
    probs: np.ndarray
    cdf: np.ndarray
    tails: np.ndarray

    @property
    def n_max(self) -> int:
        return len(self.probs)


def _class_decay(payoff_class: str, constants: dict) -> float:
    if payoff_class == "lipschitz":
        return 2.0 ** -0.5
    if payoff_class == "loclip":
        q = constants["q"]
        if q <= 1:
            raise ParameterDomainError("loclip law needs q > 1")
        qp = 1.0 / (1.0 - 1.0 / q)
        return 2.0 ** (-1.0 / (2.0 * qp))
    if payoff_class == "barrier":
        g, q, e = constants["gamma"], constants["q"], constants["eta_q"]
        return e ** (-g / (2 * g + 2 * q))
    raise ParameterDomainError(f"unknown payoff class {payoff_class!r}")


def debias_law(kind: str, payoff_class: str, constants: Optional[dict] = None) -> DebiasLaw:
    """Level laws ``p_n ~ a^n / sqrt(n)`` (single term) or tails ``a^{n-1} / sqrt(n)`` (independent sum).

    ``a`` is ``2^{-1/2}`` for Lipschitz payoffs, ``2^{-1/(2q')}`` for locally
    Lipschitz ones and ``eta_q^{-gamma/(2 gamma + 2 q)}`` for barrier payoffs.
    The support is cut where the remaining mass drops below 1e-12.
    """
    constants = dict(constants or {})
    a = _class_decay(payoff_class, constants)
    if kind == "ST":
        n = np.arange(1, 20001)
        w = a**n / np.sqrt(n)
        total = w.sum()
        tail = total - np.cumsum(w)
        n_max = int(np.argmax(tail <= TRUNCATION_MASS * total)) + 1
        probs = w[:n_max] / w[:n_max].sum()
        tails = np.concatenate([[1.0], 1.0 - np.cumsum(probs)[:-1]])
    elif kind == "IS":
        n = np.arange(1, 20002)
        tails_full = a ** (n - 1) / np.sqrt(n)
        n_max = int(np.argmax(tails_full < TRUNCATION_MASS))
        tails = tails_full[:n_max]
        probs = np.append(tails[:-1] - tails[1:], tails[-1])
    else:
        raise ParameterDomainError("law kind must be 'ST' or 'IS'")
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return DebiasLaw(kind, payoff_class, constants, a, probs, cdf, tails)


def stratified_levels(law: DebiasLaw, N: int, uniforms: np.ndarray) -> np.ndarray:
    """``R_k = F^{-1}((k - 1 + u_k) / N)`` for ``k = 1..N``."""
    u = (np.arange(N) + np.asarray(uniforms, float)) / N
    return np.searchsorted(law.cdf, u, side="right") + 1


def unbiased_estimate(model: LevyModel, payoff: Payoff, T: float, law: DebiasLaw, N: int,
                      rng: RngStream, ci_level: float = 0.99) -> EstimatorResult:
    """Single-term (ST) or independent-sum (IS) estimator with stratified levels.

    Every outer sample carries a fresh base draw ``g(chi_0)`` and fresh
    differences at its randomised level(s); the reported standard error treats the
    outer samples as independent, which is conservative under stratification.
    """
    if N < 1:
        raise ParameterDomainError("N must be at least 1")
    R = stratified_levels(law, N, rng.derive(_STRATA).uniform(N))
    y = level_differences(model, payoff, T, 0, N, rng.derive(_BASE)).copy()
    cost = N
    top = int(R.max())
    counts = []
    for j in range(1, top + 1):
        owners = np.nonzero(R == j)[0] if law.kind == "ST" else np.nonzero(R >= j)[0]
        counts.append(owners.size)
        if owners.size == 0:
            continue
        d = level_differences(model, payoff, T, j, owners.size, rng.derive(_LEVEL, j))
        weight = law.probs[j - 1] if law.kind == "ST" else law.tails[j - 1]
        y[owners] += d / weight
        cost += owners.size * (j + 1)
    m = _Moments.of(y)
    se = math.sqrt(m.variance / N) if N > 1 else math.inf
    ci = clt_ci(m.mean, se, ci_level) if N > 1 else ConfidenceInterval(m.mean, m.mean, ci_level, "none")
    levels = [LevelStats(j + 1, 0.0, 0.0, c, j + 2) for j, c in enumerate(counts)]
    return EstimatorResult(m.mean, se, ci, N, levels, cost, rng.identity, 1)
