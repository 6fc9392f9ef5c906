"""Parametric Lévy models, their exact increment samplers and measure integrals.

Every model carries its generating triplet ``(sigma2, nu, b)`` for the cutoff
``1{|x| < 1}``. The jump measure is described by a log-density plus the analytic
facts the bounds need: the Blumenthal-Getoor index, whether ``I_0^beta`` is
infinite, and the leading small-jump coefficients ``nu(x) ~ c |x|^{-1-beta}``.

Integrals of the measure are computed by adaptive quadrature on doubling
intervals. Near zero the variable ``s = -log|x|`` is used and the part below
``exp(-S_MAX)`` is added from the small-jump asymptotics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from . import distributions as dist
from .distributions import RngStream
from .errors import NumericFailure, ParameterDomainError

KINDS = ("BrownianDrift", "JumpDiffusion", "VarianceGamma", "NIG", "TemperedStableSubordinatedBM")

S_MAX = 230.0  # |x| >= e^-230 keeps densities up to |x|^-3 finite in double precision
TAIL_DOUBLINGS = 60
DIVERGENCE_LEVEL = 1e12
QUAD_RTOL = 1e-11


def _zero_log_density(x):
    return np.full(np.shape(x), -np.inf)


@dataclass(frozen=True)
class LevyMeasureDescriptor:
    """Jump measure as a log-density with analytic index information.

    ``small_jump_coeff = (c_minus, c_plus)`` gives ``nu(x) ~ c |x|^{-1-beta}`` as
    ``x -> 0-`` and ``x -> 0+``; it is ``None`` when the density is bounded at 0.
    ``keep_left_tail`` / ``keep_right_tail`` restrict the measure to remove jumps
    ``x <= -1`` or ``x >= 1``.
    """

    log_density: Callable = _zero_log_density
    bg_index_beta: float = 0.0
    beta_integral_infinite: bool = False
    finite_variation: bool = True
    spectrally_negative: bool = False
    spectrally_positive: bool = False
    finite_activity: bool = True
    small_jump_coeff: Optional[tuple[float, float]] = None
    right_tail_rate: float = math.inf
    is_zero: bool = False
    keep_left_tail: bool = True
    keep_right_tail: bool = True
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def density(self, x):
        x = np.asarray(x, float)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            d = np.exp(self.log_density(x))
        if not self.keep_left_tail:
            d = np.where(x <= -1.0, 0.0, d)
        if not self.keep_right_tail:
            d = np.where(x >= 1.0, 0.0, d)
        return np.where(x == 0, 0.0, d)

    def reflected(self) -> "LevyMeasureDescriptor":
        base = self.log_density
        coeff = None if self.small_jump_coeff is None else self.small_jump_coeff[::-1]
        return replace(
            self,
            log_density=lambda x: base(-np.asarray(x, float)),
            spectrally_negative=self.spectrally_positive,
            spectrally_positive=self.spectrally_negative,
            small_jump_coeff=coeff,
            right_tail_rate=math.inf,
            keep_left_tail=self.keep_right_tail,
            keep_right_tail=self.keep_left_tail,
            _cache={},
        )

    def without_tails(self, left: bool, right: bool) -> "LevyMeasureDescriptor":
        """Drop jumps ``<= -1`` (``left``) and/or ``>= 1`` (``right``)."""
        return replace(
            self,
            keep_left_tail=self.keep_left_tail and not left,
            keep_right_tail=self.keep_right_tail and not right,
            _cache={},
        )

    def side_empty(self, side: int) -> bool:
        if self.is_zero:
            return True
        return self.spectrally_negative if side > 0 else self.spectrally_positive


# ---------------------------------------------------------------- integrals


def _quad(f, a, b):
    val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)
    if not math.isfinite(val):
        raise NumericFailure(f"quadrature produced a non-finite value on [{a}, {b}]")
    return val


def _unit_integral(m: LevyMeasureDescriptor, side: int, log_f, p0: float, lo: float = 0.0) -> float:
    """``int_{(lo, 1)} f(y) nu(side * y) dy`` with ``f(y) ~ y**p0`` near zero.

    ``log_f`` returns ``log f(y)``. Returns ``inf`` when the integral diverges.
    """
    if m.side_empty(side):
        return 0.0

    def h(s):
        y = math.exp(-s)
        return math.exp(log_f(y) + float(m.log_density(side * y)) - s)

    if lo > 0.0:
        return _quad(h, 0.0, -math.log(lo))

    beta = m.bg_index_beta
    coeff = None if m.small_jump_coeff is None else m.small_jump_coeff[0 if side < 0 else 1]
    if coeff is not None and (p0 < beta or (p0 == beta and m.beta_integral_infinite)):
        return math.inf

    edges = [0.0, 1.0]
    while edges[-1] < S_MAX:
        edges.append(min(2.0 * edges[-1], S_MAX))
    pieces = [_quad(h, a, b) for a, b in zip(edges[:-1], edges[1:])]
    total = math.fsum(pieces)
    if coeff is None:
        # no asymptotics known: classify by whether the doubling pieces keep growing
        if total > DIVERGENCE_LEVEL or (pieces[-1] > 0 and pieces[-1] >= pieces[-2] >= pieces[-3]):
            return math.inf
        return total
    gap = p0 - beta
    if gap > 0:
        total += coeff * math.exp(-S_MAX * gap) / gap
    return total


def _tail_integral(m: LevyMeasureDescriptor, side: int, log_f) -> float:
    """``int_{[1, inf)} f(y) nu(side * y) dy``; ``inf`` when divergence is detected."""
    if m.side_empty(side):
        return 0.0
    if (side > 0 and not m.keep_right_tail) or (side < 0 and not m.keep_left_tail):
        return 0.0

    def h(y):
        with np.errstate(over="ignore"):
            return math.exp(min(log_f(y) + float(m.log_density(side * y)), 700.0))

    total = 0.0
    prev = math.inf
    growth = 0
    for k in range(TAIL_DOUBLINGS):
        piece = _quad(h, 2.0**k, 2.0 ** (k + 1))
        total += piece
        if total > DIVERGENCE_LEVEL:
            return math.inf
        growth = growth + 1 if piece > prev and piece > 1e-300 else 0
        if k >= 3 and piece <= 1e-15 * total and growth == 0:
            return total
        prev = piece
    if growth > 0 or prev > 1e-12 * max(total, 1e-300):
        return math.inf
    return total


def _power(p: float):
    return lambda y: p * math.log(y)


def _as_measure(obj) -> LevyMeasureDescriptor:
    return obj.measure if hasattr(obj, "measure") else obj


INTEGRAND_KINDS = ("I_plus_p", "I_minus_p", "I0_p", "E_plus_q", "nu_bar_kappa", "I_prime")


def nu_integral(model, integrand_kind: str, p: float) -> float:
    """Integrals of the jump measure used by the bounds.

    I_plus_p: int_{[1,inf)} x^p nu(dx); I_minus_p: int_{(-inf,-1]} |x|^p nu(dx);
    I0_p: int_{(-1,1)} |x|^p nu(dx); E_plus_q: int_{[1,inf)} e^{qx} nu(dx);
    nu_bar_kappa: nu(R minus (-kappa, kappa)); I_prime: int_{(0,1)} x^p nu(dx).
    Divergent integrals return ``inf``.
    """
    m = _as_measure(model)
    if integrand_kind not in INTEGRAND_KINDS:
        raise ParameterDomainError(f"unknown integrand kind {integrand_kind!r}")
    if m.is_zero:
        return 0.0
    key = (integrand_kind, float(p))
    if key in m._cache:
        return m._cache[key]
    if integrand_kind == "I_plus_p":
        val = _tail_integral(m, 1, _power(p))
    elif integrand_kind == "I_minus_p":
        val = _tail_integral(m, -1, _power(p))
    elif integrand_kind == "E_plus_q":
        val = _tail_integral(m, 1, lambda y: p * y)
    elif integrand_kind == "I0_p":
        val = _unit_integral(m, 1, _power(p), p) + _unit_integral(m, -1, _power(p), p)
    elif integrand_kind == "I_prime":
        val = _unit_integral(m, 1, _power(p), p)
    else:
        if not 0.0 < p <= 1.0:
            raise ParameterDomainError("nu_bar_kappa needs kappa in (0, 1]")
        val = _tail_integral(m, 1, _power(0.0)) + _tail_integral(m, -1, _power(0.0))
        if p < 1.0:
            val += _unit_integral(m, 1, _power(0.0), 0.0, lo=p) + _unit_integral(m, -1, _power(0.0), 0.0, lo=p)
    m._cache[key] = val
    return val


def small_jump_mean(model) -> float:
    """``int_{(-1,1)} x nu(dx)``; only meaningful when ``I_0^1`` is finite."""
    m = _as_measure(model)
    if m.is_zero:
        return 0.0
    return _unit_integral(m, 1, _power(1.0), 1.0) - _unit_integral(m, -1, _power(1.0), 1.0)


def positive_jump_mean(model) -> float:
    """``int_{(0,inf)} x nu(dx)``."""
    m = _as_measure(model)
    if m.is_zero:
        return 0.0
    return _unit_integral(m, 1, _power(1.0), 1.0) + _tail_integral(m, 1, _power(1.0))


def big_jump_mean(model) -> float:
    """``int_{|x|>=1} x nu(dx)``."""
    m = _as_measure(model)
    return nu_integral(m, "I_plus_p", 1.0) - nu_integral(m, "I_minus_p", 1.0)


def compensated_exponential_integral(model, u: float) -> float:
    """``int (e^{ux} - 1 - u x 1{|x|<1}) nu(dx)`` over the (possibly restricted) measure."""
    m = _as_measure(model)
    if m.is_zero or u == 0.0:
        return 0.0

    def near(side):
        v = side * u

        def log_f(y):
            z = v * y
            if abs(z) < 1e-3:
                val = z * z / 2.0 * (1.0 + z / 3.0 + z * z / 12.0)
            else:
                val = math.expm1(z) - z
            return math.log(val) if val > 0 else -math.inf

        return _unit_integral(m, side, log_f, 2.0)

    def far(side):
        v = side * u
        up = _tail_integral(m, side, lambda y: v * y)
        return up - nu_integral(m, "I_plus_p" if side > 0 else "I_minus_p", 0.0)

    return near(1) + near(-1) + far(1) + far(-1)


# ---------------------------------------------------------------- models


@dataclass(frozen=True)
class LevyModel:
    """Base class: generating triplet plus an exact increment sampler."""

    kind: str
    params: dict
    sigma2: float
    b: float
    measure: LevyMeasureDescriptor

    def sample_increment(self, t, rng: RngStream):
        raise NotImplementedError(f"{self.kind} has no increment sampler")

    def char_exponent(self, u):
        """``psi(u)`` with ``E exp(iuX_t) = exp(t psi(u))``."""
        raise NotImplementedError

    @property
    def symmetric(self) -> bool:
        return False

    def prob_positive(self, s: float) -> Optional[float]:
        """``P(X_s > 0)`` when known in closed form, else ``None``."""
        return 0.5 if self.symmetric else None

    @property
    def b0(self) -> Optional[float]:
        if not self.measure.finite_variation:
            return None
        return self.b - small_jump_mean(self.measure)

    def derived(self, measure: LevyMeasureDescriptor, b: Optional[float] = None, sign: float = 1.0) -> "LevyModel":
        """Triplet-only model (no sampler) used for truncated or reflected processes."""
        return LevyModel(
            kind="Derived",
            params={"parent": self.kind},
            sigma2=self.sigma2,
            b=self.b if b is None else b,
            measure=measure,
        )

    def reflected(self) -> "LevyModel":
        return self.derived(self.measure.reflected(), b=-self.b)

    def truncated(self) -> "LevyModel":
        """Process with all jumps of size at least 1 removed."""
        return self.derived(self.measure.without_tails(left=True, right=True))

    def check_measure(self) -> None:
        """``int min(1, x^2) nu(dx)`` must be finite."""
        if self.measure.is_zero:
            return
        total = nu_integral(self.measure, "I0_p", 2.0) + nu_integral(self.measure, "nu_bar_kappa", 1.0)
        if not math.isfinite(total):
            raise NumericFailure(f"{self.kind}: measure does not integrate min(1, x^2)")


def _positive(name, value):
    if not (value > 0 and math.isfinite(value)):
        raise ParameterDomainError(f"{name} must be positive and finite, got {value}")
    return float(value)


def _times(t):
    t = np.asarray(t, float)
    if np.any(t < 0):
        raise ParameterDomainError("time must be non-negative")
    return t


class BrownianDrift(LevyModel):
    def __init__(self, sigma: float = 1.0, mu: float = 0.0):
        sigma = _positive("sigma", sigma)
        super().__init__("BrownianDrift", {"sigma": sigma, "mu": float(mu)}, sigma**2, float(mu),
                         LevyMeasureDescriptor(is_zero=True))

    def sample_increment(self, t, rng):
        t = _times(t)
        x = self.params["mu"] * t + self.params["sigma"] * np.sqrt(t) * rng.normal(t.shape)
        return float(x) if x.ndim == 0 else x

    def char_exponent(self, u):
        u = np.asarray(u, complex)
        return 1j * u * self.params["mu"] - 0.5 * self.sigma2 * u**2

    @property
    def symmetric(self):
        return self.params["mu"] == 0.0

    def prob_positive(self, s):
        if s <= 0:
            return 0.5 if self.params["mu"] == 0 else float(self.params["mu"] > 0)
        return float(special.ndtr(self.params["mu"] * math.sqrt(s) / self.params["sigma"]))


class JumpDiffusion(LevyModel):
    """Brownian motion with drift plus compound Poisson jumps with Gaussian marks."""

    def __init__(self, sigma: float, mu: float, intensity: float, jump_mean: float, jump_sd: float):
        sigma = _positive("sigma", sigma)
        intensity = _positive("intensity", intensity)
        jump_sd = _positive("jump_sd", jump_sd)
        log_c = math.log(intensity) - 0.5 * math.log(2 * math.pi) - math.log(jump_sd)

        def log_density(x):
            return log_c - 0.5 * ((np.asarray(x, float) - jump_mean) / jump_sd) ** 2

        measure = LevyMeasureDescriptor(log_density=log_density)
        params = {"sigma": sigma, "mu": float(mu), "intensity": intensity,
                  "jump_mean": float(jump_mean), "jump_sd": jump_sd}
        super().__init__("JumpDiffusion", params, sigma**2, 0.0, measure)
        object.__setattr__(self, "b", float(mu) + small_jump_mean(measure))
        self.check_measure()

    def sample_increment(self, t, rng):
        t = _times(t)
        p = self.params
        k = rng.poisson(p["intensity"] * t, t.shape)
        x = (p["mu"] * t + p["sigma"] * np.sqrt(t) * rng.normal(t.shape)
             + k * p["jump_mean"] + p["jump_sd"] * np.sqrt(k) * rng.normal(t.shape))
        return float(x) if x.ndim == 0 else x

    def char_exponent(self, u):
        u = np.asarray(u, complex)
        p = self.params
        jumps = np.exp(1j * u * p["jump_mean"] - 0.5 * (p["jump_sd"] * u) ** 2) - 1.0
        return 1j * u * p["mu"] - 0.5 * self.sigma2 * u**2 + p["intensity"] * jumps

    @property
    def symmetric(self):
        return self.params["mu"] == 0.0 and self.params["jump_mean"] == 0.0


class VarianceGamma(LevyModel):
    """``X_t = b t + theta G_t + sigma W(G_t)`` with a gamma subordinator of unit mean rate and variance rate kappa."""

    def __init__(self, sigma: float, theta: float, kappa: float, b: float = 0.0):
        sigma = _positive("sigma", sigma)
        kappa = _positive("kappa", kappa)
        A = theta / sigma**2
        B = math.sqrt(theta**2 + 2 * sigma**2 / kappa) / sigma**2

        def log_density(x):
            x = np.asarray(x, float)
            ax = np.abs(x)
            return -math.log(kappa) - np.log(ax) + A * x - B * ax

        measure = LevyMeasureDescriptor(
            log_density=log_density, bg_index_beta=0.0, beta_integral_infinite=True,
            finite_variation=True, finite_activity=False,
            small_jump_coeff=(1.0 / kappa, 1.0 / kappa), right_tail_rate=B - A,
        )
        params = {"sigma": sigma, "theta": float(theta), "kappa": kappa, "b": float(b)}
        super().__init__("VarianceGamma", params, 0.0, 0.0, measure)
        object.__setattr__(self, "b", float(b) + small_jump_mean(measure))
        self.check_measure()

    def sample_increment(self, t, rng):
        t = _times(t)
        p = self.params
        g = np.asarray(dist.sample_gamma(t / p["kappa"], 1.0 / p["kappa"], rng))
        x = p["b"] * t + p["theta"] * g + p["sigma"] * np.sqrt(g) * rng.normal(t.shape)
        return float(x) if x.ndim == 0 else x

    def char_exponent(self, u):
        u = np.asarray(u, complex)
        p = self.params
        inner = 1.0 - 1j * u * p["theta"] * p["kappa"] + 0.5 * p["sigma"] ** 2 * p["kappa"] * u**2
        return 1j * u * p["b"] - np.log(inner) / p["kappa"]

    @property
    def symmetric(self):
        return self.params["theta"] == 0.0 and self.params["b"] == 0.0


class NIG(LevyModel):
    """Normal inverse Gaussian: ``X_t = b t + theta G_t + sigma W(G_t)`` with ``G_t`` inverse Gaussian of mean t, variance kappa t."""

    def __init__(self, sigma: float, theta: float, kappa: float, b: float = 0.0):
        sigma = _positive("sigma", sigma)
        kappa = _positive("kappa", kappa)
        root = math.sqrt(theta**2 + sigma**2 / kappa)
        A = theta / sigma**2
        B = root / sigma**2
        C = root / (math.pi * sigma * math.sqrt(kappa))

        def log_density(x):
            x = np.asarray(x, float)
            ax = np.abs(x)
            with np.errstate(divide="ignore"):
                return math.log(C) - np.log(ax) + A * x - B * ax + np.log(special.kve(1, B * ax))

        measure = LevyMeasureDescriptor(
            log_density=log_density, bg_index_beta=1.0, beta_integral_infinite=True,
            finite_variation=False, finite_activity=False,
            small_jump_coeff=(C / B, C / B), right_tail_rate=B - A,
        )
        params = {"sigma": sigma, "theta": float(theta), "kappa": kappa, "b": float(b)}
        super().__init__("NIG", params, 0.0, 0.0, measure)
        object.__setattr__(self, "b", float(b) + float(theta) - big_jump_mean(measure))
        self.check_measure()

    @property
    def shape_constants(self) -> tuple[float, float]:
        p = self.params
        return p["theta"] / p["sigma"] ** 2, math.sqrt(p["theta"] ** 2 + p["sigma"] ** 2 / p["kappa"]) / p["sigma"] ** 2

    def sample_increment(self, t, rng):
        t = _times(t)
        p = self.params
        pos = t > 0
        safe = np.where(pos, t, 1.0)
        g = np.asarray(dist.sample_inverse_gaussian(safe, safe**2 / p["kappa"], rng))
        g = np.where(pos, g, 0.0)
        x = p["b"] * t + p["theta"] * g + p["sigma"] * np.sqrt(g) * rng.normal(t.shape)
        return float(x) if x.ndim == 0 else x

    def char_exponent(self, u):
        u = np.asarray(u, complex)
        p = self.params
        inner = 1.0 - 2j * u * p["theta"] * p["kappa"] + p["kappa"] * p["sigma"] ** 2 * u**2
        return 1j * u * p["b"] + (1.0 - np.sqrt(inner)) / p["kappa"]

    @property
    def symmetric(self):
        return self.params["theta"] == 0.0 and self.params["b"] == 0.0


class TemperedStableSubordinatedBM(LevyModel):
    """``X_t = B(Z_t) + b t`` where ``Z`` has measure ``gamma x^{-alpha-1} e^{-lam x}`` and drift ``sigma_z``.

    Subordinating a standard Brownian motion, the Gaussian coefficient of ``X`` is
    the drift of ``Z``.
    """

    def __init__(self, alpha: float, gamma: float, lam: float, sigma_z: float, b: float = 0.0):
        if not 0.0 <= alpha < 1.0:
            raise ParameterDomainError("alpha must lie in [0, 1)")
        gamma = _positive("gamma", gamma)
        lam = _positive("lam", lam)
        if sigma_z < 0:
            raise ParameterDomainError("sigma_z must be non-negative")
        nu_order = alpha + 0.5
        root = math.sqrt(2.0 * lam)
        log_c = math.log(gamma / math.sqrt(2 * math.pi)) + math.log(2.0)

        def log_density(x):
            ax = np.abs(np.asarray(x, float))
            with np.errstate(divide="ignore"):
                return (log_c - (2 * alpha + 1) * np.log(ax) + 0.5 * nu_order * np.log(2 * lam * ax**2)
                        + np.log(special.kve(nu_order, root * ax)) - root * ax)

        coeff = gamma / math.sqrt(2 * math.pi) * math.gamma(nu_order) * 2.0**nu_order
        measure = LevyMeasureDescriptor(
            log_density=log_density, bg_index_beta=2 * alpha, beta_integral_infinite=True,
            finite_variation=2 * alpha < 1, finite_activity=False,
            small_jump_coeff=(coeff, coeff), right_tail_rate=root,
        )
        params = {"alpha": float(alpha), "gamma": gamma, "lam": lam, "sigma_z": float(sigma_z), "b": float(b)}
        super().__init__("TemperedStableSubordinatedBM", params, float(sigma_z), float(b), measure)
        self.check_measure()

    def subordinator_laplace_exponent(self, s):
        """``-log E exp(-s Z_1)``."""
        p = self.params
        s = np.asarray(s)
        if p["alpha"] == 0.0:
            jump = p["gamma"] * np.log1p(s / p["lam"])
        else:
            c = dist.tempered_stable_scale(p["alpha"], p["gamma"])
            jump = c * ((p["lam"] + s) ** p["alpha"] - p["lam"] ** p["alpha"])
        return p["sigma_z"] * s + jump

    def subordinator_mean(self) -> float:
        p = self.params
        return p["sigma_z"] + p["gamma"] * math.gamma(1 - p["alpha"]) * p["lam"] ** (p["alpha"] - 1)

    def sample_increment(self, t, rng):
        t = _times(t)
        p = self.params
        z = np.asarray(dist.sample_tempered_stable_subordinator(p["alpha"], p["gamma"], p["lam"], p["sigma_z"], t, rng))
        x = p["b"] * t + np.sqrt(z) * rng.normal(t.shape)
        return float(x) if x.ndim == 0 else x

    def char_exponent(self, u):
        u = np.asarray(u, complex)
        return 1j * u * self.params["b"] - self.subordinator_laplace_exponent(0.5 * u**2)

    @property
    def symmetric(self):
        return self.params["b"] == 0.0


MODEL_CLASSES = {cls.__name__: cls for cls in (BrownianDrift, JumpDiffusion, VarianceGamma, NIG, TemperedStableSubordinatedBM)}


def make_model(kind: str, **params) -> LevyModel:
    if kind not in MODEL_CLASSES:
        raise ParameterDomainError(f"unknown model kind {kind!r}; expected one of {sorted(MODEL_CLASSES)}")
    return MODEL_CLASSES[kind](**params)


def sample_increment(model: LevyModel, t, rng: RngStream):
    """Exact draw(s) of ``X_t``; ``t = 0`` gives exactly 0."""
    return model.sample_increment(t, rng)


# ---------------------------------------------------------------- summary


@dataclass(frozen=True)
class ModelSummary:
    beta: float
    delta: float
    delta_clamped: bool
    beta_plus: float
    alpha: float
    alpha_plus: float
    b0: Optional[float]
    nu_bar_1: float
    I0_beta_plus: float
    I_prime: float
    sigma2: float
    b: float
    finite_variation: bool
    spectrally_negative: bool


def model_summary(model: LevyModel, delta: float = 0.05) -> ModelSummary:
    if delta <= 0:
        raise ParameterDomainError("delta must be positive")
    m = model.measure
    beta = 0.0 if m.is_zero else m.bg_index_beta
    infinite_at_beta = (not m.is_zero) and m.beta_integral_infinite
    clamped = False
    if infinite_at_beta:
        if beta < 1.0 and beta + delta >= 1.0:
            delta, clamped = (1.0 - beta) / 2.0, True
        elif beta + delta >= 2.0:
            delta, clamped = (2.0 - beta) / 2.0, True
    beta_plus = beta + (delta if infinite_at_beta else 0.0)
    fv = m.is_zero or m.finite_variation
    b0 = model.b - small_jump_mean(m) if fv else None
    if model.sigma2 != 0.0:
        alpha = 2.0
    elif fv and b0 != 0.0:
        alpha = 1.0
    else:
        alpha = beta
    alpha_plus = alpha + (beta_plus - beta) * (alpha == beta)
    if alpha_plus <= 0:
        raise ParameterDomainError("degenerate model: alpha_plus must be positive")
    return ModelSummary(
        beta=beta, delta=delta, delta_clamped=clamped, beta_plus=beta_plus,
        alpha=alpha, alpha_plus=alpha_plus, b0=b0,
        nu_bar_1=nu_integral(m, "nu_bar_kappa", 1.0),
        I0_beta_plus=nu_integral(m, "I0_p", beta_plus),
        I_prime=nu_integral(m, "I_prime", beta_plus),
        sigma2=model.sigma2, b=model.b,
        finite_variation=fv, spectrally_negative=m.is_zero or m.spectrally_negative,
    )
