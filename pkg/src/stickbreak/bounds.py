"""Explicit constants and geometric rates for the stick-breaking error.

Every bound that has a divergent ingredient evaluates to ``math.inf`` instead of
raising, since the underlying estimates only hold under finiteness conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .distributions import RngStream
from .errors import ParameterDomainError
from .levy_models import (
    LevyModel,
    ModelSummary,
    compensated_exponential_integral,
    model_summary,
    nu_integral,
    positive_jump_mean,
)

DEFAULT_DELTA = 0.05
INF = math.inf


def eta(summary: ModelSummary, p: float) -> float:
    """Geometric rate ``eta_p = 1 + 1{p > alpha} + (p / alpha_plus) 1{p <= alpha}``."""
    if p <= 0:
        raise ParameterDomainError("p must be positive")
    if p > summary.alpha:
        return 2.0
    return 1.0 + p / summary.alpha_plus


def stirling2(m: int, k: int) -> int:
    """Stirling number of the second kind via ``S(m,k) = k S(m-1,k) + S(m-1,k-1)``."""
    if m < 0 or k < 0 or m > 64:
        raise ParameterDomainError("stirling2 needs 0 <= k and m <= 64")
    if k > m:
        return 0
    row = [1] + [0] * k  # S(0, j)
    for i in range(1, m + 1):
        for j in range(min(i, k), 0, -1):
            row[j] = j * row[j] + row[j - 1]
        row[0] = 0
    return row[k]


def _pow(base: float, e: float) -> float:
    if base == 0.0:
        return 0.0 if e > 0 else 1.0
    return base**e


def _scaled(c: float, T: float, e: float) -> float:
    """``c * T**e`` with ``0 * anything = 0``."""
    if c == 0.0:
        return 0.0
    if math.isinf(c):
        return INF
    return c * T**e


@dataclass(frozen=True)
class RateConstants:
    p: float
    eta_p: float
    C_p1: float
    C_p2: float
    C_p3: float
    C_p4: float
    C_pX: float
    C_pX_star: float
    T: float
    context: ModelSummary

    def m_p(self, t: float) -> float:
        return _moment_from_terms(self.p, self.context, (self.C_p1, self.C_p2, self.C_p3, self.C_p4), t)


def _p_over_beta(p: float, s: ModelSummary) -> float:
    return p / s.beta_plus if s.beta_plus > 0 else INF


def moment_constants(model: LevyModel, p: float, T: float, delta: float = DEFAULT_DELTA,
                     summary: Optional[ModelSummary] = None) -> tuple[float, float, float, float]:
    """``(C_p1, C_p2, C_p3, C_p4)`` of the supremum moment bound."""
    if p <= 0 or T <= 0:
        raise ParameterDomainError("p and T must be positive")
    s = summary or model_summary(model, delta)
    r = _p_over_beta(p, s)
    I0 = s.I0_beta_plus

    # small-jump martingale term; vanishes with no small jumps or with beta_plus = 0
    if I0 == 0.0 or s.beta_plus == 0.0:
        c1 = 0.0
    else:
        inner = 2.0**p * T ** (p / 2) * I0 ** (p / 2) if p <= 2 else \
            2.0 * (p * p / (p - 1)) ** p * math.exp(T * I0 - p)
        c1 = 2.0 ** max(p - 1, 0) * T ** (p - r) * I0**p + T ** (-r) * inner

    c2 = math.sqrt(s.sigma2) ** p * math.gamma((p + 1) / 2) * 2 ** (p / 2) / math.sqrt(math.pi)

    drift = s.b0 if s.finite_variation else s.b
    c3 = 2.0 ** max(p - 1, 0) * _pow(max(drift, 0.0), p)

    if s.spectrally_negative:
        c4 = 0.0
    else:
        i_plus = nu_integral(model, "I_plus_p", p)
        if math.isinf(i_plus):
            c4 = INF
        else:
            ip = s.I_prime
            mass = ip + nu_integral(model, "I_plus_p", 0.0)
            m = math.ceil(p)
            series = sum(stirling2(m, k) * T ** (k - 1) * _pow(mass, k - 1) for k in range(1, m + 1))
            lead = 1.0 if math.isinf(r) else T ** max(1.0 - r, 0.0)
            c4 = lead * (i_plus + ip) * series
    return c1, c2, c3, c4


def _moment_from_terms(p, s: ModelSummary, cs, t: float) -> float:
    c1, c2, c3, c4 = cs
    if t == 0:
        return 0.0
    r = _p_over_beta(p, s)
    total = _scaled(c1, t, r) + _scaled(c2, t, p / 2) + _scaled(c3, t, p) + _scaled(c4, t, min(1.0, r))
    return 4.0 ** max(p - 1, 0) * total


def _sharp_first_moment(model: LevyModel, s: ModelSummary, t: float, T: float) -> float:
    """Sharper bound on ``E sup_{[0,t]} X`` for p = 1."""
    i_plus = nu_integral(model, "I_plus_p", 1.0)
    if math.isinf(i_plus):
        return INF
    gauss = math.sqrt(s.sigma2) * math.sqrt(2.0 / math.pi) * math.sqrt(t)
    bp = s.beta_plus
    if bp >= 2.0:
        rest = (max(s.b, 0.0) + i_plus) * t + 2.0 * math.sqrt(nu_integral(model, "I0_p", 2.0)) * math.sqrt(t)
    elif bp > 1.0:
        I0 = s.I0_beta_plus
        rest = (max(s.b, 0.0) + i_plus) * t + 2.0 * T ** (-1 / bp) * (math.sqrt(T * I0) + T * I0) * t ** (1 / bp)
    else:
        rest = (max(s.b0, 0.0) + positive_jump_mean(model)) * t
    return gauss + rest


def moment_bound(model: LevyModel, p: float, t: float, T: float, delta: float = DEFAULT_DELTA) -> float:
    """Upper bound ``m_X^p(t)`` on ``E[(sup_{[0,t]} X)^p]``; for p = 1 the sharper of two bounds."""
    if not 0 <= t <= T:
        raise ParameterDomainError("t must lie in [0, T]")
    if t == 0:
        return 0.0
    s = model_summary(model, delta)
    if math.isinf(nu_integral(model, "I_plus_p", p)) and not s.spectrally_negative:
        return INF
    general = _moment_from_terms(p, s, moment_constants(model, p, T, delta, s), t)
    if p == 1:
        return min(general, _sharp_first_moment(model, s, t, T))
    return general


def _c_p_from_terms(p, s: ModelSummary, cs, T: float) -> float:
    c1, c2, c3, c4 = cs
    r = _p_over_beta(p, s)
    if p <= s.alpha:
        a = p / s.alpha_plus
        total = _scaled(c1, T, r - a) + c2 + _scaled(c3, T, p - a) + _scaled(c4, T, min(1.0, r) - a)
    else:
        total = _scaled(c1, T, r - 1) + _scaled(c2, T, p / 2 - 1) + _scaled(c3, T, p - 1) + c4
    return 4.0 ** max(p - 1, 0) * total


def c_p(model: LevyModel, p: float, T: float, delta: float = DEFAULT_DELTA) -> float:
    """``C_p(X)`` with ``E[sup_{[0,t]} X^p] <= C_p(X) t^{eta_p - 1}`` on ``[0, T]``."""
    s = model_summary(model, delta)
    return _c_p_from_terms(p, s, moment_constants(model, p, T, delta, s), T)


def c_p_star(model: LevyModel, p: float, T: float, delta: float = DEFAULT_DELTA) -> float:
    if math.isfinite(nu_integral(model, "I_plus_p", p)):
        return c_p(model, p, T, delta)
    return c_p(model.reflected(), p, T, delta)


def rate_constants(model: LevyModel, p: float, T: float, delta: float = DEFAULT_DELTA) -> RateConstants:
    s = model_summary(model, delta)
    cs = moment_constants(model, p, T, delta, s)
    return RateConstants(p, eta(s, p), *cs, _c_p_from_terms(p, s, cs, T), c_p_star(model, p, T, delta), T, s)


def strong_error_bound(model: LevyModel, p: float, T: float, n: int, starred: bool = False,
                       delta: float = DEFAULT_DELTA) -> float:
    """Bound on ``E[Delta_n^p]`` (or on the stick-breaking error when ``starred``)."""
    if p < 1:
        raise ParameterDomainError("p must be at least 1")
    s = model_summary(model, delta)
    const = c_p_star(model, p, T, delta) if starred else c_p(model, p, T, delta)
    return _scaled(const, T, eta(s, p) - 1) * eta(s, p) ** (-n)


def tail_bound(model: LevyModel, p: float, T: float, n: int, r: float,
               delta: float = DEFAULT_DELTA) -> tuple[float, float]:
    """``(P(Delta_n >= r) bound, E[min(Delta_n, r)^p] bound)`` via the truncated process."""
    if r <= 0:
        raise ParameterDomainError("r must be positive")
    z = model.truncated()
    s = model_summary(model, delta)
    e = eta(s, p)
    big = s.nu_bar_1 * T * 2.0 ** (-n)
    small = _scaled(c_p(z, p, T, delta), T, e - 1) * e ** (-n)
    return min(1.0, big + r ** (-p) * small), r**p * big + small


def wasserstein_bound(model: LevyModel, p: float, T: float, n: int, delta: float = DEFAULT_DELTA) -> float:
    if p < 1:
        raise ParameterDomainError("p must be at least 1")
    s = model_summary(model, delta)
    e = eta(s, p)
    const = (_scaled(c_p_star(model, p, T, delta), T, e - 1) + T**p) ** (1 / p)
    return const * e ** (-n / p)


# ---------------------------------------------------------------- payoff-class bounds


def _lipschitz(inputs: dict, model: LevyModel, T: float, n: int, delta: float) -> float:
    p = inputs.get("p", 1.0)
    K = inputs["K"]
    sup_norm = inputs.get("sup_norm", INF)
    s = model_summary(model, delta)
    e = eta(s, p)
    if math.isfinite(sup_norm):
        const = ((2 * sup_norm) ** p * s.nu_bar_1 * T
                 + K**p * (_scaled(c_p(model.truncated(), p, T, delta), T, e - 1) + T**p))
    else:
        const = K**p * (_scaled(c_p_star(model, p, T, delta), T, e - 1) + T**p)
    return 2.0 ** max(p - 1, 0) * const * e ** (-n)


def _psi(model: LevyModel, u: float) -> float:
    return model.b * u + model.sigma2 * u * u / 2 + compensated_exponential_integral(model, u)


def _loclip(inputs: dict, model: LevyModel, T: float, n: int, delta: float) -> float:
    p = inputs.get("p", 1.0)
    q = inputs["q"]
    K, lam = inputs["K"], inputs["lam"]
    if q <= 1:
        raise ParameterDomainError("q must exceed 1")
    if not math.isfinite(nu_integral(model, "E_plus_q", lam * p * q)):
        return INF
    qp = 1.0 / (1.0 - 1.0 / q)
    r = p * qp
    s = model_summary(model, delta)
    e = eta(s, r)
    z = model.derived(model.measure.without_tails(left=True, right=False))
    spread = moment_bound(z, 1.0, T, T, delta) + moment_bound(z.reflected(), 1.0, T, T, delta)
    # Markov's inequality P(range > c/2) <= 2 E[range] / c needs c > 2 * spread
    c = inputs.get("c") or 4.0 * (2.0 * spread)
    if c <= 2.0 * spread:
        raise ParameterDomainError("c must exceed twice the first-moment spread of the truncated process")
    u = lam * p * q
    with np.errstate(over="ignore"):
        expo = math.exp(min(T * _psi(z, u), 700.0)) + math.exp(min(T * _psi(z, -u), 700.0)) - 1.0
    envelope = (1.0 + expo / (1.0 - 2.0 * spread / c)) ** (1.0 / q)
    cpx = c_p(model, r, T, delta)
    head = _pow(cpx, 1.0 / qp) * T ** ((e - 1) / qp) + T**p
    if lam * p * c > 700.0:
        return INF
    const = head * 2.0 ** max(p - 1.0 / qp, 0.0) * K**p * math.exp(lam * p * c) * envelope
    return const * e ** (-n / qp)


def _barrier(inputs: dict, model: LevyModel, T: float, n: int, delta: float) -> float:
    p = inputs.get("p", 1.0)
    gamma = inputs["gamma"]
    K = inputs["K"]
    h = inputs["sup_norm"]
    s = model_summary(model, delta)
    q = inputs.get("q") or optimal_barrier_q(gamma, s.alpha_plus)
    e = eta(s, q)
    const = h**p * (s.nu_bar_1 * T + _scaled(c_p(model.truncated(), q, T, delta), T, e - 1) + K)
    return const * e ** (-n * gamma / (gamma + q))


_CLASSES: dict[str, Callable] = {"lipschitz": _lipschitz, "loclip": _loclip, "barrier": _barrier}


def functional_bound(payoff_class: str, inputs: dict, model: LevyModel, T: float, n: int,
                     delta: float = DEFAULT_DELTA) -> float:
    """Bound on ``E|g(chi) - g(chi_n)|^p`` for a payoff of the given class.

    inputs: lipschitz {K, sup_norm, p}; loclip {K, lam, q, p, c}; barrier
    {sup_norm, K (Hölder constant of the supremum law), gamma, q, p}.
    """
    if payoff_class not in _CLASSES:
        raise ParameterDomainError(f"unknown payoff class {payoff_class!r}")
    return _CLASSES[payoff_class](inputs, model, T, n, delta)


def functional_rate(payoff_class: str, inputs: dict, model: LevyModel, delta: float = DEFAULT_DELTA) -> float:
    """Per-level contraction factor of :func:`functional_bound`."""
    s = model_summary(model, delta)
    p = inputs.get("p", 1.0)
    if payoff_class == "lipschitz":
        return eta(s, p)
    if payoff_class == "loclip":
        qp = 1.0 / (1.0 - 1.0 / inputs["q"])
        return eta(s, p * qp) ** (1.0 / qp)
    gamma = inputs["gamma"]
    q = inputs.get("q") or optimal_barrier_q(gamma, s.alpha_plus)
    return eta(s, q) ** (gamma / (gamma + q))


# ---------------------------------------------------------------- Lambert W and optimal q


def lambert_w(x: float) -> float:
    """Principal branch of ``W`` by Halley iteration."""
    branch = -math.exp(-1.0)
    if x < branch:
        raise ParameterDomainError("lambert_w needs x >= -1/e")
    if x == branch:
        return -1.0
    if x == 0.0:
        return 0.0
    if x < -0.25:
        q = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + q - q * q / 3.0 + 11.0 / 72.0 * q**3
    elif x < 3.0:
        w = math.log1p(x)
    else:
        lx = math.log(x)
        w = lx - math.log(lx)
    tol = 1e-12 * max(1.0, abs(x))
    for _ in range(50):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= tol:
            return w
        wp1 = w + 1.0
        if wp1 == 0.0:
            return w
        w = w - f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
    return w


def optimal_barrier_q(gamma: float, alpha_plus: float) -> float:
    """Exponent q minimising the barrier rate ``eta_q^{-gamma/(gamma+q)}``."""
    if gamma <= 0 or alpha_plus <= 0:
        raise ParameterDomainError("gamma and alpha_plus must be positive")
    w = lambert_w(math.exp(-1.0) * (gamma / alpha_plus - 1.0))
    return alpha_plus * min(1.0, math.exp(w + 1.0) - 1.0)


# ---------------------------------------------------------------- time of the supremum


def expected_tau(model: LevyModel, t: float, rng: Optional[RngStream] = None,
                 nodes: int = 16, draws_per_node: int = 10**5) -> float:
    """``E tau_t = int_0^t P(X_s > 0) ds``.

    Uses the closed form of ``P(X_s > 0)`` when the model has one; otherwise each
    Gauss-Legendre node is estimated from ``draws_per_node`` increments.
    """
    if t <= 0:
        raise ParameterDomainError("t must be positive")
    if model.symmetric:
        return t / 2.0
    if model.prob_positive(t) is not None:
        val, _ = integrate.quad(model.prob_positive, 0.0, t, epsabs=1e-10)
        return val
    if rng is None:
        raise ParameterDomainError("a random stream is needed for models without a closed-form P(X_s > 0)")
    x, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * t * (x + 1.0)
    probs = [float(np.mean(model.sample_increment(np.full(draws_per_node, si), rng) > 0)) for si in s]
    return float(0.5 * t * np.dot(w, probs))
