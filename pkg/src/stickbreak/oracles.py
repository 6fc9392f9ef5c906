"""Independent ground truths: closed-form Brownian extrema laws, KS tests and deep references."""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np
from scipy import special, stats

from .distributions import RngStream
from .errors import ParameterDomainError
from .levy_models import LevyModel
from .payoffs import Payoff


def bm_sup_cdf(sigma: float, mu: float, T: float, x):
    """``P(sup_{[0,T]} (sigma B_t + mu t) <= x)`` by the reflection principle."""
    if sigma <= 0 or T <= 0:
        raise ParameterDomainError("sigma and T must be positive")
    x = np.asarray(x, float)
    if np.any(x < 0):
        raise ParameterDomainError("x must be nonnegative")
    s = sigma * math.sqrt(T)
    first = special.ndtr((x - mu * T) / s)
    # exp(2 mu x / sigma^2) Phi(.) in log space so large drifts do not overflow
    second = np.exp(2 * mu * x / sigma**2 + special.log_ndtr((-x - mu * T) / s))
    out = np.clip(first - second, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def arcsine_tau_cdf(T: float, t):
    """Law of the (a.s. unique) time of the maximum of driftless Brownian motion on ``[0, T]``."""
    if T <= 0:
        raise ParameterDomainError("T must be positive")
    t = np.asarray(t, float)
    if np.any((t < 0) | (t > T)):
        raise ParameterDomainError("t must lie in [0, T]")
    out = 2 / math.pi * np.arcsin(np.sqrt(t / T))
    return float(out) if out.ndim == 0 else out


def ks_statistic(samples, cdf: Callable) -> float:
    """Sup distance between the empirical CDF of ``samples`` and ``cdf``."""
    x = np.sort(np.asarray(samples, float).ravel())
    n = x.size
    if n == 0:
        raise ParameterDomainError("KS statistic needs a nonempty sample")
    F = np.asarray(cdf(x), float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_two_sample(a, b) -> float:
    """Two-sample KS statistic over the pooled jump points."""
    a = np.sort(np.asarray(a, float).ravel())
    b = np.sort(np.asarray(b, float).ravel())
    if a.size == 0 or b.size == 0:
        raise ParameterDomainError("KS statistic needs nonempty samples")
    pts = np.concatenate([a, b])
    Fa = np.searchsorted(a, pts, side="right") / a.size
    Fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(Fa - Fb)))


def ks_critical(alpha: float, m: int, n: Optional[int] = None) -> float:
    """Asymptotic critical value ``c(alpha) / sqrt(m)`` or ``c(alpha) sqrt((m + n) / (m n))``."""
    if not 0 < alpha < 1:
        raise ParameterDomainError("alpha must lie in (0, 1)")
    c = float(stats.kstwobign.isf(alpha))
    if n is None:
        return c / math.sqrt(m)
    return c * math.sqrt((m + n) / (m * n))


def ks_test(samples, cdf: Callable, alpha: float = 0.01, allowance: float = 0.0) -> tuple[float, float, bool]:
    """One-sample test: ``(statistic, critical value, passed)``."""
    d = ks_statistic(samples, cdf)
    crit = ks_critical(alpha, np.size(samples)) + allowance
    return d, crit, d < crit


def ks_test_two_sample(a, b, alpha: float = 0.01) -> tuple[float, float, bool]:
    d = ks_two_sample(a, b)
    crit = ks_critical(alpha, np.size(a), np.size(b))
    return d, crit, d < crit


def reference_value(model: LevyModel, payoff: Payoff, T: float, n_ref: int, N_ref: int, rng: RngStream,
                    workers: int = 1) -> tuple[float, float, float]:
    """Deep-level Monte Carlo reference ``(value, std_error, strong L1 bias bound)``.

    The bias bound is the first-moment strong error bound at ``n_ref`` times the
    payoff's Lipschitz constant when one exists, and ``nan`` otherwise.
    """
    from .bounds import strong_error_bound
    from .estimators import mc_estimate
    from .payoffs import payoff_metadata

    if n_ref < 30:
        raise ParameterDomainError("reference level must be at least 30")
    res = mc_estimate(model, payoff, T, n_ref, N_ref, rng, ci_kind="none", workers=workers)
    meta = payoff_metadata(payoff)
    bias = math.nan
    if meta.payoff_class == "lipschitz":
        bias = meta.K * strong_error_bound(model, 1.0, T, n_ref)
    return res.estimate, res.std_error, bias
