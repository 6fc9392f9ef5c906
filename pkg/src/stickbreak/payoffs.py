"""Path functionals of (X_T, sup X, argmax time) under the exponential model S = S0 exp(X)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterDomainError
from .samplers import ExtremaTriplet

PAYOFF_KINDS = (
    "lookback_put",
    "hindsight_put",
    "hindsight_call",
    "up_and_out_call",
    "perpetual_put_factor",
    "raw_supremum",
    "raw_tau",
)


@dataclass(frozen=True)
class PayoffMetadata:
    """Regularity class and constants consumed by bounds and confidence intervals.

    ``K`` is the Lipschitz constant (lipschitz), the envelope factor in
    ``K exp(lam y)`` (loclip) or ``None`` for barrier payoffs, whose Hölder
    constant depends on the model. ``value_range`` bounds the payoff when finite.
    """

    payoff_class: str
    K: Optional[float]
    lam: float
    sup_norm: float
    gamma_assumed: float
    value_range: tuple[float, float]
    nonincreasing_in_supremum: bool = False

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.sup_norm)

    def bound_inputs(self, p: float = 1.0) -> dict:
        """Inputs for ``bounds.functional_bound`` (barrier needs ``K`` added by the caller)."""
        if self.payoff_class == "lipschitz":
            return {"K": self.K, "sup_norm": self.sup_norm, "p": p}
        if self.payoff_class == "loclip":
            return {"K": self.K, "lam": self.lam, "p": p}
        return {"sup_norm": self.sup_norm, "gamma": self.gamma_assumed, "p": p}


@dataclass(frozen=True)
class Payoff:
    kind: str
    S0: float = 1.0
    K0: float = 0.0
    M: float = math.inf
    r: float = 0.0
    T: float = 1.0

    def __post_init__(self):
        if self.kind not in PAYOFF_KINDS:
            raise ParameterDomainError(f"unknown payoff kind {self.kind!r}")
        if self.S0 <= 0 or self.K0 < 0 or self.r < 0 or self.T <= 0:
            raise ParameterDomainError("payoff needs S0 > 0, K0 >= 0, r >= 0, T > 0")
        if self.kind == "up_and_out_call" and not (self.M > self.S0 and math.isfinite(self.M)):
            raise ParameterDomainError("barrier payoffs need a finite barrier M > S0")

    @property
    def log_barrier(self) -> float:
        return math.log(self.M / self.S0)

    @property
    def discount(self) -> float:
        return math.exp(-self.r * self.T)


def evaluate(payoff: Payoff, chi: ExtremaTriplet):
    """``g(chi)`` for a single triplet or a batch."""
    x = np.asarray(chi.position, float)
    y = np.asarray(chi.supremum, float)
    k = payoff.kind
    if k == "lookback_put":
        out = payoff.S0 * (np.exp(y) - np.exp(x))
    elif k == "hindsight_put":
        out = np.maximum(payoff.K0 - payoff.S0 * np.exp(y), 0.0)
    elif k == "hindsight_call":
        out = np.maximum(payoff.S0 * np.exp(y) - payoff.K0, 0.0)
    elif k == "up_and_out_call":
        alive = y <= payoff.log_barrier
        out = payoff.discount * np.maximum(payoff.S0 * np.exp(x) - payoff.K0, 0.0) * alive
    elif k == "perpetual_put_factor":
        out = np.exp(x - y)
    elif k == "raw_supremum":
        out = y
    else:
        out = np.asarray(chi.tau, float)
    out = out * np.ones_like(x)
    return float(out) if out.ndim == 0 else out


def payoff_metadata(payoff: Payoff) -> PayoffMetadata:
    k = payoff.kind
    if k == "lookback_put":
        return PayoffMetadata("loclip", payoff.S0, 1.0, math.inf, 1.0, (0.0, math.inf))
    if k == "hindsight_put":
        # on the region where the payoff is positive, S0 e^y <= K0 bounds the slope
        return PayoffMetadata("lipschitz", payoff.K0, 0.0, payoff.K0, 1.0, (0.0, payoff.K0), True)
    if k == "hindsight_call":
        return PayoffMetadata("loclip", payoff.S0, 1.0, math.inf, 1.0, (0.0, math.inf))
    if k == "up_and_out_call":
        cap = payoff.discount * max(payoff.M - payoff.K0, 0.0)
        return PayoffMetadata("barrier", None, 0.0, cap, 1.0, (0.0, cap))
    if k == "perpetual_put_factor":
        return PayoffMetadata("lipschitz", 1.0, 0.0, 1.0, 1.0, (0.0, 1.0), True)
    if k == "raw_supremum":
        return PayoffMetadata("lipschitz", 1.0, 0.0, math.inf, 1.0, (0.0, math.inf))
    return PayoffMetadata("lipschitz", 1.0, 0.0, payoff.T, 1.0, (0.0, payoff.T))
