"""Stick-breaking approximation of (X_T, sup X, argmax time), its coupled ladder and the random-walk baseline.

All samplers work on a batch of independent paths at once: pass ``size`` to
get arrays, or leave it as ``None`` for a single draw.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import RngStream
from .errors import ParameterDomainError
from .levy_models import LevyModel


@dataclass
class CostLedger:
    """Running count of increment draws."""

    draws: int = 0

    def add(self, k: int) -> None:
        self.draws += int(k)


@dataclass
class ExtremaTriplet:
    """Approximation of the final position, the supremum and the time of the supremum.

    Fields hold floats for a single sample or equally shaped arrays for a batch.
    ``source`` is ``"sba"`` or ``"rwa"``; the random-walk supremum may be negative.
    """

    position: object
    supremum: object
    tau: object
    level: int
    horizon: float
    source: str = "sba"


@dataclass
class StickBreakdown:
    lengths: np.ndarray  # shape (..., n)
    residual: object  # Lambda_n, shape (...)
    horizon: float
    uniforms: np.ndarray


@dataclass
class CoupledLadder:
    """Levels 0..n of the approximation built from one set of sticks and increments.

    ``supremum`` and ``tau`` have the level as their last axis; ``position`` is
    shared by every level.
    """

    position: object
    supremum: np.ndarray
    tau: np.ndarray
    sticks: StickBreakdown
    increments: np.ndarray
    terminal: object

    @property
    def n(self) -> int:
        return self.supremum.shape[-1] - 1

    def level(self, k: int) -> ExtremaTriplet:
        sup = self.supremum[..., k]
        tau = self.tau[..., k]
        if np.ndim(sup) == 0:
            sup, tau = float(sup), float(tau)
        return ExtremaTriplet(self.position, sup, tau, k, self.sticks.horizon)

    @property
    def triplets(self) -> list[ExtremaTriplet]:
        return [self.level(k) for k in range(self.n + 1)]


def _shape(size) -> tuple:
    if size is None:
        return ()
    return (size,) if np.isscalar(size) else tuple(size)


def sticks_from_uniforms(T: float, uniforms) -> StickBreakdown:
    """Stick lengths ``l_k = V_k L_{k-1}``, ``L_k = L_{k-1} - l_k`` from recorded uniforms."""
    if T <= 0:
        raise ParameterDomainError("horizon T must be positive")
    v = np.asarray(uniforms, float)
    lengths = np.empty_like(v)
    rest = np.full(v.shape[:-1], float(T))
    for k in range(v.shape[-1]):
        lengths[..., k] = v[..., k] * rest
        rest = rest - lengths[..., k]
    residual = float(rest) if rest.ndim == 0 else rest
    return StickBreakdown(lengths, residual, float(T), v)


def sample_sticks(T: float, n: int, rng: RngStream, size=None) -> StickBreakdown:
    if n < 0:
        raise ParameterDomainError("n must be non-negative")
    return sticks_from_uniforms(T, rng.uniform((*_shape(size), n)))


def _position(xi: np.ndarray, terminal) -> np.ndarray:
    # one fixed order (left to right over xi, then the terminal draw) for every level
    head = np.cumsum(xi, axis=-1)[..., -1] if xi.shape[-1] else np.zeros(xi.shape[:-1])
    return head + terminal


def triplet_from_draws(sticks: StickBreakdown, xi, terminal) -> ExtremaTriplet:
    """The level-n approximation for given sticks, increments ``xi`` and terminal draw."""
    xi = np.asarray(xi, float)
    terminal = np.asarray(terminal, float)
    lam = sticks.lengths
    n = lam.shape[-1]
    pos_part = np.maximum(xi, 0.0)
    sup = (np.cumsum(pos_part, axis=-1)[..., -1] if n else 0.0) + np.maximum(terminal, 0.0)
    tau = (np.cumsum(lam * (xi > 0), axis=-1)[..., -1] if n else 0.0) + sticks.residual * (terminal > 0)
    tau = np.clip(tau, 0.0, sticks.horizon)
    pos = _position(xi, terminal)
    # sup >= pos^+ holds exactly; the two sums run in different orders
    sup = np.maximum(sup, np.maximum(pos, 0.0))
    if pos.ndim == 0:
        pos, sup, tau = float(pos), float(sup), float(tau)
    return ExtremaTriplet(pos, sup, tau, n, sticks.horizon)


def _draw_increments(model, sticks, rng, ledger):
    xi = np.asarray(model.sample_increment(sticks.lengths, rng), float)
    terminal = np.asarray(model.sample_increment(np.asarray(sticks.residual), rng), float)
    if ledger is not None:
        ledger.add(np.size(terminal) * (sticks.lengths.shape[-1] + 1))
    return xi, terminal


def sba_sample(model: LevyModel, T: float, n: int, rng: RngStream, size=None,
               ledger: Optional[CostLedger] = None) -> ExtremaTriplet:
    """Draw(s) of the level-n stick-breaking approximation; n + 1 increment draws per sample."""
    sticks = sample_sticks(T, n, rng, size)
    xi, terminal = _draw_increments(model, sticks, rng, ledger)
    return triplet_from_draws(sticks, xi, terminal)


def ladder_from_draws(sticks: StickBreakdown, xi, terminal) -> CoupledLadder:
    """All levels 0..n from shared draws, with ``s_k = xi_{k+1} + ... + xi_n + s_n``."""
    xi = np.asarray(xi, float)
    terminal = np.asarray(terminal, float)
    lam = sticks.lengths
    n = lam.shape[-1]
    batch = xi.shape[:-1]

    tails = np.empty((*batch, n + 1))
    tails[..., n] = terminal
    for k in range(n - 1, -1, -1):
        tails[..., k] = xi[..., k] + tails[..., k + 1]

    zero = np.zeros((*batch, 1))
    prefix_sup = np.concatenate([zero, np.cumsum(np.maximum(xi, 0.0), axis=-1)], axis=-1)
    prefix_tau = np.concatenate([zero, np.cumsum(lam * (xi > 0), axis=-1)], axis=-1)
    rest = np.concatenate([np.full((*batch, 1), sticks.horizon),
                           sticks.horizon - np.cumsum(lam, axis=-1)], axis=-1)
    # residual recursion as in sticks_from_uniforms so level n matches exactly
    rest_exact = np.empty_like(rest)
    rest_exact[..., 0] = sticks.horizon
    for k in range(n):
        rest_exact[..., k + 1] = rest_exact[..., k] - lam[..., k]
    del rest

    pos = _position(xi, terminal)
    sup = np.maximum(prefix_sup + np.maximum(tails, 0.0), np.maximum(pos, 0.0)[..., None])
    # exact arithmetic makes sup nondecreasing in level; undo last-bit rounding inversions
    sup = np.flip(np.minimum.accumulate(np.flip(sup, -1), axis=-1), -1)
    tau = np.clip(prefix_tau + rest_exact * (tails > 0), 0.0, sticks.horizon)
    if pos.ndim == 0:
        pos = float(pos)
    return CoupledLadder(pos, sup, tau, sticks, xi, terminal)


def sba_ladder(model: LevyModel, T: float, n: int, rng: RngStream, size=None,
               ledger: Optional[CostLedger] = None) -> CoupledLadder:
    sticks = sample_sticks(T, n, rng, size)
    xi, terminal = _draw_increments(model, sticks, rng, ledger)
    return ladder_from_draws(sticks, xi, terminal)


def rwa_from_increments(T: float, increments) -> ExtremaTriplet:
    """Skeleton maximum over ``k = 1..n`` and the first time it is attained."""
    inc = np.asarray(increments, float)
    n = inc.shape[-1]
    path = np.cumsum(inc, axis=-1)
    k = np.argmax(path, axis=-1)
    sup = np.take_along_axis(path, k[..., None], axis=-1)[..., 0]
    pos = path[..., -1]
    tau = (k + 1) * (T / n)
    if np.ndim(pos) == 0:
        pos, sup, tau = float(pos), float(sup), float(tau)
    return ExtremaTriplet(pos, sup, tau, n, float(T), source="rwa")


def rwa_sample(model: LevyModel, T: float, n_steps: int, rng: RngStream, size=None,
               ledger: Optional[CostLedger] = None) -> ExtremaTriplet:
    if n_steps < 1:
        raise ParameterDomainError("n_steps must be at least 1")
    if T <= 0:
        raise ParameterDomainError("horizon T must be positive")
    shape = (*_shape(size), n_steps)
    inc = np.asarray(model.sample_increment(np.full(shape, T / n_steps), rng), float)
    if ledger is not None:
        ledger.add(int(np.prod(shape)))
    return rwa_from_increments(T, inc)
