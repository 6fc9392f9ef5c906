"""Reproducible random streams and the base samplers the increment laws are built from.

Every sampler accepts either scalars or numpy arrays for its parameters and
returns an array of the broadcast shape (a plain float for scalar input).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericFailure, ParameterDomainError

REJECTION_CAP = 10**6


@dataclass
class RngStream:
    """Single-owner random stream keyed by ``(master_seed, stream_id, *key)``.

    The underlying bit generator is Philox seeded through ``SeedSequence`` with the
    stream id as spawn key, so derivation is pure and distinct ids never share state.
    ``position`` counts the variates handed out so far.
    """

    master_seed: int
    stream_id: int
    key: tuple[int, ...] = ()
    position: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.master_seed < 0 or self.master_seed >= 2**64:
            raise ParameterDomainError("master_seed must be a 64-bit unsigned integer")
        if self.stream_id < 0:
            raise ParameterDomainError("stream_id must be non-negative")
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id, *self.key))
        self._gen = np.random.Generator(np.random.Philox(seq))

    def derive(self, *key: int) -> "RngStream":
        """Child stream; a pure function of this stream's identity and ``key``."""
        return RngStream(self.master_seed, self.stream_id, (*self.key, *key))

    @property
    def identity(self) -> dict:
        return {"master_seed": self.master_seed, "stream_id": self.stream_id, "key": list(self.key)}

    def _count(self, size) -> None:
        self.position += 1 if size is None else int(np.prod(size))

    def uniform(self, size=None):
        self._count(size)
        return self._gen.random(size)

    def normal(self, size=None):
        self._count(size)
        return self._gen.standard_normal(size)

    def exponential(self, size=None):
        self._count(size)
        return self._gen.standard_exponential(size)

    def gamma(self, shape, size=None):
        self._count(size)
        return self._gen.standard_gamma(shape, size)

    def poisson(self, lam, size=None):
        self._count(size)
        return self._gen.poisson(lam, size)


def derive_stream(master_seed: int, stream_id: int) -> RngStream:
    return RngStream(int(master_seed), int(stream_id))


def _out(x, scalar: bool):
    return float(x) if scalar else x


def _is_scalar(*args) -> bool:
    return all(np.ndim(a) == 0 for a in args)


def sample_inverse_gaussian(mu, lam, rng: RngStream):
    """Inverse Gaussian draws with mean ``mu`` and shape ``lam``.

    Michael-Schucany-Haas: take the larger root of the quadratic, which is free of
    cancellation, and recover the smaller one from the product of roots ``mu**2``.
    This keeps tiny-mean draws (short sticks) accurate.
    """
    scalar = _is_scalar(mu, lam)
    mu, lam = np.broadcast_arrays(np.asarray(mu, float), np.asarray(lam, float))
    if np.any(mu <= 0) or np.any(lam <= 0):
        raise ParameterDomainError("inverse Gaussian needs mu > 0 and lam > 0")
    shape = mu.shape
    y = rng.normal(shape) ** 2
    ratio = mu / lam
    big = mu + 0.5 * ratio * mu * y + 0.5 * mu * np.sqrt(4.0 * ratio * y + (ratio * y) ** 2)
    small = mu * (mu / big)
    u = rng.uniform(shape)
    x = np.where(u * (mu + small) <= mu, small, big)
    return _out(x, scalar)


def sample_one_sided_stable(alpha: float, t, rng: RngStream):
    """Positive stable draws with Laplace transform ``exp(-t u**alpha)`` (Kanter's form)."""
    if not 0.0 < alpha < 1.0:
        raise ParameterDomainError("one-sided stable needs alpha in (0, 1)")
    scalar = _is_scalar(t)
    t = np.asarray(t, float)
    if np.any(t < 0):
        raise ParameterDomainError("time must be non-negative")
    u = np.pi * rng.uniform(t.shape)
    e = rng.exponential(t.shape)
    a = np.sin(alpha * u) / np.sin(u) ** (1.0 / alpha)
    b = (np.sin((1.0 - alpha) * u) / e) ** ((1.0 - alpha) / alpha)
    s = t ** (1.0 / alpha) * a * b
    return _out(s, scalar)


def sample_gamma(shape, rate, rng: RngStream):
    """Gamma draws that stay accurate for vanishing shape.

    For shape < 1 the variate is ``G(shape + 1) * U**(1/shape)`` evaluated in log
    space, so extremely small shapes give tiny positive values instead of zeros
    from underflow of the power.
    """
    scalar = _is_scalar(shape, rate)
    shape, rate = np.broadcast_arrays(np.asarray(shape, float), np.asarray(rate, float))
    if np.any(shape < 0) or np.any(rate <= 0):
        raise ParameterDomainError("gamma needs shape >= 0 and rate > 0")
    small = shape < 1.0
    g = rng.gamma(np.where(small, shape + 1.0, shape), shape.shape)
    with np.errstate(divide="ignore"):
        log_u = np.log(rng.uniform(shape.shape))
        boost = np.where(small, log_u / np.where(shape > 0, shape, 1.0), 0.0)
    x = np.where(shape > 0, g * np.exp(boost), 0.0) / rate
    return _out(x, scalar)


def tempered_stable_scale(alpha: float, gamma: float) -> float:
    """Constant c with ``int (1 - e^{-ux}) gamma x^{-alpha-1} dx = c u^alpha``."""
    return gamma * math.gamma(1.0 - alpha) / alpha


def sample_tempered_stable_subordinator(alpha: float, gamma: float, lam: float, drift: float, t, rng: RngStream):
    """Draws of ``Z_t`` with measure ``gamma x^{-alpha-1} e^{-lam x}`` on (0, inf) plus ``drift * t``.

    For alpha in (0, 1) a stable proposal is accepted with probability
    ``exp(-lam * s)``. The horizon is cut into ``ceil(c t lam^alpha)`` pieces so every
    piece is accepted with probability at least ``1/e``.
    """
    if not 0.0 <= alpha < 1.0 or gamma <= 0 or lam <= 0 or drift < 0:
        raise ParameterDomainError("tempered stable needs alpha in [0,1), gamma > 0, lam > 0, drift >= 0")
    scalar = _is_scalar(t)
    t = np.asarray(t, float)
    if np.any(t < 0):
        raise ParameterDomainError("time must be non-negative")
    if alpha == 0.0:
        z = sample_gamma(gamma * t, lam, rng)
        return _out(np.asarray(z) + drift * t, scalar)

    c = tempered_stable_scale(alpha, gamma)
    flat = t.ravel()
    pieces = np.maximum(1, np.ceil(c * flat * lam**alpha)).astype(np.int64)
    total = np.zeros_like(flat)
    for j in range(int(pieces.max(initial=1))):
        idx = np.nonzero((j < pieces) & (flat > 0))[0]
        scale = (c * flat[idx] / pieces[idx]) ** (1.0 / alpha)
        pending = np.arange(idx.size)
        for _ in range(REJECTION_CAP):
            if pending.size == 0:
                break
            s = scale[pending] * sample_one_sided_stable(alpha, np.ones(pending.size), rng)
            accept = rng.uniform(pending.size) <= np.exp(-lam * s)
            total[idx[pending[accept]]] += s[accept]
            pending = pending[~accept]
        else:
            raise NumericFailure("tempered stable rejection loop exceeded its iteration cap")
    z = total.reshape(t.shape) + drift * t
    return _out(z, scalar)
