"""Seeded synthetic datasets: unions of balls and noisy affine subspaces.

Randomness comes from numpy's PCG64 generator seeded through ``SeedSequence``,
so a given ``(spec, seed)`` reproduces bit-identical data on any platform.
Draws happen in a fixed order, documented on each generator.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import Params

log = logging.getLogger(__name__)

ANOMALOUS = -1


@dataclass
class LabeledDataset:
    """Data rows plus ground-truth labels.

    ``labels[i]`` is ``ANOMALOUS`` (-1) or the id of the normal group (ball
    index for ball data, 0 for affine data).  ``labels`` may be None for
    unlabeled data read from disk.
    """

    Y: np.ndarray
    labels: np.ndarray | None
    params: Params
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != self.Y.shape[0]:
            raise ValueError("one label per row required")


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _uniform(rng, shape, bound: int) -> np.ndarray:
    return rng.integers(0, bound, size=shape, dtype=np.int64)


def _check_gen(params: Params, rate_r: float, count: int) -> None:
    if params.E < 2:
        raise ValueError("generators need E >= 2 so that radius p**2 is representable")
    if not 0 <= rate_r < 100:
        raise ValueError(f"anomaly rate must lie in [0, 100), got {rate_r}")
    if count < 1:
        raise ValueError("count must be >= 1")


def gen_uniform(count: int, dims: int, params: Params, seed) -> np.ndarray:
    """``count`` rows with i.i.d. uniform entries in ``range(p**E)``."""
    if count < 1 or dims < 1:
        raise ValueError("count and dims must be >= 1")
    return _uniform(make_rng(seed), (count, dims), params.modulus)


def ball_centers(B: int, params: Params, rng) -> np.ndarray:
    """Even-labelled centres uniform, odd-labelled ones divisible by p."""
    p, E, D = params.p, params.E, params.D
    centers = np.empty((B, D), dtype=np.int64)
    for b in range(B):
        if b % 2 == 0:
            centers[b] = _uniform(rng, D, p**E)
        else:
            centers[b] = p * _uniform(rng, D, p ** (E - 1))
    return centers


def _mixture_draws(rng, count: int, rate_r: float):
    return rng.random(count) < rate_r / 100.0


def gen_balls(B: int, rate_r: float, count: int, params: Params, seed) -> LabeledDataset:
    """Normal points from ``B`` closed balls of radius ``|p|**2``, plus anomalies.

    Draw order: centres (ball by ball), anomaly flags, ball choices, in-ball
    offsets, then uniform anomalous rows.
    """
    _check_gen(params, rate_r, count)
    if B < 1:
        raise ValueError("need at least one ball")
    p, E, D = params.p, params.E, params.D
    M = params.modulus
    rng = make_rng(seed)
    centers = ball_centers(B, params, rng)
    low = centers % p**2
    if len({row.tobytes() for row in low}) < B:
        log.warning("two ball centres coincide modulo p**2; balls overlap")
    anomalous = _mixture_draws(rng, count, rate_r)
    which = rng.integers(0, B, size=count, dtype=np.int64)
    offsets = _uniform(rng, (count, D), p ** (E - 2))
    Y = (centers[which] + p**2 * offsets) % M
    n_anom = int(anomalous.sum())
    Y[anomalous] = _uniform(rng, (n_anom, D), M)
    labels = np.where(anomalous, ANOMALOUS, which).astype(np.int64)
    meta = {"generator": "balls", "B": B, "rate_r": rate_r, "count": count, "seed": seed}
    return LabeledDataset(Y, labels, params, meta)


def affine_basis(D_prime: int, params: Params, rng) -> np.ndarray:
    """``D_prime + 1`` rows; even-indexed uniform, odd-indexed divisible by p."""
    return ball_centers(D_prime + 1, params, rng)


def gen_affine(
    D_prime: int, rate_r: float, count: int, params: Params, seed, noise: bool = True
) -> LabeledDataset:
    """Normal points ``sum_k w_k B_k + B_{D'}`` plus noise in ``p**2 Z_p^D``.

    Draw order: basis rows, anomaly flags, weights ``w``, noise, then uniform
    anomalous rows.  ``noise=False`` drops the noise term (the draw still
    happens, so the other values do not shift).
    """
    _check_gen(params, rate_r, count)
    p, E, D = params.p, params.E, params.D
    if not 1 <= D_prime < D:
        raise ValueError(f"need 1 <= D' < D, got D'={D_prime}, D={D}")
    M = params.modulus
    rng = make_rng(seed)
    basis = affine_basis(D_prime, params, rng)
    anomalous = _mixture_draws(rng, count, rate_r)
    w = _uniform(rng, (count, D_prime), M)
    Y = np.broadcast_to(basis[D_prime], (count, D)).copy()
    for k in range(D_prime):
        Y = (Y + (w[:, k, None] * basis[k][None, :]) % M) % M
    offsets = _uniform(rng, (count, D), p ** (E - 2))
    if noise:
        Y = (Y + p**2 * offsets) % M
    n_anom = int(anomalous.sum())
    Y[anomalous] = _uniform(rng, (n_anom, D), M)
    labels = np.where(anomalous, ANOMALOUS, 0).astype(np.int64)
    meta = {"generator": "affine", "D_prime": D_prime, "rate_r": rate_r, "count": count, "seed": seed}
    return LabeledDataset(Y, labels, params, meta)
