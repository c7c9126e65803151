"""Line search over a set of directions in the span of the components.

A direction is a combination ``sum_d theta[d, h] * X[d]``.  Projecting the
residual rows onto it and folding the scalar back into ``C`` can only lower the
loss, so repeating this until no direction helps gives a model that is locally
optimal for the direction set.  Coordinate descent is the special case where
the directions are the components themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Params, as_matrix
from .datagen import make_rng
from .pca import FactorModel, residual, total_loss
from .projection import project_rows


@dataclass(frozen=True)
class RefineConfig:
    """``t_ls`` caps the number of direction steps; ``None`` means ``50 * H``."""

    t_ls: int | float | None = None

    def __post_init__(self):
        t = self.t_ls
        if t is not None and t != math.inf and (int(t) != t or t < 1):
            raise ValueError(f"t_ls must be a positive integer or inf, got {t!r}")

    def limit(self, H: int) -> float:
        return 50 * H if self.t_ls is None else self.t_ls


@dataclass
class DirectionSet:
    """Coefficient matrix ``theta`` of shape ``(d_minus, H)``; column h is one direction."""

    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta)
        if self.theta.ndim != 2:
            raise ValueError("theta must be a 2-d array of shape (d_minus, H)")

    @property
    def d_minus(self) -> int:
        return self.theta.shape[0]

    @property
    def H(self) -> int:
        return self.theta.shape[1]

    @classmethod
    def identity(cls, d_minus: int) -> "DirectionSet":
        return cls(np.eye(d_minus, dtype=np.int64))

    def directions(self, X: np.ndarray, params: Params) -> np.ndarray:
        """Row h is ``sum_d theta[d, h] * X[d] mod p^E``."""
        M = params.modulus
        theta = as_matrix(self.theta, params)
        out = np.zeros((self.H, X.shape[1]), dtype=X.dtype if X.size else np.int64)
        for d in range(self.d_minus):
            out = (out + (theta[d][:, None] * X[d][None, :]) % M) % M
        return out


def random_direction_set(d_minus: int, count: int, seed, params: Params) -> DirectionSet:
    """``count`` directions with coefficients uniform in ``range(p**E)``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = make_rng(seed)
    if params.modulus < 2**62:
        theta = rng.integers(0, params.modulus, size=(count, d_minus), dtype=np.int64)
    else:
        bits = params.modulus.bit_length() + 64
        flat = [int.from_bytes(rng.bytes(bits // 8 + 1), "little") % params.modulus for _ in range(count * d_minus)]
        theta = np.array(flat, dtype=object).reshape(count, d_minus)
    # drawn direction by direction so that a prefix of a longer set is a shorter set
    return DirectionSet(theta.T.copy())


def _check(model: FactorModel, dirs: DirectionSet) -> None:
    if dirs.d_minus != len(model):
        raise ValueError(
            f"direction set has {dirs.d_minus} coefficient rows, model has {len(model)} components"
        )


def line_search(
    Y: np.ndarray,
    model: FactorModel,
    dirs: DirectionSet,
    cfg: RefineConfig = RefineConfig(),
    params: Params | None = None,
    workers: int | None = None,
    literal: bool = False,
) -> FactorModel:
    """Improve ``C`` along every direction of ``dirs`` until none helps.

    Steps cycle through the directions; the search stops after ``H``
    consecutive steps without an update or after ``cfg.t_ls`` steps.  By
    default the cursor moves on after every step.  ``literal=True`` moves it
    only after an updating step, in which case the no-update exit certifies a
    single direction rather than the whole set.

    Returns a new model (``X`` unchanged); ``info["line_search"]`` records the
    step count and whether the no-update exit was reached.
    """
    params = params or model.params
    _check(model, dirs)
    out = model.copy()
    out.info.pop("residual", None)
    H = dirs.H
    if H == 0 or len(model) == 0:
        out.info["line_search"] = {"steps": 0, "converged": True}
        return out
    M = params.modulus
    R = residual(as_matrix(Y, params), model)
    C = model.C.copy()
    theta = as_matrix(dirs.theta, params)
    V = dirs.directions(model.X, params)
    N = R.shape[0]
    limit = cfg.limit(H)
    # a row untouched since direction h was last used is still orthogonal to it
    last_visit = np.full(H, -1, dtype=np.int64)
    modified = np.zeros(N, dtype=np.int64)
    h = 0
    steps = 0
    quiet = 0
    converged = False
    while steps < limit:
        steps += 1
        x = V[h]
        updated = False
        if x.any():
            cand = np.flatnonzero(modified > last_visit[h]) if last_visit[h] >= 0 else None
            if cand is None or cand.size:
                c = project_rows(R, x, params, workers, rows=cand)
                hit = np.flatnonzero(c)
                if hit.size:
                    updated = True
                    rows = hit if cand is None else cand[hit]
                    ch = c[hit]
                    R[rows] = (R[rows] - (ch[:, None] * x[None, :]) % M) % M
                    C[:, rows] = (C[:, rows] + (theta[:, h][:, None] * ch[None, :]) % M) % M
                    modified[rows] = steps
        last_visit[h] = steps
        quiet = 0 if updated else quiet + 1
        if updated or not literal:
            h = (h + 1) % H
        if quiet >= H:
            converged = True
            break
    out.coeffs = [C[d].copy() for d in range(C.shape[0])]
    out.info["line_search"] = {"steps": steps, "converged": converged}
    return out


def coordinate_descent(
    Y: np.ndarray,
    model: FactorModel,
    cfg: RefineConfig = RefineConfig(),
    params: Params | None = None,
    workers: int | None = None,
    literal: bool = False,
) -> FactorModel:
    """Line search along the components themselves."""
    return line_search(Y, model, DirectionSet.identity(len(model)), cfg, params, workers, literal)


def is_locally_optimal(
    Y: np.ndarray, model: FactorModel, dirs: DirectionSet, params: Params | None = None, workers=None
) -> bool:
    """No residual row can be improved along any direction of ``dirs``."""
    params = params or model.params
    _check(model, dirs)
    if len(model) == 0 or dirs.H == 0:
        return True
    R = residual(as_matrix(Y, params), model)
    for x in dirs.directions(model.X, params):
        if x.any() and project_rows(R, x, params, workers).any():
            return False
    return True


def refine_protocol(
    Y: np.ndarray,
    model: FactorModel,
    params: Params | None = None,
    n_random: int = 20,
    seed=0,
    cfg: RefineConfig = RefineConfig(),
    workers: int | None = None,
) -> tuple[FactorModel, dict]:
    """Coordinate descent, then a line search over ``n_random`` random directions.

    Returns the refined model and the exact total losses before, after the
    coordinate descent and after the random line search.
    """
    params = params or model.params
    Y = as_matrix(Y, params)
    losses = {"initial": total_loss(residual(Y, model), params)}
    cd = coordinate_descent(Y, model, cfg, params, workers)
    losses["coordinate_descent"] = total_loss(residual(Y, cd), params)
    if len(cd) and n_random > 0:
        dirs = random_direction_set(len(cd), n_random, seed, params)
        ls = line_search(Y, cd, dirs, cfg, params, workers)
    else:
        ls = cd
    losses["line_search"] = total_loss(residual(Y, ls), params)
    ls.info["losses"] = dict(losses)
    return ls, losses
