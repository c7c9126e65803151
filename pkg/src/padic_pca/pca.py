"""Greedy p-adic low-rank factorisation (non-reduced and reduced variants)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Params, norm_q, row_norms
from .ortho import OrthoConfig, iterated_orthogonalization
from .projection import project_rows


class BudgetTooLarge(ValueError):
    """Requested more components than the ambient dimension."""


def score(c_row, x, params: Params) -> tuple[int, int]:
    """Rescaled norms of the coefficient row and component.

    Their product orders components like the l^q matrix norm of the rank-one
    term ``c^T x``.
    """
    return norm_q(c_row, params), norm_q(x, params)


@dataclass
class FactorModel:
    """Coefficient rows ``C[d]`` (one per sample) and components ``X[d]``."""

    params: Params
    n_samples: int
    coeffs: list[np.ndarray] = field(default_factory=list)
    components: list[np.ndarray] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.components)

    @property
    def C(self) -> np.ndarray:
        dtype = self.coeffs[0].dtype if self.coeffs else np.int64
        return np.array(self.coeffs, dtype=dtype).reshape(len(self), self.n_samples)

    @property
    def X(self) -> np.ndarray:
        dtype = self.components[0].dtype if self.components else np.int64
        return np.array(self.components, dtype=dtype).reshape(len(self), self.params.D)

    @property
    def scores(self) -> list[tuple[int, int]]:
        return [score(c, x, self.params) for c, x in zip(self.coeffs, self.components)]

    def append(self, c_row: np.ndarray, x: np.ndarray) -> None:
        self.coeffs.append(np.array(c_row, copy=True))
        self.components.append(np.array(x, copy=True))

    def sort(self) -> None:
        """Order components by descending score; stable for equal scores."""
        keys = [a * b for a, b in self.scores]
        perm = sorted(range(len(keys)), key=lambda k: -keys[k])
        self.coeffs = [self.coeffs[k] for k in perm]
        self.components = [self.components[k] for k in perm]

    def truncate(self, k: int) -> None:
        del self.coeffs[k:]
        del self.components[k:]

    def copy(self) -> "FactorModel":
        return FactorModel(
            self.params,
            self.n_samples,
            [c.copy() for c in self.coeffs],
            [x.copy() for x in self.components],
            dict(self.info),
        )


def _check_budget(d_minus: int, params: Params) -> None:
    if d_minus < 0 or d_minus > params.D:
        raise BudgetTooLarge(f"d_minus={d_minus} must lie in [0, D={params.D}]")


def residual(Y: np.ndarray, model: FactorModel) -> np.ndarray:
    """``(Y - C^T X) mod p^E``."""
    M = model.params.modulus
    R = np.array(Y, copy=True)
    for c, x in zip(model.coeffs, model.components):
        R = (R - (c[:, None] * x[None, :]) % M) % M
    return R


def total_loss(R: np.ndarray, params: Params) -> int:
    """Sum of rescaled row norms of a residual matrix."""
    return sum(row_norms(R, params))


def pca_body(Y: np.ndarray, model: FactorModel, x: np.ndarray, params: Params, workers=None) -> bool:
    """Project every row of ``Y`` off ``x`` in place; record the component.

    Returns False (and leaves everything untouched) when all coefficients are 0.
    """
    c = project_rows(Y, x, params, workers)
    if not c.any():
        return False
    M = params.modulus
    rows = np.flatnonzero(c)
    Y[rows] = (Y[rows] - c[rows, None] * x[None, :]) % M
    model.append(c, x)
    return True


def nrpca(
    Y: np.ndarray,
    d_minus: int,
    params: Params,
    d_prime_minus: int | None = None,
    workers: int | None = None,
) -> FactorModel:
    """Non-reduced PCA: pivots are the current (partially reduced) data rows.

    With ``d_prime_minus > d_minus`` the search runs with the larger budget and
    the lowest-scoring components are dropped afterwards.
    """
    _check_budget(d_minus, params)
    budget = d_minus if d_prime_minus is None else d_prime_minus
    if budget < d_minus:
        raise ValueError("d_prime_minus must be >= d_minus")
    _check_budget(budget, params)
    R = np.array(Y, copy=True)
    model = FactorModel(params, R.shape[0], info={"algorithm": "NRPCA"})
    for j in range(R.shape[0]):
        if budget == 0:
            break
        if not R[j].any():
            continue
        pivot = R[j].copy()
        budget -= pca_body(R, model, pivot, params, workers)
    model.sort()
    if len(model) > d_minus:
        model.truncate(d_minus)
        R = residual(Y, model)
    model.info["residual"] = R
    return model


def rpca(
    Y: np.ndarray,
    d_minus: int,
    params: Params,
    cfg: OrthoConfig = OrthoConfig(),
    workers: int | None = None,
) -> FactorModel:
    """Reduced PCA: pivots come from an orthogonalised, norm-sorted copy of ``Y``."""
    _check_budget(d_minus, params)
    model = FactorModel(params, Y.shape[0], info={"algorithm": "RPCA"})
    R = np.array(Y, copy=True)
    if d_minus == 0:
        model.info["residual"] = R
        return model
    ortho = iterated_orthogonalization(Y, params, cfg, workers)
    norms = row_norms(ortho.system, params)
    order = sorted(range(len(norms)), key=lambda k: -norms[k])
    Z = ortho.system[order]
    model.info.update(ortho_visits=ortho.visits, ortho_converged=ortho.converged)
    budget = d_minus
    for z in Z:
        if budget == 0 or not z.any():
            break
        budget -= pca_body(R, model, z, params, workers)
    model.sort()
    model.info["residual"] = R
    return model
