"""Orthogonalisation against a vector system and iterated self-orthogonalisation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .core import Params, axpy_mod, norm_q, ratio_valuation
from .projection import build_trie, kernel_tables, nearest_component, project_rows, trie_dfs


@dataclass(frozen=True)
class OrthoConfig:
    """``t_io`` caps the number of pivot visits; ``None`` means ``50 * #J``."""

    t_io: int | float | None = None

    def __post_init__(self):
        t = self.t_io
        if t is not None and t != math.inf and (int(t) != t or t < 1):
            raise ValueError(f"t_io must be a positive integer or inf, got {t!r}")

    def limit(self, n: int) -> float:
        return 50 * n if self.t_io is None else self.t_io


class OrthoResult(NamedTuple):
    system: np.ndarray
    visits: int
    converged: bool


def is_orthogonal(v: Sequence[int], x: Sequence[int], params: Params) -> bool:
    """True when 0 is a best approximation of ``v`` on the line through ``x``."""
    rd = ratio_valuation(v, x, params)
    best = trie_dfs(build_trie(rd, params), params).weight
    dummy = norm_q([a for a, nu in zip(v, rd.nu) if nu == params.E], params)
    return best + dummy == norm_q(v, params)


def orthogonalize(v: Sequence[int], system: Sequence[Sequence[int]], params: Params) -> tuple[int, ...]:
    """One pass of projections of ``v`` off each ``system[j]``, in index order.

    The result is not necessarily orthogonal to the whole system: removing the
    component along a later entry can undo orthogonality to an earlier one.
    """
    v = tuple(int(a) for a in v)
    for x in system:
        c = nearest_component(v, x, params)
        if c:
            v = axpy_mod(v, c, x, params)
    return v


def iterated_orthogonalization(
    system: np.ndarray,
    params: Params,
    cfg: OrthoConfig = OrthoConfig(),
    workers: int | None = None,
    inplace: bool = False,
) -> OrthoResult:
    """Reduce every entry against every other until the system is orthogonal.

    Each pivot visit projects all other rows off ``system[j]``.  The loop ends
    once ``#J`` consecutive visits change nothing, or after ``cfg.t_io`` visits.
    """
    X = system if inplace else np.array(system, copy=True)
    n = X.shape[0]
    limit = cfg.limit(n)
    M = params.modulus
    visits = 0
    quiet = 0
    if n == 0:
        return OrthoResult(X, 0, True)
    # Right after visiting pivot j every other row is orthogonal to it, so a
    # later visit only has to re-project rows changed since then, unless the
    # pivot itself changed.
    tables = kernel_tables(params.with_dim(X.shape[1])) if X.dtype == np.int64 else None
    codes = tables.code[X] if tables is not None else None
    last_visit = np.full(n, -1, dtype=np.int64)
    modified = np.zeros(n, dtype=np.int64)
    while visits < limit:
        for j in range(n):
            if visits >= limit:
                break
            visits += 1
            pivot = X[j]
            updated = False
            if pivot.any():
                if last_visit[j] < 0 or modified[j] > last_visit[j]:
                    cand = np.flatnonzero(np.arange(n) != j)
                else:
                    cand = np.flatnonzero(modified > last_visit[j])
                    cand = cand[cand != j]
                if cand.size:
                    c = project_rows(X, pivot, params, workers, rows=cand, codes=codes)
                    hit = np.flatnonzero(c)
                    if hit.size:
                        updated = True
                        rows = cand[hit]
                        X[rows] = (X[rows] - c[hit, None] * pivot[None, :]) % M
                        modified[rows] = visits
                        if codes is not None:
                            codes[rows] = tables.code[X[rows]]
            last_visit[j] = visits
            quiet = 0 if updated else quiet + 1
            if quiet >= n:
                return OrthoResult(X, visits, True)
    return OrthoResult(X, visits, False)


def is_orthogonal_system(system: np.ndarray, params: Params, workers: int | None = None) -> bool:
    """Every entry orthogonal to every other entry."""
    for j in range(system.shape[0]):
        if not system[j].any():
            continue
        c = project_rows(system, system[j], params, workers)
        c[j] = 0
        if c.any():
            return False
    return True
