"""Nearest point of ``v0`` on the line spanned by ``v1``.

The loss ``c -> ||v0 - c*v1||`` depends on ``c`` only through how many base-p
digits of ``c`` agree with each coordinate ratio ``v0_d / v1_d``.  Inserting the
ratios into a trie keyed by digits (least significant first) turns the
minimisation into a search for the lightest root-to-leaf path.

:func:`build_trie` and :func:`trie_dfs` are the reference implementation.
:func:`project_rows` solves the same problem for a whole matrix against one
pivot and is what the higher-level algorithms call.
"""

from __future__ import annotations

import os
from functools import lru_cache
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .core import (
    Params,
    RatioData,
    axpy_mod,
    norm_q,
    ratio_valuation,
)

BRUTE_FORCE_LIMIT = 10**6


class ProjectionResult(NamedTuple):
    c_opt: int
    weight: int


@dataclass
class TrieNode:
    label: int | None
    weight: int = 0
    children: dict[int, "TrieNode"] = field(default_factory=dict)


@dataclass
class WeightedTrie:
    """Digit-labelled rooted tree with integer (rescaled) node weights."""

    root: TrieNode
    p: int
    E: int

    def nodes(self) -> Iterator[tuple[int, TrieNode]]:
        """Yield ``(depth, node)`` pairs in depth-first, ascending-digit order."""
        stack = [(0, self.root)]
        while stack:
            depth, node = stack.pop()
            yield depth, node
            for r in sorted(node.children, reverse=True):
                stack.append((depth + 1, node.children[r]))

    def leaves(self) -> Iterator[tuple[int, int]]:
        """Yield ``(c, path_weight)`` for every leaf in traversal order."""
        stack = [(self.root, 0, 0, self.root.weight)]
        while stack:
            node, depth, c, w = stack.pop()
            if not node.children:
                yield c, w
                continue
            for r in sorted(node.children, reverse=True):
                child = node.children[r]
                stack.append((child, depth + 1, c + r * self.p**depth, w + child.weight))

    def __len__(self) -> int:
        return sum(1 for _ in self.nodes())


def build_trie(rd: RatioData, params: Params) -> WeightedTrie:
    p, E, eps = params.p, params.E, params.eps
    root = TrieNode(label=None)
    for rho, nu in zip(rd.rho, rd.nu):
        if not 0 <= nu <= E:
            raise ValueError(f"valuation {nu} outside [0, {E}]")
        root.weight += eps[nu]
        node = root
        for e in range(E - nu):
            rho, r = divmod(rho, p)
            child = node.children.get(r)
            if child is None:
                child = node.children[r] = TrieNode(label=r)
            node = child
            node.weight += eps[nu + e + 1] - eps[nu + e]
    return WeightedTrie(root, p, E)


def trie_dfs(trie: WeightedTrie, params: Params | None = None) -> ProjectionResult:
    """First lightest leaf in ascending-digit depth-first order."""
    best_c, best_w = 0, None
    for c, w in trie.leaves():
        if best_w is None or best_w > w:
            best_c, best_w = c, w
    return ProjectionResult(best_c, best_w)


def project(v0: Sequence[int], v1: Sequence[int], params: Params) -> ProjectionResult:
    return trie_dfs(build_trie(ratio_valuation(v0, v1, params), params), params)


def nearest_component(v0: Sequence[int], v1: Sequence[int], params: Params) -> int:
    """Scalar ``c`` such that ``c*v1`` is a nearest point to ``v0`` on ``k*v1``.

    ``c == 0`` exactly when ``v0`` is orthogonal to ``v1``.
    """
    return project(v0, v1, params).c_opt


def dummy_constant(v0: Sequence[int], v1: Sequence[int], params: Params) -> int:
    """Part of ``||v0 - c*v1||`` that no choice of ``c`` can change."""
    rd = ratio_valuation(v0, v1, params)
    return norm_q([a for a, nu in zip(v0, rd.nu) if nu == params.E], params)


def brute_force_component(v0: Sequence[int], v1: Sequence[int], params: Params) -> tuple[int, int]:
    """Smallest minimiser of ``||v0 - c*v1||`` by enumeration, with its norm."""
    M = params.modulus
    if M > BRUTE_FORCE_LIMIT:
        raise ValueError(f"p**E = {M} exceeds the enumeration limit {BRUTE_FORCE_LIMIT}")
    best_c, best = 0, norm_q(v0, params)
    for c in range(1, M):
        n = norm_q(axpy_mod(v0, c, v1, params), params)
        if n < best:
            best_c, best = c, n
    return best_c, best


# ---------------------------------------------------------------------------
# Batched projection
# ---------------------------------------------------------------------------


def default_workers() -> int:
    return os.cpu_count() or 1


TABLE_LIMIT = 1 << 22


def _kernel_ok(params: Params, D: int) -> bool:
    return (
        params.modulus <= TABLE_LIMIT
        and params.E < 127
        and params.eps[0] * (D + 1) < 2**61
    )


@lru_cache(maxsize=8)
def _tables(p: int, E: int, q: int):
    from ._kernel import code_tables, digit_tables

    pw = np.array([p**k for k in range(E + 1)], dtype=np.int64)
    eps = np.array(Params(p, E, q).eps, dtype=np.int64)
    dig, vtab = digit_tables(p, E)
    code, cval, clead = code_tables(p, E, dig, vtab)
    return KernelTables(pw, eps, dig, vtab, code, cval, clead)


class KernelTables(NamedTuple):
    pw: np.ndarray
    eps: np.ndarray
    dig: np.ndarray
    vtab: np.ndarray
    code: np.ndarray
    cval: np.ndarray
    clead: np.ndarray


def kernel_tables(params: Params) -> KernelTables | None:
    """Lookup tables for the compiled kernel, or None when it does not apply."""
    if not _kernel_ok(params, params.D):
        return None
    return _tables(params.p, params.E, params.q)


def project_rows(
    Y: np.ndarray,
    x: Sequence[int],
    params: Params,
    workers: int | None = None,
    with_weights: bool = False,
    rows: np.ndarray | None = None,
    codes: np.ndarray | None = None,
):
    """Nearest component along ``x`` of every row of ``Y`` (or of ``Y[rows]``).

    Returns an integer array of scalars (and path weights when ``with_weights``),
    aligned with ``rows`` when given.  ``codes`` may pass a cached
    ``kernel_tables(params).code[Y]`` so it is not recomputed.
    """
    N, D = Y.shape
    if rows is None:
        rows = np.arange(N, dtype=np.int64)
    else:
        rows = np.asarray(rows, dtype=np.int64)
    n = rows.shape[0]
    if _kernel_ok(params, D) and Y.dtype == np.int64:
        from ._kernel import pivot_tables_kernel, project_rows_kernel

        p, E = params.p, params.E
        T = _tables(p, E, params.q)
        nu1 = np.empty(D, dtype=np.int64)
        inv = np.empty(D, dtype=np.int64)
        pivot_tables_kernel(np.asarray(x, dtype=np.int64), p, E, T.pw, nu1, inv)
        out_c = np.zeros(n, dtype=np.int64)
        out_w = np.zeros(n, dtype=np.int64)
        Yc = np.ascontiguousarray(Y)
        if codes is None:
            codes = T.code[Yc]

        def run(lo, hi):
            project_rows_kernel(
                Yc, codes, rows[lo:hi], nu1, inv, p, E, T.pw, T.eps, T.dig, T.vtab,
                T.cval, T.clead, out_c[lo:hi], out_w[lo:hi],
            )

        workers = default_workers() if workers is None else max(1, workers)
        if workers <= 1 or n < 64 * workers:
            run(0, n)
        else:
            bounds = np.linspace(0, n, workers + 1).astype(int)
            with ThreadPoolExecutor(workers) as ex:
                list(ex.map(lambda k: run(bounds[k], bounds[k + 1]), range(workers)))
    else:
        out_c = np.zeros(n, dtype=Y.dtype)
        out_w = np.zeros(n, dtype=object)
        for k, i in enumerate(rows):
            res = project(Y[i], x, params)
            out_c[k] = res.c_opt
            out_w[k] = res.weight
    if with_weights:
        return out_c, out_w
    return out_c
