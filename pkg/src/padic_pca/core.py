"""Exact residue arithmetic modulo p^E.

Everything here works on plain Python integers so results are exact for any
precision.  Vectors are any sequence of ints in ``range(p**E)``; numpy integer
arrays are accepted too.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np


class NotAUnit(ValueError):
    """Raised when a modular inverse is requested for a multiple of p."""


class ParamsError(ValueError):
    """Invalid arithmetic parameters (non-prime p, E < 1, ...)."""


def is_prime(n: int) -> bool:
    from sympy import isprime

    return bool(isprime(n))


@dataclass(frozen=True)
class Params:
    """Prime ``p``, precision ``E``, norm exponent ``q`` and dimension ``D``."""

    p: int
    E: int
    q: int = 1
    D: int = 1

    def __post_init__(self):
        for name in ("p", "E", "q", "D"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ParamsError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.p < 2 or not is_prime(self.p):
            raise ParamsError(f"p must be prime, got {self.p}")
        if self.E < 1:
            raise ParamsError(f"E must be >= 1, got {self.E}")
        if self.q < 1:
            raise ParamsError(f"q must be a positive integer, got {self.q}")
        if self.D < 1:
            raise ParamsError(f"D must be >= 1, got {self.D}")

    @cached_property
    def modulus(self) -> int:
        return self.p**self.E

    @cached_property
    def eps(self) -> tuple[int, ...]:
        """Rescaled weights: ``eps[e] = p**((E-1-e)*q)`` for e < E, ``eps[E] = 0``."""
        p, E, q = self.p, self.E, self.q
        return tuple(p ** ((E - 1 - e) * q) for e in range(E)) + (0,)

    def with_dim(self, D: int) -> "Params":
        return Params(self.p, self.E, self.q, D)


class RatioData(NamedTuple):
    rho: tuple[int, ...]
    nu: tuple[int, ...]


# ---------------------------------------------------------------------------
# Scalars
# ---------------------------------------------------------------------------


def valuation(x: int, params: Params) -> int:
    """p-adic valuation of a residue, capped at E; ``valuation(0) == E``."""
    x = int(x) % params.modulus
    if x == 0:
        return params.E
    p = params.p
    m = 0
    while x % p == 0:
        x //= p
        m += 1
    return m


def mod_inverse(u: int, modulus: int, p: int | None = None) -> int:
    """Inverse of the unit ``u`` modulo ``modulus`` (a power of ``p``)."""
    u = int(u)
    if modulus < 2:
        raise ValueError(f"modulus must be >= 2, got {modulus}")
    if p is not None and u % p == 0:
        raise NotAUnit(f"{u} is divisible by {p}")
    try:
        return pow(u, -1, modulus)
    except ValueError:
        raise NotAUnit(f"{u} is not invertible modulo {modulus}") from None


def rescaled_abs(x: int, params: Params) -> int:
    """``p**((E-1)*q) * |x|**q`` as an integer, with ``|p| = 1/p``."""
    return params.eps[valuation(x, params)]


# ---------------------------------------------------------------------------
# Vectors
# ---------------------------------------------------------------------------


def norm_q(v: Sequence[int], params: Params) -> int:
    """Rescaled l^q norm (raised to the q-th power) of a residue vector."""
    return sum(rescaled_abs(x, params) for x in v)


def ratio_valuation(v0: Sequence[int], v1: Sequence[int], params: Params) -> RatioData:
    """Per-coordinate ratio ``v0/v1`` and valuation data for trie construction.

    Coordinates where ``v1`` vanishes, or where ``v0`` is less divisible by p than
    ``v1``, are dummies ``(0, E)``: no scalar multiple of ``v1`` can reduce them.
    """
    if len(v0) != len(v1):
        raise ValueError("vectors must have equal length")
    p, E = params.p, params.E
    rho: list[int] = []
    nu: list[int] = []
    for a, b in zip(v0, v1):
        a, b = int(a), int(b)
        n0 = valuation(a, params)
        n1 = valuation(b, params)
        if b % params.modulus != 0 and n0 >= n1:
            m = p ** (E - n1)
            unit0 = (a // p**n0) if a else 0
            r = p ** (n0 - n1) * unit0 * mod_inverse(b // p**n1, m, p) % m
            rho.append(r)
            nu.append(n1)
        else:
            rho.append(0)
            nu.append(E)
    return RatioData(tuple(rho), tuple(nu))


def axpy_mod(v: Sequence[int], c: int, x: Sequence[int], params: Params) -> tuple[int, ...]:
    """``(v - c*x) mod p^E`` coordinatewise."""
    if len(v) != len(x):
        raise ValueError("vectors must have equal length")
    M = params.modulus
    c = int(c)
    return tuple((int(a) - c * int(b)) % M for a, b in zip(v, x))


# ---------------------------------------------------------------------------
# Batched helpers on integer matrices
# ---------------------------------------------------------------------------


def fits_int64(params: Params) -> bool:
    """True when products of two residues fit comfortably in int64."""
    return params.modulus**2 < 2**62


def as_matrix(rows, params: Params) -> np.ndarray:
    """Coerce rows to a 2-D residue matrix (int64, or object for huge moduli)."""
    dtype = np.int64 if fits_int64(params) else object
    if isinstance(rows, np.ndarray) and rows.ndim == 2:
        A = rows.astype(dtype, copy=True)
    else:
        rows = list(rows)
        if not rows:
            return np.zeros((0, params.D), dtype=dtype)
        A = np.array([[int(x) for x in r] for r in rows], dtype=dtype)
    if A.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if A.size and (A.min() < 0 or A.max() >= params.modulus):
        raise ValueError(f"entries must lie in [0, {params.modulus})")
    return A


def valuations(A: np.ndarray, params: Params) -> np.ndarray:
    """Elementwise capped valuation of a residue array."""
    p, E = params.p, params.E
    out = np.zeros(A.shape, dtype=np.int64)
    rem = np.array(A, copy=True)
    zero = rem == 0
    alive = ~zero
    for _ in range(E):
        hit = alive & (rem % p == 0)
        if not hit.any():
            break
        out[hit] += 1
        rem[hit] //= p
        alive = hit
    out[zero] = E
    return out


def row_norms(A: np.ndarray, params: Params) -> list[int]:
    """Rescaled norm of every row, as exact Python ints."""
    if A.shape[0] == 0:
        return []
    eps = np.array(params.eps, dtype=object if not _eps_fits(params, A.shape[1]) else np.int64)
    w = eps[valuations(A, params)]
    return [int(s) for s in w.sum(axis=1)]


def _eps_fits(params: Params, width: int) -> bool:
    return params.eps[0] * max(width, 1) < 2**62
