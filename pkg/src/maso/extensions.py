"""Lovász and multilinear extensions of set functions.

Points are 1-d float arrays indexed by element. Ties in the level-set order
are broken by ascending element index.
"""

from __future__ import annotations

import numpy as np

from .core import BLOCKER_CAP, CapacityError, ValueOracle

MULTILINEAR_CAP = BLOCKER_CAP


def as_point(z, n: int | None = None, unit: bool = False) -> np.ndarray:
    """Validate a fractional point; ``unit`` restricts it to [0,1]^V."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError("a fractional point is a 1-d vector")
    if n is not None and z.shape[0] != n:
        raise ValueError(f"expected {n} coordinates, got {z.shape[0]}")
    if np.any(z < 0):
        raise ValueError("fractional points must be nonnegative")
    if unit and np.any(z > 1 + 1e-12):
        raise ValueError("multilinear points must lie in [0,1]^V")
    return z


def chi(S: int, n: int) -> np.ndarray:
    """Characteristic vector of a bitset."""
    return np.array([(S >> v) & 1 for v in range(n)], dtype=float)


def _greedy_order(z: np.ndarray) -> np.ndarray:
    # nonincreasing z, ascending index on ties
    return np.lexsort((np.arange(z.shape[0]), -z))


def lovasz_eval(f: ValueOracle, z) -> float:
    """Level-set sum over the distinct positive values of z."""
    z = as_point(z, f.n)
    levels = np.unique(z[z > 0])
    total = 0.0
    prev = 0.0
    for val in levels:
        S = 0
        for v in np.nonzero(z > prev)[0]:
            S |= 1 << int(v)
        total += (val - prev) * f(S)
        prev = val
    return float(total)


def lovasz_integral(f: ValueOracle, z) -> float:
    """E_theta f({v : z(v) >= theta}) for theta uniform on [0,1]; z in [0,1]^V."""
    z = as_point(z, f.n, unit=True)
    cuts = np.concatenate([[0.0], np.unique(z[z > 0]), [1.0]])
    cuts = np.unique(cuts)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        S = 0
        for v in np.nonzero(z >= hi)[0]:
            S |= 1 << int(v)
        total += (hi - lo) * f(S)
    return float(total)


def lovasz_subgradient(f: ValueOracle, z) -> np.ndarray:
    """Edmonds greedy vertex of the base polytope for the order of z."""
    z = as_point(z, f.n)
    s = np.zeros(f.n)
    S = 0
    prev = f(0)
    for v in _greedy_order(z):
        S |= 1 << int(v)
        cur = f(S)
        s[v] = cur - prev
        prev = cur
    return s


def _product_weights(z: np.ndarray) -> np.ndarray:
    # probability of every bitset under independent inclusion with marginals z
    p = np.ones(1)
    for zv in z:
        p = np.concatenate([p * (1.0 - zv), p * zv])
    return p


def multilinear_eval_exact(f: ValueOracle, z) -> float:
    z = as_point(z, f.n, unit=True)
    if f.n > MULTILINEAR_CAP:
        raise CapacityError(f"exact multilinear evaluation needs n <= {MULTILINEAR_CAP}")
    return float(_product_weights(z) @ f.table())


def multilinear_partial(f: ValueOracle, z, v: int) -> float:
    """Slope of f^M along e_v: f^M(z; z_v=1) - f^M(z; z_v=0)."""
    z = as_point(z, f.n, unit=True)
    if f.n > MULTILINEAR_CAP:
        raise CapacityError(f"exact multilinear evaluation needs n <= {MULTILINEAR_CAP}")
    hi, lo = z.copy(), z.copy()
    hi[v], lo[v] = 1.0, 0.0
    return multilinear_eval_exact(f, hi) - multilinear_eval_exact(f, lo)


def multilinear_gradient(f: ValueOracle, z) -> np.ndarray:
    z = as_point(z, f.n, unit=True)
    if f.n > MULTILINEAR_CAP:
        raise CapacityError(f"exact multilinear evaluation needs n <= {MULTILINEAR_CAP}")
    t = f.table()
    masks = np.arange(1 << f.n)
    grad = np.empty(f.n)
    for v in range(f.n):
        zz = z.copy()
        zz[v] = 0.0
        p = _product_weights(zz)
        # p is supported on sets without v; shift mass onto S+v for the upper slice
        without = (masks >> v) & 1 == 0
        grad[v] = p[without] @ (t[masks[without] | (1 << v)] - t[masks[without]])
    return grad


def multilinear_eval_mc(f: ValueOracle, z, samples: int, seed: int) -> tuple[float, float]:
    """Monte-Carlo estimate of f^M(z) and its standard error."""
    if samples < 1:
        raise ValueError("need at least one sample")
    z = as_point(z, f.n, unit=True)
    rng = np.random.default_rng(seed)
    draws = rng.random((samples, f.n)) < z
    weights = 1 << np.arange(f.n, dtype=object) if f.n > 62 else 1 << np.arange(f.n, dtype=np.int64)
    vals = np.array([f(int(m)) for m in (draws @ weights)], dtype=float)
    est = float(vals.mean())
    err = float(vals.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return est, err
