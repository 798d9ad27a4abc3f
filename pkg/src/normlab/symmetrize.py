"""The exact sign-averaged norm and its empirical N-sample counterpart.

The exact unconditional norm of x is the average of ||sum_i eps_i x_i v_i||
over all 2^n sign patterns.  The empirical norm replaces the average by N
sampled sign columns.  With a matrix that enumerates every sign vector
exactly once, the two coincide: that identity is the cornerstone oracle
for everything downstream.

Enumeration kernel: patterns are walked in Gray order, one representative
per antipodal pair (values repeat under eps -> -eps), in blocks sized to
keep the per-block work matrix in cache.  For each functional row r_k of
the norm (coordinates for lp, functionals for polytope), the block of
signed sums is a single GEMM: signs_block @ (x * r_k).  Block sums are
combined with exact compensated summation (math.fsum).
"""

from __future__ import annotations

import math
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DimensionMismatchError, NonFiniteInputError
from .signs import SignMatrix, half_enumeration_size, half_gray_sign_block
from .spaces import NormSpec, VectorFamily, validate_family

# default cap on n for exact 2^n enumeration (configurable per call)
DEFAULT_MAX_ENUM_N = 22

# target bytes for one block work matrix in the enumeration kernel
_BLOCK_BYTES = 1 << 24
_PROBE_CHUNK = 2048


@dataclass(frozen=True)
class NormInstance:
    """The map x -> average of ||sum eps_i x_i v_i|| over all sign patterns."""

    family: VectorFamily

    def __post_init__(self):
        validate_family(self.family)

    @property
    def n(self) -> int:
        return self.family.n

    @property
    def space(self) -> NormSpec:
        return self.family.space


@dataclass(frozen=True)
class EmpiricalNormInstance:
    """The random norm x -> (1/N) sum_j ||sum_i eps_ij x_i v_i||."""

    family: VectorFamily
    signs: SignMatrix

    def __post_init__(self):
        if self.signs.n != self.family.n:
            raise DimensionMismatchError(
                f"sign matrix has n={self.signs.n} rows but the family has "
                f"n={self.family.n} vectors",
                expected=self.family.n,
                got=self.signs.n,
            )

    @property
    def n(self) -> int:
        return self.family.n

    @property
    def N(self) -> int:
        return self.signs.N

    @property
    def xi(self) -> float:
        return self.signs.xi


def _functional_rows(family: VectorFamily) -> tuple[np.ndarray, str, float | None]:
    """Rows r_k with ||u(eps)|| = combine_k <eps, x*r_k>, plus the combine mode.

    lp spaces use the coordinate rows of V directly; polytope spaces use
    the images of V under the stored functionals (max-abs combine).
    """
    space = family.space
    V = family.columns
    if space.kind == "polytope":
        return space.functionals @ V, "maxabs", None
    p = space.p
    if p is None:
        return V, "maxabs", None
    if p == 1.0:
        return V, "sumabs", None
    if p == 2.0:
        return V, "sumsq", None
    return V, "p", p


def _combine_blocks(parts: list[np.ndarray], mode: str, p: float | None) -> np.ndarray:
    """Norm values from per-row signed-sum blocks (each (c, P))."""
    if mode == "maxabs":
        out = np.abs(parts[0])
        for T in parts[1:]:
            np.maximum(out, np.abs(T), out=out)
        return out
    if mode == "sumabs":
        out = np.abs(parts[0])
        for T in parts[1:]:
            out += np.abs(T)
        return out
    if mode == "sumsq":
        out = np.square(parts[0])
        for T in parts[1:]:
            out += np.square(T)
        return np.sqrt(out)
    # general finite p with overflow-safe scaling
    A = np.abs(np.stack(parts))
    s = A.max(axis=0)
    safe = np.where(s > 0.0, s, 1.0)
    out = safe * ((A / safe) ** p).sum(axis=0) ** (1.0 / p)
    return np.where(s > 0.0, out, 0.0)


def _check_points(n: int, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n:
        raise DimensionMismatchError(
            f"points have shape {X.shape}, expected (*, {n})", expected=n
        )
    if not np.isfinite(X).all():
        raise NonFiniteInputError("points contain non-finite entries")
    return X


def _enum_guard(n: int, max_n: int) -> None:
    if n > max_n:
        raise CapacityError(
            f"exact enumeration needs 2^{n} sign patterns; cap is n <= {max_n}"
        )


def iter_exact_value_blocks(
    family: VectorFamily, x, max_n: int = DEFAULT_MAX_ENUM_N
) -> Iterator[np.ndarray]:
    """Blocks of ||sum eps_i x_i v_i|| over the antipodal representatives.

    Each full-enumeration value appears exactly once here (with its pair
    weight 2 implied); concatenated blocks cover all 2^(n-1) patterns.
    """
    n = family.n
    _enum_guard(n, max_n)
    x = _check_points(n, x)[0]
    R, mode, p = _functional_rows(family)
    Y = (x[None, :] * R).T  # (n, K)
    total = half_enumeration_size(n)
    block = max(256, min(total, _BLOCK_BYTES // (8 * max(1, R.shape[0]))))
    for start in range(0, total, block):
        count = min(block, total - start)
        E = half_gray_sign_block(n, start, count)
        S = E @ Y  # (count, K)
        yield _combine_blocks([S[:, k] for k in range(S.shape[1])], mode, p)


def exact_unconditional_norm(
    inst: NormInstance, x, max_n: int = DEFAULT_MAX_ENUM_N
) -> float:
    """Average of ||sum eps_i x_i v_i|| over all 2^n sign patterns, exactly.

    Compensated accumulation: pairwise sums within blocks, exact fsum
    across blocks.
    """
    total = half_enumeration_size(inst.n)
    sums = [float(b.sum()) for b in iter_exact_value_blocks(inst.family, x, max_n)]
    return math.fsum(sums) / total


def exact_unconditional_norm_many(
    inst: NormInstance, X, max_n: int = DEFAULT_MAX_ENUM_N
) -> np.ndarray:
    """Vectorized exact norm over the rows of X (shape (P, n)).

    Same enumeration and tolerance as the scalar form, restructured so the
    per-block signed sums for a whole chunk of points are one GEMM.
    """
    n = inst.n
    _enum_guard(n, max_n)
    X = _check_points(n, X)
    P = X.shape[0]
    if P == 0:
        return np.zeros(0)
    R, mode, p = _functional_rows(inst.family)
    K = R.shape[0]
    total = half_enumeration_size(n)
    out = np.empty(P)
    for ps in range(0, P, _PROBE_CHUNK):
        pe = min(ps + _PROBE_CHUNK, P)
        Xc = X[ps:pe]
        Pc = pe - ps
        # one (n, Pc) matrix of weighted coordinates per functional row
        Ys = [(Xc * R[k][None, :]).T for k in range(K)]
        block = max(128, min(total, _BLOCK_BYTES // (8 * Pc)))
        nblocks = -(-total // block)
        block_sums = np.empty((nblocks, Pc))
        for bi, start in enumerate(range(0, total, block)):
            count = min(block, total - start)
            E = half_gray_sign_block(n, start, count)
            parts = [E @ Ys[k] for k in range(K)]
            vals = _combine_blocks(parts, mode, p)  # (count, Pc)
            block_sums[bi] = vals.sum(axis=0)
        if nblocks == 1:
            out[ps:pe] = block_sums[0] / total
        else:
            # exact compensated reduction across blocks
            for q in range(Pc):
                out[ps + q] = math.fsum(block_sums[:, q].tolist()) / total
    return out


def _empirical_one(R: np.ndarray, mode: str, p: float | None, E: np.ndarray, x: np.ndarray) -> float:
    """(1/N) sum_j ||column_j|| for a single coefficient vector x."""
    T = (x[None, :] * R) @ E  # (K, N)
    vals = _combine_blocks([T[k] for k in range(T.shape[0])], mode, p)
    return math.fsum(map(float, vals)) / E.shape[1]


def empirical_norm(inst: EmpiricalNormInstance, x) -> float:
    """(1/N) sum_j ||sum_i eps_ij x_i v_i||."""
    x = _check_points(inst.n, x)[0]
    R, mode, p = _functional_rows(inst.family)
    return _empirical_one(R, mode, p, inst.signs.dense(), x)


def batch_empirical_norm(inst: EmpiricalNormInstance, xs) -> np.ndarray:
    """Vectorized form of ``empirical_norm``: identical values elementwise.

    Evaluates each point through the same kernel as the scalar call, so
    the outputs match scalar calls bit for bit.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.size == 0:
        return np.zeros(0)
    X = _check_points(inst.n, xs)
    R, mode, p = _functional_rows(inst.family)
    E = inst.signs.dense()
    return np.array([_empirical_one(R, mode, p, E, x) for x in X])
