"""Least-squares projection of algebra elements onto finite reference sets.

Given a state phi and reference elements b_1..b_p, the Gram matrix
M_ij = b_i . b_j and cross vector N_i = a . b_i (in the state-induced dot
product) determine the closest point of span_R{b_i} to a:

    coefficients    lam_i  = -(M^-1 N)_i
    parallel part   a_par  = sum_i b_i (M^-1 N)_i
    residual        f      = a.a - N M^-1 N  >= 0

The residual is the determinant ratio det(M with a prepended)/det(M), which
is the multi-element form of the Cauchy-Schwarz inequality.  Rank-deficient
Gram matrices fall back to an eigenvalue-thresholded pseudo-inverse and emit
``SingularGramWarning``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .algebra import AlgebraElement, DotConfig, State, dot, embed_diag, state_eval
from .errors import (
    DimensionError,
    DomainError,
    HermiticityError,
    LinearDependenceError,
    SingularGramError,
    SingularGramWarning,
)

__all__ = [
    "GramMatrix",
    "ProjectionResult",
    "gram",
    "project",
    "cauchy_schwarz_check",
    "reflect",
    "gram_schmidt",
    "kernel_basis",
    "parallelepiped_volume",
    "levi_civita_volume",
    "tetra_membership",
    "power_dependence",
    "tuple_inner",
]

RANK_TOL = 1e-10
TETRA_SLACK = 1e-12


@dataclass(frozen=True)
class GramMatrix:
    """Gram matrix of a reference set with rank and inverse metadata.

    ``inverse_or_pseudo`` is the exact inverse when ``is_full_rank`` (smallest
    singular value above ``rank_tol`` times the largest), otherwise the
    pseudo-inverse with singular values below that threshold dropped.
    """

    m: np.ndarray
    det: float
    rank_tol: float
    inverse_or_pseudo: np.ndarray
    is_full_rank: bool

    @property
    def p(self) -> int:
        return self.m.shape[0]

    def solve(self, v: np.ndarray) -> np.ndarray:
        return self.inverse_or_pseudo @ v


def _gram_from_array(m: np.ndarray, rank_tol: float) -> GramMatrix:
    sv = np.linalg.svd(m, compute_uv=False)
    full = bool(sv[-1] > rank_tol * max(sv[0], rank_tol))
    if full:
        inv = np.linalg.inv(m)
    else:
        inv = np.linalg.pinv(m, rcond=rank_tol)
    return GramMatrix(
        m=m,
        det=float(np.linalg.det(m)),
        rank_tol=rank_tol,
        inverse_or_pseudo=inv,
        is_full_rank=full,
    )


def _dot_real(phi, cfg, a, b) -> float:
    return dot(phi, cfg, a, b).real


def gram(phi: State, cfg: DotConfig, bs, rank_tol: float = RANK_TOL) -> GramMatrix:
    """Gram matrix M_ij = b_i . b_j of the reference set.

    The dot product is real for every lam; entries are stored as floats.
    With a non-real lam the matrix need not be symmetric.
    """
    bs = list(bs)
    if not bs:
        raise DimensionError("reference set is empty")
    p = len(bs)
    m = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            if j < i and cfg.lam.imag == 0:
                m[i, j] = m[j, i]
            else:
                m[i, j] = _dot_real(phi, cfg, bs[i], bs[j])
    return _gram_from_array(m, rank_tol)


@dataclass(frozen=True)
class ProjectionResult:
    """Decomposition of an element against a reference set.

    ``coefficients`` are the minimizing lam in |a + lam_i b_i|; the parallel
    part is -sum lam_i b_i.  ``residual`` is the squared norm of the
    perpendicular part, so ``norm_sq_parallel + residual = a.a``.
    """

    coefficients: np.ndarray
    parallel: AlgebraElement
    perpendicular: AlgebraElement
    norm_sq_parallel: float
    residual: float


def _cross_vector(phi, cfg, a, bs) -> np.ndarray:
    return np.array([_dot_real(phi, cfg, a, b) for b in bs])


def project(phi: State, cfg: DotConfig, a: AlgebraElement, bs,
            rank_tol: float = RANK_TOL) -> ProjectionResult:
    """Project a onto the real span of the reference set."""
    bs = list(bs)
    g = gram(phi, cfg, bs, rank_tol)
    if not g.is_full_rank:
        warnings.warn("rank-deficient Gram matrix; using pseudo-inverse", SingularGramWarning)
    n = _cross_vector(phi, cfg, a, bs)
    w = g.solve(n)
    par = AlgebraElement(sum(bi.m * wi for bi, wi in zip(bs, w)))
    perp = a - par
    return ProjectionResult(
        coefficients=-w,
        parallel=par,
        perpendicular=perp,
        norm_sq_parallel=float(n @ w),
        residual=_dot_real(phi, cfg, perp, perp),
    )


def cauchy_schwarz_check(phi: State, cfg: DotConfig, a: AlgebraElement, bs,
                         rank_tol: float = RANK_TOL) -> tuple[float, float]:
    """Residual a.a - N M^-1 N and the Gram determinant ratio.

    The ratio is det of the Gram matrix of (a, b_1..b_p) divided by det of
    the Gram matrix of (b_1..b_p); both quantities are equal and nonnegative
    for any state.  Raises ``SingularGramError`` when the reference Gram
    matrix is rank deficient.
    """
    bs = list(bs)
    g = gram(phi, cfg, bs, rank_tol)
    if not g.is_full_rank:
        raise SingularGramError("reference Gram matrix is singular; residual is undefined")
    n = _cross_vector(phi, cfg, a, bs)
    residual = _dot_real(phi, cfg, a, a) - float(n @ g.solve(n))
    big = gram(phi, cfg, [a] + bs, rank_tol)
    det_ratio = big.det / g.det
    return residual, det_ratio


def reflect(phi: State, cfg: DotConfig, a: AlgebraElement, bs,
            rank_tol: float = RANK_TOL) -> AlgebraElement:
    """Reflection of a through the span of the reference set: 2 a_par - a."""
    res = project(phi, cfg, a, bs, rank_tol)
    return 2.0 * res.parallel - a


def gram_schmidt(phi: State, cfg: DotConfig, bs,
                 rank_tol: float = RANK_TOL) -> tuple[list, list]:
    """Sequential orthogonalization of the reference set.

    Returns (orthogonal, orthonormal) lists.  Each element is reduced
    against the span of its predecessors (using the already orthogonalized
    set, which spans the same subspace and behaves better in floats).
    Raises ``LinearDependenceError`` when an intermediate squared norm falls
    to ``rank_tol`` or below.
    """
    ortho: list[AlgebraElement] = []
    norms: list[float] = []
    for k, b in enumerate(bs):
        o = b
        for u, uu in zip(ortho, norms):
            o = o - (_dot_real(phi, cfg, u, o) / uu) * u
        oo = _dot_real(phi, cfg, o, o)
        if oo <= rank_tol:
            raise LinearDependenceError(f"element {k} is linearly dependent on its predecessors")
        ortho.append(o)
        norms.append(oo)
    onorm = [o / math.sqrt(nn) for o, nn in zip(ortho, norms)]
    return ortho, onorm


def kernel_basis(phi: State, cfg: DotConfig, bs, algebra_basis,
                 rank_tol: float = RANK_TOL) -> list:
    """Orthonormal basis of the orthogonal complement of span{bs}.

    Requires a spanning set of the full algebra (over the reals of the dot
    product); complement members are obtained by orthogonalizing the
    spanning set against bs and keeping the directions with nonvanishing
    residual norm.
    """
    kept = list(bs)
    out = []
    for cand in algebra_basis:
        try:
            ortho, _ = gram_schmidt(phi, cfg, kept + [cand], rank_tol)
        except LinearDependenceError:
            continue
        tail = ortho[-1]
        nn = _dot_real(phi, cfg, tail, tail)
        kept.append(cand)
        out.append(tail / math.sqrt(nn))
    return out


def _embedded_gram(vectors, normalized: bool, cfg: DotConfig | None = None):
    vecs = [np.asarray(v, dtype=float).reshape(-1) for v in vectors]
    if not vecs:
        raise DimensionError("need at least one vector")
    n = vecs[0].size
    if any(v.size != n for v in vecs):
        raise DimensionError("vectors must share a dimension")
    if len(vecs) > n:
        raise DimensionError(f"{len(vecs)} vectors cannot be independent in R^{n}")
    phi = State.normalized_trace() if normalized else State.unnormalized_sum()
    cfg = cfg or DotConfig()
    return [embed_diag(v) for v in vecs], vecs, phi, cfg, n


def parallelepiped_volume(vectors, normalized: bool = True) -> float:
    """Squared-volume Gram determinant of diagonally embedded real vectors.

    With the normalized trace each pairwise dot picks up a factor 1/n, so
    the determinant of p+1 vectors carries 1/n^(p+1) relative to the
    Euclidean Gram determinant (returned by the unnormalized variant).
    """
    els, _, phi, cfg, _ = _embedded_gram(vectors, normalized)
    return gram(phi, cfg, els).det


def levi_civita_volume(vectors, normalized: bool = True) -> float:
    """Gram determinant computed by epsilon-symbol contraction.

    The complement components f_{a_1..a_{n-k}} = eps(a_1..a_{n-k}, b_1..b_k)
    v_1^{b_1}..v_k^{b_k} / sqrt((n-k)!) contract to the Euclidean Gram
    determinant of the k vectors.  Exponential in n; supported for n <= 6.
    """
    _, vecs, _, _, n = _embedded_gram(vectors, normalized)
    if n > 6:
        raise DimensionError("epsilon contraction supported for ambient dimension <= 6")
    k = len(vecs)
    free = n - k
    comp: dict[tuple, float] = {}
    for perm in permutations(range(n)):
        sign = _perm_sign(perm)
        w = sign
        for v, idx in zip(vecs, perm[free:]):
            w *= v[idx]
            if w == 0.0:
                break
        if w == 0.0:
            continue
        key = perm[:free]
        comp[key] = comp.get(key, 0.0) + w
    total = sum(val * val for val in comp.values())
    total /= math.factorial(free)
    if normalized:
        total /= float(n) ** k
    return total


def _perm_sign(perm) -> int:
    seen = [False] * len(perm)
    sign = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def tetra_membership(x: float, y: float, z: float) -> bool:
    """Whether (x, y, z) lies in the solid x^2+y^2+z^2 <= 1 + 2xyz.

    The inputs must lie in [-1, 1]; triples of pairwise cosines of three
    unit vectors always belong to the solid.
    """
    for name, v in (("x", x), ("y", y), ("z", z)):
        if not (-1.0 <= v <= 1.0):
            raise DomainError(f"{name} = {v} outside [-1, 1]")
    return x * x + y * y + z * z <= 1.0 + 2.0 * x * y * z + TETRA_SLACK


def power_dependence(a: AlgebraElement, m: int,
                     rank_tol: float = RANK_TOL) -> tuple[np.ndarray, float]:
    """Least-squares coefficients alpha with 1 + alpha_i a^i closest to zero.

    Uses the normalized-trace dot product over the powers a^1..a^m.  For a
    hermitian a with no zero eigenvalue and m at least the number of
    distinct eigenvalues, the residual vanishes and the alpha are the
    (normalized) characteristic coefficients.  Emits ``SingularGramWarning``
    for degenerate power sets.
    """
    _require_power_input(a, m)
    phi = State.normalized_trace()
    cfg = DotConfig()
    powers = []
    cur = a
    for _ in range(m):
        powers.append(cur)
        cur = cur @ a
    res = project(phi, cfg, AlgebraElement.identity(a.dim), powers, rank_tol)
    return res.coefficients, res.residual


def _require_power_input(a: AlgebraElement, m: int):
    if m < 1:
        raise DomainError(f"power order must be >= 1, got {m}")
    scale = max(1.0, np.abs(a.m).max())
    if np.abs(a.m - a.m.conj().T).max() > 1e-10 * scale:
        raise HermiticityError("power dependence requires a hermitian element")


def tuple_inner(phi: State, cfg: DotConfig, a_tuple, b_tuple) -> float:
    """Determinant of the cross dot matrix C_ij = a_i . b_j.

    Antisymmetric under swapping two elements within either tuple, and zero
    when either tuple is linearly dependent.  The pairing of a tuple with
    itself is a Gram determinant, hence nonnegative.
    """
    a_tuple = list(a_tuple)
    b_tuple = list(b_tuple)
    if len(a_tuple) != len(b_tuple):
        raise DimensionError("tuples must have equal length")
    if not a_tuple:
        raise DimensionError("tuples are empty")
    c = np.array([[_dot_real(phi, cfg, ai, bj) for bj in b_tuple] for ai in a_tuple])
    return float(np.linalg.det(c))
