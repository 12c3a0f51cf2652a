"""Variance and uncertainty-bound reports built on the projection machinery.

All bounds are instances of one inequality: the squared norm of an element
is at least the squared norm of its projection onto any finite reference
set.  Specializing the element and the set yields

- ``fluctuation_bound``: variance of A against the span of fluctuations of
  a reference family,
- ``pair_product_bound``: the raw second-moment product of two hermitian
  elements against the squared expectation of their commutator,
- ``energy_bound``: the second moment (or variance) of a hamiltonian
  against the Heisenberg velocities of a reference family.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    AlgebraElement,
    DotConfig,
    PhysConstants,
    State,
    commutator,
    heisenberg_dot,
    state_eval,
)
from .errors import DimensionError, HermiticityError, SingularGramWarning
from .projection import RANK_TOL, project

__all__ = [
    "BoundReport",
    "MARGIN_TOL",
    "fluctuation",
    "variance",
    "fluctuation_bound",
    "pair_product_bound",
    "energy_bound",
]

MARGIN_TOL = 1e-10


@dataclass(frozen=True)
class BoundReport:
    """One inequality instance: lhs >= rhs with margin = lhs - rhs.

    ``satisfied`` tolerates rounding down to margin >= -1e-10.  ``extra``
    carries informational values (observed commutator size and similar).
    """

    lhs: float
    rhs: float
    margin: float
    satisfied: bool
    extra: dict = field(default_factory=dict)


def _report(lhs: float, rhs: float, extra: dict | None = None) -> BoundReport:
    margin = lhs - rhs
    return BoundReport(
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        satisfied=bool(margin >= -MARGIN_TOL),
        extra=extra or {},
    )


def fluctuation(phi: State, a: AlgebraElement) -> AlgebraElement:
    """Centered element a - phi(a) 1."""
    mean = state_eval(phi, a)
    return a - mean * AlgebraElement.identity(a.dim)


def variance(phi: State, a: AlgebraElement) -> float:
    """phi(da' da) with da the fluctuation of a; real and >= -1e-12."""
    da = fluctuation(phi, a)
    return phi.eval_matrix(da.m.conj().T @ da.m).real


def fluctuation_bound(phi: State, cfg: DotConfig, a: AlgebraElement, bs,
                      rank_tol: float = RANK_TOL) -> BoundReport:
    """Variance of a against its fluctuation projection onto {b_i}.

    lhs is the variance of a; rhs is the squared norm of the projection of
    the fluctuation da onto the real span of the fluctuations db_i, in the
    configured dot product.  With the default symmetric configuration the
    margin is nonnegative for every state (up to rounding).
    """
    bs = list(bs)
    if not bs:
        raise DimensionError("reference set is empty")
    da = fluctuation(phi, a)
    dbs = [fluctuation(phi, b) for b in bs]
    res = project(phi, cfg, da, dbs, rank_tol)
    return _report(variance(phi, a), res.norm_sq_parallel)


def pair_product_bound(phi: State, a: AlgebraElement, b: AlgebraElement,
                       commutator_scale: float | None = None) -> BoundReport:
    """Raw second-moment bound phi(a^2) phi(b^2) >= |phi([a, b])|^2 / 4.

    Both elements must be hermitian.  ``commutator_scale`` is informational
    (the expected magnitude of phi([a, b])) and is reported back together
    with the observed magnitude.
    """
    for name, el in (("a", a), ("b", b)):
        scale = max(1.0, np.abs(el.m).max())
        if np.abs(el.m - el.m.conj().T).max() > 1e-10 * scale:
            raise HermiticityError(f"pair product bound requires hermitian {name}")
    a._check_dim(b)
    lhs = state_eval(phi, a @ a).real * state_eval(phi, b @ b).real
    comm = state_eval(phi, commutator(a, b))
    rhs = abs(comm) ** 2 / 4.0
    extra = {"commutator_abs": abs(comm)}
    if commutator_scale is not None:
        extra["commutator_scale"] = float(commutator_scale)
    return _report(lhs, rhs, extra)


def _hermitian_or_anti(el: AlgebraElement, name: str):
    scale = max(1.0, np.abs(el.m).max())
    dh = np.abs(el.m - el.m.conj().T).max()
    da = np.abs(el.m + el.m.conj().T).max()
    if min(dh, da) > 1e-10 * scale:
        raise HermiticityError(f"{name} must be hermitian or antihermitian")


def energy_bound(consts: PhysConstants, phi: State, h: AlgebraElement, bs,
                 explicit_dts=None, rank_tol: float = RANK_TOL) -> tuple[BoundReport, BoundReport]:
    """Hamiltonian second-moment bounds from reference velocities.

    For reference elements B_i with total time derivatives dB_i (Heisenberg
    commutator plus optional explicit part), the raw report is

        phi(h^2)  >=  (hbar^2/4) <dB>_i (M^-1)_ij <dB>_j,
        M_ij = phi(B_i B_j + B_j B_i) / 2,

    and the fluctuation report replaces the left side by the variance of h
    and M by the same anticommutator form of the centered B_i.  Each B_i
    must be hermitian or antihermitian; the quadratic form is invariant
    under rephasing B_i -> i B_i, so mixed families are accepted.  The Gram
    forms here are fixed by the inequality and do not take a DotConfig.
    """
    bs = list(bs)
    if not bs:
        raise DimensionError("reference set is empty")
    scale_h = max(1.0, np.abs(h.m).max())
    if np.abs(h.m - h.m.conj().T).max() > 1e-10 * scale_h:
        raise HermiticityError("energy bound requires a hermitian hamiltonian")
    for k, b in enumerate(bs):
        _hermitian_or_anti(b, f"reference element {k}")
        h._check_dim(b)
    if explicit_dts is None:
        explicit_dts = [None] * len(bs)
    if len(explicit_dts) != len(bs):
        raise DimensionError("explicit_dts length must match the reference set")

    dbs = [heisenberg_dot(consts, h, b, dt) for b, dt in zip(bs, explicit_dts)]
    vel = np.array([state_eval(phi, db) for db in dbs])

    def quad_form(mat: np.ndarray) -> float:
        sv = np.linalg.svd(mat, compute_uv=False)
        if sv[-1] <= rank_tol * max(sv[0], rank_tol):
            warnings.warn("rank-deficient anticommutator Gram matrix; using pseudo-inverse",
                          SingularGramWarning)
            inv = np.linalg.pinv(mat, rcond=rank_tol)
        else:
            inv = np.linalg.inv(mat)
        return ((consts.hbar**2 / 4.0) * (vel @ inv @ vel)).real

    p = len(bs)
    m_raw = np.empty((p, p), dtype=complex)
    for i in range(p):
        for j in range(i, p):
            val = 0.5 * state_eval(phi, bs[i] @ bs[j] + bs[j] @ bs[i])
            m_raw[i, j] = val
            m_raw[j, i] = val
    raw = _report(state_eval(phi, h @ h).real, quad_form(m_raw))

    dbs_c = [fluctuation(phi, b) for b in bs]
    m_fl = np.empty((p, p), dtype=complex)
    for i in range(p):
        for j in range(i, p):
            val = 0.5 * state_eval(phi, dbs_c[i] @ dbs_c[j] + dbs_c[j] @ dbs_c[i])
            m_fl[i, j] = val
            m_fl[j, i] = val
    fluct = _report(variance(phi, h), quad_form(m_fl))
    return raw, fluct
