"""Finite-difference differential geometry of chart maps into a matrix algebra.

A chart is a map u in R^p -> b(u) into the algebra (built-ins diagonally
embed R^3 coordinate functions).  Together with a state and a dot-product
configuration it induces a metric, a connection, curvature, geodesics, and
orthonormal frames, all evaluated with central finite differences.

Index conventions of the component arrays:

    metric      g[i, j]            = b_i . b_j
    connection  gamma[a, r, s]     = G^a_{rs}, symmetric in (r, s)
    curvature   riemann[a, b, m, n]
        = d_m gamma[a, n, b] - d_n gamma[a, m, b]
          + gamma[a, m, r] gamma[r, n, b] - gamma[a, n, r] gamma[r, m, b]
    frame       frame_conn[a, b, c] = bhat_a . d_c bhat_b, antisymmetric in (a, b)

Finite-difference steps: ``fd_step`` (default 1e-4) for first derivatives of
the chart map, ``fd_step2`` (default 1e-3) for second derivatives and for
first derivatives of derived fields; the connection is differenced at
1e-2 sqrt(fd_step) inside ``curvature``.  Linear charts carry no truncation
error, so coarser steps there only reduce rounding noise.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebra import (
    AlgebraElement,
    DotConfig,
    PhysConstants,
    State,
    dot,
    embed_diag,
    heisenberg_dot,
)
from .errors import (
    DimensionError,
    EvaluationError,
    HermiticityError,
    JacobiViolationError,
    LinearDependenceError,
    NonSymmetricMetricError,
    SingularGramError,
    SingularGramWarning,
    SingularMetricError,
    StencilOutOfDomainError,
)

__all__ = [
    "Chart",
    "MetricField",
    "ConnectionField",
    "CurvatureField",
    "GeodesicState",
    "GeodesicResult",
    "flat_plane",
    "sphere",
    "torus",
    "paraboloid",
    "custom_grid",
    "make_chart",
    "chart_to_json",
    "chart_from_json",
    "load_chart",
    "dump_chart",
    "tangent_basis",
    "metric",
    "projector_apply",
    "christoffel",
    "metric_compat_residual",
    "curvature",
    "riemann_gauss_curvature",
    "covariant_derivative",
    "geodesic",
    "orthonormal_frame",
    "gauss_curvature_2d",
    "gibbs_force",
    "killing_metric",
    "leibniz_violation_witness",
]

METRIC_RANK_TOL = 1e-10
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class Chart:
    """Parametrized map from a p-dimensional parameter box into the algebra.

    ``map_mat`` returns the raw complex matrix b(u).  Charts embedding a
    real vector diagonally also provide ``map_vec`` (the diagonal), which
    the geometry routines use as a fast path.  ``state_kind`` names the
    dimension-free default state ("sum" or "trace") used by the CLI.
    """

    id: str
    p: int
    dim: int
    map_mat: Callable
    map_vec: Callable | None
    in_domain: Callable
    sample_box: tuple
    state_kind: str = "sum"
    fd_step: float = 1e-4
    fd_step2: float = 1e-3
    params: dict = field(default_factory=dict)

    def default_state(self) -> State:
        if self.state_kind == "trace":
            return State.normalized_trace()
        return State.unnormalized_sum()


@dataclass(frozen=True)
class MetricField:
    """Induced metric and its inverse at one parameter point."""

    g: np.ndarray
    g_inv: np.ndarray

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.g))


@dataclass(frozen=True)
class ConnectionField:
    """Christoffel components gamma[a, r, s] at one parameter point."""

    gamma: np.ndarray


@dataclass(frozen=True)
class CurvatureField:
    """Riemann components riemann[a, b, m, n] at one parameter point."""

    riemann: np.ndarray


@dataclass(frozen=True)
class GeodesicState:
    tau: float
    u: np.ndarray
    udot: np.ndarray


class GeodesicResult(list):
    """List of GeodesicState with a flag set when the chart domain was left."""

    def __init__(self, states, left_domain: bool = False):
        super().__init__(states)
        self.left_domain = bool(left_domain)


# ---------------------------------------------------------------------------
# built-in charts

def _diag_chart(id, p, dim, fvec, in_domain, box, params, state="sum",
                fd_step=1e-4, fd_step2=1e-3):
    def map_mat(u):
        return np.diag(fvec(u)).astype(complex)

    return Chart(
        id=id, p=p, dim=dim, map_mat=map_mat, map_vec=fvec,
        in_domain=in_domain, sample_box=box, state_kind=state,
        fd_step=fd_step, fd_step2=fd_step2, params=dict(params),
    )


def flat_plane(state: str = "sum", fd_step: float = 1e-4, fd_step2: float = 1e-3) -> Chart:
    """Plane (u1, u2, 0) in R^3; identity metric under the sum state."""

    def fvec(u):
        return np.array([u[0], u[1], 0.0])

    box = (np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    return _diag_chart("flat_plane", 2, 3, fvec, lambda u: True, box, {},
                       state, fd_step, fd_step2)


def sphere(r: float = 1.0, state: str = "sum", fd_step: float = 1e-4,
           fd_step2: float = 1e-3) -> Chart:
    """Round sphere of radius r in polar angles (theta, phi), poles excluded."""
    if not (r > 0):
        raise ValueError("sphere radius must be positive")

    def fvec(u):
        st, ct = math.sin(u[0]), math.cos(u[0])
        sp, cp = math.sin(u[1]), math.cos(u[1])
        return np.array([r * st * cp, r * st * sp, r * ct])

    def in_domain(u):
        return 0.0 < u[0] < math.pi

    box = (np.array([0.3, 0.0]), np.array([math.pi - 0.3, 2.0 * math.pi]))
    return _diag_chart("sphere", 2, 3, fvec, in_domain, box, {"r": r},
                       state, fd_step, fd_step2)


def torus(big_r: float = 2.0, r: float = 0.5, state: str = "sum",
          fd_step: float = 1e-4, fd_step2: float = 1e-3) -> Chart:
    """Torus with center-circle radius big_r and tube radius r, angles (theta, phi)."""
    if not (big_r > r > 0):
        raise ValueError("torus radii must satisfy big_r > r > 0")

    def fvec(u):
        w = big_r + r * math.cos(u[0])
        return np.array([w * math.cos(u[1]), w * math.sin(u[1]), r * math.sin(u[0])])

    box = (np.array([0.0, 0.0]), np.array([2.0 * math.pi, 2.0 * math.pi]))
    return _diag_chart("torus", 2, 3, fvec, lambda u: True, box,
                       {"R": big_r, "r": r}, state, fd_step, fd_step2)


def paraboloid(a: float = 1.0, state: str = "sum", fd_step: float = 1e-4,
               fd_step2: float = 1e-3) -> Chart:
    """Paraboloid (u1, u2, a(u1^2 + u2^2)); apex curvature 4 a^2."""
    if not np.isfinite(a):
        raise ValueError("paraboloid coefficient must be finite")

    def fvec(u):
        return np.array([u[0], u[1], a * (u[0] ** 2 + u[1] ** 2)])

    box = (np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    return _diag_chart("paraboloid", 2, 3, fvec, lambda u: True, box, {"a": a},
                       state, fd_step, fd_step2)


def custom_grid(axes, values, state: str = "sum", fd_step: float | None = None,
                fd_step2: float | None = None) -> Chart:
    """Chart from pre-sampled matrix values on a regular grid.

    ``axes`` is a list of p strictly increasing 1d arrays and ``values`` an
    array of shape grid_shape + (dim, dim).  Points are evaluated by
    multilinear interpolation of the samples.  Only first derivatives with
    steps no finer than the grid spacing are meaningful on the piecewise
    linear interpolant; connection and curvature level operations are not
    supported on grid charts.
    """
    axes = [np.asarray(ax, dtype=float) for ax in axes]
    p = len(axes)
    if p == 0:
        raise DimensionError("custom_grid needs at least one axis")
    for ax in axes:
        if ax.ndim != 1 or ax.size < 2 or np.any(np.diff(ax) <= 0):
            raise ValueError("each axis must be strictly increasing with >= 2 nodes")
    vals = np.asarray(values, dtype=complex)
    shape = tuple(ax.size for ax in axes)
    if vals.shape[:p] != shape or vals.ndim != p + 2 or vals.shape[p] != vals.shape[p + 1]:
        raise DimensionError(f"values must have shape {shape} + (dim, dim), got {vals.shape}")
    dim = vals.shape[p]
    spacing = min(float(np.diff(ax).min()) for ax in axes)

    def map_mat(u):
        idx = []
        wts = []
        for k, ax in enumerate(axes):
            i = int(np.searchsorted(ax, u[k], side="right")) - 1
            i = min(max(i, 0), ax.size - 2)
            t = (u[k] - ax[i]) / (ax[i + 1] - ax[i])
            idx.append(i)
            wts.append(t)
        out = np.zeros((dim, dim), dtype=complex)
        for corner in range(1 << p):
            w = 1.0
            pos = []
            for k in range(p):
                if corner >> k & 1:
                    w *= wts[k]
                    pos.append(idx[k] + 1)
                else:
                    w *= 1.0 - wts[k]
                    pos.append(idx[k])
            if w != 0.0:
                out += w * vals[tuple(pos)]
        return out

    def in_domain(u):
        return all(ax[0] <= u[k] <= ax[-1] for k, ax in enumerate(axes))

    box = (np.array([ax[0] for ax in axes]), np.array([ax[-1] for ax in axes]))
    return Chart(
        id="custom_grid", p=p, dim=dim, map_mat=map_mat, map_vec=None,
        in_domain=in_domain, sample_box=box, state_kind=state,
        fd_step=fd_step if fd_step is not None else spacing / 4.0,
        fd_step2=fd_step2 if fd_step2 is not None else spacing,
        params={"axes": [ax.tolist() for ax in axes],
                "values_re": vals.real.reshape(-1).tolist(),
                "values_im": vals.imag.reshape(-1).tolist(),
                "dim": dim},
    )


def make_chart(chart_id: str, params: dict | None = None, state: str = "sum",
               fd_step: float | None = None, fd_step2: float | None = None) -> Chart:
    """Build a registered chart from its id and parameter dict."""
    params = dict(params or {})
    kw = {"state": state}
    if fd_step is not None:
        kw["fd_step"] = float(fd_step)
    if fd_step2 is not None:
        kw["fd_step2"] = float(fd_step2)
    if chart_id == "flat_plane":
        return flat_plane(**kw)
    if chart_id == "sphere":
        return sphere(r=float(params.get("r", 1.0)), **kw)
    if chart_id == "torus":
        return torus(big_r=float(params.get("R", 2.0)), r=float(params.get("r", 0.5)), **kw)
    if chart_id == "paraboloid":
        return paraboloid(a=float(params.get("a", 1.0)), **kw)
    if chart_id == "custom_grid":
        axes = params["axes"]
        dim = int(params["dim"])
        shape = tuple(len(ax) for ax in axes) + (dim, dim)
        re = np.asarray(params["values_re"], dtype=float).reshape(shape)
        im = np.asarray(params.get("values_im", np.zeros(re.size)), dtype=float).reshape(shape)
        return custom_grid(axes, re + 1j * im, **kw)
    raise ValueError(f"unknown chart id {chart_id!r}")


def chart_to_json(chart: Chart) -> dict:
    out = {"id": chart.id, "params": chart.params, "state": chart.state_kind,
           "fd_step": chart.fd_step, "fd_step2": chart.fd_step2}
    return out


def chart_from_json(obj: dict) -> Chart:
    try:
        chart_id = obj["id"]
    except (KeyError, TypeError) as exc:
        raise ValueError("chart object must carry an 'id' field") from exc
    return make_chart(
        chart_id,
        params=obj.get("params"),
        state=obj.get("state", "sum"),
        fd_step=obj.get("fd_step"),
        fd_step2=obj.get("fd_step2"),
    )


def load_chart(path) -> Chart:
    with open(path, "r", encoding="utf-8") as fh:
        return chart_from_json(json.load(fh))


def dump_chart(chart: Chart, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(chart_to_json(chart), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# evaluation core

class _Geo:
    """Chart evaluator bound to a state and dot configuration.

    Diagonal charts paired with any state reduce the dot product to a
    weighted pointwise sum, which all builtin charts use; matrix-valued
    charts fall back to the generic state evaluation.
    """

    __slots__ = ("chart", "phi", "cfg", "weights")

    def __init__(self, chart: Chart, phi: State, cfg: DotConfig):
        self.chart = chart
        self.phi = phi
        self.cfg = cfg
        self.weights = None
        if chart.map_vec is not None:
            w = phi.diagonal_weights(chart.dim)
            # real diagonals commute: the lam-dot collapses to 2 Re(lam) phi(xy)
            self.weights = w * (cfg.scale * 2.0 * complex(cfg.lam).real)

    @property
    def p(self) -> int:
        return self.chart.p

    def val(self, u):
        if not self.chart.in_domain(u):
            raise EvaluationError(
                f"point {np.asarray(u).tolist()} outside domain of chart '{self.chart.id}'")
        if self.weights is not None:
            return self.chart.map_vec(u)
        return self.chart.map_mat(u)

    def dotv(self, x, y) -> float:
        if self.weights is not None:
            return float(self.weights @ (x * y))
        lam = complex(self.cfg.lam)
        mat = lam * (x.conj().T @ y) + lam.conjugate() * (y.conj().T @ x)
        return (self.cfg.scale * self.phi.eval_matrix(mat)).real

    def wrap(self, x) -> AlgebraElement:
        if self.weights is not None:
            return embed_diag(x)
        return AlgebraElement(x)

    def tangents(self, u, h: float | None = None):
        h = h if h is not None else self.chart.fd_step
        out = []
        for a in range(self.p):
            e = np.zeros(self.p)
            e[a] = h
            out.append((self.val(u + e) - self.val(u - e)) / (2.0 * h))
        return out

    def second(self, u, i, j, h2: float | None = None):
        h2 = h2 if h2 is not None else self.chart.fd_step2
        if i == j:
            e = np.zeros(self.p)
            e[i] = h2
            return (self.val(u + e) - 2.0 * self.val(u) + self.val(u - e)) / (h2 * h2)
        ei = np.zeros(self.p)
        ej = np.zeros(self.p)
        ei[i] = h2
        ej[j] = h2
        return (self.val(u + ei + ej) - self.val(u + ei - ej)
                - self.val(u - ei + ej) + self.val(u - ei - ej)) / (4.0 * h2 * h2)

    def second_dir4(self, u, v, q):
        """Fourth-order second difference along direction v with step q."""
        return (-self.val(u + 2.0 * q * v) + 16.0 * self.val(u + q * v)
                - 30.0 * self.val(u)
                + 16.0 * self.val(u - q * v) - self.val(u - 2.0 * q * v)) / (12.0 * q * q)

    def metric_at(self, u, h: float | None = None) -> np.ndarray:
        ts = self.tangents(u, h)
        p = self.p
        g = np.empty((p, p))
        symmetric = self.weights is not None or complex(self.cfg.lam).imag == 0.0
        for i in range(p):
            for j in range(i, p) if symmetric else range(p):
                g[i, j] = self.dotv(ts[i], ts[j])
                if symmetric:
                    g[j, i] = g[i, j]
        return g


def _invert_metric(g: np.ndarray) -> np.ndarray:
    if g.shape == (2, 2):
        a, b, c, d = g[0, 0], g[0, 1], g[1, 0], g[1, 1]
        det = a * d - b * c
        scale = max(abs(a) + abs(b), abs(c) + abs(d), METRIC_RANK_TOL)
        if abs(det) <= METRIC_RANK_TOL * scale * scale:
            raise SingularMetricError("induced metric is numerically singular")
        return np.array([[d, -b], [-c, a]]) / det
    sv = np.linalg.svd(g, compute_uv=False)
    if sv[-1] <= METRIC_RANK_TOL * max(sv[0], METRIC_RANK_TOL):
        raise SingularMetricError("induced metric is numerically singular")
    return np.linalg.inv(g)


def _require_symmetric_metric(g: np.ndarray):
    scale = max(1.0, np.abs(g).max())
    if np.abs(g - g.T).max() > SYMMETRY_TOL * scale:
        raise NonSymmetricMetricError(
            "connection formulas require a symmetric metric; use a real lam dot product")


# ---------------------------------------------------------------------------
# geometry operations

def tangent_basis(chart: Chart, phi: State, cfg: DotConfig, u) -> list:
    """Coordinate tangent basis by central differences of the chart map.

    Warns with SingularGramWarning when the tangent Gram matrix is rank
    deficient at u.
    """
    geo = _Geo(chart, phi, cfg)
    u = np.asarray(u, dtype=float)
    ts = geo.tangents(u)
    p = geo.p
    g = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            g[i, j] = geo.dotv(ts[i], ts[j])
    sv = np.linalg.svd(g, compute_uv=False)
    if sv[-1] <= METRIC_RANK_TOL * max(sv[0], METRIC_RANK_TOL):
        warnings.warn("tangent Gram matrix is rank deficient", SingularGramWarning)
    return [geo.wrap(t) for t in ts]


def metric(chart: Chart, phi: State, cfg: DotConfig, u) -> MetricField:
    """Induced metric g[i, j] = b_i . b_j with its inverse."""
    geo = _Geo(chart, phi, cfg)
    u = np.asarray(u, dtype=float)
    g = geo.metric_at(u)
    return MetricField(g=g, g_inv=_invert_metric(g))


def projector_apply(chart: Chart, phi: State, cfg: DotConfig, u, a: AlgebraElement) -> AlgebraElement:
    """Apply the tangent-plane projector b_a g^{ab} (b_b . x) to x."""
    u = np.asarray(u, dtype=float)
    ts = tangent_basis(chart, phi, cfg, u)
    p = len(ts)
    g = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            g[i, j] = dot(phi, cfg, ts[i], ts[j]).real
    ginv = _invert_metric(g)
    n = np.array([dot(phi, cfg, t, a).real for t in ts])
    coef = ginv @ n
    return AlgebraElement(sum(c * t.m for c, t in zip(coef, ts)))


def _christoffel_raw(geo: _Geo, u, method: str) -> np.ndarray:
    p = geo.p
    g = geo.metric_at(u)
    _require_symmetric_metric(g)
    ginv = _invert_metric(g)
    gamma = np.empty((p, p, p))
    if method == "direct":
        ts = geo.tangents(u)
        for r in range(p):
            for s in range(r, p):
                sec = geo.second(u, r, s)
                col = np.array([geo.dotv(t, sec) for t in ts])
                gamma[:, r, s] = ginv @ col
                gamma[:, s, r] = gamma[:, r, s]
        return gamma
    if method == "metric":
        h2 = geo.chart.fd_step2
        dg = np.empty((p, p, p))
        for c in range(p):
            e = np.zeros(p)
            e[c] = h2
            dg[c] = (geo.metric_at(u + e) - geo.metric_at(u - e)) / (2.0 * h2)
        # gamma^a_{rs} = 1/2 g^{ab} (d_r g_{bs} - d_b g_{rs} + d_s g_{rb})
        term = np.empty((p, p, p))
        for b in range(p):
            for r in range(p):
                for s in range(p):
                    term[b, r, s] = dg[r, b, s] - dg[b, r, s] + dg[s, r, b]
        return 0.5 * np.einsum("ab,brs->ars", ginv, term)
    raise ValueError(f"unknown christoffel method {method!r}")


def christoffel(chart: Chart, phi: State, cfg: DotConfig, u, method: str = "direct") -> ConnectionField:
    """Connection coefficients from second chart derivatives ("direct") or
    from first derivatives of the metric ("metric")."""
    geo = _Geo(chart, phi, cfg)
    u = np.asarray(u, dtype=float)
    try:
        return ConnectionField(gamma=_christoffel_raw(geo, u, method))
    except EvaluationError as exc:
        raise StencilOutOfDomainError(str(exc)) from exc


def metric_compat_residual(chart: Chart, phi: State, cfg: DotConfig, u) -> float:
    """Max-norm violation of d_c g_{ij} = gamma^r_{ci} g_{rj} + gamma^r_{cj} g_{ir}."""
    geo = _Geo(chart, phi, cfg)
    u = np.asarray(u, dtype=float)
    p = geo.p
    try:
        g = geo.metric_at(u)
        gamma = _christoffel_raw(geo, u, "direct")
        h2 = chart.fd_step2
        worst = 0.0
        for c in range(p):
            e = np.zeros(p)
            e[c] = h2
            dg = (geo.metric_at(u + e) - geo.metric_at(u - e)) / (2.0 * h2)
            resid = dg - np.einsum("ri,rj->ij", gamma[:, c, :], g) - np.einsum("rj,ir->ij", gamma[:, c, :], g)
            worst = max(worst, float(np.abs(resid).max()))
        return worst
    except EvaluationError as exc:
        raise StencilOutOfDomainError(str(exc)) from exc


def _riemann_raw(geo: _Geo, u, s3: float) -> np.ndarray:
    """Riemann components with the connection derivative taken by product
    rule on the factors of the direct Christoffel formula.

    Gamma^a_{nb} = G^{ar} N_{r,nb} with G the inverse metric field and
    N_{r,nb} = b_r . d2b/(du_n du_b); the two factor fields are central
    differenced at step s3.  The assembled components are exactly
    antisymmetric in the last index pair whatever the per-entry error,
    because entries [m, n] and [n, m] subtract the same two floats in
    opposite order.
    """
    p = geo.p

    def g_inv_at(x):
        g = geo.metric_at(x)
        _require_symmetric_metric(g)
        return _invert_metric(g)

    def n_at(x):
        ts = geo.tangents(x)
        out = np.empty((p, p, p))
        for n in range(p):
            for b in range(n, p):
                sec = geo.second(x, n, b)
                for r in range(p):
                    out[r, n, b] = geo.dotv(ts[r], sec)
                if b != n:
                    out[:, b, n] = out[:, n, b]
        return out

    g0 = g_inv_at(u)
    n0 = n_at(u)
    gamma0 = np.einsum("ar,rnb->anb", g0, n0)
    dgam = np.empty((p, p, p, p))
    for m in range(p):
        e = np.zeros(p)
        e[m] = s3
        dg = (g_inv_at(u + e) - g_inv_at(u - e)) / (2.0 * s3)
        dn = (n_at(u + e) - n_at(u - e)) / (2.0 * s3)
        dgam[m] = (np.einsum("ar,rnb->anb", dg, n0)
                   + np.einsum("ar,rnb->anb", g0, dn))
    riem = np.empty((p, p, p, p))
    for m in range(p):
        for n in range(p):
            prod_mn = gamma0[:, m, :] @ gamma0[:, n, :]
            prod_nm = gamma0[:, n, :] @ gamma0[:, m, :]
            # grouped so the [m, n] and [n, m] entries are exact negations
            riem[:, :, m, n] = (dgam[m][:, n, :] - dgam[n][:, m, :]) + (prod_mn - prod_nm)
    return riem


def curvature(chart: Chart, phi: State, cfg: DotConfig, u,
              step: float | None = None) -> CurvatureField:
    """Riemann components from central differences of the connection factors."""
    geo = _Geo(chart, phi, cfg)
    u = np.asarray(u, dtype=float)
    s = step if step is not None else 1e-2 * math.sqrt(chart.fd_step)
    try:
        return CurvatureField(riemann=_riemann_raw(geo, u, s))
    except EvaluationError as exc:
        raise StencilOutOfDomainError(str(exc)) from exc


def riemann_gauss_curvature(chart: Chart, phi: State, cfg: DotConfig, u,
                            step: float | None = None) -> float:
    """Gaussian curvature K = g_{1r} R^r_{212} / det g for 2-parameter charts."""
    if chart.p != 2:
        raise DimensionError("Gaussian curvature requires a 2-parameter chart")
    u = np.asarray(u, dtype=float)
    mf = metric(chart, phi, cfg, u)
    cf = curvature(chart, phi, cfg, u, step=step)
    r_low = mf.g[0, :] @ cf.riemann[:, 1, 0, 1]
    return float(r_low / mf.det)


def covariant_derivative(chart: Chart, phi: State, cfg: DotConfig, u, v_field) -> np.ndarray:
    """D[a, b] = d_a V^b + gamma^b_{a d} V^d for a vector field V(u)."""
    geo = _Geo(chart, phi, cfg)
    u = np.asarray(u, dtype=float)
    p = geo.p
    try:
        gamma = _christoffel_raw(geo, u, "direct")
    except EvaluationError as exc:
        raise StencilOutOfDomainError(str(exc)) from exc
    h2 = chart.fd_step2
    vv = np.asarray(v_field(u), dtype=float)
    if vv.shape != (p,):
        raise DimensionError(f"vector field must return shape ({p},)")
    out = np.empty((p, p))
    for a in range(p):
        e = np.zeros(p)
        e[a] = h2
        dv = (np.asarray(v_field(u + e), dtype=float) - np.asarray(v_field(u - e), dtype=float)) / (2.0 * h2)
        out[a] = dv + gamma[:, a, :] @ vv
    return out


def _geodesic_accel(geo: _Geo, u, v, q):
    ts = geo.tangents(u)
    p = geo.p
    g = np.empty((p, p))
    for i in range(p):
        for j in range(i, p):
            g[i, j] = geo.dotv(ts[i], ts[j])
            g[j, i] = g[i, j]
    ginv = _invert_metric(g)
    speed = float(np.linalg.norm(v))
    if speed == 0.0:
        return np.zeros(p)
    vn = v / speed
    sec = geo.second_dir4(u, vn, q) * (speed * speed)
    n = np.array([geo.dotv(t, sec) for t in ts])
    return -(ginv @ n)


def geodesic(chart: Chart, phi: State, cfg: DotConfig, u0, v0, tau_max: float,
             step: float) -> GeodesicResult:
    """Integrate d2u^a = -gamma^a_{rs} du^r du^s with classical fixed-step RK4.

    Emits a state per step including the initial one.  If a stencil leaves
    the chart domain the integration halts and the partial trajectory is
    returned with ``left_domain`` set.  The acceleration contracts the
    connection with the velocity through a single directional second
    difference (fourth-order stencil, step ``fd_step2``).
    """
    u = np.asarray(u0, dtype=float).copy()
    v = np.asarray(v0, dtype=float).copy()
    if u.shape != (chart.p,) or v.shape != (chart.p,):
        raise DimensionError(f"u0 and v0 must have shape ({chart.p},)")
    if not np.any(v != 0.0):
        raise ValueError("initial velocity must be nonzero")
    if not (step > 0 and tau_max > 0):
        raise ValueError("step and tau_max must be positive")
    geo = _Geo(chart, phi, cfg)
    if not chart.in_domain(u):
        raise EvaluationError(f"initial point {u.tolist()} outside chart domain")
    q = chart.fd_step2
    n_steps = max(1, int(round(tau_max / step)))
    states = [GeodesicState(tau=0.0, u=u.copy(), udot=v.copy())]
    left = False
    for k in range(n_steps):
        try:
            k1u, k1v = v, _geodesic_accel(geo, u, v, q)
            k2u = v + 0.5 * step * k1v
            k2v = _geodesic_accel(geo, u + 0.5 * step * k1u, k2u, q)
            k3u = v + 0.5 * step * k2v
            k3v = _geodesic_accel(geo, u + 0.5 * step * k2u, k3u, q)
            k4u = v + step * k3v
            k4v = _geodesic_accel(geo, u + step * k3u, k4u, q)
        except (EvaluationError, SingularMetricError):
            left = True
            break
        u = u + (step / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        v = v + (step / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if not chart.in_domain(u):
            left = True
            break
        states.append(GeodesicState(tau=(k + 1) * step, u=u.copy(), udot=v.copy()))
    return GeodesicResult(states, left_domain=left)


def _frame_raw(geo: _Geo, u):
    """Orthonormalized tangent set at u (modified Gram-Schmidt on raw values)."""
    ts = geo.tangents(u)
    out = []
    norms = []
    for k, t in enumerate(ts):
        o = t
        for q, qq in zip(out, norms):
            o = o - (geo.dotv(q, o) / qq) * q
        oo = geo.dotv(o, o)
        if oo <= METRIC_RANK_TOL:
            raise LinearDependenceError(f"tangent {k} is numerically dependent")
        out.append(o)
        norms.append(oo)
    return [o / math.sqrt(nn) for o, nn in zip(out, norms)]


def orthonormal_frame(chart: Chart, phi: State, cfg: DotConfig, u,
                      step: float | None = None):
    """Orthonormal frame and its connection components.

    Returns (frame, frame_conn) with frame_conn[a, b, c] = bhat_a . d_c bhat_b
    differenced at ``step`` (default ``fd_step``; the frame field already
    contains one derivative layer, and this step keeps the antisymmetry
    defect at the square of the step).
    """
    geo = _Geo(chart, phi, cfg)
    u = np.asarray(u, dtype=float)
    p = geo.p
    s = step if step is not None else chart.fd_step
    try:
        frame = _frame_raw(geo, u)
        conn = np.empty((p, p, p))
        for c in range(p):
            e = np.zeros(p)
            e[c] = s
            fp = _frame_raw(geo, u + e)
            fm = _frame_raw(geo, u - e)
            for b in range(p):
                db = (fp[b] - fm[b]) / (2.0 * s)
                for a in range(p):
                    conn[a, b, c] = geo.dotv(frame[a], db)
    except EvaluationError as exc:
        raise StencilOutOfDomainError(str(exc)) from exc
    return [geo.wrap(f) for f in frame], conn


def gauss_curvature_2d(chart: Chart, phi: State, cfg: DotConfig, u,
                       step: float | None = None) -> float:
    """Gaussian curvature from the orthonormal frame:
    K = (d_1 bhat_1 . d_2 bhat_2 - d_2 bhat_1 . d_1 bhat_2) / sqrt(det g)."""
    if chart.p != 2:
        raise DimensionError("gauss_curvature_2d requires a 2-parameter chart")
    geo = _Geo(chart, phi, cfg)
    u = np.asarray(u, dtype=float)
    s = step if step is not None else chart.fd_step
    try:
        df = []
        for c in range(2):
            e = np.zeros(2)
            e[c] = s
            fp = _frame_raw(geo, u + e)
            fm = _frame_raw(geo, u - e)
            df.append([(fp[b] - fm[b]) / (2.0 * s) for b in range(2)])
        g = geo.metric_at(u)
    except EvaluationError as exc:
        raise StencilOutOfDomainError(str(exc)) from exc
    r12 = geo.dotv(df[0][0], df[1][1]) - geo.dotv(df[1][0], df[0][1])
    det = float(np.linalg.det(g))
    if det <= 0:
        raise SingularMetricError("metric determinant is not positive")
    return float(r12 / math.sqrt(det))


def gibbs_force(consts: PhysConstants, chart_ops, h: AlgebraElement, beta: float) -> np.ndarray:
    """Force array f^a_b = -g^{ar} (b_r . db_b) in the Gibbs state of h.

    ``chart_ops`` are operator-valued tangent elements; their time
    derivatives come from the Heisenberg commutator with h (no explicit
    part), and the dots use the symmetric product in Gibbs(h, beta).
    """
    ops = list(chart_ops)
    if not ops:
        raise DimensionError("chart_ops is empty")
    scale_h = max(1.0, np.abs(h.m).max())
    if np.abs(h.m - h.m.conj().T).max() > 1e-10 * scale_h:
        raise HermiticityError("gibbs_force requires a hermitian hamiltonian")
    omega = State.gibbs(h, beta)
    cfg = DotConfig()
    p = len(ops)
    g = np.empty((p, p))
    for i in range(p):
        for j in range(i, p):
            g[i, j] = dot(omega, cfg, ops[i], ops[j]).real
            g[j, i] = g[i, j]
    sv = np.linalg.svd(g, compute_uv=False)
    if sv[-1] <= METRIC_RANK_TOL * max(sv[0], METRIC_RANK_TOL):
        raise SingularGramError("tangent Gram matrix is singular in the Gibbs state")
    ginv = np.linalg.inv(g)
    vel = [heisenberg_dot(consts, h, b) for b in ops]
    d = np.empty((p, p))
    for r in range(p):
        for b in range(p):
            d[r, b] = dot(omega, cfg, ops[r], vel[b]).real
    return -(ginv @ d)


def killing_metric(structure_constants, d: int) -> np.ndarray:
    """Invariant bilinear form g_{ab} = Tr(ad_a' ad_b + ad_b' ad_a) / (2d).

    ``structure_constants`` is the real array f[r, a, b] with
    [J_a, J_b] = f[r, a, b] J_r, antisymmetric in (a, b) and satisfying the
    Jacobi identity within 1e-10 (checked through the adjoint matrices).
    """
    f = np.asarray(structure_constants, dtype=float)
    if f.shape != (d, d, d):
        raise DimensionError(f"structure constants must have shape ({d},{d},{d})")
    scale = max(1.0, np.abs(f).max())
    if np.abs(f + np.swapaxes(f, 1, 2)).max() > 1e-10 * scale:
        raise ValueError("structure constants must be antisymmetric in the lower pair")
    ad = np.transpose(f, (1, 0, 2))  # ad[a][r, b] = f[r, a, b]
    for a in range(d):
        for b in range(d):
            comm = ad[a] @ ad[b] - ad[b] @ ad[a]
            expected = np.einsum("c,crs->rs", f[:, a, b], ad)
            if np.abs(comm - expected).max() > 1e-10 * max(1.0, scale * scale):
                raise JacobiViolationError(
                    f"Jacobi identity fails for generator pair ({a}, {b})")
    g = np.empty((d, d))
    for a in range(d):
        for b in range(a, d):
            g[a, b] = (np.trace(ad[a].T @ ad[b]) + np.trace(ad[b].T @ ad[a])) / (2.0 * d)
            g[b, a] = g[a, b]
    return g


def _projection_defect(phi: State, cfg: DotConfig, basis, x: AlgebraElement) -> float:
    p = len(basis)
    g = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            g[i, j] = dot(phi, cfg, basis[i], basis[j]).real
    ginv = _invert_metric(g)
    n = np.array([dot(phi, cfg, b, x).real for b in basis])
    coef = ginv @ n
    proj = AlgebraElement(sum(c * b.m for c, b in zip(coef, basis)))
    r = proj - x
    return math.sqrt(max(dot(phi, cfg, r, r).real, 0.0))


def leibniz_violation_witness(chart: Chart, phi: State, cfg: DotConfig, u) -> float:
    """Norm of the part of the tangent product t1 t2 outside the tangent plane.

    Zero exactly when products of tangents stay tangent (flat diagonal
    charts); positive on curved charts, witnessing that the projected
    connection cannot obey the product rule on the full algebra.
    """
    if chart.p < 2:
        raise DimensionError("witness needs at least two parameters")
    u = np.asarray(u, dtype=float)
    ts = tangent_basis(chart, phi, cfg, u)
    return _projection_defect(phi, cfg, ts, ts[0] @ ts[1])
