"""Finite-dimensional matrix algebras, states, and state-induced dot products.

An algebra element is a dense complex square matrix; the involution is the
conjugate transpose.  A state is a positive linear functional, normalized so
that the identity evaluates to 1 (the plain matrix trace is also provided as
an unnormalized variant).  Every state induces a family of real-valued dot
products on the algebra,

    a . b = scale * phi(lam * a'b + conj(lam) * b'a),      a' = star(a)

with lam = 1/2 giving the symmetric product used throughout the geometry
modules.

All matrix and state file I/O (a small JSON schema) lives in this module;
the other modules consume in-memory values only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, HermiticityError

__all__ = [
    "AlgebraElement",
    "State",
    "DotConfig",
    "PhysConstants",
    "star",
    "state_eval",
    "dot",
    "embed_diag",
    "commutator",
    "anticommutator",
    "heisenberg_dot",
    "fock_lowering",
    "fock_position",
    "fock_momentum",
    "harmonic_hamiltonian",
    "matrix_to_json",
    "matrix_from_json",
    "state_to_json",
    "state_from_json",
    "load_matrix",
    "dump_matrix",
    "load_state",
    "dump_state",
]

HERMITICITY_TOL = 1e-10
POSITIVITY_TOL = 1e-12


def _as_square_complex(m, what="matrix"):
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionError(f"{what} must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} has non-finite entries")
    return arr


def _require_hermitian(arr, what="matrix", tol=HERMITICITY_TOL):
    scale = max(1.0, np.abs(arr).max())
    if np.abs(arr - arr.conj().T).max() > tol * scale:
        raise HermiticityError(f"{what} is not hermitian within {tol} relative tolerance")


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """Element of the n x n complex matrix algebra.

    Wraps a read-only complex array.  Supports +, -, scalar *, and @ for the
    algebra product.  Use :func:`star` (or .star()) for the involution.
    """

    m: np.ndarray

    def __post_init__(self):
        arr = _as_square_complex(self.m, "algebra element")
        arr = np.array(arr, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "m", arr)

    @property
    def dim(self) -> int:
        return self.m.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "AlgebraElement":
        return cls(np.eye(dim, dtype=complex))

    @classmethod
    def zeros(cls, dim: int) -> "AlgebraElement":
        return cls(np.zeros((dim, dim), dtype=complex))

    def star(self) -> "AlgebraElement":
        return AlgebraElement(self.m.conj().T)

    def _check_dim(self, other: "AlgebraElement"):
        if self.dim != other.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        self._check_dim(other)
        return AlgebraElement(self.m + other.m)

    def __sub__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        self._check_dim(other)
        return AlgebraElement(self.m - other.m)

    def __mul__(self, c):
        if isinstance(c, AlgebraElement):
            return NotImplemented
        return AlgebraElement(self.m * complex(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return AlgebraElement(self.m / complex(c))

    def __neg__(self):
        return AlgebraElement(-self.m)

    def __matmul__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        self._check_dim(other)
        return AlgebraElement(self.m @ other.m)

    def __repr__(self):
        return f"AlgebraElement(dim={self.dim})"


def star(a: AlgebraElement) -> AlgebraElement:
    """Involution: conjugate transpose."""
    return a.star()


def embed_diag(v) -> AlgebraElement:
    """Embed a real vector as a diagonal matrix."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"expected a non-empty real vector, got shape {arr.shape}")
    return AlgebraElement(np.diag(arr).astype(complex))


def commutator(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    a._check_dim(b)
    return AlgebraElement(a.m @ b.m - b.m @ a.m)


def anticommutator(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    a._check_dim(b)
    return AlgebraElement(a.m @ b.m + b.m @ a.m)


class State:
    """Positive linear functional phi on the matrix algebra.

    Variants (constructed through the classmethods):

    - ``normalized_trace``: phi(a) = Tr(a)/n, defined for every dimension.
    - ``unnormalized_sum``: phi(a) = Tr(a); the only variant with phi(1) = n.
    - ``vector(psi)``: phi(a) = psi' a psi for a unit vector psi.
    - ``density(rho)``: phi(a) = Tr(rho a); rho is checked to be hermitian,
      positive semidefinite (eigenvalues >= -1e-12), and unit trace.
    - ``gibbs(h, beta)``: thermal state of a hermitian h, evaluated through
      the eigendecomposition of h with the spectrum shifted so the weights
      never overflow; beta = 0 reduces to the normalized trace.
    """

    _KINDS = ("trace", "sum", "vector", "density", "gibbs")

    def __init__(self, kind, dim=None, psi=None, rho=None, hmat=None, beta=None):
        if kind not in self._KINDS:
            raise ValueError(f"unknown state kind {kind!r}")
        self.kind = kind
        self.dim = dim
        self._psi = psi
        self._rho = rho
        self._hmat = hmat
        self.beta = beta

    @classmethod
    def normalized_trace(cls) -> "State":
        return cls("trace")

    @classmethod
    def unnormalized_sum(cls) -> "State":
        return cls("sum")

    @classmethod
    def vector(cls, psi) -> "State":
        v = np.asarray(psi, dtype=complex).reshape(-1)
        if v.size == 0:
            raise DimensionError("state vector is empty")
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"state vector must be normalized, |psi| = {nrm}")
        return cls("vector", dim=v.size, psi=v)

    @classmethod
    def density(cls, rho) -> "State":
        if isinstance(rho, AlgebraElement):
            rho = rho.m
        arr = _as_square_complex(rho, "density matrix")
        _require_hermitian(arr, "density matrix")
        w = np.linalg.eigvalsh(arr)
        if w.min() < -POSITIVITY_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {w.min()}")
        tr = arr.trace().real
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace must be 1, got {tr}")
        return cls("density", dim=arr.shape[0], rho=arr)

    @classmethod
    def gibbs(cls, hamiltonian, beta: float) -> "State":
        if isinstance(hamiltonian, AlgebraElement):
            hmat = hamiltonian.m
        else:
            hmat = _as_square_complex(hamiltonian, "hamiltonian")
        _require_hermitian(hmat, "hamiltonian")
        beta = float(beta)
        energies, vecs = np.linalg.eigh(hmat)
        # shift the spectrum so exp never overflows at large beta
        w = np.exp(-beta * (energies - energies.min()))
        w = w / w.sum()
        rho = (vecs * w) @ vecs.conj().T
        return cls("gibbs", dim=hmat.shape[0], rho=rho, hmat=np.array(hmat), beta=beta)

    def _check_dim(self, n: int):
        if self.dim is not None and self.dim != n:
            raise DimensionError(f"state of dimension {self.dim} applied to element of dimension {n}")

    def eval_matrix(self, m: np.ndarray) -> complex:
        """Evaluate phi on a raw complex square array."""
        n = m.shape[0]
        self._check_dim(n)
        if self.kind == "trace":
            return complex(m.trace() / n)
        if self.kind == "sum":
            return complex(m.trace())
        if self.kind == "vector":
            return complex(np.vdot(self._psi, m @ self._psi))
        # density and gibbs share the cached density matrix
        return complex(np.vdot(self._rho, m))

    def diagonal_weights(self, n: int) -> np.ndarray:
        """Weights w with phi(diag(v)) = sum(w * v); used by diagonal charts."""
        self._check_dim(n)
        if self.kind == "trace":
            return np.full(n, 1.0 / n)
        if self.kind == "sum":
            return np.ones(n)
        if self.kind == "vector":
            return np.abs(self._psi) ** 2
        return np.diagonal(self._rho).real.copy()

    def normalization(self, n: int) -> float:
        """Value of phi on the identity of the n-dimensional algebra."""
        return float(n) if self.kind == "sum" else 1.0

    def __repr__(self):
        extra = "" if self.dim is None else f", dim={self.dim}"
        if self.kind == "gibbs":
            extra += f", beta={self.beta}"
        return f"State(kind={self.kind!r}{extra})"


@dataclass(frozen=True)
class DotConfig:
    """Parameters of the state-induced dot product.

    ``lam`` is the complex weight of the a'b term (the b'a term gets its
    conjugate); ``scale`` is an overall positive factor.  The defaults give
    the symmetric product (a'b + b'a)/2.
    """

    lam: complex = 0.5
    scale: float = 1.0

    def __post_init__(self):
        if not np.isfinite(complex(self.lam)):
            raise ValueError("lam must be finite")
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise ValueError("scale must be a positive real")


@dataclass(frozen=True)
class PhysConstants:
    """Physical constants entering the dynamical operations."""

    hbar: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and np.isfinite(self.hbar)):
            raise ValueError("hbar must be a positive real")
        if not (self.c > 0 and np.isfinite(self.c)):
            raise ValueError("c must be a positive real")


def state_eval(phi: State, a: AlgebraElement) -> complex:
    """Evaluate the state on an algebra element."""
    return phi.eval_matrix(a.m)


def dot(phi: State, cfg: DotConfig, a: AlgebraElement, b: AlgebraElement) -> complex:
    """State-induced dot product scale * phi(lam a'b + conj(lam) b'a).

    The combination lam a'b + conj(lam) b'a is hermitian for every lam, so
    the value is real up to rounding; it is returned as a complex number.
    Symmetry under a <-> b holds exactly when lam is real.
    """
    a._check_dim(b)
    lam = complex(cfg.lam)
    mat = lam * (a.m.conj().T @ b.m) + np.conj(lam) * (b.m.conj().T @ a.m)
    return cfg.scale * phi.eval_matrix(mat)


def heisenberg_dot(consts: PhysConstants, h: AlgebraElement, b: AlgebraElement,
                   dbdt_explicit: AlgebraElement | None = None) -> AlgebraElement:
    """Total time derivative dB/dt = dB/dt|_explicit + (i/hbar) [H, B]."""
    _require_hermitian(h.m, "hamiltonian")
    h._check_dim(b)
    out = (1j / consts.hbar) * (h.m @ b.m - b.m @ h.m)
    if dbdt_explicit is not None:
        b._check_dim(dbdt_explicit)
        out = out + dbdt_explicit.m
    return AlgebraElement(out)


# ---------------------------------------------------------------------------
# truncated Fock-space operators (finite matrix stand-ins for x and p)

def fock_lowering(dim: int) -> AlgebraElement:
    """Truncated lowering operator a with a|n> = sqrt(n)|n-1>."""
    if dim < 2:
        raise DimensionError("Fock truncation needs dim >= 2")
    m = np.zeros((dim, dim), dtype=complex)
    ns = np.arange(1, dim)
    m[ns - 1, ns] = np.sqrt(ns)
    return AlgebraElement(m)


def fock_position(dim: int, hbar: float = 1.0, mass: float = 1.0, omega: float = 1.0) -> AlgebraElement:
    """Truncated position operator sqrt(hbar/(2 m omega)) (a + a')."""
    a = fock_lowering(dim).m
    return AlgebraElement(np.sqrt(hbar / (2.0 * mass * omega)) * (a + a.conj().T))


def fock_momentum(dim: int, hbar: float = 1.0, mass: float = 1.0, omega: float = 1.0) -> AlgebraElement:
    """Truncated momentum operator i sqrt(hbar m omega / 2) (a' - a)."""
    a = fock_lowering(dim).m
    return AlgebraElement(1j * np.sqrt(hbar * mass * omega / 2.0) * (a.conj().T - a))


def harmonic_hamiltonian(dim: int, hbar: float = 1.0, mass: float = 1.0, omega: float = 1.0) -> AlgebraElement:
    """Oscillator hamiltonian p^2/(2m) + m omega^2 x^2 / 2 built from the
    truncated x and p, so commutation identities hold exactly except in the
    top Fock level."""
    x = fock_position(dim, hbar, mass, omega).m
    p = fock_momentum(dim, hbar, mass, omega).m
    return AlgebraElement(p @ p / (2.0 * mass) + 0.5 * mass * omega**2 * (x @ x))


# ---------------------------------------------------------------------------
# JSON schema for matrices and states

def matrix_to_json(a: AlgebraElement) -> dict:
    """Matrix as {"dim", "re", "im"} with row-major flat entry lists."""
    flat = a.m.reshape(-1)
    return {"dim": a.dim, "re": flat.real.tolist(), "im": flat.imag.tolist()}


def matrix_from_json(obj: dict) -> AlgebraElement:
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix object: {exc}") from exc
    if re.size != dim * dim or im.size != dim * dim:
        raise ValueError(f"matrix entry count does not match dim={dim}")
    return AlgebraElement((re + 1j * im).reshape(dim, dim))


def state_to_json(phi: State) -> dict:
    if phi.kind in ("trace", "sum"):
        return {"kind": phi.kind}
    if phi.kind == "vector":
        return {"kind": "vector", "re": phi._psi.real.tolist(), "im": phi._psi.imag.tolist()}
    if phi.kind == "density":
        return {"kind": "density", "rho": matrix_to_json(AlgebraElement(phi._rho))}
    return {"kind": "gibbs", "h": matrix_to_json(AlgebraElement(phi._hmat)), "beta": phi.beta}


def state_from_json(obj: dict) -> State:
    try:
        kind = obj["kind"]
    except (KeyError, TypeError) as exc:
        raise ValueError("state object must carry a 'kind' field") from exc
    if kind == "trace":
        return State.normalized_trace()
    if kind == "sum":
        return State.unnormalized_sum()
    if kind == "vector":
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
        return State.vector(re + 1j * im)
    if kind == "density":
        return State.density(matrix_from_json(obj["rho"]))
    if kind == "gibbs":
        return State.gibbs(matrix_from_json(obj["h"]), float(obj["beta"]))
    raise ValueError(f"unknown state kind {kind!r}")


def load_matrix(path) -> AlgebraElement:
    with open(path, "r", encoding="utf-8") as fh:
        return matrix_from_json(json.load(fh))


def dump_matrix(a: AlgebraElement, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(matrix_to_json(a), fh, indent=2)
        fh.write("\n")


def load_state(path) -> State:
    with open(path, "r", encoding="utf-8") as fh:
        return state_from_json(json.load(fh))


def dump_state(phi: State, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(state_to_json(phi), fh, indent=2)
        fh.write("\n")
