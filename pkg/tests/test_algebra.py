"""Algebra layer: star, states, the state-induced dot product, dynamics helpers."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opgeom.algebra import (
    AlgebraElement,
    DotConfig,
    PhysConstants,
    State,
    commutator,
    dot,
    embed_diag,
    fock_momentum,
    fock_position,
    harmonic_hamiltonian,
    heisenberg_dot,
    matrix_from_json,
    matrix_to_json,
    star,
    state_eval,
    state_from_json,
    state_to_json,
)
from opgeom.errors import DimensionError, HermiticityError

from .conftest import rand_density, rand_hermitian


def rand_element(rng, n):
    return AlgebraElement(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))


# ---------------------------------------------------------------------------
# star

def test_star_identity():
    i4 = AlgebraElement.identity(4)
    assert np.array_equal(star(i4).m, i4.m)


def test_star_diagonal_conjugation():
    a = AlgebraElement(np.diag([1j, 2.0]).astype(complex))
    assert np.allclose(star(a).m, np.diag([-1j, 2.0]))


def test_star_involution_and_antihomomorphism(rng):
    for _ in range(20):
        a = rand_element(rng, 3)
        b = rand_element(rng, 3)
        assert np.array_equal(star(star(a)).m, a.m)
        ab = AlgebraElement(a.m @ b.m)
        assert np.allclose(star(ab).m, star(b).m @ star(a).m, atol=1e-12)


def test_nonfinite_entries_rejected():
    with pytest.raises(ValueError):
        AlgebraElement(np.array([[np.nan, 0], [0, 1]], dtype=complex))
    with pytest.raises(ValueError):
        AlgebraElement(np.array([[np.inf, 0], [0, 1]], dtype=complex))


def test_nonsquare_rejected():
    with pytest.raises(DimensionError):
        AlgebraElement(np.zeros((2, 3), dtype=complex))


# ---------------------------------------------------------------------------
# state evaluation

def test_trace_state_average():
    phi = State.normalized_trace()
    val = state_eval(phi, AlgebraElement(np.diag([1.0, 3.0]).astype(complex)))
    assert abs(val - 2.0) < 1e-14


def test_all_variants_normalized(rng):
    h = rand_hermitian(rng, 4)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    variants = [
        State.normalized_trace(),
        State.vector(psi / np.linalg.norm(psi)),
        rand_density(rng, 4),
        State.gibbs(h, 0.7),
    ]
    i4 = AlgebraElement.identity(4)
    for phi in variants:
        assert abs(state_eval(phi, i4) - 1.0) < 1e-12


def test_unnormalized_sum_is_n_times_trace(rng):
    a = rand_element(rng, 5)
    s = state_eval(State.unnormalized_sum(), a)
    t = state_eval(State.normalized_trace(), a)
    assert abs(s - 5 * t) < 1e-12 * max(1.0, abs(s))


def test_gibbs_ground_state_limit():
    h = AlgebraElement(np.diag([0.0, 5.0]).astype(complex))
    phi = State.gibbs(h, 200.0)
    val = state_eval(phi, AlgebraElement(np.diag([0.3, 0.9]).astype(complex)))
    assert abs(val - 0.3) < 1e-12


def test_state_eval_conjugation_and_linearity(rng):
    phi = rand_density(rng, 4)
    for _ in range(30):
        a = rand_element(rng, 4)
        b = rand_element(rng, 4)
        alpha = complex(rng.normal(), rng.normal())
        assert abs(state_eval(phi, star(a)) - np.conj(state_eval(phi, a))) < 1e-12
        lin = state_eval(phi, AlgebraElement(alpha * a.m + b.m))
        assert abs(lin - (alpha * state_eval(phi, a) + state_eval(phi, b))) < 1e-11


def test_state_eval_dimension_mismatch():
    phi = State.vector(np.array([1.0, 0.0]))
    with pytest.raises(DimensionError):
        state_eval(phi, AlgebraElement.identity(3))


def test_density_validation():
    with pytest.raises(HermiticityError):
        State.density(np.array([[0.5, 0.4], [0.1, 0.5]]))  # not hermitian
    with pytest.raises(ValueError):
        State.density(np.array([[1.5, 0.0], [0.0, -0.5]]))  # negative eigenvalue


# ---------------------------------------------------------------------------
# dot product

def test_dot_orthogonal_diagonals():
    phi = State.normalized_trace()
    cfg = DotConfig()
    a = embed_diag([1.0, 0.0])
    b = embed_diag([0.0, 1.0])
    assert abs(dot(phi, cfg, a, b)) < 1e-15


def test_dot_identity_normalization(rng):
    cfg = DotConfig()
    i3 = AlgebraElement.identity(3)
    for phi in (State.normalized_trace(), rand_density(rng, 3)):
        assert abs(dot(phi, cfg, i3, i3) - 1.0) < 1e-12
    cfg2 = DotConfig(scale=2.5)
    assert abs(dot(State.normalized_trace(), cfg2, i3, i3) - 2.5) < 1e-12


def test_dot_symmetric_real_positive(rng):
    cfg = DotConfig()
    for n, phi in ((3, State.normalized_trace()), (4, rand_density(rng, 4))):
        for _ in range(50):
            a = rand_element(rng, n)
            b = rand_element(rng, n)
            dab = dot(phi, cfg, a, b)
            dba = dot(phi, cfg, b, a)
            assert abs(dab.imag) < 1e-12
            assert abs(dab - dba) < 1e-12
            assert dot(phi, cfg, a, a).real >= -1e-12


def test_dot_positivity_all_variants(rng):
    cfg = DotConfig()
    h = rand_hermitian(rng, 4)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    variants = [
        State.normalized_trace(),
        State.unnormalized_sum(),
        State.vector(psi / np.linalg.norm(psi)),
        rand_density(rng, 4),
        State.gibbs(h, 1.3),
    ]
    for phi in variants:
        for _ in range(200):
            a = rand_element(rng, 4)
            assert dot(phi, cfg, a, a).real >= -1e-12


def test_dot_complex_lambda_asymmetry_witness(pauli):
    # lambda = i/2 weighs the antisymmetric part; symmetry must fail for a
    # generic non-commuting hermitian pair.
    phi = State.vector(np.array([1.0, 0.0]))
    cfg = DotConfig(lam=0.5j)
    dxy = dot(phi, cfg, pauli["x"], pauli["y"])
    dyx = dot(phi, cfg, pauli["y"], pauli["x"])
    assert abs(dxy - dyx) > 0.5
    # value is the expectation of the i-weighted commutator part
    comm = state_eval(phi, commutator(pauli["x"], pauli["y"]))
    assert abs(dxy - (0.5j * comm)) < 1e-12


def test_embed_diag_dot_values():
    v, w = np.array([1.0, 2.0]), np.array([3.0, 4.0])
    cfg = DotConfig()
    d_tr = dot(State.normalized_trace(), cfg, embed_diag(v), embed_diag(w))
    assert abs(d_tr - 5.5) < 1e-14
    d_sum = dot(State.unnormalized_sum(), cfg, embed_diag(v), embed_diag(w))
    assert abs(d_sum - 11.0) < 1e-14
    z = embed_diag(np.zeros(2))
    assert abs(dot(State.normalized_trace(), cfg, z, embed_diag(v))) == 0.0


@settings(max_examples=60, deadline=None)
@given(
    lam_re=st.floats(-2, 2, allow_nan=False),
    lam_im=st.floats(-2, 2, allow_nan=False),
    seed=st.integers(0, 2**31 - 1),
)
def test_dot_is_always_real(lam_re, lam_im, seed):
    # the lambda-weighted combination pairs each term with its own conjugate
    r = np.random.default_rng(seed)
    a = AlgebraElement(r.normal(size=(3, 3)) + 1j * r.normal(size=(3, 3)))
    b = AlgebraElement(r.normal(size=(3, 3)) + 1j * r.normal(size=(3, 3)))
    phi = rand_density(r, 3)
    val = dot(phi, DotConfig(lam=complex(lam_re, lam_im)), a, b)
    assert abs(val.imag) < 1e-10 * max(1.0, abs(val))


# ---------------------------------------------------------------------------
# gibbs state details

def test_gibbs_normalization_beta_sweep(rng):
    i4 = AlgebraElement.identity(4)
    for beta in (0.0, 1.0, 10.0):
        h = rand_hermitian(rng, 4)
        assert abs(state_eval(State.gibbs(h, beta), i4) - 1.0) < 1e-12


def test_gibbs_beta_zero_is_trace(rng):
    h = rand_hermitian(rng, 4)
    g0 = State.gibbs(h, 0.0)
    tr = State.normalized_trace()
    for _ in range(100):
        a = rand_element(rng, 4)
        assert abs(state_eval(g0, a) - state_eval(tr, a)) < 1e-12


def test_gibbs_large_beta_stable():
    h = AlgebraElement(np.diag([0.0, 1000.0]).astype(complex))
    phi = State.gibbs(h, 1000.0)
    val = state_eval(phi, AlgebraElement.identity(2))
    assert np.isfinite(val.real) and abs(val - 1.0) < 1e-12


def test_gibbs_rejects_nonhermitian():
    with pytest.raises(HermiticityError):
        State.gibbs(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0)


# ---------------------------------------------------------------------------
# heisenberg dynamics

def test_heisenberg_conserved_quantity():
    consts = PhysConstants()
    h = AlgebraElement(np.diag([1.0, 2.0, 3.0]).astype(complex))
    b = AlgebraElement(np.diag([5.0, -1.0, 0.5]).astype(complex))
    assert np.abs(heisenberg_dot(consts, h, b).m).max() == 0.0


def test_heisenberg_oscillator_velocity():
    consts = PhysConstants()
    dim = 64
    x, p, h = fock_position(dim), fock_momentum(dim), harmonic_hamiltonian(dim)
    xdot = heisenberg_dot(consts, h, x)
    block = slice(0, 32)
    assert np.abs(xdot.m[block, block] - p.m[block, block]).max() < 1e-8


def test_heisenberg_pauli(pauli):
    consts = PhysConstants()
    got = heisenberg_dot(consts, pauli["z"], pauli["x"])
    assert np.allclose(got.m, -2.0 * pauli["y"].m, atol=1e-14)


def test_heisenberg_explicit_part(pauli):
    consts = PhysConstants()
    got = heisenberg_dot(consts, pauli["z"], pauli["x"], dbdt_explicit=pauli["i"])
    assert np.allclose(got.m, -2.0 * pauli["y"].m + np.eye(2), atol=1e-14)


def test_heisenberg_rejects_nonhermitian(pauli):
    consts = PhysConstants()
    bad = AlgebraElement(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(HermiticityError):
        heisenberg_dot(consts, bad, pauli["x"])


def test_phys_constants_validation():
    with pytest.raises(ValueError):
        PhysConstants(hbar=0.0)
    with pytest.raises(ValueError):
        PhysConstants(c=-1.0)


# ---------------------------------------------------------------------------
# JSON round trips

def test_matrix_json_round_trip(rng):
    a = rand_element(rng, 3)
    back = matrix_from_json(json.loads(json.dumps(matrix_to_json(a))))
    assert np.array_equal(back.m, a.m)


def test_matrix_json_bad_shape():
    with pytest.raises(ValueError):
        matrix_from_json({"dim": 2, "re": [1.0, 2.0], "im": [0.0, 0.0]})


def test_state_json_round_trip(rng):
    h = rand_hermitian(rng, 3)
    psi = rng.normal(size=3) + 1j * rng.normal(size=3)
    states = [
        State.normalized_trace(),
        State.unnormalized_sum(),
        State.vector(psi / np.linalg.norm(psi)),
        rand_density(rng, 3),
        State.gibbs(h, 2.0),
    ]
    probe = rand_element(rng, 3)
    for phi in states:
        back = state_from_json(json.loads(json.dumps(state_to_json(phi))))
        assert back.kind == phi.kind
        assert abs(state_eval(back, probe) - state_eval(phi, probe)) < 1e-12
