import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhaah.errors import InvalidParameterError
from nhaah.model import (
    GOLDEN_ALPHA,
    ModelParams,
    build_basis,
    build_hamiltonian,
    build_single_particle_hamiltonian,
    fibonacci_alpha,
    onsite_potential,
)


def symmetric_embedding(basis):
    """Columns are the symmetrized pair states inside the L^2 tensor space."""
    L = basis.L
    P = np.zeros((L * L, basis.D))
    for n, (a, b) in enumerate(basis.pairs - 1):
        if a == b:
            P[a * L + a, n] = 1.0
        else:
            P[a * L + b, n] = P[b * L + a, n] = 1 / math.sqrt(2)
    return P


def tensor_hamiltonian(params):
    h = np.array(build_single_particle_hamiltonian(params).entries)
    L = params.L
    eye = np.eye(L)
    H = np.kron(h, eye) + np.kron(eye, h)
    for l in range(L):
        H[l * L + l, l * L + l] += params.U
    return H


def test_basis_size_and_order():
    b = build_basis(5)
    assert b.D == 15
    assert [tuple(p) for p in b.pairs[:6]] == [(1, 1), (1, 2), (1, 3), (1, 4), (1, 5), (2, 2)]
    assert b.idx(3, 2) == b.idx(2, 3)
    assert all(b.pairs[n, 0] == b.pairs[n, 1] for n in b.doublon_indices)


@pytest.mark.parametrize("L", [2, 3, 7, 13])
def test_dimension(L):
    assert build_hamiltonian(ModelParams(L=L, mu=0.4, U=1.0)).dim == L * (L + 1) // 2


def test_doublon_hop_amplitude():
    p = ModelParams(L=6, J=0.7, mu=0.0, U=0.0, boundary="open")
    H = build_hamiltonian(p).entries
    b = build_basis(6)
    assert H[b.idx(3, 3), b.idx(3, 4)] == pytest.approx(-math.sqrt(2) * 0.7)
    assert H[b.idx(2, 4), b.idx(3, 4)] == pytest.approx(-0.7)


def test_diagonal_entries():
    p = ModelParams(L=7, mu=0.9, U=2.5, theta=1.3)
    H = build_hamiltonian(p).entries
    b = build_basis(7)
    phi = lambda l: 2 * math.pi * p.alpha * l + p.theta / p.L
    expect = -0.9 * (np.exp(1j * phi(2)) + np.exp(1j * phi(5)))
    assert H[b.idx(2, 5), b.idx(2, 5)] == pytest.approx(expect)
    expect = -0.9 * 2 * np.exp(1j * phi(4)) + 2.5
    assert H[b.idx(4, 4), b.idx(4, 4)] == pytest.approx(expect)


@pytest.mark.parametrize("boundary", ["periodic", "open"])
@pytest.mark.parametrize("L", [2, 3, 5, 8])
def test_tensor_product_oracle(L, boundary):
    p = ModelParams(L=L, mu=0.7, U=1.3, theta=0.4, boundary=boundary)
    b = build_basis(L)
    P = symmetric_embedding(b)
    ref = P.T @ tensor_hamiltonian(p) @ P
    assert np.max(np.abs(build_hamiltonian(p, b).entries - ref)) < 1e-13


@settings(max_examples=25, deadline=None)
@given(L=st.integers(2, 9), mu=st.floats(0, 2), U=st.floats(-5, 5),
       theta=st.floats(0, 2 * math.pi), J=st.floats(0.1, 2))
def test_tensor_oracle_property(L, mu, U, theta, J):
    p = ModelParams(L=L, mu=mu, U=U, theta=theta, J=J)
    b = build_basis(L)
    P = symmetric_embedding(b)
    ref = P.T @ tensor_hamiltonian(p) @ P
    assert np.allclose(build_hamiltonian(p, b).entries, ref, atol=1e-12)


def test_hermitian_without_potential():
    H = build_hamiltonian(ModelParams(L=9, mu=0.0, U=3.0)).entries
    assert np.allclose(H, H.conj().T)


def test_periodic_ring_has_wrap_hops():
    b = build_basis(6)
    Hp = build_hamiltonian(ModelParams(L=6, boundary="periodic"), b).entries
    Ho = build_hamiltonian(ModelParams(L=6, boundary="open"), b).entries
    assert Hp[b.idx(1, 1), b.idx(1, 6)] == pytest.approx(-math.sqrt(2))
    assert Ho[b.idx(1, 1), b.idx(1, 6)] == 0


def test_output_is_read_only():
    H = build_hamiltonian(ModelParams(L=4)).entries
    with pytest.raises(ValueError):
        H[0, 0] = 1.0


def test_theta_twist_is_potential_phase():
    p = ModelParams(L=11, mu=0.8)
    v0 = onsite_potential(p)
    v1 = onsite_potential(p.with_(theta=2.0))
    assert np.allclose(v1, v0 * np.exp(2j / 11))


@pytest.mark.parametrize("kwargs", [
    {"L": 1}, {"L": 3.5}, {"alpha": 0.0}, {"alpha": 1.0}, {"theta": -0.1},
    {"theta": 7.0}, {"boundary": "twisted"}, {"mu": float("nan")}, {"U": float("inf")},
])
def test_invalid_parameters(kwargs):
    with pytest.raises(InvalidParameterError):
        ModelParams(**kwargs)


def test_fibonacci_alpha():
    assert fibonacci_alpha(89) == pytest.approx(55 / 89)
    assert fibonacci_alpha(144) == pytest.approx(89 / 144)
    assert abs(fibonacci_alpha(89) - GOLDEN_ALPHA) < 1e-4
    assert ModelParams(L=34).rational().alpha == pytest.approx(21 / 34)


def test_wavefunction_roundtrip():
    rng = np.random.default_rng(3)
    b = build_basis(6)
    c = rng.normal(size=b.D) + 1j * rng.normal(size=b.D)
    psi = b.wavefunction(c)
    assert np.allclose(psi, psi.T)
    assert np.sum(np.abs(psi) ** 2) == pytest.approx(np.vdot(c, c).real)
    assert np.allclose(b.from_wavefunction(psi), c)
    assert b.site_density(c).sum() == pytest.approx(np.vdot(c, c).real)
