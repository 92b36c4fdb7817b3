import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hotgate.errors import ShapeError, TruncationLeakage
from hotgate.hilbert import (
    CompositeSpace,
    CompositeState,
    DensityOperator,
    FockSpace,
    basis_state,
    compose_density,
    compose_state,
    decode_index,
    encode_index,
    fidelity,
    parity_decompose,
    partial_trace_ions,
    partial_trace_phonon,
    shift_down,
    shift_up,
)


def random_vector(seed, dim):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_density(seed, dim):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = a @ a.conj().T
    return m / np.trace(m)


# ---------------------------------------------------------------- indexing

def test_encode_all_zero_index():
    assert encode_index([0, 0], 0, n_max=4) == 0


def test_encode_decode_round_trip():
    assert decode_index(encode_index([1, 2], 5, n_max=8), n_ions=2, n_max=8) == ([1, 2], 5)


def test_encode_is_permutation_k1():
    space = CompositeSpace(1, FockSpace(2))
    indices = [space.encode([lvl], n) for lvl in range(4) for n in range(3)]
    assert sorted(indices) == list(range(12))


@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("n_max", list(range(1, 9)))
def test_encode_decode_bijective_exhaustive(k, n_max):
    space = CompositeSpace(k, FockSpace(n_max))
    seen = set()
    levels_grid = [[a] for a in range(4)] if k == 1 else [[a, b] for a in range(4) for b in range(4)]
    for levels in levels_grid:
        for n in range(n_max + 1):
            idx = space.encode(levels, n)
            assert 0 <= idx < space.dim
            assert space.decode(idx) == (levels, n)
            seen.add(idx)
    assert len(seen) == space.dim


def test_encode_out_of_range():
    space = CompositeSpace(2, FockSpace(3))
    with pytest.raises(IndexError):
        space.encode([4, 0], 0)
    with pytest.raises(IndexError):
        space.encode([0, 0], 4)
    with pytest.raises(IndexError):
        space.decode(space.dim)


# ---------------------------------------------------------------- parity

def test_parity_decompose_pattern():
    a = np.array([1.0, 2.0, 3.0, 4.0], dtype=complex)
    even, odd = parity_decompose(a)
    assert np.array_equal(even, [1.0, 0.0, 3.0, 0.0])
    assert np.array_equal(odd, [0.0, 2.0, 0.0, 4.0])


def test_vacuum_is_even():
    even, odd = parity_decompose(np.array([1.0, 0, 0, 0], dtype=complex))
    assert np.array_equal(even, [1.0, 0, 0, 0])
    assert not odd.any()


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_parity_reconstruction_and_orthogonality(seed):
    v = random_vector(seed, 33)
    even, odd = parity_decompose(v)
    # split is an exact direct sum: bitwise-equal reconstruction
    assert np.array_equal(even + odd, v)
    assert np.vdot(even, odd) == 0


# ---------------------------------------------------------------- shifts

def test_shift_up_pattern():
    v = np.array([0.5, 0.5j, -0.5, 0.0], dtype=complex)
    assert np.array_equal(shift_up(v), [0.0, 0.5, 0.5j, -0.5])


def test_shift_up_vacuum():
    v = np.zeros(5, dtype=complex)
    v[0] = 1.0
    out = shift_up(v)
    assert out[1] == 1.0 and np.count_nonzero(out) == 1


def test_shift_up_leakage_guard():
    v = np.zeros(4, dtype=complex)
    v[3] = 1e-3
    v[0] = np.sqrt(1 - 1e-6)
    with pytest.raises(TruncationLeakage):
        shift_up(v)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_shift_round_trip_and_isometry(seed):
    v = random_vector(seed, 12)
    v[-1] = 0.0
    v /= np.linalg.norm(v)
    up = shift_up(v)
    assert abs(np.linalg.norm(up) - np.linalg.norm(v)) < 1e-14
    assert np.array_equal(shift_down(up), v)


def test_shift_up_maps_even_to_odd_support():
    v = np.array([0.6, 0.0, 0.8, 0.0], dtype=complex)  # even support
    up = shift_up(v)
    assert not up[0::2].any()  # exactly zero on even indices


# ---------------------------------------------------------------- states & densities

def test_composite_state_shape_guard():
    space = CompositeSpace(2, FockSpace(3))
    with pytest.raises(ShapeError):
        CompositeState(space, np.zeros(5, dtype=complex))


def test_normalize_tolerance():
    space = CompositeSpace(1, FockSpace(3))
    state = CompositeState(space, np.full(space.dim, 0.3 + 0.1j))
    state.normalize()
    assert abs(state.norm - 1.0) < 1e-12


def test_basis_state_and_overlap():
    space = CompositeSpace(2, FockSpace(4))
    a = basis_state(space, [1, 0], 2)
    b = basis_state(space, [1, 0], 2)
    assert a.overlap(b) == 1.0
    assert a.overlap(basis_state(space, [0, 1], 2)) == 0.0


def test_density_invariants_accept_valid():
    rho = DensityOperator(random_density(3, 8))
    assert rho.dim == 8


def test_density_invariants_reject_nonhermitian():
    m = random_density(4, 6)
    m[0, 1] += 1e-6
    with pytest.raises(ValueError):
        DensityOperator(m)


def test_density_invariants_reject_bad_trace():
    with pytest.raises(ValueError):
        DensityOperator(np.eye(4, dtype=complex))


# ---------------------------------------------------------------- partial traces

def test_partial_trace_product_state():
    space = CompositeSpace(1, FockSpace(4))
    rho_ion = np.zeros((4, 4), dtype=complex)
    rho_ion[1, 1] = 0.75
    rho_ion[0, 0] = 0.25
    rho_ion[0, 1] = rho_ion[1, 0] = 0.2
    rho_ph = np.asarray(random_density(9, 5))
    rho = compose_density(rho_ion, rho_ph, space)
    assert np.max(np.abs(partial_trace_phonon(rho).matrix - rho_ion)) < 1e-14
    assert np.max(np.abs(partial_trace_ions(rho).matrix - rho_ph)) < 1e-14


def test_partial_trace_maximally_entangled():
    # (|0>|0> + |1>|1>)/sqrt(2) on one ion and a 2-level phonon ladder
    space = CompositeSpace(1, FockSpace(1))
    vec = np.zeros(space.dim, dtype=complex)
    vec[space.encode([0], 0)] = 1 / np.sqrt(2)
    vec[space.encode([1], 1)] = 1 / np.sqrt(2)
    rho_ion = partial_trace_phonon(CompositeState(space, vec).to_density()).matrix
    expected = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
    assert np.max(np.abs(rho_ion - expected)) < 1e-14


def test_partial_trace_preserves_trace_random():
    space = CompositeSpace(1, FockSpace(5))
    for seed in range(50):
        rho = DensityOperator(random_density(seed, space.dim), space)
        assert abs(np.trace(partial_trace_phonon(rho).matrix) - 1.0) < 1e-12
        assert abs(np.trace(partial_trace_ions(rho).matrix) - 1.0) < 1e-12


def test_partial_trace_needs_composite_space():
    rho = DensityOperator(random_density(2, 6), FockSpace(5))
    with pytest.raises(ShapeError):
        partial_trace_phonon(rho)


# ---------------------------------------------------------------- fidelity

def test_fidelity_trivial_cases():
    e0 = np.array([1.0, 0.0], dtype=complex)
    e1 = np.array([0.0, 1.0], dtype=complex)
    assert fidelity(e0, e0) == 1.0
    assert fidelity(e0, e1) == 0.0
    plus = (e0 + e1) / np.sqrt(2)
    assert abs(fidelity(plus, e0) - 0.5) < 1e-14


def test_fidelity_symmetric_and_self():
    for seed in range(5):
        v = random_vector(seed, 7)
        rho = random_density(seed + 100, 7)
        assert abs(fidelity(v, rho) - fidelity(rho, v)) < 1e-12
        assert abs(fidelity(rho, rho) - 1.0) < 1e-10
        sigma = random_density(seed + 200, 7)
        assert abs(fidelity(rho, sigma) - fidelity(sigma, rho)) < 1e-10


def test_fidelity_mixed_agrees_with_pure_convention():
    v = random_vector(11, 6)
    w = random_vector(12, 6)
    pure = fidelity(v, w)
    via_density = fidelity(np.outer(v, v.conj()), np.outer(w, w.conj()))
    assert abs(pure - via_density) < 1e-10


def test_fidelity_shape_guard():
    with pytest.raises(ShapeError):
        fidelity(np.zeros(3, dtype=complex), np.zeros(4, dtype=complex))


def test_compose_state_layout_matches_encode():
    space = CompositeSpace(2, FockSpace(2))
    ion = np.zeros(16, dtype=complex)
    ion[4 * 1 + 2] = 1.0  # levels (1, 2)
    ph = np.array([0.0, 1.0, 0.0], dtype=complex)
    state = compose_state(space, ion, ph)
    assert state.amplitudes[space.encode([1, 2], 1)] == 1.0
