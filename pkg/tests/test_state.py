import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from markovcert.errors import (
    CapacityError,
    CompositionError,
    DegenerateInputError,
    RegionError,
    ShapeError,
    ValidationError,
)
from markovcert.state import (
    DensityMatrix,
    Region,
    StateVector,
    SystemLayout,
    basis_vector,
    bell_pair,
    embed_operator,
    ghz_state,
    nearest_density,
    partial_trace,
    project_to_density,
    random_mixed_state,
    random_pure_vector,
    random_unitary,
    rank,
    tensor_product,
    to_density,
    trace_distance,
)
from markovcert.fixtures import dephased_ghz
from markovcert.entropy import entropy

import oracles

PLUS = np.array([1, 1]) / np.sqrt(2)


def test_layout_validation():
    with pytest.raises(ValidationError):
        SystemLayout(("a", "a"), (2, 2))
    with pytest.raises(ValidationError):
        SystemLayout(("a",), (0,))
    assert SystemLayout.from_dims([2, 3]).total_dim == 6


def test_region_set_algebra():
    r = Region((3, 1))
    assert r.sites == (1, 3)
    assert r.union((0,)).sites == (0, 1, 3)
    assert r.complement(4).sites == (0, 2)
    assert r.isdisjoint((0, 2))
    with pytest.raises(RegionError):
        Region((1, 1))
    with pytest.raises(RegionError):
        Region((-1,))


@pytest.mark.parametrize(
    "m",
    [
        np.array([[0.5, 0.1], [0.2, 0.5]]),  # not Hermitian
        np.diag([0.6, 0.6]),  # trace 1.2
        np.diag([1.1, -0.1]),  # negative eigenvalue
    ],
)
def test_density_rejects_invalid(m):
    with pytest.raises(ValidationError):
        DensityMatrix(m)


def test_density_is_immutable():
    rho = DensityMatrix(np.eye(2) / 2)
    with pytest.raises(ValueError):
        rho.data[0, 0] = 1


def test_partial_trace_product():
    zero = to_density(basis_vector([2], [0]))
    plus = DensityMatrix(np.outer(PLUS, PLUS), sites=(1,))
    out = partial_trace(tensor_product(zero, plus), (0,))
    np.testing.assert_allclose(out.data, zero.data, atol=1e-15)


def test_partial_trace_bell_and_ghz():
    bell = to_density(bell_pair())
    np.testing.assert_allclose(partial_trace(bell, (0,)).data, np.eye(2) / 2, atol=1e-15)
    ghz = to_density(ghz_state(3))
    expect = np.zeros((4, 4))
    expect[0, 0] = expect[3, 3] = 0.5
    np.testing.assert_allclose(partial_trace(ghz, (0, 1)).data, expect, atol=1e-15)


def test_partial_trace_errors():
    rho = random_mixed_state([2, 2], 2, seed=0)
    with pytest.raises(RegionError):
        partial_trace(rho, (5,))
    big = DensityMatrix(np.eye(8) / 8, check=False)
    with pytest.raises(CapacityError):
        partial_trace(big, (0, 1), max_dim=4)


def test_partial_trace_matches_einsum_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        dims = list(rng.integers(1, 4, size=rng.integers(2, 5)))
        keep = sorted(rng.choice(len(dims), size=rng.integers(1, len(dims) + 1), replace=False).tolist())
        rho = random_mixed_state(dims, min(3, int(np.prod(dims))), seed=int(rng.integers(1 << 30)))
        np.testing.assert_allclose(
            partial_trace(rho, keep).data, oracles.ptrace(rho.data, dims, keep), atol=1e-12
        )


def test_trace_distance_values():
    zero = to_density(basis_vector([2], [0]))
    one = to_density(basis_vector([2], [1]))
    assert trace_distance(zero, zero) == 0.0
    assert trace_distance(zero, one) == pytest.approx(2.0, abs=1e-12)
    ghz = to_density(ghz_state(3))
    assert trace_distance(ghz, dephased_ghz(3)) == pytest.approx(1.0, abs=1e-12)
    assert oracles.trace_norm(ghz.data - dephased_ghz(3).data) == pytest.approx(1.0, abs=1e-12)


def test_trace_distance_layout_mismatch():
    with pytest.raises(ShapeError):
        trace_distance(DensityMatrix(np.eye(2) / 2), DensityMatrix(np.eye(3) / 3, [3]))


def test_tensor_product():
    half = DensityMatrix(np.eye(2) / 2)
    out = tensor_product(half, half.on((1,)))
    np.testing.assert_allclose(out.data, np.eye(4) / 4)
    with pytest.raises(CompositionError):
        tensor_product(half, half)
    a = random_mixed_state([2], 1, seed=3)
    b = random_mixed_state([2], 2, seed=4, sites=(1,))
    assert rank(tensor_product(a, b)) == rank(a) * rank(b) == 2


def test_tensor_product_orders_by_site():
    a = to_density(basis_vector([2], [1], sites=(1,)))
    b = to_density(basis_vector([2], [0], sites=(0,)))
    out = tensor_product(a, b)
    assert out.sites.sites == (0, 1)
    assert out.data[1, 1] == pytest.approx(1.0)  # |01>


def test_random_mixed_state():
    pure = random_mixed_state([2, 2], 1, seed=2)
    assert entropy(pure) == pytest.approx(0.0, abs=1e-10)
    a = random_mixed_state([2, 3], 6, seed=11)
    b = random_mixed_state([2, 3], 6, seed=11)
    assert np.array_equal(a.data, b.data)
    mean = np.mean([random_mixed_state([2, 2], 4, seed=s).eigvalsh() for s in range(50)])
    assert mean == pytest.approx(0.25, abs=1e-12)


def test_project_to_density():
    rho = random_mixed_state([2, 2], 3, seed=5)
    np.testing.assert_allclose(project_to_density(rho.data).data, rho.data, atol=1e-12)
    np.testing.assert_allclose(project_to_density(np.diag([1.1, -0.1])).data, np.diag([1.0, 0.0]))
    with pytest.raises(DegenerateInputError):
        project_to_density(-np.eye(2))


def test_project_noisy_bell_estimate():
    bell = to_density(bell_pair())
    rng = np.random.default_rng(7)
    for scale in (1e-3, 1e-2):
        noise = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        noise = scale * (noise + noise.conj().T) / 2
        out = project_to_density(bell.data + noise)
        assert np.trace(out.data).real == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.eigvalsh(out.data).min() >= -1e-12
        assert trace_distance(out, bell) <= 4 * oracles.trace_norm(noise)


def test_nearest_density_is_simplex_projection():
    out = nearest_density(np.diag([0.9, 0.4, -0.3]), [3])
    np.testing.assert_allclose(np.diag(out.data).real, [0.75, 0.25, 0.0], atol=1e-12)


def test_ghz_constructors():
    np.testing.assert_allclose(ghz_state(2).amplitudes, bell_pair().amplitudes)
    for n in (2, 3, 5):
        v = ghz_state(n)
        assert v.amplitudes[0] == pytest.approx(1 / np.sqrt(2))
        rho = to_density(v)
        for k in range(n):
            assert oracles.entropy(partial_trace(rho, (k,)).data) == pytest.approx(np.log(2), abs=1e-12)


def test_state_vector_norm_checked():
    with pytest.raises(ValidationError):
        StateVector(np.array([1.0, 1.0]), SystemLayout.from_dims([2]), None)


def test_embed_operator():
    op = np.array([[0, 1], [1, 0]], dtype=complex)
    full = embed_operator(op, (1,), (0, 1, 2), (2, 2, 2))
    np.testing.assert_allclose(full, np.kron(np.kron(np.eye(2), op), np.eye(2)))


# -- properties -------------------------------------------------------------

dims_strategy = st.lists(st.integers(2, 3), min_size=2, max_size=4)


@settings(max_examples=60, deadline=None)
@given(dims=dims_strategy, seed=st.integers(0, 2**31 - 1))
def test_partial_trace_preserves_trace_and_composes(dims, seed):
    rho = random_mixed_state(dims, 2, seed=seed)
    n = len(dims)
    keep = list(range(n - 1))
    inner = partial_trace(partial_trace(rho, keep), keep[:-1] or keep)
    direct = partial_trace(rho, keep[:-1] or keep)
    np.testing.assert_allclose(inner.data, direct.data, atol=1e-10)
    assert np.trace(partial_trace(rho, (0,)).data).real == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(seeds=st.tuples(*[st.integers(0, 2**31 - 1)] * 3))
def test_trace_distance_is_metric(seeds):
    a, b, c = (random_mixed_state([2, 2], 2, seed=s) for s in seeds)
    assert trace_distance(a, b) == trace_distance(b, a)
    assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-10


@settings(max_examples=40, deadline=None)
@given(sv=st.integers(0, 2**31 - 1), sw=st.integers(0, 2**31 - 1), dv=st.integers(1, 3), dw=st.integers(1, 3))
def test_marginal_of_pure_product(sv, sw, dv, dw):
    v = random_pure_vector([dv], sv)
    w = random_pure_vector([dw], sw, sites=(1,))
    joint = to_density(tensor_product(v, w))
    np.testing.assert_allclose(partial_trace(joint, (0,)).data, to_density(v).data, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), d=st.integers(2, 5))
def test_project_to_density_idempotent(seed, d):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    once = project_to_density(m + m.conj().T + np.eye(d) * d, [d])
    twice = project_to_density(once.data, [d])
    np.testing.assert_allclose(twice.data, once.data, atol=1e-12)


def test_random_unitary_is_unitary():
    u = random_unitary(4, seed=0)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-12)
