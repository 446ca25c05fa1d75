import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from markovcert.entropy import (
    binary_entropy,
    cmi,
    concavity_gap,
    concavity_lower_bound,
    conditional_entropy,
    continuity_correction,
    entropy,
    entropy_report,
    mutual_information,
    uniform_continuity_correction,
    weak_monotonicity,
)
from markovcert.errors import DomainError, RegionError, ValidationError
from markovcert.state import (
    DensityMatrix,
    bell_pair,
    ghz_state,
    partial_trace,
    random_mixed_state,
    random_pure_vector,
    random_unitary,
    tensor_product,
    to_density,
)
from markovcert.fixtures import random_product_state

import oracles

LN2 = math.log(2)
GHZ3 = to_density(ghz_state(3))


def test_entropy_values():
    assert entropy(to_density(random_pure_vector([2, 2], 0))) == pytest.approx(0.0, abs=1e-12)
    assert entropy(DensityMatrix(np.eye(2) / 2)) == pytest.approx(LN2, abs=1e-15)
    # -3/4 ln 3/4 - 1/4 ln 1/4, evaluated by the SVD oracle
    expect = oracles.entropy(np.diag([0.75, 0.25]))
    assert expect == pytest.approx(0.5623351446188083, abs=1e-15)
    assert entropy(DensityMatrix(np.diag([0.75, 0.25]))) == pytest.approx(expect, abs=1e-14)


def test_entropy_rejects_invalid_matrix():
    with pytest.raises(ValidationError):
        entropy(np.diag([0.7, 0.7]))


def test_conditional_entropy():
    rho = random_product_state([2, 3], seed=1)
    assert conditional_entropy(rho, (0,), (1,)) == pytest.approx(entropy(partial_trace(rho, (0,))), abs=1e-12)
    bell = to_density(bell_pair())
    assert conditional_entropy(bell, (0,), (1,)) == pytest.approx(-LN2, abs=1e-12)
    classical = DensityMatrix(np.diag([0.5, 0, 0, 0.5]))
    assert conditional_entropy(classical, (0,), (1,)) == pytest.approx(0.0, abs=1e-12)


def test_overlapping_regions_rejected():
    with pytest.raises(RegionError):
        cmi(GHZ3, (0, 1), (1,), (2,))


def test_cmi_values():
    prod = random_product_state([2, 2, 2], seed=3)
    assert cmi(prod, (0,), (1,), (2,)) == pytest.approx(0.0, abs=1e-12)
    assert cmi(GHZ3, (0,), (1,), (2,)) == pytest.approx(LN2, abs=1e-12)
    assert oracles.cmi(GHZ3.data, [2, 2, 2], [0], [1], [2]) == pytest.approx(LN2, abs=1e-12)
    # pure entangled pair on (0, 2) with an unrelated middle site
    phi = to_density(random_pure_vector([2, 2], 5, sites=(0, 2)))
    mid = random_mixed_state([2], 2, seed=6, sites=(1,))
    state = tensor_product(phi, mid)
    assert cmi(state, (0,), (1,), (2,)) == pytest.approx(2 * entropy(partial_trace(phi, (0,))), abs=1e-12)


def test_weak_monotonicity_values():
    prod = random_product_state([2, 2, 2], seed=4)
    s_a = entropy(partial_trace(prod, (0,)))
    assert weak_monotonicity(prod, (0,), (1,), (2,)) == pytest.approx(2 * s_a, abs=1e-12)
    assert weak_monotonicity(GHZ3, (0,), (1,), (2,)) >= -1e-9


def test_weak_monotonicity_purification_dual():
    # WM(A,B,C) on rho_ABC equals I(A:D|B) on a purification with D = purifier
    rho = random_mixed_state([2, 2, 2], 8, seed=12)
    w, v = np.linalg.eigh(rho.data)
    psi = sum(np.sqrt(max(w[i], 0)) * np.kron(v[:, i], np.eye(8)[i]) for i in range(8))
    pure = DensityMatrix(np.outer(psi, psi.conj()), [2, 2, 2, 8], check=False)
    wm = weak_monotonicity(rho, (0,), (1,), (2,))
    ssa = cmi(pure, (0,), (1,), (3,))
    assert wm == pytest.approx(ssa, abs=1e-9)


def test_binary_entropy():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(LN2, abs=1e-15)
    assert binary_entropy(0.01) == pytest.approx(0.056001534354847345, abs=1e-15)
    assert oracles.binary_entropy(0.01) == pytest.approx(0.056001534354847345, abs=1e-15)
    with pytest.raises(DomainError):
        binary_entropy(1.5)


def test_continuity_correction():
    assert continuity_correction([0, 0, 0], [2, 2, 2]) == 0.0
    expect = 4 * 0.01 * LN2 + 2 * oracles.binary_entropy(0.01)
    assert expect == pytest.approx(0.1397289559320925, abs=1e-15)
    assert continuity_correction([0.01], [2]) == pytest.approx(expect, abs=1e-15)
    assert uniform_continuity_correction(0.01, [2, 2]) == pytest.approx(2 * expect, abs=1e-15)
    with pytest.raises(DomainError):
        continuity_correction([0.1], [2, 2])


def test_continuity_correction_monotone():
    grid = np.linspace(0, 0.5, 51)
    vals = [continuity_correction([e, 0.1], [3, 2]) for e in grid]
    assert np.all(np.diff(vals) >= 0)


def test_concavity_examples():
    rho = random_mixed_state([2, 2], 3, seed=8)
    assert concavity_gap(rho, rho, 0.3) == pytest.approx(0.0, abs=1e-12)
    zero = DensityMatrix(np.diag([1.0, 0.0]))
    one = DensityMatrix(np.diag([0.0, 1.0]))
    assert concavity_gap(zero, one, 0.5) == pytest.approx(LN2, abs=1e-12)
    assert concavity_lower_bound(zero, one, 0.5) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DomainError):
        concavity_gap(zero, one, 1.0)


def test_entropy_report_json():
    rep = entropy_report(GHZ3, [(0,)], [("cmi", (0,), (1,), (2,)), ("cond", (0,), (1,))])
    d = json.loads(rep.to_json())
    assert d["regions"][0] == {"sites": [0], "entropy_nats": pytest.approx(LN2)}
    kinds = [q["kind"] for q in d["quantities"]]
    assert kinds == ["cmi", "cond"]
    assert d["quantities"][0]["value"] == pytest.approx(LN2, abs=1e-12)
    assert set(d["quantities"][0]) >= {"a", "b", "c", "value"}


def test_entropy_report_clamps_tiny_negative():
    prod = random_product_state([2, 2, 2], seed=10)
    rep = entropy_report(prod, quantities=[("cmi", (0,), (1,), (2,))])
    q = rep.quantities[0]
    assert q["value"] >= 0.0
    assert abs(q["raw"]) < 1e-9


def test_mutual_information_bell():
    assert mutual_information(to_density(bell_pair()), (0,), (1,)) == pytest.approx(2 * LN2, abs=1e-12)


# -- properties -------------------------------------------------------------

seeds = st.integers(0, 2**31 - 1)


@settings(max_examples=50, deadline=None)
@given(seed=seeds, middle=st.sampled_from([2, 3]))
def test_ssa_and_wm(seed, middle):
    rho = random_mixed_state([2, middle, 2], 1 + seed % (4 * middle), seed=seed)
    assert cmi(rho, (0,), (1,), (2,)) >= -1e-9
    assert weak_monotonicity(rho, (0,), (1,), (2,)) >= -1e-9


@settings(max_examples=50, deadline=None)
@given(seed=seeds, n=st.integers(2, 4))
def test_pure_state_duality(seed, n):
    rho = to_density(random_pure_vector([2] * n, seed))
    a = tuple(range(seed % (n - 1) + 1))
    rest = tuple(range(len(a), n))
    assert entropy(partial_trace(rho, a)) == pytest.approx(entropy(partial_trace(rho, rest)), abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(seed=seeds, c=st.sampled_from([0.1, 0.5, 0.9]))
def test_strengthened_concavity(seed, c):
    rho = random_mixed_state([8], 1 + seed % 8, seed=seed, sites=None)
    sigma = random_mixed_state([8], 1 + (seed // 8) % 8, seed=seed + 1)
    assert concavity_gap(rho, sigma, c) >= concavity_lower_bound(rho, sigma, c) - 1e-9


@settings(max_examples=50, deadline=None)
@given(seed=seeds)
def test_entropy_unitary_invariance(seed):
    rho = random_mixed_state([2, 2], 3, seed=seed)
    u = random_unitary(4, seed + 1)
    rotated = DensityMatrix(u @ rho.data @ u.conj().T, check=False)
    assert entropy(rotated) == pytest.approx(entropy(rho), abs=1e-9)
    assert entropy(rho) == pytest.approx(oracles.entropy(rho.data), abs=1e-10)
