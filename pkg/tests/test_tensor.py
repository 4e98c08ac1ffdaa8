import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nldia.delta import delta_of_proof, distinct_readings, identity, parse_einstein
from nldia.formula import SpaceSignature
from nldia.lexicon import demo_path, load_lexicon
from nldia.proofs import POSTULATES, Arrow, Proof, RuleName, SearchConfig, derive
from nldia.tensor import (DimensionOverflow, categorical_eval, contract, delta_matrix,
                          epsilon_apply, epsilon_map, eta, eta_map, ew_mul, frob_delta_map,
                          frob_iota, frob_mu, frob_zeta, identity_map, mat_apply,
                          mat_apply_T, mu_map, permutation_map, relpron_tensor, sum_axis)
from oracles import DUTCH, atom_map, golden_goals, loop_contract, random_delta


def only_delta(goal, amap):
    proofs = derive(Arrow.parse(goal), SearchConfig(POSTULATES["none"])).proofs
    (d, p), = distinct_readings(proofs, amap)
    return d, p


# ---------------------------------------------------------------- contraction

def test_identity_is_renaming():
    v = np.array([0.3, -1.5, 2.0])
    out = contract(identity(["N"]), [v])
    assert np.array_equal(out, v)


def test_identity_map_on_verb():
    amap = atom_map(4, 3)
    d, _ = only_delta(r"np\s --> np\s", amap)
    dream = np.random.default_rng(0).random((4, 3))
    assert np.array_equal(contract(d, [dream]), dream)


def test_application_matches_loops():
    amap = atom_map(3, 2)
    d, _ = only_delta(r"np*(np\s) --> s", amap)
    rng = np.random.default_rng(1)
    poets, dream = rng.random(3), rng.random((3, 2))
    expected = np.zeros(2)
    for l in range(2):
        for j in range(3):
            expected[l] += poets[j] * dream[j, l]
    np.testing.assert_allclose(contract(d, [poets, dream]), expected, atol=1e-12)


def test_lifting_creates_identity():
    amap = atom_map(3, 2)
    d, _ = only_delta(r"np --> s/(np\s)", amap)
    poets = np.array([0.5, 2.0, -1.0])
    r = contract(d, [poets], {"S": 2})
    assert r.shape == (2, 3, 2)
    for j, k, l in itertools.product(range(2), range(3), range(2)):
        assert r[j, k, l] == (poets[k] if j == l else 0.0)


def test_contract_shape_errors():
    d = identity(["N"])
    with pytest.raises(ValueError):
        contract(d, [np.ones((2, 2))])
    d2 = parse_einstein("v_k = a_i b_{ik}", spaces=["N", "N", "N", "N"])
    with pytest.raises(ValueError):
        contract(d2, [np.ones(2), np.ones((3, 3))])
    with pytest.raises(ValueError):
        contract(d, [np.array([np.nan])])


def test_loops_scale_by_dimension():
    d = parse_einstein("v = δ^{i}_{i}")
    assert d.loops == ("?",)
    assert contract(d, [], {"?": 5}) == 5.0


# ---------------------------------------------------------------- compact closure

def test_eta_examples():
    np.testing.assert_array_equal(eta(SpaceSignature(("N",), (2,))), np.eye(2))
    e3 = eta(SpaceSignature(("N",), (3,)))
    assert e3.sum() == 3 and np.count_nonzero(e3 == 0) == 6
    for i in range(3):
        assert e3[i, i] == 1


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_epsilon_after_eta_is_dimension(n):
    assert (epsilon_map(n) @ eta_map(n)).item() == n
    sig = SpaceSignature(("N",), (n,))
    assert epsilon_apply(eta(sig), np.eye(n)) == n


def test_epsilon_apply():
    assert epsilon_apply([1, 0], [0, 1]) == 0
    assert epsilon_apply([1, 2], [3, 4]) == 11
    rng = np.random.default_rng(4)
    u, v = rng.random(6), rng.random(6)
    total = 0.0
    for i in range(6):
        total += u[i] * v[i]
    assert abs(epsilon_apply(u, v) - total) < 1e-12
    with pytest.raises(ValueError):
        epsilon_apply([1, 2], [1, 2, 3])


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_snake_identities(n):
    v = np.random.default_rng(n).random(n)
    left = np.kron(epsilon_map(n), identity_map(n)) @ np.kron(identity_map(n), eta_map(n))
    right = np.kron(identity_map(n), epsilon_map(n)) @ np.kron(eta_map(n), identity_map(n))
    assert np.max(np.abs(left @ v - v)) <= 1e-12
    assert np.max(np.abs(right @ v - v)) <= 1e-12


def test_permutation_map():
    x = np.arange(24.0).reshape(2, 3, 4)
    p = permutation_map((2, 3, 4), (2, 0, 1))
    np.testing.assert_array_equal(p @ x.ravel(), x.transpose(2, 0, 1).ravel())


# ---------------------------------------------------------------- Frobenius

def test_frobenius_examples():
    np.testing.assert_array_equal(frob_delta_map([2, 5]), [[2, 0], [0, 5]])
    np.testing.assert_array_equal(frob_zeta(3, 1), [1, 1, 1])
    assert frob_iota([1, 2, 3]) == 6
    with pytest.raises(ValueError):
        frob_mu(np.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=6))
def test_mu_after_delta_is_identity(v):
    np.testing.assert_array_equal(frob_mu(frob_delta_map(v)), v)
    n = len(v)
    np.testing.assert_array_equal(mu_map(n) @ frob_delta_map(v).ravel(), v)
    # deleting after copying sums the vector
    assert abs(frob_iota(frob_mu(frob_delta_map(v))) - sum(v)) < 1e-9


def test_relpron_small():
    t = relpron_tensor(2, 1)
    for i, j, k, l in itertools.product(range(2), range(2), range(2), range(1)):
        assert t[i, j, k, l] == (1.0 if i == j == k else 0.0)


@pytest.mark.parametrize("n,s", [(1, 1), (3, 2), (4, 3), (5, 4)])
def test_relpron_sum_and_slices(n, s):
    t = relpron_tensor(n, s)
    assert t.sum() == n * s
    for l in range(s):
        np.testing.assert_array_equal(t[..., l], t[..., 0])
    np.testing.assert_array_equal(relpron_tensor(n, s, lam=2.5), 2.5 * t)


# ---------------------------------------------------------------- categorical oracle

def test_axiom_is_identity_matrix():
    p = Proof(RuleName.Axiom, Arrow.parse("np --> np"))
    np.testing.assert_array_equal(categorical_eval(p, atom_map(3, 2)), np.eye(3))


def test_application_on_basis():
    amap = atom_map(2, 2)
    d, p = only_delta(r"np*(np\s) --> s", amap)
    m = categorical_eval(p, amap)
    dims = {"N": 2, "S": 2}
    for k in range(m.shape[1]):
        basis = np.zeros(8)
        basis[k] = 1
        x = basis.reshape(2, 2, 2)
        np.testing.assert_allclose(m[:, k], contract(d, [x], dims).ravel(), atol=1e-12)


@pytest.mark.parametrize("goal,postulates", golden_goals(),
                         ids=[str(g) for g, _ in golden_goals()])
@pytest.mark.parametrize("n,s", [(2, 2), (1, 3), (3, 1)])
def test_oracle_agrees(goal, postulates, n, s):
    amap = atom_map(n, s)
    dims = {"N": n, "S": s}
    for p in derive(goal, SearchConfig(postulates)):
        d = delta_of_proof(p, amap)
        assert np.max(np.abs(categorical_eval(p, amap) - delta_matrix(d, dims))) <= 1e-9


def test_dimension_guard():
    p = derive(DUTCH, SearchConfig(POSTULATES["left"]))[0]
    with pytest.raises(DimensionOverflow):
        categorical_eval(p, atom_map(4, 3), max_dim=1000)


def test_delta_matrix_matches_loops():
    rng = random.Random(0)
    dims = {"N": 2, "S": 3}
    for _ in range(20):
        d = random_delta(rng, max_pairs=3)
        m = delta_matrix(d, dims)
        shape = tuple(dims[s] for s in d.domain_spaces)
        n_in = int(np.prod(shape))
        for k in range(n_in):
            x = np.zeros(n_in)
            x[k] = 1
            x = x.reshape(shape)
            expected = loop_contract(d, [x] if shape else [], dims).ravel()
            np.testing.assert_allclose(m[:, k], expected, atol=1e-12)


# ---------------------------------------------------------------- final meanings

def test_helper_examples():
    np.testing.assert_array_equal(ew_mul([1, 2], [3, 4]), [3, 8])
    v = np.array([1.0, -2.0, 0.5])
    np.testing.assert_array_equal(mat_apply(np.eye(3), v), v)
    m = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(mat_apply_T(m, [1.0, 1.0]), [3, 5, 7])
    np.testing.assert_array_equal(sum_axis(np.ones((2, 3, 4)), 2), 4 * np.ones((2, 3)))
    with pytest.raises(ValueError):
        ew_mul([1], [1, 2])
    with pytest.raises(ValueError):
        mat_apply(m, [1.0, 1.0])
    with pytest.raises(ValueError):
        sum_axis(np.ones(2), 3)


def test_dutch_final_meanings():
    lex = load_lexicon(demo_path("dutch"))
    words = ["mannen", "die", "vrouwen", "haten"]
    tensors = [lex.entries[w][0].tensor for w in words]
    mannen, _, vrouwen, haten = tensors
    summed = sum_axis(haten, 2)
    subject = ew_mul(mannen, mat_apply_T(summed, vrouwen))
    obj = ew_mul(mannen, mat_apply(summed, vrouwen))
    proofs = derive(DUTCH, SearchConfig(POSTULATES["left"])).proofs
    results = [contract(d, tensors, lex.spaces) for d, _ in distinct_readings(proofs, lex.atom_map)]
    assert len(results) == 2
    subj_hits = [np.max(np.abs(r - subject)) <= 1e-9 for r in results]
    obj_hits = [np.max(np.abs(r - obj)) <= 1e-9 for r in results]
    assert subj_hits == [True, False] and obj_hits == [False, True]
