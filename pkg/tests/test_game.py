import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multiess.game import (
    AsymmetricTensor,
    DimensionMismatch,
    GameError,
    IndexOutOfRange,
    MixedStrategy,
    NonFiniteEntry,
    NonPositiveScale,
    ParseError,
    ShapeMismatch,
    SolverConfig,
    Support,
    affine_transform,
    best_response_set,
    derive_seed,
    expected_utility,
    load_game,
    permute_actions,
    pure_response_payoff,
    random_game,
    response_payoffs,
    save_game,
    validate_game,
)

from .conftest import GAMES, example_game


def brute_utility(A, profile):
    """Sum over every pure profile; independent of the tensor-contraction path."""
    K, n = A.shape[0], A.ndim
    total = 0.0
    for idx in itertools.product(range(K), repeat=n):
        w = 1.0
        for slot, s in enumerate(idx):
            w *= profile[slot][s]
        total += A[idx] * w
    return total


# ---- validation


def test_game4_accepted_with_symmetric_slices(games):
    A0 = games[4].A[0]
    assert A0.shape == (3, 3)
    assert np.array_equal(A0, A0.T)


def test_asymmetric_tensor_rejected():
    A = np.zeros((2, 2, 2))
    A[0, 0, 1] = 1.0
    with pytest.raises(AsymmetricTensor) as err:
        validate_game(3, 2, A)
    assert {err.value.index, err.value.permuted_index} == {(0, 0, 1), (0, 1, 0)}


def test_zero_tensor_accepted(zero3):
    assert zero3.K == 3 and not zero3.A.any()


def test_shape_and_finiteness_errors():
    with pytest.raises(ShapeMismatch):
        validate_game(3, 2, np.zeros(7))
    A = np.zeros((2, 2, 2))
    A[1, 1, 1] = np.nan
    with pytest.raises(NonFiniteEntry):
        validate_game(3, 2, A)


def test_tensor_is_read_only(games):
    with pytest.raises(ValueError):
        games[1].A[0, 0, 0] = 5.0


# ---- payoffs


def test_expected_utility_examples(games, zero3):
    e0 = MixedStrategy.pure(2, 0)
    assert expected_utility(games[3], [e0, e0, e0]) == 2.0
    u = MixedStrategy.uniform(3)
    assert expected_utility(games[4], [u, u, u]) == pytest.approx(0.0, abs=1e-15)
    assert brute_utility(games[4].A, [u.probs] * 3) == pytest.approx(0.0, abs=1e-15)
    x = MixedStrategy(np.array([0.2, 0.3, 0.5]))
    assert expected_utility(zero3, [x, u, x]) == 0.0


def test_expected_utility_dimension_mismatch(games):
    with pytest.raises(DimensionMismatch):
        expected_utility(games[3], [np.ones(3) / 3] * 3)
    with pytest.raises(DimensionMismatch):
        expected_utility(games[3], [np.ones(2) / 2] * 2)


def test_pure_response_payoff_examples(games):
    p = MixedStrategy.pure(2, 0)
    assert pure_response_payoff(games[3], 0, p) == 2.0
    assert pure_response_payoff(games[3], 1, p) == 0.0
    half = MixedStrategy.uniform(2)
    # average of the four entries of each slice
    assert pure_response_payoff(games[1], 0, half) == pytest.approx(np.mean(games[1].A[0]))
    assert pure_response_payoff(games[1], 0, half) == pytest.approx(-1.5)
    assert pure_response_payoff(games[1], 1, half) == pytest.approx(-1.5)
    for i in range(3):
        for j in range(3):
            assert pure_response_payoff(games[7], i, MixedStrategy.pure(3, j)) == games[7].A[i, j, j]
    with pytest.raises(IndexOutOfRange):
        pure_response_payoff(games[3], 2, p)


def test_best_response_set_examples(games, zero3):
    assert best_response_set(games[3], MixedStrategy.pure(2, 0), 1e-5) == Support((0,))
    assert best_response_set(games[6], MixedStrategy.pure(3, 1), 1e-5) == Support((0, 1, 2))
    assert best_response_set(zero3, np.array([0.1, 0.2, 0.7]), 1e-5) == Support((0, 1, 2))


def test_affine_transform_examples(games, zero3):
    assert affine_transform(games[3], 1.0, 0.0) == games[3]
    assert np.all(affine_transform(zero3, 2.0, 3.0).A == 3.0)
    assert affine_transform(games[3], 2.0, 0.0).A[0, 0, 0] == 4.0
    with pytest.raises(NonPositiveScale):
        affine_transform(games[3], 0.0, 1.0)


# ---- generation


def test_random_game_deterministic_and_bounded():
    a, b = random_game(3, 4, 11), random_game(3, 4, 11)
    assert a == b
    assert np.all(np.abs(a.A) <= 1.0)
    assert random_game(3, 4, 12) != a
    validate_game(3, 4, a.A)


@pytest.mark.parametrize("n,K", [(2, 4), (3, 3), (3, 5), (4, 3)])
def test_random_game_exact_symmetry(n, K):
    g = random_game(n, K, derive_seed(3, n * 10 + K))
    for perm in itertools.permutations(range(1, n)):
        assert np.array_equal(g.A, g.A.transpose((0, *perm)))


def test_derive_seed_is_stable():
    assert derive_seed(1, 0) == derive_seed(1, 0)
    assert len({derive_seed(1, i) for i in range(100)}) == 100


# ---- file format

PUBLISHED_GAME8 = [
    [[-1.3170, -0.1652, -0.5493], [-0.1652, 0.9867, 0.6025], [-0.5493, 0.6025, 0.2184]],
    [[0.9867, -0.3122, 0.5599], [-0.3122, -1.6110, -0.7390], [0.5599, -0.7390, 0.1331]],
    [[0.2184, 0.1757, -0.6659], [0.1757, 0.1331, -0.7085], [-0.6659, -0.7085, -1.5501]],
]


def test_bundled_game8_matches_published_entries(games):
    assert np.array_equal(games[8].A, np.array(PUBLISHED_GAME8))


def test_all_corpus_games_load():
    for i in range(1, 9):
        g = example_game(i)
        assert g.n == 3 and g.K in (2, 3)
    assert (GAMES.parent.parent.parent / "games" / "game1").exists()


def test_missing_row_is_parse_error(tmp_path):
    doc = json.loads((GAMES / "game4").read_text())
    del doc["tensor"][1][2]
    path = tmp_path / "bad"
    path.write_text(json.dumps(doc))
    with pytest.raises(ParseError):
        load_game(path)


def test_asymmetric_file_rejected(tmp_path):
    doc = {"n": 3, "k": 2, "tensor": [[[0, 1], [0, 0]], [[0, 0], [0, 0]]]}
    path = tmp_path / "asym"
    path.write_text(json.dumps(doc))
    with pytest.raises(AsymmetricTensor):
        load_game(path)


@pytest.mark.parametrize("text", ["", "not json", '{"n": 3, "k": 2}', '{"n": 3, "k": 2, "tensor": [1, 2]}'])
def test_malformed_files(tmp_path, text):
    path = tmp_path / "g"
    path.write_text(text)
    with pytest.raises(ParseError):
        load_game(path)


def test_save_load_round_trip(tmp_path):
    g = random_game(3, 5, 42)
    save_game(g, tmp_path / "g.json")
    back = load_game(tmp_path / "g.json")
    assert np.array_equal(back.A, g.A)
    assert back.n == 3 and back.K == 5


# ---- strategies and config


def test_mixed_strategy_invariants():
    x = MixedStrategy(np.array([0.0, 0.25, 0.75]))
    assert x.support == Support((1, 2))
    assert not x.is_pure and MixedStrategy.pure(3, 2).is_pure
    with pytest.raises(GameError):
        MixedStrategy(np.array([0.5, 0.6]))
    with pytest.raises(GameError):
        MixedStrategy(np.array([-0.1, 1.1]))


def test_support_invariants():
    assert Support((0, 2)).reference == 0
    with pytest.raises(GameError):
        Support(())
    with pytest.raises(GameError):
        Support((2, 1))


def test_solver_config_defaults_and_ordering():
    c = SolverConfig()
    assert (c.eps_s, c.eps_p, c.delta, c.eps_dist, c.feas_tol, c.opt_gap) == (1e-4, 1e-5, 1e-2, 1e-8, 1e-6, 1e-7)
    with pytest.raises(ValueError):
        SolverConfig(feas_tol=1e-4)
    with pytest.raises(ValueError):
        SolverConfig(opt_gap=1e-4)
    with pytest.raises(ValueError):
        SolverConfig(eps_s=0.0)


# ---- properties


def _simplex(draw, K):
    w = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=K, max_size=K)))
    return w / w.sum()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 1), st.data())
def test_multilinearity(seed, alpha, data):
    g = random_game(3, 3, seed)
    x, x2, y, z = (_simplex(data.draw, 3) for _ in range(4))
    mix = alpha * x + (1 - alpha) * x2
    for slot in range(3):
        prof = [y, z, y]
        lhs = expected_utility(g, prof[:slot] + [mix] + prof[slot + 1 :])
        rhs = alpha * expected_utility(g, prof[:slot] + [x] + prof[slot + 1 :]) + (1 - alpha) * expected_utility(
            g, prof[:slot] + [x2] + prof[slot + 1 :]
        )
        assert lhs == pytest.approx(rhs, abs=1e-10)


def test_response_payoffs_match_expected_utility():
    rng = np.random.default_rng(5)
    for trial in range(100):
        K = int(rng.integers(1, 7))
        g = random_game(3, K, trial)
        p = rng.dirichlet(np.ones(K))
        for i in range(K):
            e = np.eye(K)[i]
            assert abs(pure_response_payoff(g, i, p) - expected_utility(g, [e, p, p])) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.permutations(range(4)), st.data())
def test_relabeling_maps_response_payoffs(seed, perm, data):
    g = random_game(3, 4, seed)
    h = permute_actions(g, perm)
    p = _simplex(data.draw, 4)
    q = np.empty(4)
    q[list(perm)] = p
    gp, hq = response_payoffs(g, p), response_payoffs(h, q)
    for i in range(4):
        assert hq[perm[i]] == pytest.approx(gp[i], abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=8, max_size=8), st.integers(0, 4))
def test_best_response_with_zero_tolerance_contains_argmax(vals, k):
    # rational payoffs on a dyadic grid, exact in floating point
    A = np.zeros((2, 2, 2))
    classes = {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 2}
    for i in range(2):
        for j in range(2):
            for l in range(2):
                A[i, j, l] = vals[3 * i + classes[j, l]]
    g = validate_game(3, 2, A)
    x = np.array([k / 4, 1 - k / 4])
    br = best_response_set(g, x, 0.0)
    assert int(np.argmax(response_payoffs(g, x))) in br
