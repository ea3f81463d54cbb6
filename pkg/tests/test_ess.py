import numpy as np
import pytest

from multiess.ess import (
    ESS_PATHS,
    CertificatePath,
    Verdict,
    compute_all_ess,
    degeneracy_check,
    enumerate_supports,
    ess_qcqp,
    invasion_margin,
    is_ess,
    sne_maxdist,
    sne_support_qcp,
)
from multiess.game import MixedStrategy, SolverConfig, Support, best_response_set, random_game, response_payoffs
from multiess.oracle import grid_invasion_search
from multiess.solver import Status

CFG = SolverConfig()


def close(a, b, tol=1e-4):
    return np.max(np.abs(np.asarray(a) - np.asarray(b))) <= tol


def ess_set(run):
    return [c.strategy.probs for c in run.ess]


def same_set(found, expected, tol=1e-4):
    return len(found) == len(expected) and all(any(close(f, e, tol) for f in found) for e in expected)


# ---- enumeration


def test_enumeration_order():
    assert [s.actions for s in enumerate_supports(2)] == [(0,), (1,), (0, 1)]
    k3 = enumerate_supports(3)
    assert len(k3) == 7 and all(s.size == 1 for s in k3[:3])
    assert [s.actions for s in k3[3:6]] == [(0, 1), (0, 2), (1, 2)]
    assert len(enumerate_supports(8)) == 255


# ---- equilibria per support


def test_sne_game4_uniform(games):
    status, res = sne_support_qcp(games[4], Support((0, 1, 2)))
    assert status is Status.FEASIBLE
    assert close(res.strategy.probs, [1 / 3] * 3)


def test_sne_game7_pair(games):
    status, res = sne_support_qcp(games[7], Support((0, 1)))
    assert status is Status.FEASIBLE
    assert close(res.strategy.probs, [3 / 7, 4 / 7, 0])
    assert res.strategy.probs[2] == 0.0


def test_sne_game1_vertex_infeasible(games):
    assert sne_support_qcp(games[1], Support((0,))) == (Status.INFEASIBLE, None)


def test_sne_best_response_conditions(games):
    for g in games.values():
        for T in enumerate_supports(g.K):
            status, res = sne_support_qcp(g, T)
            if res is None:
                continue
            x = res.strategy.probs
            assert np.all(x[list(T.actions)] >= 1e-4 - 1e-12)
            gvals = response_payoffs(g, x)
            ref = gvals[T.reference]
            assert np.all(np.abs(gvals[list(T.actions)] - ref) <= 1e-6)
            assert np.all(gvals <= ref + 1e-6)


# ---- stability test


def test_is_ess_strict_shortcut(games):
    c = is_ess(games[3], MixedStrategy.pure(2, 0))
    assert c.verdict is Verdict.ESS and c.path is CertificatePath.STRICT_SHORTCUT


def test_is_ess_pure_invaded(games):
    c = is_ess(games[6], MixedStrategy.pure(3, 1))
    assert c.verdict is Verdict.NOT_ESS and c.path is CertificatePath.PURE_INVADED
    assert c.invader == 0 and c.describe_path() == "PURE_INVADED(0)"


def test_is_ess_neutral_game3(games):
    c = is_ess(games[3], MixedStrategy.pure(2, 1))
    assert c.path is CertificatePath.NEUTRAL and c.verdict is Verdict.NOT_ESS
    assert c.margin == pytest.approx(0.0, abs=1e-12)


def test_is_ess_game8_mixed_pass(games):
    x = MixedStrategy(np.array([0.4311484, 0.3760157, 0.1928359]) / 1.0000000)
    c = is_ess(games[8], x)
    assert c.verdict is Verdict.ESS and c.path is CertificatePath.MIXED_PASS
    assert c.margin > CFG.eps_p


def test_ess_qcqp_game3_zero(games):
    status, F, _ = ess_qcqp(games[3], MixedStrategy.pure(2, 1), Support((0, 1)))
    assert status is Status.GLOBAL_OPT and F == pytest.approx(0.0, abs=1e-12)


def test_ess_qcqp_game4_uniform_is_flat(games):
    # the pair matrix is antisymmetric and x^T B = 0, so F vanishes on the simplex
    x = MixedStrategy.uniform(3)
    status, F, y = ess_qcqp(games[4], x, Support((0, 1, 2)))
    assert status is Status.GLOBAL_OPT and abs(F) <= 1e-12
    grid_min, _ = grid_invasion_search(games[4], x, Support((0, 1, 2)), 1e-2, 100)
    assert grid_min == pytest.approx(0.0, abs=1e-12)
    assert is_ess(games[4], x).verdict is Verdict.NOT_ESS


def test_ess_qcqp_game6_mixed_not_ess(games):
    x = MixedStrategy(np.array([0.5, 0.0, 0.5]))
    br = best_response_set(games[6], x, CFG.eps_p)
    status, F, y = ess_qcqp(games[6], x, br)
    assert F <= CFG.eps_p
    assert F == pytest.approx(invasion_margin(games[6], x.probs, y.probs))
    grid_min, _ = grid_invasion_search(games[6], x, br, 1e-2, 100)
    assert F <= grid_min + 1e-7


def test_ess_qcqp_empty_region_infeasible():
    g = random_game(3, 2, 0)
    status, F, y = ess_qcqp(g, MixedStrategy.pure(2, 0), Support((0,)))
    assert status is Status.INFEASIBLE and F is None


# ---- full enumeration


def test_all_ess_game1(games):
    run = compute_all_ess(games[1])
    assert same_set(ess_set(run), [[0, 1], [0.5, 0.5]])


def test_all_ess_game7(games):
    run = compute_all_ess(games[7])
    assert same_set(ess_set(run), [[1, 0, 0], [0, 1, 0]])
    assert len(run.sne) == 6


def test_all_ess_game4(games):
    run = compute_all_ess(games[4])
    assert run.ess == []
    assert same_set([s.strategy.probs for s in run.sne], [[1 / 3] * 3])


def test_ess_subset_of_sne_and_accounting(games):
    for seed in range(10):
        run = compute_all_ess(random_game(3, 3, 100 + seed))
        sne = [s.strategy.probs for s in run.sne]
        for c in run.ess:
            assert any(np.array_equal(c.strategy.probs, s) for s in sne)
        counts = run.path_counts()
        assert sum(counts[p.value] for p in ESS_PATHS) == len(run.ess)
        assert all((c.path in ESS_PATHS) == c.is_ess for c in run.certificates)
        assert all(c.margin > CFG.eps_p for c in run.certificates if c.path is CertificatePath.MIXED_PASS)


def test_first_only_returns_member_of_full_set(games):
    for g in [games[1], games[6], games[7], games[8], random_game(3, 4, 77)]:
        full = compute_all_ess(g)
        first = compute_all_ess(g, first_only=True)
        if full.ess:
            assert len(first.ess) == 1 and first.stopped_early
            assert any(close(first.ess[0].strategy.probs, f, 1e-9) for f in ess_set(full))
            assert first.time_to_first <= first.total_time


def test_threads_give_same_result(games):
    a = compute_all_ess(games[7])
    b = compute_all_ess(games[7], threads=3)
    assert [c.strategy.probs.tolist() for c in a.certificates] == [c.strategy.probs.tolist() for c in b.certificates]


def test_budget_marks_unresolved():
    run = compute_all_ess(random_game(3, 4, 0), SolverConfig(max_nodes=1))
    assert not run.complete
    full = compute_all_ess(random_game(3, 4, 0))
    assert full.complete
    # every support reported as resolved under the tiny budget agrees with the full run
    resolved = {c.support for c in run.certificates}
    assert resolved <= {c.support for c in full.certificates}


def test_four_player_smoke():
    g = random_game(4, 3, 21)
    run = compute_all_ess(g)
    assert run.complete
    for s in run.sne:
        gv = response_payoffs(g, s.strategy.probs)
        assert np.all(gv <= gv[s.support.reference] + 1e-6)


# ---- degeneracy


def test_maxdist_game2_degenerate(games):
    _, res = sne_support_qcp(games[2], Support((0, 1)))
    flag, d = sne_maxdist(games[2], Support((0, 1)), res.strategy)
    assert flag and d > 0.5


def test_maxdist_zero_game(zero3):
    for T in (Support((0, 1)), Support((0, 1, 2))):
        _, res = sne_support_qcp(zero3, T)
        flag, d = sne_maxdist(zero3, T, res.strategy)
        assert flag and d > 0.1


def test_maxdist_game8_unique(games):
    T = Support((0, 1, 2))
    _, res = sne_support_qcp(games[8], T)
    flag, d = sne_maxdist(games[8], T, res.strategy)
    assert not flag and d <= CFG.eps_dist


def test_degeneracy_reports(games):
    r2 = degeneracy_check(games[2])
    assert r2.degenerate and [T.actions for T, _ in r2.witnesses] == [(0, 1)]
    r5 = degeneracy_check(games[5])
    assert r5.degenerate and [T.actions for T, _ in r5.witnesses] == [(1, 2)]
    assert not degeneracy_check(games[8]).degenerate


def test_two_root_support_is_flagged():
    # this game has two distinct equilibria on {1,2}
    from multiess.game import derive_seed

    g = random_game(3, 3, derive_seed(7, 0))
    rep = degeneracy_check(g)
    assert rep.degenerate
    assert (1, 2) in [T.actions for T, _ in rep.witnesses]


def test_game1_second_root_is_invaded(games):
    # (1/3, 2/3) also satisfies indifference on {0,1}; it is not stable
    x = MixedStrategy(np.array([1 / 3, 2 / 3]))
    c = is_ess(games[1], x)
    assert c.verdict is Verdict.NOT_ESS and c.path is CertificatePath.PURE_INVADED
    rep = degeneracy_check(games[1])
    assert [T.actions for T, _ in rep.witnesses] == [(0, 1)]
