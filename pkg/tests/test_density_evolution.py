import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from minlut.channel import snr_to_sigma
from minlut.density_evolution import (
    DesignParams,
    ThresholdIntervalError,
    cn_pair_combine,
    cn_update_distribution,
    design_decision_lut,
    design_decoder,
    design_vn_stage,
    find_threshold,
    run_de,
)
from minlut.mi_quantizer import ConditionalPmf, Lut, apply_lut
from minlut.trees import parse_tree


def bsc(e):
    return ConditionalPmf.from_p0(np.array([e, 1 - e]))


def test_pair_combine_with_perfect_sign():
    a = oracles.random_symmetric_pmf(np.random.default_rng(0), 4)
    perfect = ConditionalPmf.from_p0(np.array([0.0, 0.0, 0.0, 1.0]))
    out = cn_pair_combine(a, perfect)
    # the sign (upper half vs lower half) follows a
    assert out.p0[2:].sum() == pytest.approx(a.p0[2:].sum(), abs=1e-15)


def test_pair_combine_xor_error_rates():
    e1, e2 = 0.1, 0.23
    out = cn_pair_combine(bsc(e1), bsc(e2))
    assert out.p0[0] == pytest.approx(e1 * (1 - e2) + e2 * (1 - e1), abs=1e-15)
    assert out.symmetric


@settings(max_examples=60)
@given(st.sampled_from([2, 4, 6, 8]), st.integers(0, 2**32 - 1))
def test_pair_combine_commutative_associative(k, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (oracles.random_symmetric_pmf(rng, k, sort=False) for _ in range(3))
    np.testing.assert_allclose(cn_pair_combine(a, b).p0, cn_pair_combine(b, a).p0, atol=1e-14)
    left = cn_pair_combine(cn_pair_combine(a, b), c)
    right = cn_pair_combine(a, cn_pair_combine(b, c))
    np.testing.assert_allclose(left.p0, right.p0, atol=1e-14)
    assert left.symmetric


def test_pair_combine_size_mismatch():
    with pytest.raises(ValueError):
        cn_pair_combine(bsc(0.1), oracles.random_symmetric_pmf(np.random.default_rng(0), 4))


def test_cn_update_dc2_identity():
    m = oracles.random_symmetric_pmf(np.random.default_rng(0), 8)
    assert cn_update_distribution(m, 2) == m
    with pytest.raises(ValueError):
        cn_update_distribution(m, 1)


@pytest.mark.parametrize("dc,k", [(dc, k) for dc in (2, 3, 4, 5) for k in (2, 4)])
def test_cn_update_matches_joint_sum(dc, k):
    rng = np.random.default_rng(10 * dc + k)
    for _ in range(3):
        msg = oracles.random_symmetric_pmf(rng, k, sort=False)
        out = cn_update_distribution(msg, dc)
        np.testing.assert_allclose(out.p0, oracles.cn_joint_sum(msg, dc), atol=1e-14)


def test_cn_update_three_bsc():
    e = 0.07
    out = cn_update_distribution(bsc(e), 3)
    assert out.p0[0] == pytest.approx(2 * e * (1 - e), abs=1e-15)


def test_vn_stage_perfect_channel():
    p_llr = ConditionalPmf.from_p0(np.array([0, 0, 0, 1.0]))
    p_msg = oracles.random_symmetric_pmf(np.random.default_rng(1), 4)
    _, out, mi = design_vn_stage(parse_tree("((mu mu) L)"), p_llr, p_msg, 4)
    assert mi == pytest.approx(1.0, abs=1e-12)


def test_vn_stage_uninformative():
    flat = ConditionalPmf.from_p0(np.full(4, 0.25))
    _, out, mi = design_vn_stage(parse_tree("((mu mu) L)"), flat, flat, 4)
    assert mi == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("k", [2, 4])
def test_star_tree_matches_exhaustive_symmetric_maps(seed, k):
    rng = np.random.default_rng(seed)
    p_llr = bsc(rng.uniform(0.01, 0.45))
    p_msg = bsc(rng.uniform(0.01, 0.45))
    luts, out, mi = design_vn_stage(parse_tree("(mu mu L)"), p_llr, p_msg, k)
    # joint over (mu, mu, L), first child most significant
    j0 = np.multiply.outer(np.multiply.outer(p_msg.p0, p_msg.p0), p_llr.p0).ravel()
    j1 = np.multiply.outer(np.multiply.outer(p_msg.p1, p_msg.p1), p_llr.p1).ravel()
    best = oracles.best_symmetric_map(j0, j1, k)
    assert mi == pytest.approx(best, abs=1e-12)
    assert oracles.partition_mi(j0, j1, luts[0].map, k) == pytest.approx(mi, abs=1e-12)
    np.testing.assert_array_equal(luts[0].map[::-1], k - 1 - luts[0].map)


def test_refinement_never_gains_exhaustive_mi():
    # ((mu mu) L) refines (mu mu L); every nested map is also a flat map
    rng = np.random.default_rng(3)
    for _ in range(5):
        p_llr, p_msg = bsc(rng.uniform(0.05, 0.4)), bsc(rng.uniform(0.05, 0.4))
        j0 = np.multiply.outer(np.multiply.outer(p_msg.p0, p_msg.p0), p_llr.p0).ravel()
        j1 = np.multiply.outer(np.multiply.outer(p_msg.p1, p_msg.p1), p_llr.p1).ravel()
        flat = oracles.best_any_map(j0, j1, 2)
        nested = 0.0
        for inner in itertools.product(range(2), repeat=4):
            q = Lut(np.array(inner), 2, degenerate=True)
            mid = apply_lut(ConditionalPmf(np.outer(p_msg.p0, p_msg.p0).ravel(),
                                           np.outer(p_msg.p1, p_msg.p1).ravel()), q)
            m0 = np.outer(mid.p0, p_llr.p0).ravel()
            m1 = np.outer(mid.p1, p_llr.p1).ravel()
            nested = max(nested, oracles.best_any_map(m0, m1, 2))
        assert nested <= flat + 1e-12
        _, _, greedy = design_vn_stage(parse_tree("((mu mu) L)"), p_llr, p_msg, 2)
        assert greedy <= nested + 1e-12


def test_decision_perfect_channel_is_hard_decision():
    p_llr = ConditionalPmf.from_p0(np.array([0, 0, 0, 1.0]))
    p_msg = oracles.random_symmetric_pmf(np.random.default_rng(2), 4)
    tree = parse_tree("(mu mu mu L)")
    luts, out = design_decision_lut(tree, p_llr, p_msg)
    assert out.p0[1] == pytest.approx(0.0, abs=1e-15)
    assert luts[-1].output_size == 2


@pytest.mark.parametrize("seed", range(5))
def test_decision_dv2_equals_map(seed):
    rng = np.random.default_rng(seed)
    p_llr = oracles.random_symmetric_pmf(rng, 4, sort=False)
    p_msg = oracles.random_symmetric_pmf(rng, 4, sort=False)
    luts, out = design_decision_lut(parse_tree("(mu mu L)"), p_llr, p_msg)
    j0 = np.multiply.outer(np.multiply.outer(p_msg.p0, p_msg.p0), p_llr.p0).ravel()
    j1 = np.multiply.outer(np.multiply.outer(p_msg.p1, p_msg.p1), p_llr.p1).ravel()
    map_error = 0.5 * np.minimum(j0, j1).sum()
    err0 = out.p0[1]
    err1 = out.p1[0]
    assert err0 == pytest.approx(err1, abs=1e-15)
    assert err0 == pytest.approx(map_error, abs=1e-12)
    # label 1 collects the inputs that favour bit 1
    decided_one = luts[-1].map == 1
    assert np.all(j1[decided_one] >= j0[decided_one] - 1e-15)


def t1(**kw):
    return DesignParams(dv=6, dc=32, **kw)


def test_run_de_below_threshold():
    res = run_de(0.3, t1(iterations=30))
    assert res.achieved and res.iterations_run <= 30
    assert all(b >= a - 1e-12 for a, b in zip(res.mi_trace, res.mi_trace[1:]))


def test_run_de_above_threshold():
    res = run_de(1.0, t1(iterations=30))
    assert not res.achieved
    assert max(res.mi_trace) < 0.9


def test_run_de_vacuous_epsilon():
    res = run_de(0.6, t1(iterations=10, epsilon=1.0))
    assert res.achieved and res.iterations_run == 1


def test_mi_strictly_increasing_below_threshold():
    # 0.9 of the T1 threshold (about 0.533)
    res = run_de(0.9 * 0.533, t1(iterations=100))
    trace = res.mi_trace
    assert res.achieved
    assert all(b > a for a, b in zip(trace, trace[1:]))


def test_de_pmfs_stay_symmetric():
    spec = design_decoder(4.0, 13 / 16, t1(iterations=8))
    for stage in spec.stages.values():
        for lut in stage.luts:
            n, k = lut.input_size, lut.output_size
            np.testing.assert_array_equal(lut.map[::-1], k - 1 - lut.map)
    assert all(0.0 <= v <= 1.0 for v in spec.mi_trace)


def test_threshold_single_probe_interval():
    res = find_threshold(t1(iterations=20), 0.4, 0.45, delta=0.05, check_endpoints=False)
    assert len(res.probes) == 1
    assert res.sigma == pytest.approx(0.425)


def test_threshold_interval_too_high():
    with pytest.raises(ThresholdIntervalError):
        find_threshold(t1(iterations=10), 0.9, 1.2, delta=0.1)


def test_threshold_at_upper_end():
    res = find_threshold(t1(iterations=20), 0.2, 0.3, delta=0.05)
    assert res.at_upper and res.sigma == 0.3


def test_threshold_bad_interval():
    with pytest.raises(ValueError):
        find_threshold(t1(), 0.5, 0.5)


def test_threshold_grows_with_resolution():
    # (3,6) ensemble: more message levels cannot lower the threshold
    coarse = find_threshold(DesignParams(3, 6, iterations=50, alphabet_schedule=4, tree="(mu mu L)"),
                            0.5, 1.0, delta=1e-3)
    fine = find_threshold(DesignParams(3, 6, iterations=50, alphabet_schedule=8, tree="(mu mu L)"),
                          0.5, 1.0, delta=1e-3)
    assert fine.sigma > coarse.sigma


def test_design_point_below_threshold():
    sigma = snr_to_sigma(4.0, 13 / 16)
    assert sigma == pytest.approx(0.495, abs=5e-4)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        design_decoder(4.0, 13 / 16, t1(iterations=8), threshold=0.533)
    with pytest.warns(UserWarning):
        design_decoder(2.5, 13 / 16, t1(iterations=3), threshold=0.533)


def test_design_reuse_pattern():
    spec = design_decoder(4.0, 13 / 16, t1(iterations=8, reuse=(1, 5)))
    assert sorted(spec.stages) == [1, 5]
    for i in (2, 3, 4):
        assert spec.stage_for(i) is spec.stages[1]
    for i in (6, 7, 8):
        assert spec.stage_for(i) is spec.stages[5]
    assert len(spec.mi_trace) == 8


def test_design_downsizing():
    sched = (8, 8, 8, 4, 4, 4, 2, 2)
    spec = design_decoder(4.0, 13 / 16, t1(iterations=8, alphabet_schedule=sched))
    assert spec.message_sizes() == list(sched)
    assert spec.decision.output_size == 2


def test_design_single_iteration():
    spec = design_decoder(4.0, 13 / 16, t1(iterations=1))
    assert list(spec.stages) == [1]
    assert spec.decision.output_size == 2


def test_switch_policy_moves_llr():
    spec = design_decoder(4.0, 13 / 16, t1(iterations=8, llr_policy="switch"))
    trees = [str(spec.stages[i].tree) for i in range(1, 9)]
    assert trees[0] == "((mu mu) (mu mu) mu L)"
    assert "(L mu)" in trees[-1]


def test_params_validation():
    with pytest.raises(ValueError):
        t1(iterations=4, reuse=(2, 3))
    with pytest.raises(ValueError):
        t1(iterations=3, alphabet_schedule=(4, 8, 8))
    with pytest.raises(ValueError):
        t1(iterations=4, alphabet_schedule=(8, 8, 4, 4), reuse=(1, 2))
    with pytest.raises(ValueError):
        t1(iterations=2, alphabet_schedule=(8, 7))
    with pytest.raises(ValueError):
        DesignParams(dv=4, dc=32)  # tree has 5 message leaves
    with pytest.raises(ValueError):
        t1(llr_policy="sometimes")
