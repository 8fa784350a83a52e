import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infopath.belief import (
    Belief,
    InconsistentReport,
    SensorModel,
    alert_likelihood,
    as_pmf,
    bayes_update,
    belief_entropy,
    binary_entropy,
    conditional_entropy,
    entropy,
    joint_alert_table,
    mutual_information,
    predictive_report_pmf,
    product_joint,
    uniform_belief,
)

from _builders import bits_of, grid_ts, h_bits, piecewise_f1

MU0, LAM, R = 0.9, 0.01, 0.01


def one_cell():
    return SensorModel(MU0, LAM, R, (((0, 0.0),),))


def model_with(nbs, mu0=MU0, lam=LAM, r=R):
    return SensorModel(mu0, lam, r, tuple(tuple(nb) for nb in nbs))


def random_model(rng, n):
    ts = grid_ts(n, 1, rng=rng) if n > 1 else None
    if ts is None:
        return one_cell()
    return SensorModel.from_transition_system(ts, MU0, float(rng.uniform(0, 0.3)), R)


def random_joint(rng, n):
    p = rng.random(1 << n) ** 3
    return Belief("joint", p / p.sum(), n)


# --- information measures --------------------------------------------------

def test_entropy_examples():
    assert entropy([0.25] * 4) == pytest.approx(2.0, abs=1e-12)
    assert entropy([0, 1, 0]) == 0.0
    p = 0.08
    closed = -p * math.log2(p) - (1 - p) * math.log2(1 - p)
    assert entropy([p, 1 - p]) == pytest.approx(closed, abs=1e-12)
    assert entropy([p, 1 - p]) == pytest.approx(0.402179, abs=1e-6)
    assert float(binary_entropy(0.08)) == pytest.approx(closed, abs=1e-12)


def test_pmf_validation():
    with pytest.raises(ValueError):
        as_pmf([0.5, 0.6])
    with pytest.raises(ValueError):
        as_pmf([1.2, -0.2])


def direct_conditional(joint):
    py = joint.sum(axis=0)
    total = 0.0
    for x in range(joint.shape[0]):
        for y in range(joint.shape[1]):
            if joint[x, y] > 0:
                total -= joint[x, y] * math.log2(joint[x, y] / py[y])
    return total


def test_conditional_entropy_examples():
    px, py = np.array([0.2, 0.3, 0.5]), np.array([0.6, 0.4])
    indep = np.outer(px, py)
    assert conditional_entropy(indep) == pytest.approx(entropy(px), abs=1e-12)
    assert conditional_entropy(np.diag([0.3, 0.7])) == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(0)
    for _ in range(20):
        j = rng.random((3, 3))
        j /= j.sum()
        assert conditional_entropy(j) == pytest.approx(direct_conditional(j), abs=1e-12)


def test_mutual_information_examples():
    assert mutual_information(np.outer([0.5, 0.5], [0.1, 0.9])) == pytest.approx(0.0, abs=1e-12)
    for n in (2, 3, 5):
        assert mutual_information(np.eye(n) / n) == pytest.approx(math.log2(n), abs=1e-12)
    rng = np.random.default_rng(1)
    for _ in range(50):
        j = rng.random((4, 3))
        j /= j.sum()
        hx = entropy(j.sum(axis=1))
        assert mutual_information(j) == pytest.approx(hx - conditional_entropy(j), abs=1e-9)
        assert -1e-12 <= conditional_entropy(j) <= hx + 1e-12


# --- sensor model -------------------------------------------------------------

def test_alert_likelihood_examples():
    m = model_with([[(0, 0.0), (1, 0.0)], [(1, 0.0), (0, 0.0)]])
    assert alert_likelihood(m, [0, 0], 0, 1) == pytest.approx(0.01)
    assert alert_likelihood(m, [1, 0], 0, 1) == pytest.approx(0.9)
    assert alert_likelihood(m, [1, 1], 0, 1) == pytest.approx(0.99)
    assert alert_likelihood(m, [1, 1], 0, 0) == pytest.approx(0.01)


def test_alert_likelihood_matches_piecewise_rule_on_bits():
    rng = np.random.default_rng(3)
    m = SensorModel.from_transition_system(grid_ts(3, 3, rng=rng), 0.9, 0.2, 0.05)
    for q in range(9):
        table = joint_alert_table(m, q, 9)
        for k in rng.integers(0, 512, 40):
            s = bits_of(int(k), 9)
            expect = piecewise_f1(m, s, q)
            assert alert_likelihood(m, s, q, 1) == pytest.approx(expect, abs=1e-12)
            assert table[k] == pytest.approx(expect, abs=1e-12)


def test_detection_decays_with_distance():
    m = model_with([[(0, 0.0), (1, 5.0)], [(1, 0.0), (0, 5.0)]], lam=0.1)
    cells, mu = m.detection(0)
    assert list(cells) == [0, 1]
    assert mu == pytest.approx([0.9, 0.9 * math.exp(-0.5)])


def test_sensor_model_validation_and_json():
    with pytest.raises(ValueError):
        model_with([[(0, 0.0)]], mu0=1.5)
    with pytest.raises(ValueError):
        model_with([[(0, 0.0)]], lam=-1)
    with pytest.raises(ValueError, match="observe itself"):
        model_with([[(1, 0.0)], [(1, 0.0)]])
    m = SensorModel.from_transition_system(grid_ts(2, 2, rng=np.random.default_rng(0)))
    assert SensorModel.from_json(m.to_json()) == m


# --- Bayes filter ------------------------------------------------------------------

def test_one_cell_posterior():
    b = uniform_belief(1, "factored")
    post = bayes_update(b, one_cell(), 0, 1)
    expect = 0.9 * 0.5 / (0.9 * 0.5 + 0.01 * 0.5)
    assert post.probs[0] == pytest.approx(expect, abs=1e-12)
    assert expect == pytest.approx(0.98901, abs=1e-5)
    joint = bayes_update(uniform_belief(1, "joint"), one_cell(), 0, 1)
    assert joint.probs[1] == pytest.approx(expect, abs=1e-12)


def test_uninformative_report_leaves_belief_unchanged():
    # mu0 == r makes the likelihood constant in s
    m = SensorModel(0.3, 0.0, 0.3, (((0, 0.0),),))
    for mode in ("factored", "joint"):
        b = uniform_belief(1, mode, 0.37)
        for y in (0, 1):
            assert np.allclose(bayes_update(b, m, 0, y).probs, b.probs, atol=1e-12)


def brute_posterior(joint, model, q, y):
    n = joint.n_cells
    post = np.array([joint.probs[k] * (piecewise_f1(model, bits_of(k, n), q) if y
                                       else 1 - piecewise_f1(model, bits_of(k, n), q))
                     for k in range(1 << n)])
    return post / post.sum()


def test_joint_update_matches_brute_force():
    rng = np.random.default_rng(4)
    for n in (2, 3):
        for _ in range(20):
            m = random_model(rng, n)
            b = random_joint(rng, n)
            q = int(rng.integers(0, n))
            for y in (0, 1):
                post = bayes_update(b, m, q, y)
                assert np.allclose(post.probs, brute_posterior(b, m, q, y), atol=1e-12)
                assert post.probs.sum() == pytest.approx(1.0, abs=1e-9)


def test_inconsistent_report():
    m = SensorModel(1.0, 0.0, 0.0, (((0, 0.0),),))
    certain = Belief("joint", np.array([1.0, 0.0]), 1)
    with pytest.raises(InconsistentReport, match="inconsistent report"):
        bayes_update(certain, m, 0, 1)
    with pytest.raises(InconsistentReport):
        bayes_update(Belief("factored", np.array([0.0]), 1), m, 0, 1)


def test_factored_and_joint_agree_on_single_cell_neighborhoods():
    rng = np.random.default_rng(5)
    n = 3
    m = model_with([[(q, 0.0)] for q in range(n)], mu0=0.8, r=0.05)
    for _ in range(30):
        marg = rng.uniform(0.05, 0.95, n)
        fb = Belief("factored", marg, n)
        jb = product_joint(marg)
        for q in range(n):
            assert predictive_report_pmf(fb, m, q) == pytest.approx(predictive_report_pmf(jb, m, q), abs=1e-12)
            for y in (0, 1):
                f = bayes_update(fb, m, q, y)
                j = bayes_update(jb, m, q, y)
                assert np.allclose(f.marginals(), j.marginals(), atol=1e-9)


def test_factored_marginals_are_clamped():
    m = SensorModel(1.0, 0.0, 0.0, (((0, 0.0),),))
    post = bayes_update(Belief("factored", np.array([0.5]), 1), m, 0, 1)
    assert post.probs[0] == 1 - 1e-12


def test_factored_exact_for_product_prior_one_step():
    # one update from a product prior: factored marginals equal the exact joint marginals
    rng = np.random.default_rng(6)
    m = SensorModel.from_transition_system(grid_ts(3, 1, rng=rng), 0.9, 0.05, 0.01)
    marg = np.array([0.3, 0.6, 0.45])
    for q in range(3):
        for y in (0, 1):
            f = bayes_update(Belief("factored", marg, 3), m, q, y)
            j = bayes_update(product_joint(marg), m, q, y)
            assert np.allclose(f.marginals(), j.marginals(), atol=1e-9)


# --- entropy of beliefs and predictive pmf ------------------------------------------

def test_belief_entropy_examples():
    assert belief_entropy(uniform_belief(25)) == pytest.approx(25.0)
    assert belief_entropy(Belief("joint", np.eye(8)[3], 3)) == 0.0
    marg = [0.2, 0.7, 0.5]
    assert belief_entropy(product_joint(marg)) == pytest.approx(belief_entropy(Belief("factored", marg, 3)), abs=1e-9)


def test_predictive_examples():
    m = one_cell()
    zero = Belief("factored", np.array([0.0]), 1)
    assert predictive_report_pmf(zero, m, 0) == pytest.approx([0.99, 0.01])
    sure = Belief("factored", np.array([1.0]), 1)
    assert predictive_report_pmf(sure, m, 0)[1] == pytest.approx(0.9)
    rng = np.random.default_rng(7)
    m2 = random_model(rng, 2)
    b = random_joint(rng, 2)
    for q in range(2):
        p1 = sum(b.probs[k] * piecewise_f1(m2, bits_of(k, 2), q) for k in range(4))
        assert predictive_report_pmf(b, m2, q) == pytest.approx([1 - p1, p1], abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_joint_information_gain_is_nonnegative(seed, n):
    rng = np.random.default_rng(seed)
    m = random_model(rng, n)
    b = random_joint(rng, n)
    q = int(rng.integers(0, n))
    pred = predictive_report_pmf(b, m, q)
    expected = sum(pred[y] * belief_entropy(bayes_update(b, m, q, y)) for y in (0, 1) if pred[y] > 0)
    assert expected <= belief_entropy(b) + 1e-12
    assert 0 <= belief_entropy(b) <= n + 1e-12


def test_belief_construction_and_json():
    with pytest.raises(ValueError):
        uniform_belief(13, "joint")
    with pytest.raises(ValueError):
        Belief("joint", np.ones(3) / 3, 2)
    with pytest.raises(ValueError):
        Belief("factored", np.array([1.5]), 1)
    with pytest.raises(ValueError):
        Belief("weird", np.array([0.5]), 1)
    b = uniform_belief(3, "joint", 0.2)
    assert np.allclose(b.marginals(), 0.2)
    back = Belief.from_json(b.to_json())
    assert back.mode == "joint" and np.array_equal(back.probs, b.probs)
    with pytest.raises(ValueError):
        b.probs[0] = 1.0  # read-only
    assert h_bits(b.probs) == pytest.approx(belief_entropy(b))
