import json
import math

import pytest

import regreadout as rr


def test_version():
    assert rr.__version__.count(".") == 2


def test_register_basics():
    assert rr.hamming_distance(0b00, 0b11) == 2
    assert rr.z_eigenvalue(2, 2, 0b01, shifted=True) == -2.0
    p = rr.cycle_3124()
    assert p.image == [2, 0, 1, 3]
    assert rr.compose(rr.compose(p, p), p).is_identity()
    assert rr.compose(rr.invert(p), p) == rr.Permutation.identity(4)
    s = rr.apply_permutation(rr.DiagonalState(2, [0.4, 0.3, 0.2, 0.1]), p)
    assert s.probs == pytest.approx([0.3, 0.2, 0.4, 0.1])


def test_h_order_example():
    s = rr.DiagonalState(2, [0.7, 0.15, 0.1, 0.05])
    ordered = rr.apply_permutation(s, rr.h_order(s))
    assert ordered.probs == pytest.approx([0.7, 0.1, 0.05, 0.15])


def test_exact_step_logistic():
    params = rr.SimulationParams(n=1, dt=1e-4)
    out = rr.exact_step(rr.DiagonalState.maximally_mixed(1), rr.StepIncrements([0.0], [0.1]), params)
    assert out.probs[0] == pytest.approx(1 / (1 + math.exp(-4 * math.sqrt(2) * 0.1)), rel=1e-12)


def test_invalid_state_raises():
    with pytest.raises(ValueError):
        rr.DiagonalState(1, [0.7, 0.7])


def test_theory_values():
    assert rr.mean_time_nofb(1e-6) == pytest.approx(math.log(1e6) / 16)
    lo, hi = rr.speedup_bounds_rp(2)
    assert (lo, hi) == pytest.approx((8 / 9, 4 / 3))
    report = json.loads(rr.verify_identities([4, 8]))
    assert report["pass"]
    assert report["identities"][0]["square_sum"]["value"] == 48
    assert report["identities"][0]["cross_sum"]["value"] == 16


def test_trajectory_retrodiction():
    params = rr.SimulationParams(n=2, max_time=2.0)
    start = rr.DiagonalState.basis_state(2, 2)
    for policy in ("none", "h_ordering", "random_permutation", "fixed_cycle"):
        r = rr.simulate_trajectory(params, policy, initial_state=start, seed=7, index=3)
        assert r.retrodicted_index() == 2


def test_small_ensemble_is_reproducible():
    params = rr.SimulationParams(n=1)
    a = rr.run_ensemble(params, "none", count=200, seed=11)
    b = rr.run_ensemble(params, "none", count=200, seed=11, threads=1)
    assert a.first_passage_csv() == b.first_passage_csv()
    assert a.trajectories_csv().splitlines()[0] == "t,mean_ln_delta,stderr"
    same = rr.asymptotic_speedup(a, a)
    assert same.value == 1.0
    rp = rr.run_ensemble(rr.SimulationParams(n=2), "random_permutation", count=200, seed=11)
    nc = rr.run_ensemble(rr.SimulationParams(n=2), "none", count=200, seed=11)
    assert 0.8 < rr.asymptotic_speedup(nc, rp).value < 2.0
