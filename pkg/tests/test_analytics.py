import math

import numpy as np
import pytest

from hyperboot.analytics import (
    SUBCRITICAL,
    SUPERCRITICAL,
    BranchingSpec,
    branching_spec,
    empirical_critical_size,
    fixed_point_classify,
    increment_diagnostics,
    infection_multiplicity,
    simulate_total_progeny,
    trajectory_closed_form,
    trajectory_incremental,
)
from hyperboot.model import ModelParams, critical_size

P_GRAPH = ModelParams(n=10**6, k=2, r=2, p=1e-4)  # b = 50 exactly


class TestTrajectories:
    def test_zero_start_is_fixed(self):
        for fn in (trajectory_closed_form, trajectory_incremental):
            traj = fn(P_GRAPH, 0.0, t_max=20)
            assert np.all(traj.a[:, 1] == 0.0)
            assert np.all(traj.a[:, 2] == 0.0)
            assert np.all(traj.deltas == 0.0)
            assert traj.cutoff_round is None

    def test_single_step_hand_values(self):
        # n=1000, k=2, r=2, p=1e-3, a=10:
        #   a_1(1) = a n p = 10,  a_2(1) = a^2/2 n p^2 + a = 10.05
        params = ModelParams(n=1000, k=2, r=2, p=1e-3)
        for fn in (trajectory_closed_form, trajectory_incremental):
            traj = fn(params, 10.0, t_max=3)
            assert traj.a[1, 0] == 1000.0
            assert traj.a[1, 1] == pytest.approx(10.0, abs=1e-12)
            assert traj.a[1, 2] == pytest.approx(10.05, abs=1e-12)

    def test_variants_agree_exactly_at_first_step(self):
        params = ModelParams(n=10**5, k=3, r=3, p=1e-9)
        t_closed = trajectory_closed_form(params, 30.0, t_max=1)
        t_inc = trajectory_incremental(params, 30.0, t_max=1)
        assert np.array_equal(t_closed.a[1], t_inc.a[1])

    def test_variants_agree_before_cutoff_subcritical(self):
        b = critical_size(P_GRAPH).value
        t_closed = trajectory_closed_form(P_GRAPH, 0.5 * b, t_max=300)
        t_inc = trajectory_incremental(P_GRAPH, 0.5 * b, t_max=300)
        rows = min(t_closed.a.shape[0], t_inc.a.shape[0])
        gap = np.max(np.abs(t_closed.a[:rows, 2] - t_inc.a[:rows, 2]))
        assert gap <= 0.05 * b

    def test_supercritical_reaches_cutoff(self):
        # a = 1.5 b: the quadratic map has no real fixed point, so the
        # infected class passes the saturation size 1/p = 1e4 in finitely
        # many rounds
        b = critical_size(P_GRAPH).value
        traj = trajectory_closed_form(P_GRAPH, 1.5 * b, t_max=400)
        assert traj.cutoff_round is not None
        assert traj.a[-1, 2] >= 1.0 / P_GRAPH.p

    def test_deltas_nonincreasing_when_subcritical(self):
        b = critical_size(P_GRAPH).value
        traj = trajectory_closed_form(P_GRAPH, 0.5 * b, t_max=200)
        assert traj.cutoff_round is None
        assert np.all(np.diff(traj.deltas) <= 1e-9)

    def test_csv_dump(self):
        traj = trajectory_closed_form(ModelParams(n=1000, k=2, r=2, p=1e-3), 10.0, t_max=3)
        text = traj.to_csv()
        lines = text.strip().split("\n")
        assert lines[0].startswith("# trajectory variant=closed_form")
        assert lines[1] == "t,a_0,a_1,a_2,delta"
        assert lines[2].startswith("0,")
        # one row per time step, header comment + column row on top
        assert len(lines) == 2 + traj.a.shape[0]


class TestFixedPointClassify:
    def test_zero_is_subcritical_at_zero(self):
        cls = fixed_point_classify(P_GRAPH, 0.0)
        assert cls.label == SUBCRITICAL
        assert cls.fixed_point == 0.0
        assert cls.divergence_round is None

    def test_subcritical_quadratic_root(self):
        # x = a + 0.005 x^2 with a = 25: smallest root (1 - sqrt(1/2)) / 0.01
        cls = fixed_point_classify(P_GRAPH, 25.0)
        assert cls.label == SUBCRITICAL
        root = (1.0 - math.sqrt(0.5)) / 0.01
        assert cls.fixed_point == pytest.approx(root, rel=1e-7)

    def test_supercritical_when_discriminant_negative(self):
        # a = 75: 1 - 4 * 0.005 * 75 < 0, no real fixed point
        cls = fixed_point_classify(P_GRAPH, 75.0)
        assert cls.label == SUPERCRITICAL
        assert cls.divergence_round is not None
        assert cls.fixed_point is None
        assert cls.doubling_onset is not None

    def test_json_keys(self):
        import json

        obj = json.loads(fixed_point_classify(P_GRAPH, 25.0).to_json())
        assert set(obj) == {"label", "a_star", "divergence_round", "t2"}
        assert obj["label"] == "subcritical"

    def test_fixed_point_bounded_by_derivative_one_point(self):
        # any subcritical fixed point sits below x*, where the map's slope
        # hits one; x* = r/(r-1) * b for r > 2 and 2 (2k-3) b for r = 2
        for params in (
            P_GRAPH,
            ModelParams(n=10**6, k=2, r=3, p=1e-3),
            ModelParams(n=10**6, k=3, r=2, p=1e-10),
            ModelParams(n=10**6, k=2, r=4, p=3e-3),
        ):
            b = critical_size(params).value
            r = params.r
            mult = infection_multiplicity(params.k, r)
            x_star = (r / (r - 1)) * b * mult
            for frac in (0.2, 0.5, 0.8):
                cls = fixed_point_classify(params, frac * mult * b)
                assert cls.label == SUBCRITICAL
                assert cls.fixed_point <= x_star * (1 + 1e-9)


class TestEmpiricalCriticalSize:
    def test_graph_r2(self):
        est = empirical_critical_size(P_GRAPH)
        assert abs(est.raw - 50.0) <= 0.5
        assert est.corrected == est.raw

    def test_graph_r3(self):
        est = empirical_critical_size(ModelParams(n=10**6, k=2, r=3, p=1e-3))
        assert abs(est.raw - 29.814239699997202) <= 0.3

    def test_matches_formula_on_p_grid_k2(self):
        windows = {2: (2e-5, 8e-5), 3: (5e-5, 8e-4), 4: (1e-4, 2.5e-3)}
        for r, (lo, hi) in windows.items():
            for p in np.geomspace(lo, hi, 5):
                params = ModelParams(n=10**6, k=2, r=r, p=float(p))
                assert params.regime_ok, (r, p)
                b = critical_size(params).value
                est = empirical_critical_size(params)
                assert abs(est.raw - b) / b <= 0.01

    def test_r2_multiplicity_factor_for_hypergraphs(self):
        for k, p in ((3, 3e-11), (4, 2e-17)):
            params = ModelParams(n=10**6, k=k, r=2, p=p)
            b = critical_size(params).value
            est = empirical_critical_size(params)
            assert abs(est.raw - (2 * k - 3) * b) / ((2 * k - 3) * b) <= 0.01
            assert abs(est.corrected - b) / b <= 0.01


class TestIncrementDiagnostics:
    def test_zero_start_tau_zero(self):
        traj = trajectory_closed_form(P_GRAPH, 0.0, t_max=20)
        diag = increment_diagnostics(traj, 50.0, eta=0.01)
        assert diag.tau == 0
        assert diag.doubling_onset is None

    def test_tau_independent_of_n(self):
        # rescale n tenfold holding n p^2 fixed: identical dynamics, same tau
        b1 = critical_size(P_GRAPH).value
        t1 = trajectory_closed_form(P_GRAPH, 0.5 * b1, t_max=200)
        d1 = increment_diagnostics(t1, b1, eta=0.01)
        n2 = 10**7
        p2 = math.sqrt(P_GRAPH.n * P_GRAPH.p**2 / n2)
        params2 = ModelParams(n=n2, k=2, r=2, p=p2)
        b2 = critical_size(params2).value
        t2 = trajectory_closed_form(params2, 0.5 * b2, t_max=200)
        d2 = increment_diagnostics(t2, b2, eta=0.01)
        assert d1.tau is not None
        assert d1.tau == d2.tau

    def test_supercritical_doubling_onset(self):
        b = critical_size(P_GRAPH).value
        traj = trajectory_closed_form(P_GRAPH, 1.5 * b, t_max=400)
        diag = increment_diagnostics(traj, b, eta=0.01)
        assert diag.doubling_onset is not None
        tail = traj.deltas[diag.doubling_onset :]
        assert np.all(tail[1:] / tail[:-1] >= 2.0)


class TestInfectionMultiplicity:
    @pytest.mark.parametrize("k,r,expected", [(2, 2, 1), (5, 2, 7), (5, 3, 1), (3, 2, 3)])
    def test_values(self, k, r, expected):
        assert infection_multiplicity(k, r) == expected

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            infection_multiplicity(1, 2)
        with pytest.raises(ValueError):
            infection_multiplicity(2, 1)


class TestBranchingSpec:
    def test_all_zero_class_sizes(self):
        spec = branching_spec(P_GRAPH, [0.0, 0.0, 0.0], 0.1, roots=3)
        assert spec.mean_offspring == 0.0
        assert spec.subcritical

    def test_success_prob_reduces_to_rate_power(self):
        # j = 1 term: q_1 = rate * rate^{r-2} = rate^{r-1}
        params = ModelParams(n=10**6, k=2, r=3, p=1e-3)
        spec = branching_spec(params, [10**6, 4.0, 7.0, 2.0], 0.5)
        assert spec.success_probs[0] == pytest.approx(1e-6, rel=1e-12)
        # j = 2 term couples to the recently infected pool delta * a_r
        assert spec.success_probs[1] == pytest.approx(1e-3 * 0.5 * 2.0, rel=1e-12)

    def test_mean_offspring_hand_value(self):
        # k=2, r=2, p=1e-4, a_1 = 10, delta = 0.1: mu = 1.1 * 10 * 1e-4
        spec = branching_spec(P_GRAPH, [10**6, 10.0, 3.0], 0.1)
        assert spec.mean_offspring == pytest.approx(1.1e-3, rel=1e-12)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            branching_spec(P_GRAPH, [0.0, 1.0, 0.0], 0.0)
        with pytest.raises(ValueError):
            branching_spec(P_GRAPH, [0.0, -1.0, 0.0], 0.1)
        with pytest.raises(ValueError):
            branching_spec(P_GRAPH, [0.0, 1.0], 0.1)


class TestTotalProgeny:
    def test_zero_offspring_gives_roots_exactly(self):
        spec = branching_spec(P_GRAPH, [0.0, 0.0, 0.0], 0.1, roots=7)
        res = simulate_total_progeny(spec, 500, seed=1, thresholds=(7,))
        assert np.all(res.totals == 7)
        assert res.mean == 7.0
        assert res.exceed[7.0] == 0.0
        assert res.overflowed == 0

    def test_wald_identity_single_class(self):
        # 10 roots, offspring Bin(5, 0.1): mean total = 10 / (1 - 0.5) = 20
        spec = BranchingSpec(
            roots=10,
            class_sizes=np.array([0.0, 5.0, 0.0]),
            trials=np.array([5]),
            success_probs=np.array([0.1]),
            delta=0.1,
            mean_offspring=0.5,
        )
        res = simulate_total_progeny(spec, 4000, seed=123)
        assert abs(res.mean - 20.0) <= 3 * res.std_error

    def test_exceedance_tail_is_small(self):
        spec = BranchingSpec(
            roots=10,
            class_sizes=np.array([0.0, 5.0, 0.0]),
            trials=np.array([5]),
            success_probs=np.array([0.1]),
            delta=0.1,
            mean_offspring=0.5,
        )
        threshold = 5 * 10 / (1 - 0.5)
        res = simulate_total_progeny(spec, 4000, seed=123, thresholds=(threshold,))
        assert res.exceed[threshold] < 0.05

    def test_wald_identity_random_specs(self):
        rng = np.random.default_rng(606)
        for i in range(20):
            r = int(rng.integers(2, 4))
            mu = float(rng.uniform(0.1, 0.9))
            trials_n = rng.integers(1, 50, size=r - 1)
            weights = rng.random(r - 1)
            weights /= weights.sum()
            probs = mu * weights / trials_n
            spec = BranchingSpec(
                roots=int(rng.integers(1, 20)),
                class_sizes=np.zeros(r + 1),
                trials=trials_n.astype(np.int64),
                success_probs=probs,
                delta=0.1,
                mean_offspring=float((trials_n * probs).sum()),
            )
            res = simulate_total_progeny(spec, 3000, seed=1000 + i)
            wald = spec.roots / (1.0 - spec.mean_offspring)
            assert abs(res.mean - wald) <= 3 * res.std_error, (i, res.mean, wald)

    def test_rejects_supercritical(self):
        spec = BranchingSpec(
            roots=1,
            class_sizes=np.array([0.0, 20.0, 0.0]),
            trials=np.array([20]),
            success_probs=np.array([0.1]),
            delta=0.1,
            mean_offspring=2.0,
        )
        with pytest.raises(ValueError):
            simulate_total_progeny(spec, 10, seed=1)

    def test_node_cap_marks_overflow(self):
        # mu close to 1 with many roots: force the cap with a tiny budget
        spec = BranchingSpec(
            roots=100,
            class_sizes=np.array([0.0, 40.0, 0.0]),
            trials=np.array([40]),
            success_probs=np.array([0.02375]),
            delta=0.1,
            mean_offspring=0.95,
        )
        res = simulate_total_progeny(spec, 50, seed=5, node_cap=500)
        assert res.overflowed > 0
        assert np.all(res.totals[res.totals > 500] > 500)
