from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from complex_core import f_vector
from random_models import (
    Const,
    InconclusiveStatisticError,
    MultiParameter,
    ParamFunctionError,
    Power,
    Q,
    Step,
    clique_parameter,
    colex_rank,
    derive_params,
    expected_f_vector,
    flag_parameter,
    flag_preset,
    growth_exponent,
    link_distribution_probe,
    link_edge_probe,
    lm_parameter,
    lm_preset,
    parse_param_functions,
    phi_psi,
    r_inverse,
    sample_process,
    sample_static,
    trial_seeds,
)


def _edge_triangle_counts(X):
    fv = f_vector(X)
    return [fv.f(1), fv.f(2)]


class TestDerivedParams:
    def test_linial_meshulam(self):
        derived = derive_params(lm_parameter(5, 2, 0.5))
        assert derived.q == (1.0, 1.0, 0.5, 0.0, 0.0)
        assert derived.r_k(-1) == 1.0
        assert derived.r_k(0) == 1.0
        assert derived.r_k(1) == 0.5
        assert derived.r_k(2) == 0.0

    def test_clique(self):
        p = 0.3
        derived = derive_params(clique_parameter(6, p))
        for k in range(6):
            assert derived.q_k(k) == pytest.approx(p ** math.comb(k + 1, 2))
        for k in range(-1, 5):
            assert derived.r_k(k) == pytest.approx(p ** (k + 1))

    def test_all_ones(self):
        derived = derive_params(flag_parameter(4, 1, 1.0))
        assert derived.q == (1.0,) * 4
        assert derived.q_k(-1) == 1.0
        assert derived.q_k(10) == 0.0

    def test_zero_over_zero(self):
        derived = derive_params(lm_parameter(4, 1, 0.0))
        assert derived.r_k(1) == 0.0

    def test_expected_f_vector(self):
        assert expected_f_vector(5, lm_parameter(5, 2, 0.5)) == [5, 10, 5, 0, 0]

    def test_out_of_range(self):
        with pytest.raises(ParamFunctionError):
            lm_parameter(4, 1, 1.5)


class TestSampling:
    def test_complete_graph(self):
        X = sample_static(5, lm_parameter(5, 1, 1.0), seed=1)
        assert f_vector(X).as_list() == [5, 10]

    def test_full_simplex(self):
        X = sample_static(5, flag_parameter(5, 1, 1.0), seed=1)
        assert f_vector(X).as_list() == [5, 10, 10, 5, 1]

    def test_max_dim(self):
        X = sample_static(5, flag_parameter(5, 1, 1.0), seed=1, max_dim=2)
        assert f_vector(X).as_list() == [5, 10, 10]

    def test_reproducible(self):
        p = clique_parameter(9, 0.5)
        assert sample_static(9, p, seed=42) == sample_static(9, p, seed=42)

    def test_seeds_differ(self):
        p = clique_parameter(9, 0.5)
        complexes = {sample_static(9, p, seed=s) for s in trial_seeds(3, 10)}
        assert len(complexes) > 1

    def test_trial_seeds_deterministic(self):
        assert trial_seeds(7, 5) == trial_seeds(7, 5)
        assert len(set(trial_seeds(7, 50))) == 50

    def test_expected_triangles(self):
        n, p, trials = 6, 0.5, 600
        counts = np.array([
            f_vector(sample_static(n, clique_parameter(n, p), seed=s, max_dim=2)).f(2)
            for s in trial_seeds(11, trials)
        ])
        expected = expected_f_vector(n, clique_parameter(n, p))[2]
        assert expected == pytest.approx(2.5)
        assert abs(counts.mean() - expected) < 4 * counts.std(ddof=1) / math.sqrt(trials)

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "n, params, k",
        [
            (6, clique_parameter(6, 0.5), 2),
            (8, clique_parameter(8, 0.3), 1),
            (7, lm_parameter(7, 2, 0.3), 2),
            (6, flag_parameter(6, 2, 0.5), 3),
            (6, MultiParameter((1.0, 0.7, 0.8, 0.9, 0.0, 0.0)), 2),
        ],
    )
    def test_expected_face_counts(self, n, params, k):
        trials = 2000
        counts = np.array([
            f_vector(sample_static(n, params, seed=s, max_dim=k)).f(k)
            for s in trial_seeds(100 + n + k, trials)
        ])
        expected = expected_f_vector(n, params)[k]
        assert abs(counts.mean() - expected) < 4 * counts.std(ddof=1) / math.sqrt(trials)

    def test_colex_rank(self):
        assert colex_rank(np.array([[0, 1], [0, 2], [1, 2], [0, 3]])).tolist() == [0, 1, 2, 3]
        assert colex_rank(np.array([[0, 1, 2], [0, 1, 3], [2, 3, 4]])).tolist() == [0, 1, 9]


class TestProcess:
    def test_weights_monotone(self):
        proc = sample_process(7, parse_param_functions("clique"), k_max=2, seed=5)
        for i in range(1, len(proc.weights)):
            facets = proc.weights[i - 1][proc.facet_ranks(i)]
            assert np.all(proc.weights[i] >= facets.max(axis=1))

    def test_flag_triangle_weight(self):
        proc = sample_process(6, flag_preset(1), k_max=1, seed=9)
        assert not proc.weights[0].any()
        assert np.allclose(proc.weights[2], proc.weights[1][proc.facet_ranks(2)].max(axis=1))

    def test_top_dimension(self):
        assert sample_process(4, lm_preset(1), k_max=0, seed=1).max_dim == 1
        assert sample_process(3, lm_preset(2), k_max=5, seed=1).max_dim == 2

    def test_snapshot_is_filtration(self):
        proc = sample_process(6, lm_preset(1), k_max=0, seed=2)
        early, late = proc.snapshot(0.3), proc.snapshot(0.7)
        assert set(early) <= set(late)
        assert f_vector(proc.snapshot(1.0)).as_list() == [6, 15]

    @pytest.mark.slow
    def test_snapshot_matches_static_law(self):
        n, t, trials = 7, 0.4, 2000
        proc_f = np.array([
            _edge_triangle_counts(sample_process(n, flag_preset(1), k_max=1, seed=s).snapshot(t))
            for s in trial_seeds(21, trials)
        ])
        static_f = np.array([
            _edge_triangle_counts(sample_static(n, clique_parameter(n, t), seed=s, max_dim=2))
            for s in trial_seeds(22, trials)
        ])
        # edge and triangle counts, tails pooled
        for col, (lo, hi) in enumerate([(4, 13), (0, 6)]):
            table = np.array([
                np.bincount(np.clip(sample[:, col], lo, hi) - lo, minlength=hi - lo + 1)
                for sample in (proc_f, static_f)
            ])
            assert stats.chi2_contingency(table).pvalue > 0.001

    def test_same_seed_same_weights(self):
        a = sample_process(6, lm_preset(2), k_max=1, seed=4)
        b = sample_process(6, lm_preset(2), k_max=1, seed=4)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)


class TestParamFunctions:
    def test_primitives(self):
        assert Const(0.4)(10.0) == 0.4
        assert Power(2.0)(0.5) == 0.25
        assert Power(2.0)(3.0) == 1.0
        assert Step(0.5)(0.4) == 0.0 and Step(0.5)(0.5) == 1.0

    def test_inverse(self):
        U = np.array([0.1, 0.9])
        assert Const(0.5).inverse(U).tolist() == [0.0, math.inf]
        assert np.allclose(Power(2.0).inverse(U), np.sqrt(U))
        assert Step(1.0).inverse(U).tolist() == [1.0, 1.0]

    @pytest.mark.parametrize("text", ["lm(x)", "lm(0)", "flag(-1)", "nonsense", '{"name": "a"}',
                                      '{"components": [{"type": "cubic"}]}',
                                      '{"components": [{"type": "const", "c": 2}]}'])
    def test_parse_errors(self, text):
        with pytest.raises(ParamFunctionError):
            parse_param_functions(text)

    def test_parse_json(self):
        pf = parse_param_functions('{"name": "mine", "components": [{"type": "const", "c": 1}, {"type": "power", "a": 2}]}')
        assert pf.name == "mine"
        assert pf.at(0.5, 3).values == (1.0, 0.25, 0.0)

    def test_presets(self):
        assert parse_param_functions("er").name == "lm(1)"
        assert parse_param_functions("clique").name == "flag(1)"
        assert lm_preset(2).at(0.5, 5).values == (1.0, 1.0, 0.5, 0.0, 0.0)

    def test_q_integral(self):
        assert Q(flag_preset(1), 1, 0.5) == pytest.approx(0.125)
        assert Q(lm_preset(1), 1, 1.0) == pytest.approx(0.5)
        assert math.isinf(Q(lm_preset(1), 1, math.inf))

    def test_r_inverse(self):
        assert r_inverse(flag_preset(1), 1, 0.25) == pytest.approx(0.5, abs=1e-12)
        assert r_inverse(lm_preset(1), -1, 0.5) == 0.0


class TestPhiPsi:
    @pytest.mark.parametrize("d", [1, 2, 3])
    @pytest.mark.parametrize("u", [0.1, 0.01])
    def test_linial_meshulam_values(self, d, u):
        pf = lm_preset(d)
        phi, psi = phi_psi(pf, d - 1, u)
        assert phi == pytest.approx(u, abs=1e-9)
        assert psi == pytest.approx(0.0, abs=1e-9)
        phi, psi = phi_psi(pf, d, u)
        assert phi == pytest.approx(0.5, abs=1e-9)
        assert psi == pytest.approx(u * u / 2, abs=1e-9)

    def test_u_range(self):
        with pytest.raises(ParamFunctionError):
            phi_psi(lm_preset(1), 0, 1.0)

    def test_clique_is_polynomial(self):
        growth = growth_exponent(flag_preset(1), 1)
        assert growth.regime == "polynomial"
        assert growth.a_phi == pytest.approx(1.0, abs=1e-6)
        assert growth.a_psi == pytest.approx(2.0, abs=1e-6)
        assert growth.predicted == pytest.approx(1.0, abs=1e-6)

    def test_vertex_lifetimes_vanish_below_top(self):
        growth = growth_exponent(lm_preset(2), 0)
        assert growth.regime == "zero"
        assert growth.predicted is None


class TestLinkProbes:
    def test_full_complex(self):
        n, k = 6, 2
        report = link_distribution_probe(n, flag_parameter(n, 1, 1.0), k, trials=40, seed=1)
        assert not report.inconclusive
        assert report.p_value == 1.0
        assert report.detail["mean_N"] == n - k

    def test_rare_conditioning_is_inconclusive(self):
        report = link_distribution_probe(6, clique_parameter(6, 0.05), 2, trials=40, seed=1)
        assert report.inconclusive
        assert report.successes < 30
        assert math.isnan(report.p_value)
        with pytest.raises(InconclusiveStatisticError):
            report.require_conclusive()

    def test_edge_probe_on_full_complex(self):
        report = link_edge_probe(6, flag_parameter(6, 1, 1.0), 2, trials=40, seed=1)
        assert not report.inconclusive
        assert report.successes == 40
        assert report.p_value == 1.0
        assert report.detail["groups"] == 1

    def test_edge_probe_rare_conditioning(self):
        report = link_edge_probe(6, clique_parameter(6, 0.05), 2, trials=40, seed=1)
        assert report.inconclusive

    @pytest.mark.slow
    def test_clique_link_is_binomial(self):
        report = link_distribution_probe(8, clique_parameter(8, 0.7), 2, trials=3000, seed=17)
        assert not report.inconclusive
        assert report.p_value > 0.001
        assert report.detail["mean_N"] == pytest.approx(report.detail["expected_mean"], rel=0.05)
