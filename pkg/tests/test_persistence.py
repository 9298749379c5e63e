from __future__ import annotations

import math

import numpy as np
import pytest

from persistence import (
    ColumnReducer,
    UnionFind,
    UnsupportedCaseError,
    alpha_lifetime_sum,
    betti_steps,
    integrate_steps,
    kruskal_lifetimes,
    lifetime_sum,
)
from random_models import flag_preset, lm_preset, parse_param_functions, sample_process, trial_seeds


def _mean_and_error(values):
    values = np.asarray(values, dtype=float)
    return values.mean(), 4 * values.std(ddof=1) / math.sqrt(values.size)


class TestRankStructures:
    def test_union_find(self):
        uf = UnionFind(4)
        assert uf.union(0, 1)
        assert uf.union(2, 3)
        assert not uf.union(1, 0)
        assert uf.union(1, 3)
        assert uf.merges == 3
        assert uf.find(0) == uf.find(2)

    def test_column_reducer_triangle(self):
        reducer = ColumnReducer()
        assert reducer.add({0: 1, 1: -1})
        assert reducer.add({1: 1, 2: -1})
        assert not reducer.add({0: 1, 2: -1})
        assert reducer.rank == 2

    def test_column_reducer_field(self):
        reducer = ColumnReducer(p=2)
        assert not reducer.add({0: 2})
        assert reducer.rank == 0


class TestErdosRenyiLifetimes:
    def test_two_vertices(self):
        proc = sample_process(2, lm_preset(1), k_max=0, seed=3)
        w = float(proc.weights[1][0])
        steps = betti_steps(proc, 0)
        assert steps.value_at(0.0) == 1
        assert steps.value_at(w / 2) == 1
        assert steps.value_at(w) == 0
        assert steps.value_at(-1.0) == 0
        assert lifetime_sum(proc, 0).L == pytest.approx(w)

    def test_three_vertex_mean(self):
        values = [lifetime_sum(sample_process(3, lm_preset(1), 0, s), 0).L for s in trial_seeds(1, 2000)]
        mean, err = _mean_and_error(values)
        assert abs(mean - 0.75) < err

    def test_squared_death_times(self):
        values = [alpha_lifetime_sum(sample_process(2, lm_preset(1), 0, s), 1, 2.0) for s in trial_seeds(2, 2000)]
        mean, err = _mean_and_error(values)
        assert abs(mean - 1.0 / 3.0) < err

    def test_alpha_one_is_lifetime_sum(self):
        for s in trial_seeds(5, 10):
            proc = sample_process(8, lm_preset(1), 0, s)
            assert alpha_lifetime_sum(proc, 1, 1.0) == pytest.approx(lifetime_sum(proc, 0).L)

    def test_kruskal_matches(self):
        for s in trial_seeds(6, 10):
            proc = sample_process(10, lm_preset(1), 0, s)
            deaths = kruskal_lifetimes(proc)
            assert len(deaths) == 9
            assert sum(deaths) == pytest.approx(lifetime_sum(proc, 0).L)

    def test_truncations(self):
        proc = sample_process(8, lm_preset(1), 0, seed=4)
        summary = lifetime_sum(proc, 0, T=[0.05, 0.1, 0.5, 2.0])
        values = [summary.L_T[T] for T in (0.05, 0.1, 0.5, 2.0)]
        assert all(a <= b for a, b in zip(values, values[1:]))
        assert summary.L_T[2.0] == pytest.approx(summary.L)
        assert summary.to_record()["L_k"] == summary.L


class TestLinialMeshulamLifetimes:
    def test_initial_betti(self):
        n = 7
        proc = sample_process(n, lm_preset(2), k_max=1, seed=8)
        steps = betti_steps(proc, 1)
        assert steps.value_at(0.0) == math.comb(n - 1, 2)
        assert steps.terminal == 0

    def test_vertices_never_live(self):
        proc = sample_process(6, lm_preset(2), k_max=1, seed=8)
        assert lifetime_sum(proc, 0).L == 0.0

    @pytest.mark.parametrize("pf, k", [("lm(1)", 0), ("lm(2)", 1), ("clique", 1), ("clique", 2), ("flag(2)", 1)])
    def test_incremental_matches_recompute(self, pf, k):
        for s in trial_seeds(9, 3):
            proc = sample_process(7, parse_param_functions(pf), k_max=k, seed=s)
            fast = betti_steps(proc, k, "incremental")
            slow = betti_steps(proc, k, "recompute")
            assert np.array_equal(fast.times, slow.times)
            assert np.array_equal(fast.values, slow.values)


class TestUnsupportedCases:
    def test_alpha_needs_instant_births(self):
        proc = sample_process(6, flag_preset(1), k_max=1, seed=1)
        with pytest.raises(UnsupportedCaseError):
            alpha_lifetime_sum(proc, 2, 1.0)

    def test_missing_dimension(self):
        proc = sample_process(6, lm_preset(1), k_max=0, seed=1)
        with pytest.raises(UnsupportedCaseError):
            betti_steps(proc, 1)

    def test_bad_method(self):
        proc = sample_process(4, lm_preset(1), k_max=0, seed=1)
        with pytest.raises(ValueError):
            betti_steps(proc, 0, "guess")

    def test_never_connected(self):
        pf = parse_param_functions('{"components": [{"type": "const", "c": 1}, {"type": "const", "c": 0}]}')
        proc = sample_process(4, pf, k_max=0, seed=1)
        assert lifetime_sum(proc, 0).L == math.inf
        assert integrate_steps(betti_steps(proc, 0), 2.0) == pytest.approx(6.0)
        assert kruskal_lifetimes(proc) == [math.inf] * 3
