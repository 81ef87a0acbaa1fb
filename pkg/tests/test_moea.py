"""Variation operator laws, sorting oracle, and optimizer run contracts."""

import numpy as np
import pytest

from trumpbench.deck import DeckShape, deck_is_valid, genome_to_deck
from trumpbench.moea import (
    EAConfig,
    EvaluationError,
    SingleObjectiveEA,
    SmsEmoa,
    StopReason,
    VariationParams,
    hv_contributions,
    nondominated_sort,
    polynomial_mutation,
    sbx_crossover,
    sms_emoa_run,
    so_ea_run,
)
from trumpbench.objectives import ObjectiveKind, dominance_fitness, surrogate_objectives
from trumpbench.ocd import OCDParams


class ScriptedRng:
    """Deterministic stand-in for a Generator, yielding scripted uniforms."""

    def __init__(self, values):
        self.values = list(values)

    def random(self, size=None):
        if size is None:
            return self.values.pop(0)
        out = np.array([self.values.pop(0) for _ in range(size)])
        return out


def dominance_evaluator(deck, rng):
    return dominance_fitness(deck).values


def surrogate_evaluator(deck, rng):
    return surrogate_objectives(deck, deck.shape).values


class TestSBX:
    def test_u_half_returns_parents(self):
        p1 = np.array([2.0, 5.0])
        p2 = np.array([7.0, 3.0])
        rng = ScriptedRng([0.0, 0.0, 0.0, 0.5, 0.5])  # pc gate, take mask, u values
        c1, c2 = sbx_crossover(p1, p2, VariationParams(), (1.0, 10.0), rng)
        assert np.allclose(c1, p1)
        assert np.allclose(c2, p2)

    def test_spread_factor_formula(self):
        p1, p2 = np.array([4.0]), np.array([6.0])
        rng = ScriptedRng([0.0, 0.0, 0.8])
        c1, c2 = sbx_crossover(p1, p2, VariationParams(eta_c=20.0), (-100.0, 100.0), rng)
        beta = 2.5 ** (1.0 / 21.0)
        assert beta == pytest.approx(1.0446, abs=1e-4)
        assert c1[0] == pytest.approx(0.5 * ((1 + beta) * 4.0 + (1 - beta) * 6.0))
        assert c2[0] == pytest.approx(0.5 * ((1 - beta) * 4.0 + (1 + beta) * 6.0))

    def test_mean_preservation_without_clipping(self):
        rng = np.random.default_rng(99)
        params = VariationParams()
        wide = (-1e9, 1e9)
        for _ in range(200):
            p1 = rng.uniform(1, 10, size=16)
            p2 = rng.uniform(1, 10, size=16)
            c1, c2 = sbx_crossover(p1, p2, params, wide, rng)
            assert np.all(np.abs((c1 + c2) - (p1 + p2)) < 1e-9)

    def test_no_crossover_when_gate_fails(self):
        p1 = np.array([2.0, 5.0])
        p2 = np.array([7.0, 3.0])
        rng = ScriptedRng([0.99])
        c1, c2 = sbx_crossover(p1, p2, VariationParams(pc=0.5), (1.0, 10.0), rng)
        assert np.array_equal(c1, p1)
        assert np.array_equal(c2, p2)


class TestPolynomialMutation:
    def test_u_half_leaves_gene_unchanged(self):
        g = np.array([5.5])
        rng = ScriptedRng([0.0, 0.5])  # mutate gate, u
        out = polynomial_mutation(g, VariationParams(pm=1.0), (1.0, 10.0), rng)
        assert out[0] == 5.5

    def test_upper_pull_formula(self):
        g = np.array([5.5])
        rng = ScriptedRng([0.0, 0.9])
        out = polynomial_mutation(g, VariationParams(pm=1.0, eta_m=15.0), (1.0, 10.0), rng)
        delta = 1.0 - 0.2 ** (1.0 / 16.0)
        assert delta == pytest.approx(0.0957, abs=1e-4)
        assert out[0] == pytest.approx(5.5 + delta * (10.0 - 5.5))

    def test_boundary_genes_stay_in_bounds(self):
        rng = np.random.default_rng(3)
        params = VariationParams(pm=1.0)
        genes = np.array([1.0, 10.0, 1.0, 10.0, 5.0])
        for _ in range(2000):
            out = polynomial_mutation(genes, params, (1.0, 10.0), rng)
            assert np.all(out >= 1.0)
            assert np.all(out <= 10.0)


class TestNondominatedSort:
    def test_simple_front_split(self):
        ranks = nondominated_sort(np.array([[1.0, 2.0], [2.0, 1.0], [3.0, 3.0]]))
        assert list(ranks) == [1, 1, 2]

    def test_duplicates_share_rank(self):
        ranks = nondominated_sort(np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]]))
        assert list(ranks) == [1, 1, 2]

    def test_chain(self):
        ranks = nondominated_sort(np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]))
        assert list(ranks) == [1, 2, 3]

    def test_agrees_with_peeling_oracle(self):
        def oracle(points):
            pts = [tuple(p) for p in points]
            ranks = {}
            rank = 0
            alive = set(range(len(pts)))
            while alive:
                rank += 1
                front = []
                for i in alive:
                    dominated = False
                    for j in alive:
                        if j != i and all(a < b for a, b in zip(pts[j], pts[i])):
                            dominated = True
                            break
                    if not dominated:
                        front.append(i)
                for i in front:
                    ranks[i] = rank
                    alive.discard(i)
            return [ranks[i] for i in range(len(pts))]

        rng = np.random.default_rng(41)
        for _ in range(300):
            n = int(rng.integers(1, 25))
            m = int(rng.integers(1, 4))
            # Mix continuous values with small-integer grids to exercise ties.
            if rng.random() < 0.5:
                pts = rng.integers(0, 4, size=(n, m)).astype(float)
            else:
                pts = rng.uniform(0, 1, size=(n, m))
            assert list(nondominated_sort(pts)) == oracle(pts)


class TestRuns:
    def small_config(self, kind, **kw):
        defaults = dict(
            mu=5,
            objective=kind,
            shape=DeckShape(K=8, L=2),
            max_evals=300,
            seed=11,
            ocd=OCDParams(window=5),
        )
        defaults.update(kw)
        return EAConfig(**defaults)

    def test_deterministic_runs(self):
        config = self.small_config(ObjectiveKind.SURROGATE)
        a = sms_emoa_run(config, surrogate_evaluator)
        b = sms_emoa_run(config, surrogate_evaluator)
        assert a.n_evals == b.n_evals
        assert a.stop_reason == b.stop_reason
        for x, y in zip(a.final_population, b.final_population):
            assert np.array_equal(x.genome, y.genome)
            assert np.array_equal(x.objectives, y.objectives)
            assert x.eval_index == y.eval_index
        assert a.indicator_trace == b.indicator_trace

    def test_population_size_and_eval_indices(self):
        config = self.small_config(ObjectiveKind.SURROGATE, max_evals=120)
        algo = SmsEmoa(config, surrogate_evaluator)
        algo.initialize()
        seen = {ind.eval_index for ind in algo.population}
        for _ in range(50):
            algo.step()
            assert len(algo.population) == config.mu
            new = {ind.eval_index for ind in algo.population}
            assert max(new) <= algo.n_evals - 1
            seen |= new
        assert sorted(seen)[: config.mu] == list(range(config.mu))

    def test_every_evaluated_deck_is_valid(self):
        checked = []

        def checking_evaluator(deck, rng):
            assert deck_is_valid(deck).valid
            checked.append(1)
            return surrogate_objectives(deck, deck.shape).values

        config = self.small_config(ObjectiveKind.SURROGATE, max_evals=100)
        result = sms_emoa_run(config, checking_evaluator)
        assert len(checked) == result.n_evals

    def test_step_hypervolume_never_drops(self):
        config = self.small_config(ObjectiveKind.SURROGATE, max_evals=200)
        algo = SmsEmoa(config, surrogate_evaluator)
        algo.initialize()
        for _ in range(150):
            info = algo.step(record_hv=True)
            assert info["hv_after"] >= info["hv_before"] - 1e-9

    def test_front_members_are_mutually_nondominated(self):
        config = self.small_config(ObjectiveKind.SURROGATE)
        result = sms_emoa_run(config, surrogate_evaluator)
        pts = np.array([ind.objectives for ind in result.front])
        assert np.all(nondominated_sort(pts) == 1)
        genomes = {tuple(ind.genome) for ind in result.front}
        pop_genomes = {tuple(ind.genome) for ind in result.final_population}
        assert genomes <= pop_genomes

    def test_single_objective_best_is_monotone(self):
        config = self.small_config(ObjectiveKind.DOMINANCE, max_evals=400)
        algo = SingleObjectiveEA(config, dominance_evaluator)
        algo.initialize()
        best = min(ind.objectives[0] for ind in algo.population)
        for _ in range(200):
            algo.step()
            new_best = min(ind.objectives[0] for ind in algo.population)
            assert new_best <= best
            best = new_best

    def test_toy_single_objective_reaches_optimum(self):
        config = EAConfig(
            mu=5,
            objective=ObjectiveKind.DOMINANCE,
            shape=DeckShape(K=4, L=2),
            max_evals=2000,
            seed=5,
            ocd=OCDParams(window=10),
        )
        result = so_ea_run(config, dominance_evaluator)
        assert result.front[0].objectives[0] == pytest.approx(-3.0)

    def test_evaluator_failure_carries_context(self):
        def broken(deck, rng):
            raise ValueError("boom")

        config = self.small_config(ObjectiveKind.SURROGATE)
        with pytest.raises(EvaluationError, match="evaluation 0"):
            sms_emoa_run(config, broken)

    def test_offspring_decode_to_valid_decks(self):
        config = self.small_config(ObjectiveKind.SURROGATE, max_evals=80)
        algo = SmsEmoa(config, surrogate_evaluator)
        algo.initialize()
        for _ in range(30):
            child = algo.spawn_offspring()
            assert deck_is_valid(genome_to_deck(child, config.shape)).valid


def test_hv_contributions_alias():
    front = np.array([[1.0, 3.0], [2.0, 2.0], [3.0, 1.0]])
    assert hv_contributions(front, np.array([4.0, 4.0])) == pytest.approx([1.0, 1.0, 1.0])
