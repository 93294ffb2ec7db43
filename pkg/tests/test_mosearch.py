from types import SimpleNamespace

import numpy as np
import pytest

from paretoplan.belief import CostBelief, NiwParams
from paretoplan.mosearch import (
    InfeasibleTaskError,
    SearchError,
    dominates,
    lcb_weight,
    pareto_search,
)
from paretoplan.product import ProductAutomaton

from helpers import brute_force_front


def make_graph(n_nodes, edges, accepting, start=0, n_objectives=2):
    """Fabricate a product automaton with system state == node id."""
    rows = [[] for _ in range(n_nodes)]
    for (u, action), v in edges.items():
        rows[u].append((action, v))
    ts = SimpleNamespace(n_objectives=n_objectives,
                         state_names=tuple(str(i) for i in range(n_nodes)))
    return ProductAutomaton(ts=ts, dfa=None, start_system_state=start, start=start,
                            pairs=[(i, 0) for i in range(n_nodes)],
                            edges=rows, accepting=frozenset(accepting))


class TestDominates:
    def test_one_strict(self):
        assert dominates((1, 2), (2, 2)) is True

    def test_equal_vectors(self):
        assert dominates((1, 2), (1, 2)) is False

    def test_incomparable(self):
        assert dominates((1, 3), (2, 2)) is False
        assert dominates((2, 2), (1, 3)) is False

    def test_dimension_mismatch(self):
        with pytest.raises(SearchError):
            dominates((1, 2), (1, 2, 3))


class TestLcbWeight:
    def _belief(self, lam, count):
        p = NiwParams(lam=np.asarray(lam, dtype=float), kappa=2.0,
                      Lam=np.eye(len(lam)), nu=len(lam) + 4.0)
        b = CostBelief({(0, "a"): p})
        b.counts[(0, "a")] = count
        b.k_g = count
        return b

    def test_unit_bonus(self):
        b = self._belief([5.0, 3.0], count=1)
        v = lcb_weight(b, 0, "a", alpha=0.1, k_g=int(np.e) + 1)
        # log(e)=1 exactly at k_g=e; use explicit float for the check
        v = lcb_weight(b, 0, "a", alpha=0.1, k_g=np.e)
        assert np.allclose(v, [4.9, 2.9])

    def test_rectification(self):
        b = self._belief([0.05, 0.2], count=1)
        v = lcb_weight(b, 0, "a", alpha=0.1, k_g=np.e)
        assert np.allclose(v, [0.0, 0.1])

    def test_zero_alpha_is_posterior_mean(self):
        b = self._belief([2.5, 0.7], count=3)
        assert np.allclose(lcb_weight(b, 0, "a", 0.0, 10), [2.5, 0.7])

    def test_unvisited_edge_is_free(self):
        b = self._belief([9.0, 9.0], count=0)
        assert np.allclose(lcb_weight(b, 0, "a", 0.1, 5), [0.0, 0.0])

    def test_global_step_validated(self):
        b = self._belief([1.0, 1.0], count=1)
        with pytest.raises(SearchError):
            lcb_weight(b, 0, "a", 0.1, 0)


class TestParetoSearch:
    def test_single_path(self):
        g = make_graph(3, {(0, "a"): 1, (1, "a"): 2}, {2})
        weights = {(0, "a"): (1.0, 2.0), (1, "a"): (3.0, 1.0)}
        front = pareto_search(g, lambda s, a: weights[(s, a)])
        assert len(front) == 1
        assert np.allclose(front.entries[0].cost, [4.0, 3.0])
        assert front.entries[0].plan.actions == ("a", "a")

    def test_diamond(self):
        edges = {(0, "up"): 1, (0, "down"): 2, (1, "a"): 3, (2, "a"): 3}
        weights = {(0, "up"): (1.0, 10.0), (0, "down"): (10.0, 1.0),
                   (1, "a"): (0.0, 0.0), (2, "a"): (0.0, 0.0)}
        front = pareto_search(make_graph(4, edges, {3}),
                              lambda s, a: weights[(s, a)])
        assert {tuple(e.cost) for e in front} == {(1.0, 10.0), (10.0, 1.0)}

    def test_start_accepting_yields_empty_plan(self):
        g = make_graph(2, {(0, "a"): 1, (1, "a"): 0}, {0})
        front = pareto_search(g, lambda s, a: (1.0, 1.0))
        assert len(front) == 1
        assert front.entries[0].plan.actions == ()
        assert np.allclose(front.entries[0].cost, [0.0, 0.0])

    def test_infeasible(self):
        g = make_graph(2, {(0, "a"): 0, (1, "a"): 1}, {1})
        with pytest.raises(InfeasibleTaskError):
            pareto_search(g, lambda s, a: (1.0, 1.0))

    def test_negative_weight_rejected(self):
        g = make_graph(2, {(0, "a"): 1, (1, "b"): 1}, {1})
        with pytest.raises(SearchError, match="negative"):
            pareto_search(g, lambda s, a: (-1.0, 0.0))

    def test_front_is_antichain(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            g, weights = _random_instance(rng)
            try:
                front = pareto_search(g, lambda s, a: weights[(s, a)])
            except InfeasibleTaskError:
                continue
            costs = [tuple(e.cost) for e in front]
            for i, u in enumerate(costs):
                for j, v in enumerate(costs):
                    if i != j:
                        assert not dominates(u, v)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(42)
        tested = 0
        for _ in range(250):
            g, weights = _random_instance(rng)
            oracle = brute_force_front(g.n_states,
                                       {i: g.edges[i] for i in range(g.n_states)},
                                       weights, g.start, g.accepting)
            try:
                front = pareto_search(g, lambda s, a: weights[(s, a)])
                got = {tuple(e.cost) for e in front}
            except InfeasibleTaskError:
                got = set()
            assert got == oracle
            tested += 1
        assert tested == 250

    def test_dominated_edge_does_not_change_front(self):
        rng = np.random.default_rng(17)
        for _ in range(40):
            g, weights = _random_instance(rng)
            try:
                base = {tuple(e.cost) for e in
                        pareto_search(g, lambda s, a: weights[(s, a)])}
            except InfeasibleTaskError:
                continue
            # duplicate an existing edge with strictly worse cost
            u, action = sorted(weights)[0]
            dest = dict(g.edges[u])[action]
            new_edges = {(i, a): d for i in range(g.n_states)
                         for a, d in g.edges[i]}
            new_edges[(u, action + "_bad")] = dest
            new_weights = dict(weights)
            new_weights[(u, action + "_bad")] = tuple(
                x + 1.0 for x in weights[(u, action)])
            g2 = make_graph(g.n_states, new_edges, g.accepting)
            got = {tuple(e.cost) for e in
                   pareto_search(g2, lambda s, a: new_weights[(s, a)])}
            assert got == base

    def test_witness_plans_replay_to_their_cost(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            g, weights = _random_instance(rng)
            try:
                front = pareto_search(g, lambda s, a: weights[(s, a)])
            except InfeasibleTaskError:
                continue
            for e in front:
                node = g.start
                total = np.zeros(2)
                for a in e.plan.actions:
                    total += weights[(node, a)]
                    node = dict((x, d) for x, d in g.edges[node])[a]
                assert node in g.accepting
                assert np.allclose(total, e.cost)

    def test_moments_accumulated_along_plan(self):
        edges = {(0, "up"): 1, (0, "down"): 2, (1, "a"): 3, (2, "a"): 3}
        weights = {(0, "up"): (1.0, 10.0), (0, "down"): (10.0, 1.0),
                   (1, "a"): (2.0, 0.0), (2, "a"): (2.0, 0.0)}
        means = {k: np.array(v) + 0.5 for k, v in weights.items()}
        covs = {k: np.eye(2) * (i + 1) for i, k in enumerate(sorted(weights))}
        front = pareto_search(make_graph(4, edges, {3}),
                              lambda s, a: weights[(s, a)],
                              moments_fn=lambda s, a: (means[(s, a)], covs[(s, a)]))
        for e in front:
            want_mean = sum(means[(n, a)] for n, a in _walk(e.plan.actions, edges))
            want_cov = sum(covs[(n, a)] for n, a in _walk(e.plan.actions, edges))
            assert np.allclose(e.mean, want_mean)
            assert np.allclose(e.cov, want_cov)


def _walk(actions, edges):
    node = 0
    for a in actions:
        yield node, a
        node = edges[(node, a)]


def _random_instance(rng, max_nodes=6):
    n = int(rng.integers(3, max_nodes + 1))
    edges = {}
    weights = {}
    for u in range(n):
        for k in range(int(rng.integers(1, 4))):
            action = f"a{k}"
            edges[(u, action)] = int(rng.integers(n))
            weights[(u, action)] = (float(rng.integers(0, 6)),
                                    float(rng.integers(0, 6)))
    accepting = {i for i in range(1, n) if rng.random() < 0.3}
    return make_graph(n, edges, accepting), weights
