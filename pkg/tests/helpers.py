"""Shared oracle utilities for the test suite.

The evaluators here are written directly against the recursive trace
semantics and never call the automaton path, so they can serve as
independent ground truth for translation and search tests.
"""

from __future__ import annotations

import itertools

import numpy as np

from paretoplan.ltlf import LtlfFormula


def masks_to_trace(masks, ap):
    return [frozenset(name for i, name in enumerate(ap) if m >> i & 1) for m in masks]


def all_trace_arrays(n_ap: int, length: int) -> np.ndarray:
    """Every trace of exactly ``length`` symbols as an (S^length, length) mask array."""
    n_symbols = 1 << n_ap
    grids = np.meshgrid(*[np.arange(n_symbols)] * length, indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def eval_batch(formula: LtlfFormula, masks: np.ndarray, ap) -> np.ndarray:
    """Vectorized recursive semantics over a batch of equal-length traces.

    ``masks`` is (T, n) of symbol bitmasks; returns (T,) booleans equal to
    ``holds(formula, trace)`` for each row.
    """
    index = {name: i for i, name in enumerate(ap)}
    n = masks.shape[1]

    def table(f: LtlfFormula) -> np.ndarray:  # (T, n) satisfaction per position
        k = f.kind
        if k == "true":
            return np.ones(masks.shape, dtype=bool)
        if k == "atom":
            return (masks >> index[f.atom]) & 1 == 1
        if k == "not":
            return ~table(f.children[0])
        if k == "and":
            return table(f.children[0]) & table(f.children[1])
        if k == "or":
            return table(f.children[0]) | table(f.children[1])
        if k == "next":
            t = table(f.children[0])
            out = np.zeros_like(t)
            out[:, :-1] = t[:, 1:]
            return out
        if k == "eventually":
            t = table(f.children[0])
            return np.logical_or.accumulate(t[:, ::-1], axis=1)[:, ::-1]
        if k == "globally":
            t = table(f.children[0])
            return np.logical_and.accumulate(t[:, ::-1], axis=1)[:, ::-1]
        # until
        tl = table(f.children[0])
        tr = table(f.children[1])
        out = np.empty_like(tl)
        out[:, n - 1] = tr[:, n - 1]
        for i in range(n - 2, -1, -1):
            out[:, i] = tr[:, i] | (tl[:, i] & out[:, i + 1])
        return out

    return table(formula)[:, 0]


def enumerate_simple_paths(n_nodes, edges, start, accepting):
    """All simple paths from ``start`` that reach acceptance for the first time.

    ``edges``: dict node -> list of (action, dest). Yields (actions, dests)
    where no node before the last is accepting.  Used as the search oracle;
    non-negative weights make longer non-simple walks redundant.
    """
    results = []
    if start in accepting:
        results.append(((), ()))
        return results

    def walk(node, visited, actions, nodes):
        for action, dest in edges.get(node, ()):
            if dest in accepting:
                results.append((tuple(actions) + (action,), tuple(nodes) + (dest,)))
                continue
            if dest in visited:
                continue
            walk(dest, visited | {dest}, actions + [action], nodes + [dest])

    walk(start, {start}, [], [])
    return results


def pareto_filter(vectors):
    """Non-dominated subset (as a set of tuples) of a list of cost tuples."""
    out = set()
    for v in vectors:
        dominated = False
        for u in vectors:
            if u != v and all(a <= b for a, b in zip(u, v)) and any(a < b for a, b in zip(u, v)):
                dominated = True
                break
        if not dominated:
            out.add(tuple(v))
    return out


def brute_force_front(n_nodes, edges, weights, start, accepting):
    """Exhaustive first-acceptance Pareto front: path enumeration + dominance filter."""
    paths = enumerate_simple_paths(n_nodes, edges, start, accepting)
    costs = []
    for actions, nodes in paths:
        g = None
        node = start
        for action, dest in zip(actions, nodes):
            w = weights[(node, action)]
            g = w if g is None else tuple(a + b for a, b in zip(g, w))
            node = dest
        if g is None:
            g = ()
        costs.append(g)
    if not costs:
        return set()
    dim = max((len(c) for c in costs), default=0)
    costs = [c if c else (0.0,) * dim for c in costs]
    return pareto_filter(costs)


def all_traces(ap, max_len):
    """Iterate all traces (tuples of frozensets) of length 1..max_len."""
    symbols = [frozenset(s) for r in range(len(ap) + 1)
               for s in itertools.combinations(ap, r)]
    for length in range(1, max_len + 1):
        for combo in itertools.product(symbols, repeat=length):
            yield combo
