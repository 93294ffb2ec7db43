"""Multi-objective shortest-path search over the product automaton.

Label-setting search in the NAMOA*/multi-objective-Dijkstra family: labels
carry accumulated cost vectors, a lexicographic priority queue pops them in
non-decreasing order, and each node keeps an antichain of non-dominated
costs.  No heuristic is used.  Acceptance is terminal (first-completion
semantics), so every returned plan completes the task exactly at its last
action.

Edge weights come from a per-edge lower confidence bound on the believed
mean cost, rectified at zero: optimism on rarely-executed edges drives
exploration while keeping all weights non-negative.
"""

from __future__ import annotations

import heapq
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from .belief import CostBelief
from .model import Plan
from .product import ProductAutomaton

__all__ = [
    "SearchError",
    "InfeasibleTaskError",
    "FrontEntry",
    "ParetoFrontResult",
    "dominates",
    "lcb_weight",
    "pareto_search",
]


class SearchError(ValueError):
    pass


class InfeasibleTaskError(SearchError):
    """No accepting product state is reachable from the start."""


def dominates(u, v) -> bool:
    """True iff u <= v elementwise with at least one strict inequality."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise SearchError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return bool(np.all(u <= v) and np.any(u < v))


def lcb_weight(belief: CostBelief, s: int, a: str, alpha: float,
               k_g: int) -> np.ndarray:
    """Rectified lower confidence bound on the believed mean cost of (s, a).

    Each component is max(0, posterior_mean - alpha * sqrt(log(k_g)/n)).
    Never-executed edges get the zero vector (maximal optimism), which
    forces at least one visit before the estimate is trusted.
    """
    if k_g < 1:
        raise SearchError("global step must be at least 1")
    mean = belief.posterior_mean(s, a)
    n = belief.count(s, a)
    if n == 0:
        return np.zeros_like(mean)
    bonus = alpha * np.sqrt(np.log(k_g) / n)
    return np.maximum(0.0, mean - bonus)


@dataclass(frozen=True)
class FrontEntry:
    """One non-dominated terminal label: its plan, search cost, and the
    predicted cumulative mean/covariance accumulated along the plan."""

    plan: Plan
    cost: np.ndarray
    mean: np.ndarray | None = None
    cov: np.ndarray | None = None


@dataclass
class ParetoFrontResult:
    entries: list[FrontEntry]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def costs(self) -> np.ndarray:
        return np.array([e.cost for e in self.entries])

    def means(self) -> np.ndarray:
        return np.array([e.mean for e in self.entries])

    def csv_rows(self) -> list[str]:
        """Objective columns followed by the plan's action string."""
        return [",".join(f"{x:.10g}" for x in e.cost) + "," + ";".join(e.plan.actions)
                for e in self.entries]


def _weak_dom(u: tuple, v: tuple) -> bool:
    """u <= v elementwise (equality counts): v cannot beat u anywhere."""
    return all(a <= b for a, b in zip(u, v))


class _Antichain2:
    """Mutually non-dominated 2-d cost set, sorted by the first coordinate.

    Sorted first coordinates imply strictly decreasing second coordinates,
    so cover/insert/discard run in O(log n + removals) via bisection.
    """

    __slots__ = ("xs", "ys")

    def __init__(self):
        self.xs: list[float] = []
        self.ys: list[float] = []

    def covers(self, g: tuple) -> bool:
        """Some member weakly dominates g."""
        i = bisect_right(self.xs, g[0]) - 1
        return i >= 0 and self.ys[i] <= g[1]

    def insert(self, g: tuple) -> bool:
        """Add g unless covered; drop members g dominates. True if added."""
        if self.covers(g):
            return False
        j = bisect_left(self.xs, g[0])
        k = j
        while k < len(self.ys) and self.ys[k] >= g[1]:
            k += 1
        self.xs[j:k] = [g[0]]
        self.ys[j:k] = [g[1]]
        return True

    def __contains__(self, g: tuple) -> bool:
        j = bisect_left(self.xs, g[0])
        return j < len(self.xs) and self.xs[j] == g[0] and self.ys[j] == g[1]


class _AntichainN:
    """General-dimension antichain with linear scans."""

    __slots__ = ("items",)

    def __init__(self):
        self.items: list[tuple] = []

    def covers(self, g: tuple) -> bool:
        return any(_weak_dom(h, g) for h in self.items)

    def insert(self, g: tuple) -> bool:
        if self.covers(g):
            return False
        self.items = [h for h in self.items if not _weak_dom(g, h)]
        self.items.append(g)
        return True

    def __contains__(self, g: tuple) -> bool:
        return g in self.items


def pareto_search(product: ProductAutomaton, weight_fn,
                  moments_fn=None) -> ParetoFrontResult:
    """Exact Pareto front over first-accepting paths from the product start.

    ``weight_fn(s, a)`` must return a non-negative cost vector for the
    underlying system edge; ``moments_fn(s, a)``, when given, returns a
    (mean, cov) pair accumulated along each witness plan.

    Complete and optimal for non-negative weights; equal-cost ties keep the
    first label discovered, so runs are reproducible.
    """
    start = product.start
    if start in product.accepting:
        return ParetoFrontResult([_reconstruct(product, [], None, moments_fn)])

    # labels[i] = (node, g, parent_label, action); antichain per node over g
    labels: list[tuple] = []
    counter = 0
    heap: list[tuple] = []
    edge_w: dict[tuple[int, str], tuple] = {}

    def weight(pid: int, action: str) -> tuple:
        s = product.system_state(pid)
        key = (s, action)
        w = edge_w.get(key)
        if w is None:
            w = tuple(float(x) for x in weight_fn(s, action))
            if any(x < 0 for x in w):
                raise SearchError(f"negative weight on edge {key}: {w}")
            edge_w[key] = w
        return w

    probe = product.edges[start]
    if not probe:
        raise InfeasibleTaskError("start state has no enabled actions")
    dim = len(weight(start, probe[0][0]))
    chain_cls = _Antichain2 if dim == 2 else _AntichainN
    best: dict[int, object] = {}
    solutions: list[int] = []
    sol_chain = chain_cls()

    expansion: dict[int, list] = {}

    def expansion_row(node: int) -> list:
        row = expansion.get(node)
        if row is None:
            row = [(action, dest, weight(node, action))
                   for action, dest in product.edges[node]]
            expansion[node] = row
        return row

    def push(node: int, g: tuple, parent: int | None, action: str | None):
        nonlocal counter
        chain = best.get(node)
        if chain is None:
            chain = best[node] = chain_cls()
        if not chain.insert(g):
            return
        labels.append((node, g, parent, action))
        heapq.heappush(heap, (g, counter, len(labels) - 1))
        counter += 1

    push(start, (0.0,) * dim, None, None)

    while heap:
        g, _, label_id = heapq.heappop(heap)
        node = labels[label_id][0]
        if g not in best[node]:  # superseded while queued
            continue
        if sol_chain.covers(g):
            continue
        if node in product.accepting:
            solutions.append(label_id)
            sol_chain.insert(g)
            continue
        for action, dest, w in expansion_row(node):
            g2 = tuple(a + b for a, b in zip(g, w))
            if sol_chain.covers(g2):
                continue
            push(dest, g2, label_id, action)

    if not solutions:
        raise InfeasibleTaskError(
            f"no accepting state reachable from product start "
            f"(system state {product.start_system_state})")
    entries = [_reconstruct(product, labels, label_id, moments_fn)
               for label_id in solutions]
    if moments_fn is not None:
        entries = _filter_by_mean(entries)
    return ParetoFrontResult(entries)


def _filter_by_mean(entries: list[FrontEntry]) -> list[FrontEntry]:
    """Keep entries whose predicted mean is non-dominated (first wins ties).

    The search antichain lives in weight space; the front contract is on
    the predicted means, so optimistic duplicates must be pruned here.
    """
    kept: list[FrontEntry] = []
    for e in entries:
        m = tuple(e.mean)
        dominated = False
        for other in entries:
            o = tuple(other.mean)
            if o != m and _weak_dom(o, m):
                dominated = True
                break
        if not dominated and all(tuple(k.mean) != m for k in kept):
            kept.append(e)
    return kept


def _reconstruct(product, labels, label_id, moments_fn) -> FrontEntry:
    if label_id is None:  # start is already accepting: the empty plan
        n = product.ts.n_objectives
        mean = cov = None
        if moments_fn is not None:
            mean, cov = np.zeros(n), np.zeros((n, n))
        return FrontEntry(plan=Plan(product.start_system_state, ()),
                          cost=np.zeros(n), mean=mean, cov=cov)
    actions = []
    nodes = []
    cur = label_id
    while cur is not None:
        node, g, parent, action = labels[cur]
        if action is not None:
            actions.append(action)
            nodes.append(node)
        cur = parent
    actions.reverse()
    plan = Plan(product.start_system_state, tuple(actions))
    cost = np.array(labels[label_id][1])
    mean = cov = None
    if moments_fn is not None:
        s = product.start_system_state
        pid = product.start
        for a in actions:
            m, c = moments_fn(product.system_state(pid), a)
            mean = np.array(m, dtype=float) if mean is None else mean + m
            cov = np.array(c, dtype=float) if cov is None else cov + c
            for action, dest in product.edges[pid]:
                if action == a:
                    pid = dest
                    break
    return FrontEntry(plan=plan, cost=cost, mean=mean, cov=cov)
