"""Synchronous product of a transition system and a task DFA.

Product states pair a system state with a DFA state; only the part
reachable from the episode's start is materialized.  Acceptance marks the
points where the task is completed, and plans are judged against the
first-completion convention: a plan counts as satisfying only if its run
enters acceptance exactly at the final step.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ltlf import Dfa
from .model import Plan, TransitionSystem, induce_trajectory

__all__ = ["ProductError", "ProductAutomaton", "build_product", "is_satisfying", "to_dot"]


class ProductError(ValueError):
    pass


@dataclass
class ProductAutomaton:
    """Reachable product graph with dense state ids.

    ``pairs[i]`` is the underlying (system state, dfa state) of product
    state ``i``; ``edges[i]`` lists (action, successor id).  Edges out of
    accepting states are materialized for plan replay, but searches treat
    acceptance as terminal.
    """

    ts: TransitionSystem
    dfa: Dfa
    start_system_state: int
    start: int
    pairs: list[tuple[int, int]]
    edges: list[list[tuple[str, int]]]
    accepting: frozenset[int]

    @property
    def n_states(self) -> int:
        return len(self.pairs)

    def system_state(self, pid: int) -> int:
        return self.pairs[pid][0]

    def run_of(self, plan: Plan) -> list[int]:
        """Product states visited by the plan (start included; len == |plan|+1)."""
        if plan.start != self.start_system_state:
            raise ProductError(
                f"plan starts at {plan.start}, product at {self.start_system_state}")
        pid = self.start
        out = [pid]
        for a in plan.actions:
            nxt = None
            for action, dest in self.edges[pid]:
                if action == a:
                    nxt = dest
                    break
            if nxt is None:
                raise ProductError(f"action {a!r} not enabled at product state {pid}")
            out.append(nxt)
            pid = nxt
        return out


def build_product(ts: TransitionSystem, dfa: Dfa, start_state: int) -> ProductAutomaton:
    """Breadth-first construction of the reachable product from ``start_state``.

    The DFA is advanced by the start state's label before any action, so the
    product start already accounts for the first observation.
    """
    if tuple(dfa.ap) != tuple(ts.ap):
        raise ProductError(
            f"alphabet mismatch: dfa has {list(dfa.ap)}, model has {list(ts.ap)}")
    if not (0 <= start_state < ts.n_states):
        raise ProductError(f"start state {start_state} out of range")

    gamma0 = dfa.step(dfa.init, ts.label_masks[start_state])
    start_pair = (start_state, gamma0)
    index = {start_pair: 0}
    pairs = [start_pair]
    edges: list[list[tuple[str, int]]] = []
    queue = [start_pair]
    while queue:
        s, gamma = queue.pop(0)
        row = []
        for a in ts.enabled_actions(s):
            t = ts.successor(s, a)
            gamma2 = dfa.step(gamma, ts.label_masks[t])
            pair = (t, gamma2)
            if pair not in index:
                index[pair] = len(pairs)
                pairs.append(pair)
                queue.append(pair)
            row.append((a, index[pair]))
        edges.append(row)
    accepting = frozenset(i for i, (_, gamma) in enumerate(pairs)
                          if gamma in dfa.accepting)
    return ProductAutomaton(ts=ts, dfa=dfa, start_system_state=start_state,
                            start=0, pairs=pairs, edges=edges, accepting=accepting)


def is_satisfying(ts: TransitionSystem, dfa: Dfa, plan: Plan) -> bool:
    """True iff the plan's trace completes the task exactly at its last step."""
    trajectory = induce_trajectory(ts, plan)
    gamma = dfa.init
    visited = []
    for s in trajectory:
        gamma = dfa.step(gamma, ts.label_masks[s])
        visited.append(gamma)
    if visited[-1] not in dfa.accepting:
        return False
    return all(g not in dfa.accepting for g in visited[:-1])


def to_dot(product: ProductAutomaton) -> str:
    """Graphviz rendering of the product graph, for debugging."""
    lines = ["digraph product {", "  rankdir=LR;"]
    for i, (s, gamma) in enumerate(product.pairs):
        shape = "doublecircle" if i in product.accepting else "circle"
        marker = " *" if i == product.start else ""
        lines.append(
            f'  n{i} [shape={shape} label="{product.ts.state_names[s]}|q{gamma}{marker}"];')
    for i, row in enumerate(product.edges):
        for action, dest in row:
            lines.append(f'  n{i} -> n{dest} [label="{action}"];')
    lines.append("}")
    return "\n".join(lines)
