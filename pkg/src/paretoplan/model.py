"""Robot model: deterministic transition system with hidden stochastic edge costs.

The transition system is the qualitative part (states, enabled actions,
labels); the true cost model is the quantitative ground truth used only by
the simulator.  Model files are JSON documents in a versioned schema; a
grid-world shorthand elaborates to the full schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ModelError",
    "DisabledActionError",
    "TransitionSystem",
    "TrueCostModel",
    "Plan",
    "induce_trajectory",
    "trace_of",
    "sample_cost",
    "load_model",
    "save_model",
    "model_to_dict",
    "grid_to_model",
    "GRID_ACTIONS",
]

MODEL_SCHEMA = "dts-sc-1"
GRID_SCHEMA = "grid-1"
GRID_ACTIONS = ("north", "east", "south", "west")
_GRID_MOVES = {"north": (0, 1), "east": (1, 0), "south": (0, -1), "west": (-1, 0)}


class ModelError(ValueError):
    """Invalid model description."""


class DisabledActionError(ModelError):
    """Plan uses an action not enabled at the reached state."""

    def __init__(self, state: int, action: str, step: int):
        super().__init__(f"action {action!r} not enabled at state {state} (step {step})")
        self.state = state
        self.action = action
        self.step = step


@dataclass(frozen=True)
class Plan:
    """A start state and the action sequence executed from it."""

    start: int
    actions: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.actions)


class TransitionSystem:
    """Deterministic transition system with per-state label sets.

    Actions may be enabled only at some states; every state must offer at
    least one action so execution can always continue.
    """

    def __init__(self, n_states: int, actions, transitions, ap, labels,
                 n_objectives: int, state_names=None):
        self.n_states = int(n_states)
        self.actions = tuple(actions)
        self.ap = tuple(sorted(ap))
        self.labels = tuple(frozenset(l) for l in labels)
        self.n_objectives = int(n_objectives)
        self.state_names = tuple(state_names) if state_names else tuple(
            str(i) for i in range(self.n_states))
        self._succ: dict[tuple[int, str], int] = dict(transitions)
        self._enabled: list[tuple[str, ...]] = [() for _ in range(self.n_states)]
        self._validate()
        by_state: list[list[str]] = [[] for _ in range(self.n_states)]
        for (s, a) in sorted(self._succ, key=lambda k: (k[0], self.actions.index(k[1]))):
            by_state[s].append(a)
        self._enabled = [tuple(acts) for acts in by_state]
        ap_index = {p: i for i, p in enumerate(self.ap)}
        self.label_masks = tuple(
            sum(1 << ap_index[p] for p in lbl) for lbl in self.labels)

    def _validate(self):
        if len(self.labels) != self.n_states:
            raise ModelError("labeling must cover every state")
        for lbl in self.labels:
            extra = lbl - set(self.ap)
            if extra:
                raise ModelError(f"label atoms {sorted(extra)} not declared in AP")
        seen = set()
        for (s, a), t in self._succ.items():
            if not (0 <= s < self.n_states and 0 <= t < self.n_states):
                raise ModelError(f"transition ({s},{a})->{t} out of range")
            if a not in self.actions:
                raise ModelError(f"unknown action {a!r}")
            seen.add(s)
        dead = set(range(self.n_states)) - seen
        if dead:
            raise ModelError(f"states without enabled actions: {sorted(dead)}")

    def enabled_actions(self, s: int) -> tuple[str, ...]:
        return self._enabled[s]

    def successor(self, s: int, a: str) -> int | None:
        return self._succ.get((s, a))

    def edges(self):
        """All enabled (state, action, successor) triples."""
        for (s, a), t in self._succ.items():
            yield s, a, t


class TrueCostModel:
    """Ground-truth cost distributions: one mean/covariance per enabled edge."""

    def __init__(self, n_objectives: int, means, covs):
        self.n_objectives = int(n_objectives)
        self.means = {k: np.asarray(v, dtype=float) for k, v in means.items()}
        self.covs = {k: np.asarray(v, dtype=float) for k, v in covs.items()}
        self._chol: dict[tuple[int, str], np.ndarray] = {}
        for key, mu in self.means.items():
            cov = self.covs.get(key)
            if cov is None:
                raise ModelError(f"missing covariance for edge {key}")
            if mu.shape != (self.n_objectives,):
                raise ModelError(f"mean for {key} has shape {mu.shape}")
            if np.any(mu < 0):
                raise ModelError(f"negative mean cost on edge {key}")
            if cov.shape != (self.n_objectives,) * 2:
                raise ModelError(f"covariance for {key} has shape {cov.shape}")
            if not np.allclose(cov, cov.T, atol=1e-10):
                raise ModelError(f"covariance for {key} not symmetric")
            eigvals, eigvecs = np.linalg.eigh(cov)
            if eigvals.min() < -1e-10:
                raise ModelError(f"covariance for {key} not positive semi-definite")
            # PSD square root; exact zero rows for deterministic objectives
            root = eigvecs @ np.diag(np.sqrt(np.clip(eigvals, 0.0, None)))
            self._chol[key] = root

    def mean(self, s: int, a: str) -> np.ndarray:
        return self.means[(s, a)]

    def cov(self, s: int, a: str) -> np.ndarray:
        return self.covs[(s, a)]


def induce_trajectory(ts: TransitionSystem, plan: Plan) -> list[int]:
    """States visited executing the plan; length is len(plan)+1."""
    states = [plan.start]
    s = plan.start
    for k, a in enumerate(plan.actions):
        t = ts.successor(s, a)
        if t is None:
            raise DisabledActionError(s, a, k)
        states.append(t)
        s = t
    return states


def trace_of(ts: TransitionSystem, plan: Plan) -> list[frozenset]:
    """Observation sequence of the induced trajectory (one symbol per state)."""
    return [ts.labels[s] for s in induce_trajectory(ts, plan)]


def plan_edges(ts: TransitionSystem, plan: Plan) -> list[tuple[int, str]]:
    """(state, action) pairs traversed by the plan, in execution order."""
    states = induce_trajectory(ts, plan)
    return list(zip(states[:-1], plan.actions))


def sample_cost(truth: TrueCostModel, s: int, a: str,
                rng: np.random.Generator) -> np.ndarray:
    """One cost draw for edge (s, a).

    Draws N standard normals from ``rng`` (PCG64 streams in the harness) and
    maps them through the cached PSD square root, so a fixed seed and stream
    position give identical samples; zero covariance returns the mean exactly.
    """
    root = truth._chol[(s, a)]
    z = rng.standard_normal(truth.n_objectives)
    return truth.means[(s, a)] + root @ z


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def model_to_dict(ts: TransitionSystem, truth: TrueCostModel) -> dict:
    return {
        "schema": MODEL_SCHEMA,
        "n_objectives": ts.n_objectives,
        "ap": list(ts.ap),
        "actions": list(ts.actions),
        "states": [{"name": ts.state_names[s], "label": sorted(ts.labels[s])}
                   for s in range(ts.n_states)],
        "transitions": [
            {"from": s, "action": a, "to": t,
             "mu": truth.means[(s, a)].tolist(),
             "cov": truth.covs[(s, a)].tolist()}
            for s, a, t in sorted(ts.edges())
        ],
    }


def _model_from_dict(doc: dict) -> tuple[TransitionSystem, TrueCostModel]:
    if doc.get("schema") != MODEL_SCHEMA:
        raise ModelError(f"unsupported model schema {doc.get('schema')!r}")
    n_obj = int(doc["n_objectives"])
    states = doc["states"]
    transitions = {}
    means = {}
    covs = {}
    for edge in doc["transitions"]:
        key = (int(edge["from"]), edge["action"])
        transitions[key] = int(edge["to"])
        means[key] = edge["mu"]
        covs[key] = edge["cov"]
    ts = TransitionSystem(
        n_states=len(states),
        actions=doc["actions"],
        transitions=transitions,
        ap=doc["ap"],
        labels=[st["label"] for st in states],
        n_objectives=n_obj,
        state_names=[st.get("name", str(i)) for i, st in enumerate(states)],
    )
    truth = TrueCostModel(n_obj, means, covs)
    return ts, truth


def _is_file(source: str) -> bool:
    try:
        return Path(source).is_file()
    except OSError:
        return False


def load_model(source) -> tuple[TransitionSystem, TrueCostModel]:
    """Load a model from a dict, JSON string, or file path (full or grid
    schema; files may be .json or .toml)."""
    if isinstance(source, Path) or (isinstance(source, str) and _is_file(source)):
        text = Path(source).read_text()
        if str(source).endswith(".toml"):
            try:
                import tomllib as toml
            except ModuleNotFoundError:
                import tomli as toml
            doc = toml.loads(text)
        else:
            doc = json.loads(text)
    elif isinstance(source, str):
        doc = json.loads(source)
    else:
        doc = source
    if doc.get("schema") == GRID_SCHEMA:
        doc = grid_to_model(doc)
    return _model_from_dict(doc)


def save_model(path, ts: TransitionSystem, truth: TrueCostModel) -> None:
    Path(path).write_text(json.dumps(model_to_dict(ts, truth), indent=1, sort_keys=True))


# ---------------------------------------------------------------------------
# Grid shorthand
# ---------------------------------------------------------------------------

def default_cov(mu) -> list:
    """Documented default: diagonal with std 10% of each mean component."""
    mu = np.asarray(mu, dtype=float)
    return np.diag((0.1 * mu) ** 2).tolist()


def grid_to_model(doc: dict) -> dict:
    """Elaborate the grid shorthand into the full model schema.

    Cells are 4-connected; moves into obstacles or off-grid are disabled.
    Labels come from ``regions``; the cost of an edge is decided by the cost
    region containing its *destination* cell (first match in declaration
    order), falling back to ``default_mu``/``default_cov``.
    """
    if doc.get("schema") != GRID_SCHEMA:
        raise ModelError(f"not a grid document: schema={doc.get('schema')!r}")
    width, height = int(doc["width"]), int(doc["height"])
    if width < 2 or height < 2:
        raise ModelError("grid dimensions must be at least 2x2")
    n_obj = int(doc.get("n_objectives", 2))
    obstacles = {tuple(c) for c in doc.get("obstacles", [])}
    cells = [(x, y) for y in range(height) for x in range(width)
             if (x, y) not in obstacles]
    index = {c: i for i, c in enumerate(cells)}

    regions = doc.get("regions", {})
    ap = sorted(regions)
    labels = []
    for cell in cells:
        labels.append(sorted(name for name, spec in regions.items()
                             if _cell_in_region(cell, spec)))

    cost_regions = doc.get("costs", [])
    default_mu = doc.get("default_mu", [1.0] + [0.0] * (n_obj - 1))
    default_cov_m = doc.get("default_cov", default_cov(default_mu))

    def edge_cost(dest_cell):
        for region in cost_regions:
            if _cell_in_region(dest_cell, region):
                mu = region["mu"]
                return mu, region.get("cov", default_cov(mu))
        return default_mu, default_cov_m

    transitions = []
    for (x, y) in cells:
        for action, (dx, dy) in _GRID_MOVES.items():
            dest = (x + dx, y + dy)
            if dest in index:
                mu, cov = edge_cost(dest)
                transitions.append({
                    "from": index[(x, y)], "action": action, "to": index[dest],
                    "mu": list(mu), "cov": [list(r) for r in np.asarray(cov, dtype=float)],
                })
    isolated = [c for c in cells
                if not any((c[0] + dx, c[1] + dy) in index
                           for dx, dy in _GRID_MOVES.values())]
    if isolated:
        raise ModelError(f"grid cells with no moves: {isolated}")
    return {
        "schema": MODEL_SCHEMA,
        "n_objectives": n_obj,
        "ap": ap,
        "actions": list(GRID_ACTIONS),
        "states": [{"name": f"{x},{y}", "label": labels[i]}
                   for i, (x, y) in enumerate(cells)],
        "transitions": transitions,
    }


def _cell_in_region(cell, spec) -> bool:
    if "cells" in spec:
        return list(cell) in [list(c) for c in spec["cells"]]
    if "rect" in spec:
        x0, y0, x1, y1 = spec["rect"]
        return x0 <= cell[0] <= x1 and y0 <= cell[1] <= y1
    raise ModelError("region needs 'cells' or 'rect'")


def grid_cell_index(doc: dict, cell) -> int:
    """Dense state id of a grid cell in the elaborated model."""
    width, height = int(doc["width"]), int(doc["height"])
    obstacles = {tuple(c) for c in doc.get("obstacles", [])}
    i = 0
    for y in range(height):
        for x in range(width):
            if (x, y) in obstacles:
                continue
            if (x, y) == tuple(cell):
                return i
            i += 1
    raise ModelError(f"cell {cell} is an obstacle or out of range")
