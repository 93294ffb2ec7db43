"""Episode loop and scenario plumbing.

Each decision instance runs four phases: plan a Pareto front of
task-completing candidates under confidence-bound weights, select one
(free-energy scoring or a baseline), execute it against the hidden true
cost model, and fold the observed costs into the per-edge beliefs.  The
next instance starts where the plan ended.

Also provides the built-in scenarios, a reproducible random grid
generator, and the CSV writers the plotting layer consumes.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .belief import CostBelief
from .ltlf import holds, parse, to_dfa
from .metrics import FrontPoint, pareto_bias, pareto_regret
from .model import (
    Plan,
    TransitionSystem,
    TrueCostModel,
    grid_cell_index,
    load_model,
    plan_edges,
    sample_cost,
    trace_of,
)
from .mosearch import FrontEntry, ParetoFrontResult, lcb_weight, pareto_search
from .product import build_product
from .select import (
    EfeBreakdown,
    PlanCandidate,
    PreferenceDist,
    select_aif,
    select_topsis,
    select_uniform,
    select_weights,
)

__all__ = [
    "HarnessError",
    "RepetitionError",
    "resolve_start",
    "SafetyViolationError",
    "PriorSpec",
    "ScenarioConfig",
    "EpisodeRecord",
    "run_episode_loop",
    "true_front",
    "generate_random_grid",
    "builtin_scenarios",
    "ladder_model",
    "episodes_csv",
    "front_snapshots_csv",
    "efe_csv",
    "write_run_outputs",
]

SELECTORS = ("aif", "uniform", "weights", "topsis")


class HarnessError(RuntimeError):
    pass


class RepetitionError(HarnessError):
    """An episode ended in a state from which the task restarts trivially
    or cannot be completed again."""


class SafetyViolationError(HarnessError):
    """An executed plan failed the independent semantic task check."""


@dataclass
class PriorSpec:
    """Belief hyperparameters shared by every edge at the start of a run."""

    lam0: list | None = None
    kappa0: float = 1.0
    scale0: float = 1.0
    nu0: float | None = None

    def to_dict(self) -> dict:
        return {"lam0": self.lam0, "kappa0": self.kappa0,
                "scale0": self.scale0, "nu0": self.nu0}


@dataclass
class ScenarioConfig:
    model: dict | str
    formula: str
    start: object
    preference_mean: list
    preference_cov: list
    alpha: float = 0.1
    n_s: int = 300
    instances: int = 1
    seed: int = 0
    selector: str = "aif"
    weights: list | None = None
    prior: PriorSpec = field(default_factory=PriorSpec)
    name: str = "scenario"

    def __post_init__(self):
        if self.instances < 1:
            raise HarnessError("instance count must be at least 1")
        if self.alpha < 0:
            raise HarnessError("alpha must be non-negative")
        if self.n_s < 1:
            raise HarnessError("sample count must be at least 1")
        if self.selector not in SELECTORS:
            raise HarnessError(f"unknown selector {self.selector!r}")
        if self.selector == "weights" and self.weights is None:
            raise HarnessError("selector 'weights' needs a weight vector")
        if isinstance(self.prior, dict):
            self.prior = PriorSpec(**self.prior)

    def preference(self) -> PreferenceDist:
        return PreferenceDist(np.asarray(self.preference_mean, dtype=float),
                              np.asarray(self.preference_cov, dtype=float))

    def to_dict(self) -> dict:
        return {
            "name": self.name, "model": self.model, "formula": self.formula,
            "start": self.start, "preference_mean": list(self.preference_mean),
            "preference_cov": [list(r) for r in self.preference_cov],
            "alpha": self.alpha, "n_s": self.n_s, "instances": self.instances,
            "seed": self.seed, "selector": self.selector,
            "weights": self.weights, "prior": self.prior.to_dict(),
        }

    @staticmethod
    def from_dict(doc: dict) -> "ScenarioConfig":
        doc = dict(doc)
        if "prior" in doc and isinstance(doc["prior"], dict):
            doc["prior"] = PriorSpec(**doc["prior"])
        return ScenarioConfig(**doc)


@dataclass
class EpisodeRecord:
    instance: int
    start_state: int
    front: list[FrontEntry]
    true_points: list[FrontPoint]
    chosen_index: int
    efe: list[EfeBreakdown] | None
    executed_edges: list[tuple[int, str]]
    samples: np.ndarray
    true_mean: np.ndarray
    regret: float
    bias: float
    plan_seconds: float
    select_seconds: float
    k_g: int

    @property
    def chosen(self) -> FrontEntry:
        return self.front[self.chosen_index]


def resolve_start(cfg: "ScenarioConfig") -> int:
    """State id of the configured start (cell coordinates for grid models)."""
    if isinstance(cfg.start, int):
        return cfg.start
    doc = cfg.model
    if isinstance(doc, (str, Path)):
        doc = json.loads(Path(doc).read_text() if Path(str(doc)).is_file()
                         else str(doc))
    if isinstance(doc, dict) and doc.get("schema") == "grid-1":
        return grid_cell_index(doc, cfg.start)
    raise HarnessError(f"cannot resolve start {cfg.start!r} for this model")


def true_front(ts: TransitionSystem, truth: TrueCostModel, dfa,
               start: int) -> ParetoFrontResult:
    """Ground-truth Pareto front from ``start``: search with exact means."""
    product = build_product(ts, dfa, start)
    return pareto_search(
        product,
        weight_fn=lambda s, a: truth.mean(s, a),
        moments_fn=lambda s, a: (truth.mean(s, a), truth.cov(s, a)),
    )


def _check_safety(formula, ts, plan: Plan) -> None:
    trace = trace_of(ts, plan)
    ok = holds(formula, trace) and not any(
        holds(formula, trace[:k]) for k in range(1, len(trace)))
    if not ok:
        raise SafetyViolationError(
            f"executed plan {plan.actions} fails the task oracle")


def run_episode_loop(cfg: ScenarioConfig, ts: TransitionSystem | None = None,
                     truth: TrueCostModel | None = None) -> list[EpisodeRecord]:
    """Run the configured number of decision instances and record everything.

    Products and true fronts are cached per start state; the belief store
    and counters persist across instances.  Every executed plan is checked
    against the semantic task oracle, independent of the planner.
    """
    if ts is None:
        ts, truth = load_model(cfg.model)
    formula = parse(cfg.formula, ts.ap)
    dfa = to_dfa(formula, ts.ap)
    pref = cfg.preference()
    prior = cfg.prior
    lam0 = None if prior.lam0 is None else np.asarray(prior.lam0, dtype=float)
    belief = CostBelief.initialize(ts, lam0=lam0, kappa0=prior.kappa0,
                                   scale0=prior.scale0, nu0=prior.nu0)
    state = resolve_start(cfg)

    products: dict[int, object] = {}
    fronts_true: dict[int, ParetoFrontResult] = {}
    records: list[EpisodeRecord] = []
    for instance in range(1, cfg.instances + 1):
        t_plan = time.perf_counter()
        product = products.get(state)
        if product is None:
            product = build_product(ts, dfa, state)
            products[state] = product
        if product.start in product.accepting:
            raise RepetitionError(
                f"episode {instance}: start state {state} already completes "
                f"the task; the scenario violates the restart assumption")
        k_g = max(1, belief.k_g)
        front = pareto_search(
            product,
            weight_fn=lambda s, a: lcb_weight(belief, s, a, cfg.alpha, k_g),
            moments_fn=lambda s, a: (belief.posterior_mean(s, a),
                                     belief.posterior_mean_cov(s, a)),
        )
        plan_seconds = time.perf_counter() - t_plan

        if state not in fronts_true:
            fronts_true[state] = true_front(ts, truth, dfa, state)
        truth_front = fronts_true[state]

        t_sel = time.perf_counter()
        candidates = [
            PlanCandidate(plan=e.plan, edges=tuple(plan_edges(ts, e.plan)),
                          mean=e.mean, cov=e.cov)
            for e in front
        ]
        efe = None
        if cfg.selector == "aif":
            chosen_index, efe = select_aif(candidates, belief, pref, cfg.n_s,
                                           seed=(cfg.seed, 1, instance))
        elif cfg.selector == "uniform":
            rng_sel = np.random.default_rng(
                np.random.SeedSequence(entropy=(cfg.seed, 2, instance)))
            chosen_index = select_uniform(len(candidates), rng_sel)
        elif cfg.selector == "weights":
            chosen_index = select_weights(front.means(), cfg.weights)
        else:
            chosen_index = select_topsis(front.means())
        select_seconds = time.perf_counter() - t_sel

        chosen = candidates[chosen_index]
        _check_safety(formula, ts, chosen.plan)

        exec_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=(cfg.seed, 3, instance)))
        samples = np.array([sample_cost(truth, s, a, exec_rng)
                            for s, a in chosen.edges])
        true_mean = np.sum([truth.mean(s, a) for s, a in chosen.edges], axis=0)

        regret = pareto_regret(truth_front.costs(), true_mean)
        est_points = [FrontPoint(e.mean, e.cov) for e in front]
        true_points = [FrontPoint(e.mean, e.cov) for e in truth_front]
        bias = pareto_bias(true_points, est_points)

        by_edge: dict[tuple[int, str], list] = {}
        for (s, a), c in zip(chosen.edges, samples):
            by_edge.setdefault((s, a), []).append(c)
        for (s, a), rows in by_edge.items():
            belief.update(s, a, np.array(rows))

        state = product.system_state(product.run_of(chosen.plan)[-1])
        records.append(EpisodeRecord(
            instance=instance, start_state=chosen.plan.start,
            front=list(front), true_points=true_points,
            chosen_index=chosen_index, efe=efe,
            executed_edges=list(chosen.edges), samples=samples,
            true_mean=true_mean, regret=regret, bias=bias,
            plan_seconds=plan_seconds, select_seconds=select_seconds,
            k_g=belief.k_g))
    return records


# ---------------------------------------------------------------------------
# Scenario generators
# ---------------------------------------------------------------------------

def ladder_model(n_rungs: int, fast=(1.0, 4.0), safe=(4.0, 1.0),
                 return_cost=(1.0, 1.0), rel_std: float = 0.1) -> dict:
    """Chain of binary trade-offs: each rung offers a fast-risky and a
    slow-safe action, so the true front has exactly n_rungs+1 points."""
    n = n_rungs
    states = [{"name": f"rung{i}", "label": []} for i in range(n + 1)]
    states[0] = {"name": "home", "label": ["home"]}
    states[n]["label"] = ["top"]

    def cov(mu):
        return np.diag((rel_std * np.asarray(mu, dtype=float)) ** 2).tolist()

    transitions = []
    for i in range(n):
        transitions.append({"from": i, "action": "fast", "to": i + 1,
                            "mu": list(fast), "cov": cov(fast)})
        transitions.append({"from": i, "action": "safe", "to": i + 1,
                            "mu": list(safe), "cov": cov(safe)})
    transitions.append({"from": n, "action": "return", "to": 0,
                        "mu": list(return_cost), "cov": cov(return_cost)})
    return {
        "schema": "dts-sc-1", "n_objectives": 2, "ap": ["home", "top"],
        "actions": ["fast", "safe", "return"],
        "states": states, "transitions": transitions,
    }


def rover_grid() -> dict:
    """Hand-authored sample-and-return map.

    Four parallel east-west corridors ("tongues") bridge a west connector
    (drop-off bay below it) and an east connector.  Each tongue has its own
    profile: more serpentine teeth mean a longer drive, fewer sunny cells
    mean less radiation, so the tongues form an efficiency/exposure ladder
    and every round trip picks one tongue per leg.  The shaded collection
    site sits above the east connector, a sunny one below it (faster but
    irradiated), and a sandy spur off the first tongue forces a wash-down
    before returning to base.  Region mean costs follow the mission
    profile; covariances are diagonal with 10% relative spread.
    """
    width, height = 27, 10
    east = width - 1
    tongues = [
        {"row": 1, "teeth": [], "sun": [4, 8, 12, 16, 20, 24]},
        {"row": 3, "teeth": [5, 11, 17], "sun": [3, 9, 15, 21]},
        {"row": 5, "teeth": [5, 9, 13, 17, 21], "sun": [3, 11]},
        {"row": 7, "teeth": [3, 7, 11, 15, 19, 23], "sun": []},
    ]
    pockets = {
        "deposit": [[0, 0], [1, 0]],
        "wash": [[3, 0]],
        "sand": [[5, 0], [6, 0]],
        "sample_hot": [[east - 2, 9]],
        "sample_cool": [[east - 1, 9], [east, 9]],
    }
    open_cells = {tuple(c) for cells in pockets.values() for c in cells}
    open_cells |= {(0, y) for y in range(1, 9)}        # west connector
    open_cells |= {(east, y) for y in range(1, 9)}     # east connector
    sun_cells = []
    for t in tongues:
        row, teeth = t["row"], set(t["teeth"])
        for x in range(1, east):
            if x not in teeth:
                open_cells.add((x, row))
        for p in teeth:                                # serpentine detours
            open_cells |= {(p - 1, row + 1), (p, row + 1), (p + 1, row + 1)}
        sun_cells += [[x, row] for x in t["sun"]]
    obstacles = [[x, y] for y in range(height) for x in range(width)
                 if (x, y) not in open_cells]

    costs = [
        {"cells": pockets["sand"], "mu": [3.0, 7.0]},
        {"cells": pockets["wash"], "mu": [11.0, 31.0]},
        {"cells": pockets["sample_hot"], "mu": [6.0, 16.0]},
        {"cells": pockets["sample_cool"], "mu": [6.0, 0.0]},
        {"cells": sun_cells, "mu": [1.0, 1.0]},
    ]
    return {
        "schema": "grid-1", "width": width, "height": height,
        "n_objectives": 2, "obstacles": obstacles,
        "regions": {
            "sample": {"cells": pockets["sample_hot"] + pockets["sample_cool"]},
            "deposit": {"cells": pockets["deposit"]},
            "base": {"cells": pockets["deposit"]},
            "sand": {"cells": pockets["sand"]},
            "wash": {"cells": pockets["wash"]},
            "sun": {"cells": sun_cells + pockets["sample_hot"]},
        },
        "costs": costs,
        "default_mu": [1.0, 0.0],
    }


ROVER_FORMULA = "F(sample & F(deposit)) & G(sand -> (!base U wash))"
DISHWASHER_FORMULA = "F(wash & F(dry))"


def dishwasher_model() -> dict:
    """Five-state loader: four resting configurations and one loaded state.

    Unload variants trade execution time against carrying risk; values are
    chosen so the slow-and-careful option sits near the preference used in
    the built-in scenario.
    """
    states = [
        {"name": "Jf,Pf", "label": ["dry"]},
        {"name": "Jr,Pf", "label": ["dry"]},
        {"name": "Jr,Pr", "label": ["dry"]},
        {"name": "Jf,Pr", "label": ["dry"]},
        {"name": "Jd,Pd", "label": ["wash"]},
    ]
    unloads = {
        "unload_1": (0, [80.0, 1.40]),    # everything on the rack: fast, risky
        "unload_2": (1, [140.0, 0.90]),
        "unload_3": (2, [200.0, 0.25]),
        "unload_4": (3, [260.0, 0.10]),   # towel-dry on the floor: slow, safe
    }
    transitions = []
    for s in range(4):
        transitions.append({"from": s, "action": "load", "to": 4,
                            "mu": [150.0, 0.30],
                            "cov": [[225.0, 0.0], [0.0, 0.0009]]})
    for action, (dest, mu) in unloads.items():
        transitions.append({"from": 4, "action": action, "to": dest,
                            "mu": mu,
                            "cov": np.diag((0.1 * np.asarray(mu)) ** 2).tolist()})
    return {
        "schema": "dts-sc-1", "n_objectives": 2, "ap": ["dry", "wash"],
        "actions": ["load"] + sorted(unloads),
        "states": states, "transitions": transitions,
    }


def builtin_scenarios() -> dict[str, ScenarioConfig]:
    """Named ready-to-run scenarios; see each model builder for the maps."""
    rover = ScenarioConfig(
        name="rover",
        model=rover_grid(),
        formula=ROVER_FORMULA,
        start=[0, 0],
        preference_mean=[90.0, 6.0],
        preference_cov=[[140.0, -2.0], [-2.0, 70.0]],
        alpha=0.1, n_s=300, instances=150, seed=0, selector="aif",
        prior=PriorSpec(lam0=[0.5, 0.0], kappa0=0.1, scale0=0.25),
    )
    dishwasher = ScenarioConfig(
        name="dishwasher",
        model=dishwasher_model(),
        formula=DISHWASHER_FORMULA,
        start=0,
        preference_mean=[350.0, 0.5],
        preference_cov=[[400.0, 0.0], [0.0, 2.0]],
        alpha=0.1, n_s=300, instances=30, seed=0, selector="aif",
    )
    ladders = {}
    for name, rungs in (("fixed_small", 9), ("fixed_medium", 31),
                        ("fixed_large", 71)):
        ladders[name] = ScenarioConfig(
            name=name,
            model=ladder_model(rungs),
            formula="F(top & F(home))",
            start=0,
            preference_mean=[2.5 * rungs, 2.5 * rungs],
            preference_cov=[[rungs**2 / 4.0, 0.0], [0.0, rungs**2 / 4.0]],
            alpha=0.1, n_s=300, instances=100, seed=0, selector="aif",
        )
    return {"rover": rover, "dishwasher": dishwasher, **ladders}


def generate_random_grid(width: int, height: int, seed: int,
                         max_retries: int = 20) -> dict:
    """Randomized sample-and-return grid, reproducible per seed.

    Region placement, obstacles, and true region costs are all drawn from
    the seed; generation retries (bounded) until the task is feasible from
    the start cell.
    """
    if width < 2 or height < 2:
        raise HarnessError("grid dimensions must be at least 2x2")
    for attempt in range(max_retries):
        rng = np.random.default_rng(np.random.SeedSequence(
            entropy=(seed, attempt)))
        doc = _random_grid_once(width, height, rng)
        try:
            ts, truth = load_model(doc)
            dfa = to_dfa(parse(ROVER_FORMULA, ts.ap), ts.ap)
            start = grid_cell_index(doc, doc["start"])
            true_front(ts, truth, dfa, start)
            return doc
        except Exception:
            continue
    raise HarnessError(
        f"could not generate a feasible {width}x{height} grid from seed {seed}")


def _random_grid_once(width, height, rng) -> dict:
    def cell():
        return [int(rng.integers(width)), int(rng.integers(height))]

    def rect(w, h):
        x = int(rng.integers(max(1, width - w)))
        y = int(rng.integers(max(1, height - h)))
        return [x, y, min(x + w - 1, width - 1), min(y + h - 1, height - 1)]

    sample = rect(2, 2)
    deposit = rect(2, 1)
    sun = rect(width // 2, height // 2)
    sand = [cell()]
    wash = [cell()]
    region_cells = set()
    for r in (sample, deposit):
        for x in range(r[0], r[2] + 1):
            for y in range(r[1], r[3] + 1):
                region_cells.add((x, y))
    region_cells.update(map(tuple, sand + wash))
    n_obstacles = int(0.08 * width * height)
    obstacles = []
    while len(obstacles) < n_obstacles:
        c = cell()
        if tuple(c) not in region_cells and c not in obstacles:
            obstacles.append(c)
    start = [deposit[0], deposit[1]]
    sample_mu = [float(rng.uniform(4, 8)), float(rng.uniform(0, 20))]
    sand_mu = [float(rng.uniform(2, 4)), float(rng.uniform(5, 9))]
    wash_mu = [float(rng.uniform(8, 14)), float(rng.uniform(20, 40))]
    sun_mu = [1.0, float(rng.uniform(0.5, 1.5))]
    return {
        "schema": "grid-1", "width": width, "height": height,
        "n_objectives": 2, "obstacles": obstacles, "start": start,
        "regions": {
            "sample": {"rect": sample}, "deposit": {"rect": deposit},
            "base": {"rect": deposit}, "sand": {"cells": sand},
            "wash": {"cells": wash}, "sun": {"rect": sun},
        },
        "costs": [
            {"cells": sand, "mu": sand_mu},
            {"cells": wash, "mu": wash_mu},
            {"rect": sample, "mu": sample_mu},
            {"rect": sun, "mu": sun_mu},
        ],
        "default_mu": [1.0, 0.0],
    }


# ---------------------------------------------------------------------------
# CSV output (schemas versioned by column names; plans never contain commas)
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    return f"{float(x):.10g}"


def episodes_csv(records: list[EpisodeRecord], selector: str) -> str:
    n = len(records[0].true_mean)
    header = (["instance", "start_state", "selector", "front_size",
               "chosen_index", "plan", "plan_len"]
              + [f"est_mean_{i+1}" for i in range(n)]
              + [f"true_mean_{i+1}" for i in range(n)]
              + ["regret", "cum_regret", "bias", "cum_bias",
                 "plan_seconds", "select_seconds", "k_g"])
    rows = [",".join(header)]
    cum_r = 0.0
    cum_b = 0.0
    for r in records:
        cum_r += r.regret
        cum_b += r.bias
        chosen = r.chosen
        rows.append(",".join(
            [str(r.instance), str(r.start_state), selector, str(len(r.front)),
             str(r.chosen_index), ";".join(chosen.plan.actions),
             str(len(chosen.plan.actions))]
            + [_fmt(x) for x in chosen.mean]
            + [_fmt(x) for x in r.true_mean]
            + [_fmt(r.regret), _fmt(cum_r), _fmt(r.bias), _fmt(cum_b),
               _fmt(r.plan_seconds), _fmt(r.select_seconds), str(r.k_g)]))
    return "\n".join(rows) + "\n"


def front_snapshots_csv(records: list[EpisodeRecord]) -> str:
    n = len(records[0].true_mean)
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    header = (["instance", "point_index", "is_true_front", "plan"]
              + [f"mean_{i+1}" for i in range(n)]
              + [f"cov_{i+1}_{j+1}" for i, j in pairs])
    rows = [",".join(header)]
    for r in records:
        for flag, points in (("0", r.front), ("1", r.true_points)):
            for idx, p in enumerate(points):
                plan = ";".join(p.plan.actions) if flag == "0" else ""
                mean = p.mean
                cov = np.asarray(p.cov)
                rows.append(",".join(
                    [str(r.instance), str(idx), flag, plan]
                    + [_fmt(x) for x in mean]
                    + [_fmt(cov[i, j]) for i, j in pairs]))
    return "\n".join(rows) + "\n"


def efe_csv(records: list[EpisodeRecord]) -> str:
    header = ["instance", "candidate_index", "term1", "term2", "term3",
              "total", "chosen"]
    rows = [",".join(header)]
    for r in records:
        if r.efe is None:
            continue
        for idx, b in enumerate(r.efe):
            rows.append(",".join(
                [str(r.instance), str(idx), _fmt(b.term1),
                 _fmt(b.term2_prior_entropy),
                 _fmt(b.term3_expected_posterior_entropy), _fmt(b.total),
                 "1" if idx == r.chosen_index else "0"]))
    return "\n".join(rows) + "\n"


def write_run_outputs(out_dir, cfg: ScenarioConfig,
                      records: list[EpisodeRecord]) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "episodes": out / "episodes.csv",
        "front_snapshots": out / "front_snapshots.csv",
        "efe": out / "efe.csv",
        "config": out / "config.json",
    }
    paths["episodes"].write_text(episodes_csv(records, cfg.selector))
    paths["front_snapshots"].write_text(front_snapshots_csv(records))
    paths["efe"].write_text(efe_csv(records))
    paths["config"].write_text(json.dumps(cfg.to_dict(), indent=1, sort_keys=True))
    return paths
