"""Multi-objective temporal-logic planning with Bayesian cost learning.

The library plans task-completing action sequences on a labeled transition
system whose edge costs are unknown stochastic vectors, keeps a conjugate
belief per edge, searches for the Pareto front under confidence-bound
weights, selects among candidates by an expected-free-energy score against
a user preference distribution, and tracks learning quality with
Pareto-regret and a Wasserstein front-bias metric.
"""

from .belief import (
    CostBelief,
    NiwParams,
    VecMoments,
    convolved_moments,
    mvn_entropy,
    normality_diagnostic,
    param_moments,
    posterior_update,
)
from .harness import (
    EpisodeRecord,
    PriorSpec,
    ScenarioConfig,
    builtin_scenarios,
    generate_random_grid,
    run_episode_loop,
    true_front,
)
from .ltlf import (
    Dfa,
    LtlfFormula,
    first_satisfaction_language,
    holds,
    parse,
    print_formula,
    to_dfa,
)
from .metrics import FrontPoint, cumulative_regret, pareto_bias, pareto_regret, w2_gaussian
from .model import (
    Plan,
    TransitionSystem,
    TrueCostModel,
    induce_trajectory,
    load_model,
    sample_cost,
    save_model,
    trace_of,
)
from .mosearch import FrontEntry, ParetoFrontResult, dominates, lcb_weight, pareto_search
from .product import ProductAutomaton, build_product, is_satisfying
from .select import (
    EfeBreakdown,
    PlanCandidate,
    PreferenceDist,
    efe_term1,
    efe_term2,
    efe_term3,
    select_aif,
    select_topsis,
    select_uniform,
    select_weights,
)

__version__ = "0.1.0"
