"""Coverage planning for a hierarchical UAV swarm over a discretised 3D area.

The pipeline: link budgets give the swarm coverage radius, K-means over the
ground users picks hovering points, and tabular Q-learning plans an
obstacle-avoiding trajectory through them, checked against breadth-first
search.
"""

from .clustering import (
    GroundUserSet,
    HoveringPlan,
    HoveringPoint,
    KMeansResult,
    best_of_restarts,
    evaluate_coverage,
    generate_users,
    kmeans,
    select_hovering_plan,
)
from .errors import (
    ConfigurationError,
    ConsistencyError,
    DeadEndError,
    GridBoundsError,
    IllegalActionError,
    InfeasibleLegError,
    InfeasibleMissionError,
    LinkBudgetError,
    PolicyNotConvergedError,
    SwarmCoverError,
)
from .gridworld import (
    ACTIONS,
    CellIndex,
    GridSpace,
    ObstacleMap,
    build_grid,
    cell_center,
    is_collision,
    legal_neighbors,
    random_pillars,
)
from .linkbudget import (
    A2AParams,
    A2GParams,
    SwarmGeometry,
    a2g_rate_bps,
    max_a2a_distance_m,
    max_a2g_distance_m,
    path_loss_db,
    received_power_dbm,
    swarm_geometry,
    swarm_radius_m,
    tuav_cover_radius_m,
)
from .mdp_env import CoverageEnv, EnvState, StepOutcome, discounted_return
from .planner import MissionConfig, MissionPlan, order_targets, plan_mission, random_walk_baseline, shortest_path_oracle
from .qlearning import (
    ConstantEpsilon,
    ExponentialDecay,
    LearningConfig,
    LearningCurve,
    LinearDecay,
    QTable,
    epsilon_at,
    greedy_rollout,
    select_action,
    train,
    update,
)
from .trajectory import Trajectory

__version__ = "0.1.0"
