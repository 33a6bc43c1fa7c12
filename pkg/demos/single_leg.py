"""Learn one leg between two cells and compare it with breadth-first search.

    python demos/single_leg.py [seed]
"""

import sys

from swarmcover import CoverageEnv, LearningConfig, build_grid, random_pillars, shortest_path_oracle, train
from swarmcover.gridworld import CellIndex

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
grid = build_grid((400, 400, 200), 20, (120, 180))
start, goal = CellIndex(0, 0, 7), CellIndex(15, 17, 7)
obstacles = random_pillars(grid, 40, (0, 200), seed=seed, keep_free=[start, goal])

oracle = shortest_path_oracle(grid, obstacles, start, goal)
print(f"grid {grid.counts}, {obstacles.density():.0%} of columns hold a pillar")
print(f"breadth-first optimum: {oracle.steps} steps ({oracle.loss_m:.0f} m)")

result = train(CoverageEnv(grid, obstacles), start, goal, LearningConfig(seed=seed))
curve = result.curve
print(f"trained {len(curve)} episodes (block of 40, extended until the greedy path settled)")
for ep in (0, 9, 39, len(curve) // 2, len(curve) - 1):
    print(f"  episode {ep:5d}: {curve.steps[ep]:4d} steps, reward {curve.total_reward[ep]:8.1f}, "
          f"epsilon {curve.epsilon[ep]:.3f}")
print(f"greedy trajectory: {result.trajectory.steps} steps ({result.trajectory.loss_m:.0f} m)")
print(f"first episode within 10% of optimum for 5 in a row: {curve.converged_episode(oracle.steps)}")
