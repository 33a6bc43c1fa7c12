"""Compiled inner loops. Random numbers are drawn by the caller and passed in,
so the compiled and interpreted versions (``.py_func``) consume identical
streams."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def run_episodes(
    q,
    nxt,
    blocked,
    start,
    target,
    eps,
    alpha,
    gamma,
    r_step,
    r_goal,
    r_collision,
    uniforms,
    steps_out,
    reward_out,
    reached_out,
):
    """Tabular Q-learning with epsilon-greedy selection, one row of ``uniforms`` per episode.

    ``uniforms[ep, t, 0]`` decides explore vs exploit, ``uniforms[ep, t, 1]``
    picks the random action. Updates ``q`` in place.
    """
    n_actions = nxt.shape[1]
    max_steps = uniforms.shape[1]
    legal = np.empty(n_actions, dtype=np.int64)
    for ep in range(eps.shape[0]):
        s = start
        total = 0.0
        steps = 0
        reached = False
        for t in range(max_steps):
            k = 0
            for a in range(n_actions):
                if nxt[s, a] >= 0:
                    legal[k] = a
                    k += 1
            if k == 0:
                break
            if uniforms[ep, t, 0] < eps[ep]:
                j = int(uniforms[ep, t, 1] * k)
                if j >= k:
                    j = k - 1
                a = legal[j]
            else:
                a = legal[0]
                best = q[s, a]
                for j in range(1, k):
                    if q[s, legal[j]] > best:
                        best = q[s, legal[j]]
                        a = legal[j]
            s2 = nxt[s, a]
            hit = s2 == target
            crash = blocked[s2]
            if hit:
                r = r_goal
            elif crash:
                r = r_collision
            else:
                r = r_step
            boot = 0.0
            if not (hit or crash):
                first = True
                for b in range(n_actions):
                    if nxt[s2, b] >= 0:
                        if first or q[s2, b] > boot:
                            boot = q[s2, b]
                            first = False
            q[s, a] += alpha * (r + gamma * boot - q[s, a])
            total += r
            steps += 1
            s = s2
            if hit or crash:
                reached = hit
                break
        steps_out[ep] = steps
        reward_out[ep] = total
        reached_out[ep] = reached


@njit(cache=True)
def random_walk(nxt, start, target, uniforms):
    """Uniform random legal moves; returns visited states (start first).

    Stops on ``target`` or when ``uniforms`` is exhausted; the caller checks
    whether the last state is the target.
    """
    n_actions = nxt.shape[1]
    path = np.empty(uniforms.shape[0] + 1, dtype=np.int64)
    path[0] = start
    s = start
    n = 1
    legal = np.empty(n_actions, dtype=np.int64)
    for t in range(uniforms.shape[0]):
        if s == target:
            break
        k = 0
        for a in range(n_actions):
            if nxt[s, a] >= 0:
                legal[k] = nxt[s, a]
                k += 1
        if k == 0:
            break
        j = int(uniforms[t] * k)
        if j >= k:
            j = k - 1
        s = legal[j]
        path[n] = s
        n += 1
    return path[:n]
