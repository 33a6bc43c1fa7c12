"""Exception types shared across the package."""

from __future__ import annotations


class SwarmCoverError(Exception):
    """Base class for every error raised by swarmcover."""


class ConfigurationError(SwarmCoverError, ValueError):
    """Invalid dimensions, parameters or configuration values."""


class GridBoundsError(SwarmCoverError, IndexError):
    """A cell index lies outside the grid."""


class LinkBudgetError(SwarmCoverError, ValueError):
    """A link-budget quantity is undefined for the given inputs."""


class IllegalActionError(SwarmCoverError):
    """An action was applied that is not in the legal set of the current cell."""


class DeadEndError(SwarmCoverError):
    """No legal action exists from the current cell."""


class InfeasibleLegError(SwarmCoverError):
    """The target of a leg cannot be reached from its start."""


class InfeasibleMissionError(InfeasibleLegError):
    """A hovering point of a mission cannot be reached."""


class PolicyNotConvergedError(SwarmCoverError):
    """A greedy rollout looped or ran past its step cap."""


class ConsistencyError(SwarmCoverError, AssertionError):
    """An assembled trajectory violates a constraint it was built to satisfy."""
