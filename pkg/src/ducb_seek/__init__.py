"""Multi-agent on-line extremum seeking with a marginal (dummy) UCB planner."""

__version__ = "0.1.0"
