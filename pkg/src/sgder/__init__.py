"""Learning-rate schedules with escalating restarts, and tools to evaluate them."""

__version__ = "0.1.0"
