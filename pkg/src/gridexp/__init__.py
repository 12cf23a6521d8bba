"""gridexp: reproducible computational experiments for power-system operations.

Runs unit-commitment decision models (deterministic, stochastic, rolling)
against an economic-dispatch emulator over seeded trials, archives the raw
outputs, and aggregates disaggregated performance metrics across trials.
"""

__version__ = "0.1.0"
