"""Odd coefficients of polynomial powers via 2-automatic linear representations."""

__version__ = "0.1.0"

from .automaton import Automaton, build, count_table, evaluate, validate  # noqa: E402
from .gf2poly import ParityPoly, RecurrenceSpec, odd_count  # noqa: E402
from .presets import PRESET_NAMES, automaton_for, preset  # noqa: E402

__all__ = ["Automaton", "PRESET_NAMES", "ParityPoly", "RecurrenceSpec", "__version__",
           "automaton_for", "build", "count_table", "evaluate", "odd_count", "preset",
           "validate"]
