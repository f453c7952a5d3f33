"""Robustness-of-teleportation toolkit.

Quantifies how far a teleportation experiment sits outside the classical
(measure-and-prepare) set, and builds the operational tasks whose optimal
advantage equals one plus that robustness: correlation-teleportation games
and subchannel discrimination with quantum side information.
"""

__version__ = "0.1.0"
