"""studyloop: a persuasive study-habit engine.

Scores students against three published study-habit regression models,
runs motivation/ability-gated habit loops for scheduling, class
preparation and group study, and exposes the whole feature set through an
HTTP API, an operator CLI and a deterministic simulation harness.
"""
from .config import EngineConfig
from .engine import Engine
from .store import Store

__version__ = "0.1.0"

__all__ = ["Engine", "EngineConfig", "Store", "__version__"]
