"""grounder: a teachable natural-language command agent.

Grounds user commands to API actions through seed-command matching, detects
commands it has never seen, asks targeted clarification questions under a
strict question budget, learns new seed commands and facts from its users,
and cross-verifies user-taught knowledge across the user population.
"""

from .agent import Agent, AgentSettings
from .config import DomainConfig, demo_config, load_config
from .knowledge import KnowledgeBase
from .matching import NoveltyBand, Thresholds, classify_novelty, novelty_report, similarity
from .persistence import load_snapshot, restore_agent, save_snapshot
from .simulator import Scenario, load_scenario, run_scenario
from .store import SeedCommandStore
from .text import tokenize
from .world import WorldState

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "AgentSettings",
    "DomainConfig",
    "KnowledgeBase",
    "NoveltyBand",
    "Scenario",
    "SeedCommandStore",
    "Thresholds",
    "WorldState",
    "classify_novelty",
    "demo_config",
    "load_config",
    "load_scenario",
    "load_snapshot",
    "novelty_report",
    "restore_agent",
    "run_scenario",
    "save_snapshot",
    "similarity",
    "tokenize",
    "__version__",
]
