"""Domain configuration: actions, slot types, seeds, grammars, and rules.

One JSON file describes everything a deployment needs. Field names are the
contract (see README); the ``version`` field is mandatory. The packaged
demo domain (smart-home lights plus a small trivia knowledge setup) backs
the REPL, the server default, and most tests.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .agent import Agent, AgentSettings
from .commands import (
    ApiAction,
    ArgSpec,
    Provenance,
    SlotType,
    parse_pattern,
    parse_rule_pattern,
)
from .knowledge import HOLE, ExtractionRule, KnowledgeBase, QuestionRule
from .matching import Thresholds
from .store import SeedCommandStore
from .text import tokenize
from .world import Room, WorldState

CONFIG_VERSION = 1
CONFIG_ENV_VAR = "GROUNDER_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ParaphraseGrammar:
    templates: tuple[str, ...]
    synonyms: dict[str, tuple[str, ...]] = field(default_factory=dict)


@dataclass
class DomainConfig:
    slot_types: dict[str, SlotType]
    actions: dict[str, ApiAction]
    seed_patterns: list[tuple[str, str]]  # (action id, pattern text)
    paraphrases: dict[str, ParaphraseGrammar]
    relevance_keywords: list[str] | None
    rooms: dict[str, Room]
    extraction_rules: tuple[ExtractionRule, ...]
    question_rules: tuple[QuestionRule, ...]
    properties: dict[str, tuple[str, ...]]
    seeded_facts: list[dict]
    settings: AgentSettings
    verification: dict[str, int]

    def build_store(self) -> SeedCommandStore:
        store = SeedCommandStore()
        for action in self.actions.values():
            store.register_action(action)
        for action_id, pattern_text in self.seed_patterns:
            pattern = parse_pattern(pattern_text, store.action(action_id))
            store.add(pattern, action_id, Provenance.developer())
        return store

    def build_kb(self) -> KnowledgeBase:
        kb = KnowledgeBase(
            extraction_rules=self.extraction_rules,
            question_rules=self.question_rules,
            properties=dict(self.properties),
            **self.verification,
        )
        for fact in self.seeded_facts:
            kb.add_fact(
                tuple(tokenize(fact["head"])),
                fact["relation"],
                tuple(tokenize(fact["tail"])),
                source_kind="seeded",
                source_user=None,
                verified=bool(fact.get("verified", False)),
            )
        return kb

    def build_world(self) -> WorldState:
        return WorldState(
            rooms={name: Room(room.light_on, room.color) for name, room in self.rooms.items()}
        )

    def build_agent(self) -> Agent:
        return Agent(
            store=self.build_store(),
            kb=self.build_kb(),
            world=self.build_world(),
            slot_types=dict(self.slot_types),
            settings=self.settings,
            relevance_keywords=self.relevance_keywords,
        )


def parse_config(raw: dict) -> DomainConfig:
    if raw.get("version") != CONFIG_VERSION:
        raise ConfigError(
            f"config version must be {CONFIG_VERSION}, got {raw.get('version')!r}"
        )

    slot_types = {}
    for entry in raw.get("slot_types", []):
        lexicon = entry.get("lexicon")
        slot_types[entry["id"]] = SlotType(
            id=entry["id"],
            lexicon=(
                frozenset(tuple(tokenize(value)) for value in lexicon)
                if lexicon is not None
                else None
            ),
        )

    actions = {}
    for entry in raw.get("actions", []):
        args = tuple(
            ArgSpec(a["name"], a["slot_type"], a["prompt"]) for a in entry.get("args", [])
        )
        for a in args:
            if a.slot_type not in slot_types:
                raise ConfigError(f"action {entry['id']}: unknown slot type {a.slot_type}")
        actions[entry["id"]] = ApiAction(
            id=entry["id"],
            name=entry["name"],
            args=args,
            gloss=entry["gloss"],
            done_gloss=entry["done_gloss"],
            task_id=entry.get("task_id", "default"),
        )

    seeds = [(e["action"], e["pattern"]) for e in raw.get("seed_commands", [])]
    for action_id, _ in seeds:
        if action_id not in actions:
            raise ConfigError(f"seed command references unknown action {action_id}")

    paraphrases = {
        action_id: ParaphraseGrammar(
            templates=tuple(entry["templates"]),
            synonyms={k: tuple(v) for k, v in entry.get("synonyms", {}).items()},
        )
        for action_id, entry in raw.get("paraphrases", {}).items()
    }

    extraction_rules = tuple(
        ExtractionRule(
            pattern=parse_rule_pattern(entry["pattern"]),
            head=entry["triple"][0],
            relation=entry["triple"][1],
            tail=entry["triple"][2],
        )
        for entry in raw.get("extraction_rules", [])
    )
    question_rules = tuple(
        QuestionRule(
            pattern=parse_rule_pattern(entry["pattern"]),
            head=entry["triple"][0],
            relation=entry["triple"][1],
            tail=entry["triple"][2],
        )
        for entry in raw.get("question_rules", [])
    )
    for rule in question_rules:
        if HOLE not in (rule.head, rule.tail):
            raise ConfigError("question rule needs a ? hole")

    agent_raw = dict(raw.get("agent", {}))
    thresholds_raw = agent_raw.pop("thresholds", {})
    try:
        settings = AgentSettings(thresholds=Thresholds(**thresholds_raw), **agent_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad agent settings: {exc}") from exc

    verification = {
        "required_yes": 3,
        "required_no": 2,
        "offer_limit": 5,
    }
    verification.update(raw.get("verification", {}))

    return DomainConfig(
        slot_types=slot_types,
        actions=actions,
        seed_patterns=seeds,
        paraphrases=paraphrases,
        relevance_keywords=raw.get("relevance_keywords"),
        rooms={
            name: Room(
                light_on=bool(state.get("light_on", False)),
                color=state.get("color", "white"),
            )
            for name, state in raw.get("rooms", {}).items()
        },
        extraction_rules=extraction_rules,
        question_rules=question_rules,
        properties={k: tuple(v) for k, v in raw.get("properties", {}).items()},
        seeded_facts=list(raw.get("facts", [])),
        settings=settings,
        verification=verification,
    )


def load_config(path: str | Path) -> DomainConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(json.load(fh))


def default_config_path() -> str | None:
    return os.environ.get(CONFIG_ENV_VAR)


def demo_config() -> DomainConfig:
    """The packaged lights-and-trivia demo domain."""
    data = resources.files("grounder.data").joinpath("demo_lights.json").read_text()
    return parse_config(json.loads(data))
