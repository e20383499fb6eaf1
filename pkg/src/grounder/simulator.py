"""Deterministic multi-user simulation harness.

Scenarios script an ordered stream of episodes (action intents, statements,
questions) for a population of simulated users with behavioral profiles.
Each profile draws from its own RNG stream, derived by stable hashing from
the master seed and the user id, so adding a user never perturbs anyone
else's draws and every run is reproducible byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field

from .agent import (
    Agent,
    Answer,
    Apology,
    AskDeferred,
    AskRephrase,
    AskSlot,
    AskVerify,
    ExecuteResult,
    Options,
)
from .commands import parse_pattern, Provenance, render_option_text
from .config import DomainConfig, ParaphraseGrammar
from .matching import classify_novelty, novelty_report, similarity
from .store import SeedCommandStore
from .text import tokenize

SCENARIO_VERSION = 1

Triple = tuple[tuple[str, ...], str, tuple[str, ...]]


class NoGrammar(KeyError):
    pass


class ScenarioInvalid(ValueError):
    pass


@dataclass(frozen=True)
class SimUserProfile:
    user_id: str
    cooperativeness: float = 1.0
    lie_probability: float = 0.0
    knowledge: frozenset = frozenset()  # subset of the world's true triples
    demonstrates: bool = False

    def __post_init__(self):
        for p in (self.cooperativeness, self.lie_probability):
            if not (0.0 <= p <= 1.0):
                raise ScenarioInvalid(f"probability out of range: {p}")


@dataclass(frozen=True)
class Intent:
    action_id: str
    args: tuple[tuple[str, str], ...] = ()

    def args_dict(self) -> dict[str, str]:
        return dict(self.args)


@dataclass(frozen=True)
class Statement:
    text: str


@dataclass(frozen=True)
class Question:
    text: str


@dataclass(frozen=True)
class Episode:
    profile_id: str
    event: Intent | Statement | Question


@dataclass
class Scenario:
    profiles: dict[str, SimUserProfile]
    episodes: list[Episode]
    task_arrival: dict[int, str] = field(default_factory=dict)
    mode: str = "CCL"
    fact_ground_truth: frozenset = frozenset()

    def validate(self, config: DomainConfig) -> None:
        if self.mode not in ("CCL", "TCL"):
            raise ScenarioInvalid(f"mode must be CCL or TCL, got {self.mode}")
        enabled: set[str] = set()
        arrivals = sorted(self.task_arrival.items())
        for idx, episode in enumerate(self.episodes):
            while arrivals and arrivals[0][0] <= idx:
                enabled.add(arrivals.pop(0)[1])
            if episode.profile_id not in self.profiles:
                raise ScenarioInvalid(f"unknown profile {episode.profile_id}")
            if isinstance(episode.event, Intent):
                action = config.actions.get(episode.event.action_id)
                if action is None:
                    raise ScenarioInvalid(f"unknown action {episode.event.action_id}")
                if action.task_id not in enabled:
                    raise ScenarioInvalid(
                        f"episode {idx}: domain {action.task_id} not yet enabled"
                    )


def profile_rng(master_seed: int, user_id: str) -> random.Random:
    digest = hashlib.sha256(f"{master_seed}:{user_id}".encode()).hexdigest()
    return random.Random(int(digest, 16))


# -- natural-language generation for sim users ------------------------------


def paraphrase(
    intent: Intent,
    grammar: ParaphraseGrammar,
    rng: random.Random,
    exclude_template: int | None = None,
) -> tuple[str, int]:
    """One surface form of the intent; returns (text, template index)."""
    indices = list(range(len(grammar.templates)))
    if exclude_template is not None and len(indices) > 1:
        indices.remove(exclude_template)
    idx = rng.choice(indices)
    words = []
    for word in grammar.templates[idx].split():
        options = grammar.synonyms.get(word)
        words.append(rng.choice(options) if options else word)
    text = " ".join(words)
    return text.format(**intent.args_dict()), idx


def grammar_for(config: DomainConfig, action_id: str) -> ParaphraseGrammar:
    try:
        return config.paraphrases[action_id]
    except KeyError:
        raise NoGrammar(action_id) from None


# -- the per-episode driver -----------------------------------------------------


@dataclass
class EpisodeOutcome:
    outcome: str
    questions: int
    executed: tuple[str, tuple[tuple[str, str], ...]] | None
    first_template: int | None = None


class EpisodeDriver:
    """Plays one simulated user against the agent for one episode."""

    def __init__(self, agent: Agent, config: DomainConfig, scenario: Scenario,
                 profile: SimUserProfile, rng: random.Random):
        self.agent = agent
        self.config = config
        self.scenario = scenario
        self.profile = profile
        self.rng = rng

    def run_intent(self, intent: Intent, domain: str | None) -> EpisodeOutcome:
        grammar = grammar_for(self.config, intent.action_id)
        session = self.agent.new_session(self.profile.user_id)
        text, template_idx = paraphrase(intent, grammar, self.rng)
        first_template = template_idx
        history_mark = len(self.agent.world.history)
        reply = self.agent.utterance(session, text, domain)
        questions = 0

        while True:
            if isinstance(reply, ExecuteResult):
                if reply.side is not None:
                    self._answer_side(session, reply.side)
                break
            if isinstance(reply, Options):
                questions += 1
                choice = self._pick_option(intent, reply)
                reply = self.agent.on_option_choice(session, choice)
            elif isinstance(reply, AskRephrase):
                questions += 1
                text, template_idx = paraphrase(
                    intent, grammar, self.rng, exclude_template=template_idx
                )
                reply = self.agent.on_rephrase(session, text)
            elif isinstance(reply, AskSlot):
                questions += 1
                value = intent.args_dict().get(reply.arg_name, "")
                reply = self.agent.on_slot_answer(session, reply.arg_name, value)
            elif isinstance(reply, Apology):
                if self.profile.demonstrates:
                    return self._demonstrate(session, intent, questions, first_template)
                return EpisodeOutcome("abandoned", questions, None, first_template)
            else:  # Answer or anything terminal
                break

        executed = None
        if len(self.agent.world.history) > history_mark:
            executed = self.agent.world.history[-1]
        outcome = "executed" if executed else "no_action"
        return EpisodeOutcome(outcome, questions, executed, first_template)

    def run_statement(self, statement: Statement) -> EpisodeOutcome:
        session = self.agent.new_session(self.profile.user_id)
        self.agent.utterance(session, statement.text)
        return EpisodeOutcome("stated", 0, None)

    def run_question(self, question: Question) -> EpisodeOutcome:
        session = self.agent.new_session(self.profile.user_id)
        self.agent.utterance(session, question.text)
        return EpisodeOutcome("asked", 0, None)

    def _demonstrate(
        self, session, intent: Intent, questions: int, first_template: int
    ) -> EpisodeOutcome:
        # The user performs the action through the GUI; the agent observes
        # the (action, args) pair and learns from it.
        action = self.config.actions[intent.action_id]
        self.agent.world.execute(action, intent.args_dict())
        self.agent.record_demonstration(session, intent.action_id, intent.args_dict())
        return EpisodeOutcome(
            "demonstrated", questions, self.agent.world.history[-1], first_template
        )

    def _pick_option(self, intent: Intent, reply: Options) -> int | None:
        action = self.config.actions[intent.action_id]
        acceptable = _acceptable_option_texts(action, intent)
        listed = [i for i, text in enumerate(reply.options, start=1) if text in acceptable]
        if not listed:
            return None
        if self.rng.random() < self.profile.cooperativeness:
            return listed[0]
        return None

    def _answer_side(self, session, side) -> None:
        if isinstance(side, AskVerify):
            fact = self.agent.kb.fact(side.fact_ref)
            true = fact.as_tuple() in self.scenario.fact_ground_truth
            lie = self.rng.random() < self.profile.lie_probability
            vote = "yes" if (true != lie) else "no"
            self.agent.on_side_answer(session, vote=vote)
            return
        if isinstance(side, AskDeferred):
            question = self.agent.kb.question(side.question_ref)
            answer = None
            for head, relation, tail in sorted(self.profile.knowledge):
                if relation != question.relation:
                    continue
                if question.head is not None and tuple(question.head) != tuple(head):
                    continue
                if question.tail is not None and tuple(question.tail) != tuple(tail):
                    continue
                answer = tail if question.tail is None else head
                break
            if answer is not None and self.rng.random() < self.profile.lie_probability:
                answer = ("bogus", *answer)
            if answer is None:
                self.agent.on_side_answer(session, answer="i dont know")
            else:
                self.agent.on_side_answer(session, answer=" ".join(answer))


def _acceptable_option_texts(action, intent: Intent) -> set[str]:
    """Texts a user would recognize as describing the intended action: the
    gloss under any subset of their argument values (unbound slots render
    as the slot type name)."""
    args = intent.args_dict()
    names = list(args)
    texts = set()
    for mask in range(2 ** len(names)):
        bindings = {
            name: tuple(tokenize(args[name]))
            for bit, name in enumerate(names)
            if mask >> bit & 1
        }
        texts.add(render_option_text(action, bindings))
    return texts


# -- scenario runner ----------------------------------------------------------


@dataclass
class MetricsLog:
    master_seed: int
    records: list[dict] = field(default_factory=list)

    def to_jsonl(self) -> str:
        header = {
            "formatVersion": SCENARIO_VERSION,
            "masterSeed": self.master_seed,
            "episodes": len(self.records),
        }
        lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
        lines.extend(
            json.dumps(record, sort_keys=True, separators=(",", ":"))
            for record in self.records
        )
        return "\n".join(lines) + "\n"

    def grounding_rate(self, window: int | None = None) -> float:
        rows = [r for r in self.records if r["kind"] == "intent"]
        if window is not None:
            rows = rows[-window:]
        if not rows:
            return 0.0
        return sum(1 for r in rows if r["first_try"]) / len(rows)

    def sliding_grounding_rate(self, window: int = 20) -> list[float]:
        rows = [r for r in self.records if r["kind"] == "intent"]
        rates = []
        for i in range(len(rows)):
            chunk = rows[max(0, i - window + 1) : i + 1]
            rates.append(sum(1 for r in chunk if r["first_try"]) / len(chunk))
        return rates


@dataclass
class ScenarioResult:
    agent: Agent
    metrics: MetricsLog

    def contamination_rate(self, ground_truth: frozenset) -> float:
        verified = [f for f in self.agent.kb.facts if f.status == "verified"]
        if not verified:
            return 0.0
        false = [f for f in verified if f.as_tuple() not in ground_truth]
        return len(false) / len(verified)


def run_scenario(
    scenario: Scenario, config: DomainConfig, master_seed: int
) -> ScenarioResult:
    """Deterministic episode-by-episode run; returns the final agent and log."""
    scenario.validate(config)
    agent = Agent(
        store=_store_without_seeds(config),
        kb=config.build_kb(),
        world=config.build_world(),
        slot_types=dict(config.slot_types),
        settings=config.settings,
        relevance_keywords=config.relevance_keywords,
    )
    agent.world.fact_ground_truth = set(scenario.fact_ground_truth)
    rngs = {
        user_id: profile_rng(master_seed, user_id) for user_id in scenario.profiles
    }
    arrivals = sorted(scenario.task_arrival.items())
    metrics = MetricsLog(master_seed=master_seed)

    for idx, episode in enumerate(scenario.episodes):
        while arrivals and arrivals[0][0] <= idx:
            _, domain = arrivals.pop(0)
            _insert_domain_seeds(agent, config, domain)
        profile = scenario.profiles[episode.profile_id]
        driver = EpisodeDriver(agent, config, scenario, profile, rngs[profile.user_id])

        if isinstance(episode.event, Intent):
            domain = (
                config.actions[episode.event.action_id].task_id
                if scenario.mode == "TCL"
                else None
            )
            outcome = driver.run_intent(episode.event, domain)
            expected = (
                episode.event.action_id,
                tuple(sorted(episode.event.args_dict().items())),
            )
            correct = outcome.executed == expected
            record = {
                "kind": "intent",
                "action": episode.event.action_id,
                "template": outcome.first_template,
                "correct": correct,
                "first_try": correct and outcome.questions == 0,
            }
        elif isinstance(episode.event, Statement):
            outcome = driver.run_statement(episode.event)
            record = {"kind": "statement", "action": None, "correct": True,
                      "first_try": False}
        else:
            outcome = driver.run_question(episode.event)
            record = {"kind": "question", "action": None, "correct": True,
                      "first_try": False}

        record.update(
            episode=idx,
            user=profile.user_id,
            outcome=outcome.outcome,
            questions=outcome.questions,
            store_size=len(agent.store),
            kb=agent.kb.counts(),
        )
        metrics.records.append(record)

    return ScenarioResult(agent=agent, metrics=metrics)


def _store_without_seeds(config: DomainConfig):
    store = SeedCommandStore()
    for action in config.actions.values():
        store.register_action(action)
    return store


def _insert_domain_seeds(agent: Agent, config: DomainConfig, domain: str) -> None:
    for action_id, text in config.seed_patterns:
        action = config.actions[action_id]
        if action.task_id != domain:
            continue
        agent.store.add(
            parse_pattern(text, action), action_id, Provenance.developer()
        )


# -- forgetting checks -----------------------------------------------------------


def evaluate_forgetting(agent: Agent, regression_set: list[tuple[str, str]]) -> list[dict]:
    """Replay grounding-only (no learning, no world effects) over known pairs.

    Each row carries the classification band, the argmax action, and every
    per-seed-command similarity value, so a later report can check exact
    score stability and count argmax interference separately.
    """
    rows = []
    snapshot = agent.store.snapshot()
    for command_text, expected_action in regression_set:
        tokens = tokenize(command_text)
        report = novelty_report(
            tokens, snapshot, top_k=agent.settings.thresholds.top_k,
            alpha=agent.settings.alpha,
        )
        band = classify_novelty(report, agent.settings.thresholds)
        rows.append(
            {
                "command": command_text,
                "expected_action": expected_action,
                "band": band.value,
                "top_action": report.top_k[0].action_id if report.top_k else None,
                "similarities": {
                    sc.id: similarity(tokens, sc, agent.settings.alpha)
                    for sc in snapshot
                },
            }
        )
    return rows


def compare_forgetting(baseline: list[dict], current: list[dict]) -> dict:
    """Exact per-pair similarity stability plus argmax interference count."""
    assert len(baseline) == len(current)
    drifted = []
    interference = 0
    for before, after in zip(baseline, current):
        for sc_id, value in before["similarities"].items():
            if after["similarities"].get(sc_id) != value:
                drifted.append((before["command"], sc_id))
        if before["top_action"] != after["top_action"]:
            interference += 1
    return {"drifted": drifted, "argmax_interference": interference}


# -- scenario files ------------------------------------------------------------


def parse_scenario(raw: dict) -> Scenario:
    if raw.get("version") != SCENARIO_VERSION:
        raise ScenarioInvalid(
            f"scenario version must be {SCENARIO_VERSION}, got {raw.get('version')!r}"
        )
    profiles = {}
    for entry in raw.get("profiles", []):
        knowledge = frozenset(
            (tuple(tokenize(h)), r, tuple(tokenize(t)))
            for h, r, t in entry.get("knowledge", [])
        )
        profiles[entry["user_id"]] = SimUserProfile(
            user_id=entry["user_id"],
            cooperativeness=entry.get("cooperativeness", 1.0),
            lie_probability=entry.get("lie_probability", 0.0),
            knowledge=knowledge,
            demonstrates=entry.get("demonstrates", False),
        )
    episodes = []
    for entry in raw.get("episodes", []):
        if "intent" in entry:
            event = Intent(
                entry["intent"]["action"],
                tuple(sorted(entry["intent"].get("args", {}).items())),
            )
        elif "statement" in entry:
            event = Statement(entry["statement"])
        elif "question" in entry:
            event = Question(entry["question"])
        else:
            raise ScenarioInvalid(f"episode needs intent, statement or question: {entry}")
        episodes.append(Episode(entry["profile"], event))
    ground_truth = frozenset(
        (tuple(tokenize(h)), r, tuple(tokenize(t)))
        for h, r, t in raw.get("fact_ground_truth", [])
    )
    return Scenario(
        profiles=profiles,
        episodes=episodes,
        task_arrival={int(k): v for k, v in raw.get("task_arrival", {}).items()},
        mode=raw.get("mode", "CCL"),
        fact_ground_truth=ground_truth,
    )


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(json.load(fh))
