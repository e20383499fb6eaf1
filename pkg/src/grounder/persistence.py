"""Durable snapshots: one canonical JSON record per line.

The first line is a header with the format version, per-type record counts,
and a checksum over the canonicalized record lines. Records appear in
dependency order (slot types, actions, seed commands, facts, questions,
metrics points), so everything a record references is defined earlier in
the file. Novelty scores are never persisted; they are recomputed, which
keeps snapshots free of floating point and byte-stable across platforms.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .agent import Agent, AgentSettings
from .commands import ApiAction, ArgSpec, Provenance, SeedCommand, SlotType, parse_pattern, pattern_text
from .knowledge import DeferredQuestion, FactTriple, KnowledgeBase
from .store import SeedCommandStore
from .world import WorldState

FORMAT_VERSION = 1

RECORD_ORDER = ("slotType", "action", "seedCommand", "fact", "deferredQuestion",
                "metricsPoint")


class SnapshotError(ValueError):
    pass


class VersionMismatch(SnapshotError):
    pass


class ChecksumMismatch(SnapshotError):
    pass


class InvariantViolation(SnapshotError):
    pass


class DestinationUnwritable(OSError):
    pass


@dataclass
class SnapshotState:
    slot_types: list[SlotType] = field(default_factory=list)
    actions: list[ApiAction] = field(default_factory=list)
    seed_commands: list[SeedCommand] = field(default_factory=list)
    facts: list[FactTriple] = field(default_factory=list)
    questions: list[DeferredQuestion] = field(default_factory=list)
    metrics: list[dict] = field(default_factory=list)


def snapshot_state(agent: Agent) -> SnapshotState:
    return SnapshotState(
        slot_types=[agent.slot_types[k] for k in sorted(agent.slot_types)],
        actions=[agent.store.actions[k] for k in sorted(agent.store.actions)],
        seed_commands=list(agent.store),
        facts=list(agent.kb.facts),
        questions=list(agent.kb.questions),
        metrics=list(agent.metrics),
    )


def _records(state: SnapshotState) -> list[dict]:
    records: list[dict] = []
    for st in state.slot_types:
        records.append(
            {
                "type": "slotType",
                "id": st.id,
                "lexicon": sorted(" ".join(v) for v in st.lexicon)
                if st.lexicon is not None
                else None,
            }
        )
    for action in state.actions:
        records.append(
            {
                "type": "action",
                "id": action.id,
                "name": action.name,
                "task_id": action.task_id,
                "args": [
                    {"name": a.name, "slot_type": a.slot_type, "prompt": a.prompt}
                    for a in action.args
                ],
                "gloss": action.gloss,
                "done_gloss": action.done_gloss,
            }
        )
    for sc in state.seed_commands:
        records.append(
            {
                "type": "seedCommand",
                "id": sc.id,
                "action": sc.action_id,
                "pattern": pattern_text(sc.pattern),
                "created_at": sc.created_at,
                "provenance": {
                    "kind": sc.provenance.kind,
                    "user": sc.provenance.user_id,
                    "session": sc.provenance.session_id,
                },
                "always_elicit": sorted(sc.always_elicit),
            }
        )
    for fact in state.facts:
        records.append(
            {
                "type": "fact",
                "id": fact.id,
                "head": " ".join(fact.head),
                "relation": fact.relation,
                "tail": " ".join(fact.tail),
                "status": fact.status,
                "yes": list(fact.yes_voters),
                "no": list(fact.no_voters),
                "source_kind": fact.source_kind,
                "source_user": fact.source_user,
            }
        )
    for q in state.questions:
        records.append(
            {
                "type": "deferredQuestion",
                "id": q.id,
                "question": " ".join(q.question_tokens),
                "head": " ".join(q.head) if q.head is not None else None,
                "relation": q.relation,
                "tail": " ".join(q.tail) if q.tail is not None else None,
                "origin": q.origin_user,
                "status": q.status,
                "offers": q.offers,
                "answered_by": q.answered_by,
            }
        )
    for point in state.metrics:
        records.append({"type": "metricsPoint", **point})
    return records


def _canonical(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def dumps_snapshot(state: SnapshotState) -> str:
    lines = [_canonical(r) for r in _records(state)]
    counts = {name: 0 for name in RECORD_ORDER}
    for record in _records(state):
        counts[record["type"]] += 1
    header = {
        "formatVersion": FORMAT_VERSION,
        "counts": counts,
        "checksum": hashlib.sha256("\n".join(lines).encode()).hexdigest(),
    }
    return "\n".join([_canonical(header), *lines]) + "\n"


def save_snapshot(agent: Agent, destination: str | Path) -> dict:
    """Write the agent's durable state; returns the header summary."""
    text = dumps_snapshot(snapshot_state(agent))
    try:
        Path(destination).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise DestinationUnwritable(str(destination)) from exc
    return json.loads(text.splitlines()[0])


def loads_snapshot(text: str) -> SnapshotState:
    lines = text.splitlines()
    if not lines:
        raise SnapshotError("empty snapshot")
    header = json.loads(lines[0])
    if header.get("formatVersion") != FORMAT_VERSION:
        raise VersionMismatch(str(header.get("formatVersion")))
    body = lines[1:]
    digest = hashlib.sha256("\n".join(body).encode()).hexdigest()
    if digest != header.get("checksum"):
        raise ChecksumMismatch(digest)

    state = SnapshotState()
    seen_actions: dict[str, ApiAction] = {}
    for line in body:
        record = json.loads(line)
        kind = record["type"]
        try:
            if kind == "slotType":
                lexicon = record["lexicon"]
                state.slot_types.append(
                    SlotType(
                        id=record["id"],
                        lexicon=frozenset(tuple(v.split()) for v in lexicon)
                        if lexicon is not None
                        else None,
                    )
                )
            elif kind == "action":
                action = ApiAction(
                    id=record["id"],
                    name=record["name"],
                    args=tuple(
                        ArgSpec(a["name"], a["slot_type"], a["prompt"])
                        for a in record["args"]
                    ),
                    gloss=record["gloss"],
                    done_gloss=record["done_gloss"],
                    task_id=record["task_id"],
                )
                seen_actions[action.id] = action
                state.actions.append(action)
            elif kind == "seedCommand":
                if record["action"] not in seen_actions:
                    raise InvariantViolation(
                        f"seed command {record['id']} references unknown action "
                        f"{record['action']}"
                    )
                action = seen_actions[record["action"]]
                prov = record["provenance"]
                state.seed_commands.append(
                    SeedCommand(
                        id=record["id"],
                        pattern=parse_pattern(record["pattern"], action),
                        action_id=action.id,
                        provenance=Provenance(prov["kind"], prov["user"], prov["session"]),
                        task_id=action.task_id,
                        created_at=record["created_at"],
                        always_elicit=frozenset(record["always_elicit"]),
                    )
                )
            elif kind == "fact":
                state.facts.append(
                    FactTriple(
                        id=record["id"],
                        head=tuple(record["head"].split()),
                        relation=record["relation"],
                        tail=tuple(record["tail"].split()),
                        status=record["status"],
                        yes_voters=tuple(record["yes"]),
                        no_voters=tuple(record["no"]),
                        source_kind=record["source_kind"],
                        source_user=record["source_user"],
                    )
                )
            elif kind == "deferredQuestion":
                state.questions.append(
                    DeferredQuestion(
                        id=record["id"],
                        question_tokens=tuple(record["question"].split()),
                        head=tuple(record["head"].split())
                        if record["head"] is not None
                        else None,
                        relation=record["relation"],
                        tail=tuple(record["tail"].split())
                        if record["tail"] is not None
                        else None,
                        origin_user=record["origin"],
                        status=record["status"],
                        offers=record["offers"],
                        answered_by=record["answered_by"],
                    )
                )
            elif kind == "metricsPoint":
                point = dict(record)
                point.pop("type")
                state.metrics.append(point)
            else:
                raise InvariantViolation(f"unknown record type {kind!r}")
        except SnapshotError:
            raise
        except Exception as exc:
            raise InvariantViolation(f"{kind} record invalid: {exc}") from exc

    _check_invariants(state)
    return state


def _check_invariants(state: SnapshotState) -> None:
    slot_ids = {st.id for st in state.slot_types}
    for action in state.actions:
        for arg in action.args:
            if arg.slot_type not in slot_ids:
                raise InvariantViolation(
                    f"action {action.id} references unknown slot type {arg.slot_type}"
                )
    seen_ids = set()
    for sc in state.seed_commands:
        if sc.id in seen_ids:
            raise InvariantViolation(f"duplicate seed command id {sc.id}")
        seen_ids.add(sc.id)
    for fact in state.facts:
        if fact.source_user is not None and fact.source_user in fact.yes_voters:
            raise InvariantViolation(f"fact {fact.id}: source user voted")
        if set(fact.yes_voters) & set(fact.no_voters):
            raise InvariantViolation(f"fact {fact.id}: contradictory voter")


def load_snapshot(source: str | Path) -> SnapshotState:
    return loads_snapshot(Path(source).read_text(encoding="utf-8"))


def restore_agent(
    state: SnapshotState,
    kb_template: KnowledgeBase | None = None,
    world: WorldState | None = None,
    settings: AgentSettings | None = None,
    relevance_keywords: list[str] | None = None,
) -> Agent:
    """Build a live agent around snapshot state.

    Rules, grammars, world, and settings are not part of snapshots; pass a
    config-built KnowledgeBase as template to supply them (its facts and
    questions are replaced by the snapshot's).
    """
    store = SeedCommandStore()
    for action in state.actions:
        store.register_action(action)
    for sc in state.seed_commands:
        store.restore(sc)
    kb = kb_template or KnowledgeBase()
    kb.facts = []
    kb.questions = []
    for fact in state.facts:
        kb.restore_fact(fact)
    for question in state.questions:
        kb.restore_question(question)
    agent = Agent(
        store=store,
        kb=kb,
        world=world or WorldState(),
        slot_types={st.id: st for st in state.slot_types},
        settings=settings,
        relevance_keywords=relevance_keywords,
    )
    agent.metrics = list(state.metrics)
    return agent
