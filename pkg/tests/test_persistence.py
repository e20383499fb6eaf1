from __future__ import annotations

import json
import random

import pytest

from grounder.config import demo_config
from grounder.persistence import (
    ChecksumMismatch,
    InvariantViolation,
    VersionMismatch,
    dumps_snapshot,
    load_snapshot,
    loads_snapshot,
    restore_agent,
    save_snapshot,
    snapshot_state,
)
from grounder.simulator import Episode, Intent, Scenario, SimUserProfile, run_scenario


def taught_agent():
    cfg = demo_config()
    agent = cfg.build_agent()
    session = agent.new_session("u1")
    agent.handle_utterance(session, "turn off the light in the kitchen")
    agent.on_option_choice(session, 1)
    agent.handle_utterance(
        agent.new_session("u1"),
        "I watched Forest Gump yesterday. Liked Tom Hanks' performance very much.",
    )
    agent.handle_utterance(
        agent.new_session("u2"), "What is the capital city of the US?"
    )
    return cfg, agent


def test_snapshot_counts_fresh_agent(tmp_path):
    cfg = demo_config()
    agent = cfg.build_agent()
    header = save_snapshot(agent, tmp_path / "snap.jsonl")
    assert header["counts"]["seedCommand"] == 3
    assert header["counts"]["fact"] == 0


def test_snapshot_counts_after_walkthrough(tmp_path):
    _, agent = taught_agent()
    header = save_snapshot(agent, tmp_path / "snap.jsonl")
    assert header["counts"]["seedCommand"] == 4
    state = load_snapshot(tmp_path / "snap.jsonl")
    learned = [sc for sc in state.seed_commands if sc.provenance.kind == "learned"]
    assert len(learned) == 1


def test_round_trip_equality_and_byte_identity(tmp_path):
    _, agent = taught_agent()
    path1 = tmp_path / "a.jsonl"
    path2 = tmp_path / "b.jsonl"
    save_snapshot(agent, path1)
    state = load_snapshot(path1)
    assert state == snapshot_state(agent)
    dumped = dumps_snapshot(state)
    path2.write_text(dumped)
    assert path1.read_text() == path2.read_text()


def test_restored_agent_behaves_identically(tmp_path):
    cfg, agent = taught_agent()
    save_snapshot(agent, tmp_path / "snap.jsonl")
    state = load_snapshot(tmp_path / "snap.jsonl")
    revived = restore_agent(
        state,
        kb_template=cfg.build_kb(),
        world=cfg.build_world(),
        settings=cfg.settings,
    )
    reply = revived.handle_utterance(
        revived.new_session("u3"), "turn off the light in the bedroom"
    )
    assert reply.text == "switched off the light in the bedroom"
    assert revived.kb.find_fact(("forest", "gump"), "isa", ("movie",)) is not None


def test_tampered_line_detected(tmp_path):
    _, agent = taught_agent()
    path = tmp_path / "snap.jsonl"
    save_snapshot(agent, path)
    lines = path.read_text().splitlines()
    idx = next(i for i, l in enumerate(lines) if '"type":"seedCommand"' in l)
    lines[idx] = lines[idx].replace('"pattern":"', '"pattern":"hijack ')
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ChecksumMismatch):
        load_snapshot(path)


def test_version_mismatch(tmp_path):
    path = tmp_path / "snap.jsonl"
    path.write_text(json.dumps({"formatVersion": 99, "checksum": "", "counts": {}}) + "\n")
    with pytest.raises(VersionMismatch):
        load_snapshot(path)


def test_unknown_action_reference_rejected():
    _, agent = taught_agent()
    text = dumps_snapshot(snapshot_state(agent))
    lines = text.splitlines()
    body = [l for l in lines[1:]]
    # retarget one seed command at a nonexistent action, then fix the checksum
    import hashlib

    body = [
        l.replace('"action":"SwitchOffLight"', '"action":"NoSuchAction"')
        if '"type":"seedCommand"' in l and '"id":1' in l
        else l
        for l in body
    ]
    header = json.loads(lines[0])
    header["checksum"] = hashlib.sha256("\n".join(body).encode()).hexdigest()
    tampered = "\n".join([json.dumps(header, sort_keys=True, separators=(",", ":")), *body])
    with pytest.raises(InvariantViolation):
        loads_snapshot(tampered)


def test_long_run_round_trip():
    cfg = demo_config()
    rng = random.Random(1)
    profiles = [SimUserProfile(f"u{i}") for i in range(1, 4)]
    episodes = [
        Episode(
            rng.choice(["u1", "u2", "u3"]),
            Intent(
                rng.choice(["SwitchOffLight", "SwitchOnLight"]),
                (("place", rng.choice(["kitchen", "bedroom"])),),
            ),
        )
        for _ in range(60)
    ]
    scenario = Scenario(
        profiles={p.user_id: p for p in profiles},
        episodes=episodes,
        task_arrival={0: "lights"},
    )
    result = run_scenario(scenario, cfg, master_seed=5)
    text = dumps_snapshot(snapshot_state(result.agent))
    state = loads_snapshot(text)
    assert state == snapshot_state(result.agent)
    assert dumps_snapshot(state) == text
