from __future__ import annotations

import random

import pytest

from grounder.agent import (
    Agent,
    AgentSettings,
    Answer,
    Apology,
    AskRephrase,
    AskSlot,
    AskVerify,
    AwaitOptionChoice,
    AwaitRephrase,
    AwaitSideAnswer,
    AwaitSlot,
    ExecuteResult,
    Idle,
    IndexOutOfRange,
    Options,
    PhaseError,
    induce_pattern,
    reply_to_wire,
)
from grounder.commands import Lit, Var
from grounder.config import demo_config
from grounder.text import tokenize

from .helpers import make_action

WALKTHROUGH_OPTIONS = [
    "switch off the light in the kitchen",
    "switch on the light in the kitchen",
    "change the color of the light",
]


@pytest.fixture
def agent():
    return demo_config().build_agent()


def test_known_command_executes_directly(agent):
    session = agent.new_session("u1")
    reply = agent.handle_utterance(session, "switch off the light in the kitchen")
    assert isinstance(reply, ExecuteResult)
    assert reply.text == "switched off the light in the kitchen"
    assert agent.world.rooms["kitchen"].light_on is False
    assert len(agent.store) == 3  # unconfirmed guesses are never learned


def test_ambiguous_command_offers_walkthrough_options(agent):
    session = agent.new_session("u1")
    reply = agent.handle_utterance(session, "turn off the light in the kitchen")
    assert isinstance(reply, Options)
    assert reply.options == WALKTHROUGH_OPTIONS
    assert isinstance(session.phase, AwaitOptionChoice)


def test_empty_store_asks_rephrase():
    cfg = demo_config()
    agent = Agent(
        store=type(cfg.build_store())(),
        kb=cfg.build_kb(),
        world=cfg.build_world(),
    )
    for action in cfg.actions.values():
        agent.store.register_action(action)
    session = agent.new_session("u1")
    reply = agent.handle_utterance(session, "turn off the light in the kitchen")
    assert isinstance(reply, AskRephrase)
    assert reply.text == "Can you say it again in another way?"


def test_option_choice_executes_and_learns(agent):
    session = agent.new_session("u1")
    agent.handle_utterance(session, "turn off the light in the kitchen")
    reply = agent.on_option_choice(session, 1)
    assert isinstance(reply, ExecuteResult)
    assert agent.world.rooms["kitchen"].light_on is False
    patterns = [sc for sc in agent.store if sc.provenance.kind == "learned"]
    assert len(patterns) == 1
    assert patterns[0].pattern == (
        Lit("turn"), Lit("off"), Lit("the"), Lit("light"), Lit("in"), Lit("the"),
        Var("place", "place"),
    )
    assert patterns[0].provenance.user_id == "u1"


def test_option_choice_out_of_range(agent):
    session = agent.new_session("u1")
    agent.handle_utterance(session, "turn off the light in the kitchen")
    with pytest.raises(IndexOutOfRange):
        agent.on_option_choice(session, 7)
    # the failed call left the phase untouched
    assert isinstance(session.phase, AwaitOptionChoice)


def test_option_none_falls_back_to_rephrase(agent):
    session = agent.new_session("u1")
    agent.handle_utterance(session, "turn off the light in the kitchen")
    reply = agent.on_option_choice(session, None)
    assert isinstance(reply, AskRephrase)
    assert isinstance(session.phase, AwaitRephrase)


def test_teach_once_then_known_for_other_slot_values(agent):
    session = agent.new_session("u1")
    agent.handle_utterance(session, "turn off the light in the kitchen")
    agent.on_option_choice(session, 1)
    for place in ("bedroom", "bathroom", "living room"):
        reply = agent.handle_utterance(
            agent.new_session("u1"), f"turn off the light in the {place}"
        )
        assert isinstance(reply, ExecuteResult), place
        assert agent.world.rooms[place].light_on is False


def test_rephrase_grounding_teaches_both_commands(agent):
    session = agent.new_session("u1")
    reply = agent.handle_utterance(session, "kill the lights in the kitchen")
    assert isinstance(reply, (AskRephrase, Options))
    if isinstance(reply, Options):
        reply = agent.on_option_choice(session, None)
        assert isinstance(reply, AskRephrase)
    reply = agent.on_rephrase(session, "switch off the light in the kitchen")
    assert isinstance(reply, ExecuteResult)
    learned = [sc for sc in agent.store if sc.provenance.kind == "learned"]
    assert len(learned) == 1  # the rephrase was already a stored pattern
    assert learned[0].pattern == (
        Lit("kill"), Lit("the"), Lit("lights"), Lit("in"), Lit("the"),
        Var("place", "place"),
    )
    # the original command now grounds first try
    follow_up = agent.handle_utterance(
        agent.new_session("u1"), "kill the lights in the bedroom"
    )
    assert isinstance(follow_up, ExecuteResult)


def test_budget_exhaustion_apologizes_and_abandons(agent):
    session = agent.new_session("u1")
    reply = agent.handle_utterance(session, "frobnicate the wug")
    assert isinstance(reply, AskRephrase)
    reply = agent.on_rephrase(session, "wug the frobnicator")
    assert isinstance(reply, AskRephrase)
    reply = agent.on_rephrase(session, "frob the wugnicator")
    assert isinstance(reply, Apology)
    assert isinstance(session.phase, Idle)
    assert session.last_abandoned is not None
    assert session.last_abandoned.status == "abandoned"


def test_question_budget_limits_questions(agent):
    session = agent.new_session("u1")
    agent.handle_utterance(session, "frobnicate the wug")
    agent.on_rephrase(session, "wug the frobnicator")
    agent.on_rephrase(session, "frob the wugnicator")
    questions = [
        e for e in session.transcript
        if e["kind"] in ("options_offered", "rephrase_asked", "slot_asked")
    ]
    assert len(questions) <= agent.settings.question_budget


def test_slot_elicitation_for_always_elicit_sc(agent):
    session = agent.new_session("u1")
    reply = agent.handle_utterance(session, "lights off")
    # force-teach the literal command with a demonstration
    if not isinstance(reply, Apology):
        while not isinstance(reply, Apology):
            if isinstance(reply, Options):
                reply = agent.on_option_choice(session, None)
            elif isinstance(reply, AskRephrase):
                reply = agent.on_rephrase(session, "lights off please now")
            else:
                pytest.fail(f"unexpected reply {reply}")
    agent.record_demonstration(session, "SwitchOffLight", {"place": "kitchen"})
    sc = [s for s in agent.store if s.provenance.kind == "learned"][0]
    assert sc.always_elicit == frozenset({"place"})

    session2 = agent.new_session("u2")
    reply = agent.handle_utterance(session2, "lights off")
    assert isinstance(reply, AskSlot)
    assert reply.arg_name == "place"
    assert isinstance(session2.phase, AwaitSlot)
    done = agent.on_slot_answer(session2, "place", "bedroom")
    assert isinstance(done, ExecuteResult)
    assert agent.world.rooms["bedroom"].light_on is False


def test_slot_answer_outside_lexicon_flagged(agent):
    session = agent.new_session("u1")
    agent.handle_utterance(session, "turn off the light in the attic")
    reply = agent.on_option_choice(session, None)
    reply = agent.on_rephrase(session, "switch off the light in the attic")
    assert isinstance(reply, ExecuteResult)
    flagged = [e for e in session.transcript if e["kind"] == "slot_answer"]
    # attic came from the alignment, not a slot answer; teach via demonstration
    session2 = agent.new_session("u2")
    r = agent.handle_utterance(session2, "lights off")
    while not isinstance(r, Apology):
        if isinstance(r, Options):
            r = agent.on_option_choice(session2, None)
        else:
            r = agent.on_rephrase(session2, "dim everything down fully")
    agent.record_demonstration(session2, "SwitchOffLight", {"place": "kitchen"})
    session3 = agent.new_session("u3")
    r = agent.handle_utterance(session3, "lights off")
    assert isinstance(r, AskSlot)
    r = agent.on_slot_answer(session3, "place", "attic")
    assert isinstance(r, ExecuteResult)
    events = [e for e in session3.transcript if e["kind"] == "slot_answer"]
    assert events and events[0]["in_lexicon"] is False


def test_question_routes_to_knowledge(agent):
    session = agent.new_session("u1")
    reply = agent.handle_utterance(session, "What is the capital city of the US?")
    assert isinstance(reply, Answer)
    assert reply.text == "I don't know yet, but I'll try to find out."
    assert len(agent.kb.questions) == 1


def test_statement_extraction_acknowledged(agent):
    session = agent.new_session("u1")
    reply = agent.handle_utterance(
        session,
        "I watched Forest Gump yesterday. The movie was awesome. "
        "Liked Tom Hanks' performance very much.",
    )
    assert isinstance(reply, Answer)
    assert reply.text == "Got it, thanks."
    assert len(agent.kb.facts) == 2
    assert len(agent.store) == 3  # statements never touch the command store


def test_irrelevant_input_acknowledged_without_learning():
    cfg = demo_config()
    agent = cfg.build_agent()
    agent.relevance_keywords = ["light", "lamp"]
    session = agent.new_session("u1")
    reply = agent.handle_utterance(session, "play some jazz")
    assert isinstance(reply, Answer)
    assert reply.text == "Okay."
    assert len(agent.store) == 3
    assert agent.relevance("kill the lights") is True


def test_side_question_after_successful_task(agent):
    teacher = agent.new_session("u1")
    agent.handle_utterance(
        teacher,
        "I watched Forest Gump yesterday. The movie was awesome. "
        "Liked Tom Hanks' performance very much.",
    )
    session = agent.new_session("u2")
    reply = agent.handle_utterance(session, "switch off the light in the kitchen")
    assert isinstance(reply, ExecuteResult)
    assert isinstance(reply.side, AskVerify)
    assert reply.side.question == "Is it true that forest gump is a movie?"
    assert isinstance(session.phase, AwaitSideAnswer)
    done = agent.on_side_answer(session, vote="yes")
    assert isinstance(done, Answer)
    assert agent.kb.fact(reply.side.fact_ref).yes_voters == ("u2",)


def test_side_question_at_most_once_per_session(agent):
    teacher = agent.new_session("u1")
    agent.handle_utterance(
        teacher,
        "I watched Forest Gump yesterday. The movie was awesome. "
        "Liked Tom Hanks' performance very much.",
    )
    session = agent.new_session("u2")
    reply = agent.handle_utterance(session, "switch off the light in the kitchen")
    agent.on_side_answer(session, vote="yes")
    reply = agent.handle_utterance(session, "switch on the light in the kitchen")
    assert isinstance(reply, ExecuteResult)
    assert reply.side is None


def test_new_utterance_during_side_question_declines_it(agent):
    teacher = agent.new_session("u1")
    agent.handle_utterance(
        teacher,
        "I watched Forest Gump yesterday. The movie was awesome. "
        "Liked Tom Hanks' performance very much.",
    )
    session = agent.new_session("u2")
    agent.handle_utterance(session, "switch off the light in the kitchen")
    assert isinstance(session.phase, AwaitSideAnswer)
    reply = agent.utterance(session, "switch on the light in the bedroom")
    assert isinstance(reply, ExecuteResult)
    assert isinstance(session.phase, Idle)


def test_phase_errors_are_side_effect_free(agent):
    session = agent.new_session("u1")
    with pytest.raises(PhaseError):
        agent.on_option_choice(session, 1)
    with pytest.raises(PhaseError):
        agent.on_rephrase(session, "anything")
    with pytest.raises(PhaseError):
        agent.on_slot_answer(session, "place", "kitchen")
    with pytest.raises(PhaseError):
        agent.on_side_answer(session, vote="yes")
    assert session.transcript == []
    assert isinstance(session.phase, Idle)


def test_learned_scs_have_confirmed_provenance(agent):
    session = agent.new_session("u1")
    agent.handle_utterance(session, "turn off the light in the kitchen")
    agent.on_option_choice(session, 1)
    confirmations = {
        e["sc_id"]: e["confirmation"]
        for e in session.transcript
        if e["kind"] == "learned_sc"
    }
    for sc in agent.store:
        if sc.provenance.kind == "learned":
            assert confirmations[sc.id] in (
                "option_choice", "rephrase_grounding", "demonstration",
            )


def test_store_append_only_under_learning(agent):
    before = list(agent.store)
    session = agent.new_session("u1")
    agent.handle_utterance(session, "turn off the light in the kitchen")
    agent.on_option_choice(session, 1)
    after = list(agent.store)
    assert after[: len(before)] == before


def test_duplicate_teaching_does_not_grow_store(agent):
    for _ in range(2):
        session = agent.new_session("u1")
        reply = agent.handle_utterance(session, "turn off the light in the kitchen")
        if isinstance(reply, Options):
            agent.on_option_choice(session, 1)
    learned = [sc for sc in agent.store if sc.provenance.kind == "learned"]
    assert len(learned) == 1


def test_induce_pattern_basics():
    action = make_action(
        "SwitchOffLight", args=[("place", "place")],
        gloss="switch off {place}", done_gloss="switched off {place}",
    )
    pattern, always = induce_pattern(
        tokenize("turn off the light in the kitchen"), action,
        {"place": ("kitchen",)},
    )
    assert pattern[-1] == Var("place", "place")
    assert always == frozenset()

    pattern, always = induce_pattern(
        tokenize("lights off"), action, {"place": ("kitchen",)}
    )
    assert all(isinstance(el, Lit) for el in pattern)
    assert always == {"place"}


def test_induce_pattern_leftmost_occurrence():
    action = make_action(
        "SwitchOffLight", args=[("place", "place")],
        gloss="switch off {place}", done_gloss="switched off {place}",
    )
    pattern, _ = induce_pattern(
        tokenize("kitchen light in the kitchen"), action, {"place": ("kitchen",)}
    )
    assert pattern == (
        Var("place", "place"), Lit("light"), Lit("in"), Lit("the"), Lit("kitchen"),
    )


def test_induce_pattern_fallback_to_literal():
    action = make_action(
        "Move", args=[("a", "any"), ("b", "any")],
        gloss="move {a} {b}", done_gloss="moved {a} {b}",
    )
    # lifting both args would leave adjacent variables
    pattern, always = induce_pattern(
        tokenize("go left right"), action, {"a": ("left",), "b": ("right",)}
    )
    assert all(isinstance(el, Lit) for el in pattern)
    assert always == {"a", "b"}


def test_fsm_fuzz_never_leaves_defined_phase(agent):
    rng = random.Random(99)
    utterances = [
        "turn off the light in the kitchen",
        "switch off the light in the kitchen",
        "blargh fizzle",
        "who acted in forest gump",
        "I watched Forest Gump yesterday",
        "",
    ]
    sessions = [agent.new_session(f"u{i}") for i in range(3)]
    for _ in range(300):
        session = rng.choice(sessions)
        op = rng.randrange(5)
        try:
            if op == 0:
                agent.utterance(session, rng.choice(utterances))
            elif op == 1:
                agent.on_option_choice(session, rng.choice([None, 1, 2, 3, 9]))
            elif op == 2:
                agent.on_rephrase(session, rng.choice(utterances))
            elif op == 3:
                agent.on_slot_answer(session, "place", "kitchen")
            else:
                agent.on_side_answer(session, vote=rng.choice(["yes", "no"]))
        except (PhaseError, IndexOutOfRange, ValueError):
            pass
        assert type(session.phase).__name__ in (
            "Idle", "AwaitOptionChoice", "AwaitRephrase", "AwaitSlot",
            "AwaitSideAnswer",
        )
        assert session.question_budget >= 0


def test_task_domain_restricts_matching(agent):
    # with the store filtered to an unknown domain nothing can match
    session = agent.new_session("u1")
    reply = agent.handle_utterance(
        session, "switch off the light in the kitchen", task_domain="media"
    )
    assert isinstance(reply, AskRephrase)
    session2 = agent.new_session("u1")
    reply = agent.handle_utterance(
        session2, "switch off the light in the kitchen", task_domain="lights"
    )
    assert isinstance(reply, ExecuteResult)


def test_reply_wire_tags():
    assert reply_to_wire(ExecuteResult("done"))["replyType"] == "ExecuteResult"
    assert reply_to_wire(Options("p", ["a", "b"]))["replyType"] == "Options"
    assert reply_to_wire(AskRephrase("r"))["replyType"] == "AskRephrase"
    assert reply_to_wire(AskSlot("place", "p"))["replyType"] == "AskSlot"
    assert reply_to_wire(AskVerify(1, "q"))["replyType"] == "AskVerify"
    assert reply_to_wire(Answer("a"))["replyType"] == "Answer"
    assert reply_to_wire(Apology("s"))["replyType"] == "Apology"
