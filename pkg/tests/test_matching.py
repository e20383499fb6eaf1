from __future__ import annotations

import math
import random

import pytest

from grounder.commands import Provenance, parse_pattern
from grounder.matching import (
    EmptyCommand,
    NoveltyBand,
    Thresholds,
    align,
    classify_novelty,
    cosine,
    novelty_report,
    similarity,
)
from grounder.store import SeedCommandStore
from grounder.text import tokenize

from .helpers import lights_actions, lights_store, make_action, make_sc
from .oracles import brute_align, brute_novelty, brute_similarity

SWITCH_OFF = "switch off the light in the $place"


def off_sc():
    return make_sc(SWITCH_OFF, lights_actions()["SwitchOffLight"])


def test_align_exact_match():
    a = align(tokenize("switch off the light in the kitchen"), off_sc())
    assert a.edit_cost == 0
    assert a.feasible
    assert a.bindings == {"place": ("kitchen",)}


def test_align_one_substitution():
    a = align(tokenize("turn off the light in the kitchen"), off_sc())
    assert a.edit_cost == 1
    assert a.feasible
    assert a.bindings == {"place": ("kitchen",)}
    assert a.unmatched_spans == ((0, 1),)
    assert a.matched_spans == ((1, 7),)


def test_align_variable_needs_a_token():
    action = make_action("Off", args=[("x", "any")], gloss="off {x}")
    sc = make_sc("$x off", action)
    a = align(["off"], sc)
    assert not a.feasible
    assert a.bindings == {}


def test_align_empty_command():
    with pytest.raises(EmptyCommand):
        align([], off_sc())


def test_align_multiword_span():
    a = align(tokenize("switch off the light in the living room"), off_sc())
    assert a.edit_cost == 0
    assert a.bindings == {"place": ("living", "room")}


def test_similarity_exact_literal_sc_is_one():
    sc = make_sc("change the color of the light", lights_actions()["ChangeLightColor"])
    assert similarity(tokenize("change the color of the light"), sc) == 1.0


def test_similarity_walkthrough_value():
    command = tokenize("turn off the light in the kitchen")
    sc = off_sc()
    got = similarity(command, sc)
    expected = 0.5 * (1.0 - 1 / 7) + 0.5 * (7 / math.sqrt(9 * 8))
    assert got == expected
    assert abs(got - 0.841) < 1e-3
    assert got == brute_similarity(tuple(command), sc)


def test_similarity_disjoint_vocabulary_is_low():
    command = tokenize("play some jazz")
    sc = off_sc()
    got = similarity(command, sc)
    assert got == brute_similarity(tuple(command), sc)
    assert got < 0.2


def test_cosine_multiset_counts():
    from collections import Counter

    q = Counter(tokenize("turn off the light in the kitchen"))
    r = Counter(["switch", "off", "the", "the", "light", "in"])
    assert cosine(q, r) == 7 / math.sqrt(9 * 8)
    assert cosine(Counter(), r) == 0.0


def test_novelty_exact_command_scores_zero():
    store = lights_store()
    report = novelty_report(tokenize("change the color of the light"), store)
    assert report.novelty_score == 0.0


def test_novelty_empty_store():
    report = novelty_report(tokenize("turn off the light"), [])
    assert report.novelty_score == 1.0
    assert report.top_k == ()
    assert report.matched_spans == ()
    assert report.unmatched_spans == ((0, 4),)


def test_novelty_walkthrough_candidate_order():
    store = lights_store()
    report = novelty_report(tokenize("turn off the light in the kitchen"), store)
    assert [c.action_id for c in report.top_k] == [
        "SwitchOffLight",
        "SwitchOnLight",
        "ChangeLightColor",
    ]
    assert report.top_k[0].bindings == {"place": ("kitchen",)}
    assert report.novelty_score == brute_novelty(
        tuple(tokenize("turn off the light in the kitchen")), store
    )


def test_classify_band_boundaries():
    from grounder.matching import NoveltyReport

    t = Thresholds(low=0.1, high=0.65)
    mk = lambda s: NoveltyReport(s, (), (), ())  # noqa: E731
    assert classify_novelty(mk(0.0), t) is NoveltyBand.KNOWN
    assert classify_novelty(mk(0.1), t) is NoveltyBand.AMBIGUOUS_NOVEL
    assert classify_novelty(mk(0.64), t) is NoveltyBand.AMBIGUOUS_NOVEL
    assert classify_novelty(mk(0.65), t) is NoveltyBand.STRONG_NOVEL
    assert classify_novelty(mk(1.0), t) is NoveltyBand.STRONG_NOVEL


def test_thresholds_validated():
    with pytest.raises(ValueError):
        Thresholds(low=0.7, high=0.6)
    with pytest.raises(ValueError):
        Thresholds(low=0.0, high=0.5)


def _random_instance(rng: random.Random):
    vocab = ["turn", "off", "on", "the", "light", "in", "kitchen", "play", "set",
             "stop", "music", "red", "make", "go", "dim", "room"]
    n = rng.randint(1, 8)
    command = [rng.choice(vocab) for _ in range(n)]

    store = SeedCommandStore()
    action = make_action("A", args=[("x", "any"), ("y", "any")])
    store.register_action(action)
    for _ in range(rng.randint(0, 12)):
        nvars = rng.choice([0, 0, 1, 1, 2])
        length = rng.randint(max(1, nvars * 2 - 1), 7)
        names = iter(("x", "y"))
        elements = []
        prev_var = True  # disallow a leading var sometimes? boundary vars are legal
        prev_var = False
        for _ in range(length):
            if nvars and not prev_var and rng.random() < 0.35:
                elements.append(f"${next(names)}")
                nvars -= 1
                prev_var = True
            else:
                elements.append(rng.choice(vocab))
                prev_var = False
        text = " ".join(elements)
        try:
            pattern = parse_pattern(text, action)
        except Exception:
            continue
        store.add(pattern, "A", Provenance.developer())
    return command, store


def test_novelty_matches_brute_force_on_random_instances():
    rng = random.Random(20240811)
    for _ in range(200):
        command, store = _random_instance(rng)
        report = novelty_report(command, store)
        assert report.novelty_score == brute_novelty(tuple(command), store.snapshot())
        for sc in store:
            a = align(command, sc)
            cost, feasible = brute_align(tuple(command), tuple(sc.pattern))
            assert a.edit_cost == cost, (command, sc.pattern)
            assert a.feasible == feasible, (command, sc.pattern)


def test_adding_sc_never_increases_novelty():
    rng = random.Random(7)
    for _ in range(60):
        command, store = _random_instance(rng)
        scs = list(store.snapshot())
        previous = novelty_report(command, []).novelty_score
        grown: list = []
        for sc in scs:
            grown.append(sc)
            score = novelty_report(command, grown).novelty_score
            assert score <= previous + 1e-15
            previous = score


def test_similarity_is_pairwise_stable():
    store = lights_store()
    command = tokenize("turn off the light in the kitchen")
    before = {sc.id: similarity(command, sc) for sc in store}
    actions = lights_actions()
    store.add(
        parse_pattern("turn off the light in the $place", actions["SwitchOffLight"]),
        "SwitchOffLight",
        Provenance.developer(),
    )
    after = {sc.id: similarity(command, sc) for sc in store if sc.id in before}
    assert before == after


def test_reports_are_deterministic():
    store = lights_store()
    command = tokenize("turn off the light in the kitchen")
    r1 = novelty_report(command, store)
    r2 = novelty_report(command, store)
    assert r1 == r2
