"""Shared builders for tests."""

from __future__ import annotations

from grounder.commands import (
    ApiAction,
    ArgSpec,
    Provenance,
    SeedCommand,
    parse_pattern,
)
from grounder.store import SeedCommandStore


def make_action(
    action_id: str,
    args: list[tuple[str, str]] | None = None,
    gloss: str | None = None,
    done_gloss: str | None = None,
    task_id: str = "demo",
) -> ApiAction:
    args = args or []
    specs = tuple(ArgSpec(name, slot, f"which {slot}?") for name, slot in args)
    if gloss is None:
        gloss = action_id.lower() + "".join(" {%s}" % name for name, _ in args)
    if done_gloss is None:
        done_gloss = "did " + gloss
    return ApiAction(
        id=action_id,
        name=action_id.lower(),
        args=specs,
        gloss=gloss,
        done_gloss=done_gloss,
        task_id=task_id,
    )


def make_sc(pattern_text: str, action: ApiAction, sc_id: int = 1) -> SeedCommand:
    return SeedCommand(
        id=sc_id,
        pattern=parse_pattern(pattern_text, action),
        action_id=action.id,
        provenance=Provenance.developer(),
        task_id=action.task_id,
        created_at=sc_id,
    )


def lights_actions() -> dict[str, ApiAction]:
    off = ApiAction(
        id="SwitchOffLight",
        name="switch_off_light",
        args=(ArgSpec("place", "place", "In which place?"),),
        gloss="switch off the light in the {place}",
        done_gloss="switched off the light in the {place}",
        task_id="lights",
    )
    on = ApiAction(
        id="SwitchOnLight",
        name="switch_on_light",
        args=(ArgSpec("place", "place", "In which place?"),),
        gloss="switch on the light in the {place}",
        done_gloss="switched on the light in the {place}",
        task_id="lights",
    )
    color = ApiAction(
        id="ChangeLightColor",
        name="change_light_color",
        args=(),
        gloss="change the color of the light",
        done_gloss="changed the color of the light",
        task_id="lights",
    )
    return {a.id: a for a in (off, on, color)}


def lights_store() -> SeedCommandStore:
    store = SeedCommandStore()
    actions = lights_actions()
    for action in actions.values():
        store.register_action(action)
    store.add(
        parse_pattern("switch off the light in the $place", actions["SwitchOffLight"]),
        "SwitchOffLight",
        Provenance.developer(),
    )
    store.add(
        parse_pattern("switch on the light in the $place", actions["SwitchOnLight"]),
        "SwitchOnLight",
        Provenance.developer(),
    )
    store.add(
        parse_pattern("change the color of the light", actions["ChangeLightColor"]),
        "ChangeLightColor",
        Provenance.developer(),
    )
    return store
