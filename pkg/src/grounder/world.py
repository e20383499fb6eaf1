"""A small smart-home world the demo actions act on.

The world is a fixture for exercising grounding, not a home-automation
model: unknown rooms are created on demand (light off, white) so a live
teaching session is never blocked by an incomplete floor plan.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .commands import ApiAction

PALETTE = ("white", "red", "green", "blue")


class MissingArg(ValueError):
    pass


@dataclass
class Room:
    light_on: bool = False
    color: str = "white"


@dataclass
class WorldState:
    rooms: dict[str, Room] = field(default_factory=dict)
    fact_ground_truth: set = field(default_factory=set)
    history: list[tuple[str, tuple[tuple[str, str], ...]]] = field(default_factory=list)

    def room(self, name: str) -> Room:
        if name not in self.rooms:
            self.rooms[name] = Room()
        return self.rooms[name]

    def execute(self, action: ApiAction, args: dict[str, str]) -> None:
        """Apply the action's semantics; unknown action names are accepted
        as no-ops so extra skill domains need no world support."""
        for spec in action.args:
            if spec.name not in args:
                raise MissingArg(f"{action.id} needs {spec.name}")
        if action.name == "switch_off_light":
            self.room(args["place"]).light_on = False
        elif action.name == "switch_on_light":
            self.room(args["place"]).light_on = True
        elif action.name == "change_light_color":
            for room in self.rooms.values():
                idx = PALETTE.index(room.color) if room.color in PALETTE else 0
                room.color = PALETTE[(idx + 1) % len(PALETTE)]
        self.history.append((action.id, tuple(sorted(args.items()))))
