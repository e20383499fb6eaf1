"""Append-only store of seed commands.

Learning only ever appends: existing entries are never mutated or removed,
which is what keeps previously learned behavior stable as new commands and
whole new skill domains arrive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .commands import (
    ApiAction,
    PatternElement,
    Provenance,
    SeedCommand,
    validate_pattern,
)


class UnknownAction(KeyError):
    pass


@dataclass
class SeedCommandStore:
    actions: dict[str, ApiAction] = field(default_factory=dict)
    _commands: list[SeedCommand] = field(default_factory=list)
    _next_id: int = 1
    _clock: int = 0

    def register_action(self, action: ApiAction) -> None:
        if action.id in self.actions:
            raise ValueError(f"action {action.id} already registered")
        self.actions[action.id] = action

    def action(self, action_id: str) -> ApiAction:
        try:
            return self.actions[action_id]
        except KeyError:
            raise UnknownAction(action_id) from None

    def add(
        self,
        pattern: tuple[PatternElement, ...],
        action_id: str,
        provenance: Provenance,
        always_elicit: frozenset[str] = frozenset(),
    ) -> SeedCommand | None:
        """Validate and append; returns None when an identical pattern for
        the same action is already stored (teaching twice is a no-op)."""
        action = self.action(action_id)
        validate_pattern(pattern, action)
        for existing in self._commands:
            if existing.action_id == action_id and existing.pattern == pattern:
                return None
        self._clock += 1
        sc = SeedCommand(
            id=self._next_id,
            pattern=pattern,
            action_id=action_id,
            provenance=provenance,
            task_id=action.task_id,
            created_at=self._clock,
            always_elicit=always_elicit,
        )
        self._next_id += 1
        self._commands.append(sc)
        return sc

    def restore(self, sc: SeedCommand) -> None:
        """Re-insert a persisted seed command verbatim (snapshot load)."""
        action = self.action(sc.action_id)
        validate_pattern(sc.pattern, action)
        if any(existing.id == sc.id for existing in self._commands):
            raise ValueError(f"duplicate seed command id {sc.id}")
        self._commands.append(sc)
        self._next_id = max(self._next_id, sc.id + 1)
        self._clock = max(self._clock, sc.created_at)

    def get(self, sc_id: int) -> SeedCommand:
        for sc in self._commands:
            if sc.id == sc_id:
                return sc
        raise KeyError(sc_id)

    def snapshot(self, task_id: str | None = None) -> tuple[SeedCommand, ...]:
        """Immutable view, optionally restricted to one skill domain."""
        if task_id is None:
            return tuple(self._commands)
        return tuple(sc for sc in self._commands if sc.task_id == task_id)

    def __len__(self) -> int:
        return len(self._commands)

    def __iter__(self):
        return iter(self._commands)
