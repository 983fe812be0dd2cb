"""Run-sleep-run lifecycle state machine.

The engine reacts to externally queued events instead of OS power
signals: cleanup actions run right before entering Sleeping, restore
actions right before returning to Running. Repeated sleep or wake
requests are idempotent no-ops rather than errors so remote operators
can retry safely.
"""

from __future__ import annotations

from enum import Enum
from dataclasses import dataclass


class EngineState(Enum):
    INITIALIZING = "initializing"
    RUNNING = "running"
    SLEEPING = "sleeping"
    SHUTTING_DOWN = "shutting_down"
    FAULTED = "faulted"


class EventKind(Enum):
    INIT_COMPLETE = "init_complete"
    SLEEP_REQUESTED = "sleep_requested"
    WAKE_REQUESTED = "wake_requested"
    SHUTDOWN_REQUESTED = "shutdown_requested"
    FAULT_RAISED = "fault_raised"


@dataclass(frozen=True)
class LifecycleEvent:
    kind: EventKind
    reason: str | None = None  # only FAULT_RAISED carries one


class Action(Enum):
    START_SOURCE = "start_source"
    START_PIPELINE = "start_pipeline"
    PAUSE_PIPELINE = "pause_pipeline"
    FLUSH_SINKS = "flush_sinks"
    RELEASE_SOURCE = "release_source"
    PERSIST_TRACKER = "persist_tracker"
    REACQUIRE_SOURCE = "reacquire_source"
    RESTORE_TRACKER = "restore_tracker"
    RESUME_PIPELINE = "resume_pipeline"
    CLOSE_SINKS = "close_sinks"


_SLEEP_CLEANUP = [
    Action.PAUSE_PIPELINE,
    Action.FLUSH_SINKS,
    Action.RELEASE_SOURCE,
    Action.PERSIST_TRACKER,
]

_WAKE_RESTORE = [
    Action.REACQUIRE_SOURCE,
    Action.RESTORE_TRACKER,
    Action.RESUME_PIPELINE,
]


def transition(
    state: EngineState, event: LifecycleEvent
) -> tuple[EngineState, list[Action]]:
    """Total transition function: (state, event) -> (state, ordered actions).

    Unlisted pairs are no-ops that keep the state and return no actions;
    FAULTED is terminal except for shutdown.
    """
    kind = event.kind

    if kind is EventKind.SHUTDOWN_REQUESTED:
        if state is EngineState.SHUTTING_DOWN:
            return state, []
        return EngineState.SHUTTING_DOWN, _SLEEP_CLEANUP + [Action.CLOSE_SINKS]

    if kind is EventKind.FAULT_RAISED:
        if state in (EngineState.FAULTED, EngineState.SHUTTING_DOWN):
            return state, []
        return EngineState.FAULTED, _SLEEP_CLEANUP + [Action.CLOSE_SINKS]

    if state is EngineState.INITIALIZING and kind is EventKind.INIT_COMPLETE:
        return EngineState.RUNNING, [Action.START_SOURCE, Action.START_PIPELINE]

    if state is EngineState.RUNNING and kind is EventKind.SLEEP_REQUESTED:
        return EngineState.SLEEPING, list(_SLEEP_CLEANUP)

    if state is EngineState.SLEEPING and kind is EventKind.WAKE_REQUESTED:
        return EngineState.RUNNING, list(_WAKE_RESTORE)

    return state, []
