"""Exception hierarchy shared by every layer of the simulator."""

from typing import Any, List, Optional


class SimulationError(Exception):
    """Base class for every error the simulator raises on purpose."""


# Kernel


class PastTime(SimulationError):
    def __init__(self, fire_at: int, now: int):
        super().__init__(f"cannot schedule at t={fire_at}, clock is already at t={now}")
        self.fire_at = fire_at
        self.now = now


class HandlerFailure(SimulationError):
    """Wraps an unexpected handler error with the identity of the event."""

    def __init__(self, event: Any, cause: BaseException):
        super().__init__(
            f"handler for {type(event.payload).__name__} on {event.target} "
            f"(t={event.fire_at}, seq={event.seq}) failed: {cause!r}"
        )
        self.event = event
        self.cause = cause


class ConservationError(SimulationError):
    pass


# Network


class OutOfRange(SimulationError):
    pass


# Nodes


class EmptyDataset(SimulationError):
    pass


class DepletedNode(SimulationError):
    pass


class NoForwardTarget(SimulationError):
    def __init__(self, node_id: str):
        super().__init__(f"node {node_id} has no forward target")
        self.node_id = node_id


class DeadTarget(SimulationError):
    def __init__(self, node_id: str):
        super().__init__(f"target node {node_id} is not alive")
        self.node_id = node_id


# Cloud and services


class UnknownServiceType(SimulationError):
    def __init__(self, service_type: str):
        super().__init__(f"service type {service_type!r} is not registered")
        self.service_type = service_type


class DuplicateRound(SimulationError):
    def __init__(self, gateway: str, day: int, round_index: int):
        super().__init__(f"record for ({gateway}, day {day}, round {round_index}) already stored")
        self.key = (gateway, day, round_index)


class EmptyInput(SimulationError):
    pass


# Scenario I/O


class MissingFile(SimulationError):
    pass


class BadHeader(SimulationError):
    pass


class NonNumericValue(SimulationError):
    def __init__(self, source: str, row: int, value: Any):
        super().__init__(f"{source}: row {row} holds non-numeric value {value!r}")
        self.row = row
        self.value = value


class IoFailure(SimulationError):
    pass


class UnknownPreset(SimulationError):
    pass


class InvalidOption(SimulationError):
    """A command-line or preset option outside its accepted range."""


class ScenarioInvalid(SimulationError):
    """Raised with the complete list of diagnostics found in a document."""

    def __init__(self, diagnostics: List[Any], source: Optional[str] = None):
        lines = "; ".join(str(d) for d in diagnostics[:5])
        more = f" (+{len(diagnostics) - 5} more)" if len(diagnostics) > 5 else ""
        super().__init__(f"{source or 'scenario'} is invalid: {lines}{more}")
        self.diagnostics = diagnostics
