"""Building-plan data model, file ingestion, and validation.

A plan is a set of axis-aligned rectangular rooms joined by doors.  Rooms
carry no global coordinates: geometry is local to each room and doors say
which wall they sit on through a perimeter offset (see `wall_of`).  The
distinguished endpoint ``"EXIT"`` denotes the safe place (network node 0).
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field, replace

EXIT = "EXIT"

ROOM_KINDS = ("flat", "stair")

# Walls of a room, in perimeter-offset order starting at the origin corner.
SOUTH, EAST, NORTH, WEST = "S", "E", "N", "W"


class ParseError(ValueError):
    """Raised when a plan document is not well-formed."""


class ValidationError(ValueError):
    """Raised when a well-formed plan document violates plan invariants."""


@dataclass(frozen=True)
class Room:
    id: str
    width: float          # p_k, meters (x extent)
    depth: float          # q_k, meters (y extent)
    kind: str = "flat"

    @property
    def perimeter(self) -> float:
        return 2.0 * (self.width + self.depth)


@dataclass(frozen=True)
class Door:
    """Passage between two rooms, or between a room and the safe place.

    `position` is a perimeter offset (meters) on the host room: the first
    endpoint if it is a room, else the second.  Walls are traversed in the
    order south, east, north, west; within a wall the offset is measured
    from the wall's west/south end.  `position=None` centers the door on
    the host room's east wall.
    """

    endpoints: tuple[str, str]
    width: float
    position: float | None = None

    @property
    def host(self) -> str:
        a, b = self.endpoints
        return a if a != EXIT else b

    @property
    def other(self) -> str:
        a, b = self.endpoints
        return b if a != EXIT else a

    def is_exit(self) -> bool:
        return EXIT in self.endpoints


@dataclass(frozen=True)
class BuildingPlan:
    rooms: tuple[Room, ...]
    doors: tuple[Door, ...]
    occupancy: dict[str, int] = field(default_factory=dict)
    name: str = ""

    def room(self, room_id: str) -> Room:
        for r in self.rooms:
            if r.id == room_id:
                return r
        raise KeyError(room_id)

    def room_occupancy(self) -> dict[str, int]:
        """Per-room occupant counts, expanding a `uniform` entry."""
        if set(self.occupancy) == {"uniform"}:
            n = self.occupancy["uniform"]
            return {r.id: n for r in self.rooms}
        return {r.id: self.occupancy.get(r.id, 0) for r in self.rooms}

    def total_occupancy(self) -> int:
        return sum(self.room_occupancy().values())

    def with_occupancy(self, occupancy: dict[str, int]) -> "BuildingPlan":
        return replace(self, occupancy=dict(occupancy))


def wall_of(room: Room, position: float) -> tuple[str, float]:
    """Resolve a perimeter offset to (wall, offset along that wall)."""
    w, q = room.width, room.depth
    if position < 0 or position > room.perimeter:
        raise ValidationError(
            f"door position {position} outside perimeter of room {room.id!r}"
        )
    if position < w:
        return SOUTH, position
    if position < w + q:
        return EAST, position - w
    if position < 2 * w + q:
        return NORTH, position - (w + q)
    return WEST, position - (2 * w + q)


MIRROR_WALL = {SOUTH: NORTH, NORTH: SOUTH, EAST: WEST, WEST: EAST}


def wall_length(room: Room, wall: str) -> float:
    return room.width if wall in (SOUTH, NORTH) else room.depth


def door_position(plan: BuildingPlan, door: Door) -> float:
    """Effective perimeter offset of a door (default: east-wall center)."""
    if door.position is not None:
        return door.position
    host = plan.room(door.host)
    return host.width + host.depth / 2.0


def validate_plan(plan: BuildingPlan) -> BuildingPlan:
    if not plan.rooms:
        raise ValidationError("plan has no rooms")
    ids = [r.id for r in plan.rooms]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate room ids")
    for r in plan.rooms:
        if r.width <= 0 or r.depth <= 0:
            raise ValidationError(f"room {r.id!r} has non-positive dimensions")
        if r.kind not in ROOM_KINDS:
            raise ValidationError(f"room {r.id!r} has unknown kind {r.kind!r}")
    known = set(ids)
    if not plan.doors:
        raise ValidationError("plan has no doors")
    for d in plan.doors:
        a, b = d.endpoints
        if a == b:
            raise ValidationError(f"door endpoints coincide: {d.endpoints}")
        for end in d.endpoints:
            if end != EXIT and end not in known:
                raise ValidationError(f"door references unknown room {end!r}")
        if d.width <= 0:
            raise ValidationError("door width must be positive")
        host = plan.room(d.host)
        pos = door_position(plan, d)
        wall, off = wall_of(host, pos)  # raises if beyond perimeter
        limit = wall_length(host, wall)
        if not d.is_exit():
            other = plan.room(d.other)
            limit = min(limit, wall_length(other, MIRROR_WALL[wall]))
        if d.width > limit + 1e-9:
            raise ValidationError(
                f"door of width {d.width} exceeds shared boundary "
                f"({limit} m) between {d.endpoints}"
            )
    if not any(d.is_exit() for d in plan.doors):
        raise ValidationError("plan has no exit door")
    occ = plan.occupancy
    for key, count in occ.items():
        if key != "uniform" and key not in known:
            raise ValidationError(f"occupancy references unknown room {key!r}")
        if not isinstance(count, int) or count < 0:
            raise ValidationError(f"occupancy for {key!r} must be a count >= 0")
    if "uniform" in occ and len(occ) > 1:
        raise ValidationError("occupancy mixes 'uniform' with per-room counts")
    return plan


def _as_number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{what} must be a number, got {value!r}")
    return float(value)


def load_plan(source) -> BuildingPlan:
    """Parse and validate a plan document (bytes, str, or binary stream)."""
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"malformed plan document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("plan document must be a JSON object")
    unknown = set(doc) - {"name", "rooms", "doors", "occupancy"}
    if unknown:
        raise ParseError(f"unknown top-level keys: {sorted(unknown)}")

    rooms = []
    for entry in doc.get("rooms", []):
        if not isinstance(entry, dict) or "id" not in entry:
            raise ParseError(f"bad room entry: {entry!r}")
        rooms.append(
            Room(
                id=str(entry["id"]),
                width=_as_number(entry.get("width_m"), "room width_m"),
                depth=_as_number(entry.get("depth_m"), "room depth_m"),
                kind=str(entry.get("kind", "flat")),
            )
        )
    doors = []
    for entry in doc.get("doors", []):
        if not isinstance(entry, dict) or "from" not in entry or "to" not in entry:
            raise ParseError(f"bad door entry: {entry!r}")
        pos = entry.get("position_m")
        doors.append(
            Door(
                endpoints=(str(entry["from"]), str(entry["to"])),
                width=_as_number(entry.get("width_m"), "door width_m"),
                position=None if pos is None else _as_number(pos, "door position_m"),
            )
        )
    occupancy = doc.get("occupancy", {})
    if not isinstance(occupancy, dict):
        raise ParseError("occupancy must be an object")
    plan = BuildingPlan(
        rooms=tuple(rooms),
        doors=tuple(doors),
        occupancy={str(k): v for k, v in occupancy.items()},
        name=str(doc.get("name", "")),
    )
    return validate_plan(plan)


def save_plan(plan: BuildingPlan) -> bytes:
    """Serialize to the canonical document form (stable key order)."""
    doc = {
        "name": plan.name,
        "rooms": [
            {"id": r.id, "width_m": r.width, "depth_m": r.depth, "kind": r.kind}
            for r in plan.rooms
        ],
        "doors": [
            {
                "from": d.endpoints[0],
                "to": d.endpoints[1],
                "width_m": d.width,
                **({"position_m": d.position} if d.position is not None else {}),
            }
            for d in plan.doors
        ],
        "occupancy": {k: plan.occupancy[k] for k in sorted(plan.occupancy)},
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def load_plan_file(path) -> BuildingPlan:
    with io.open(path, "rb") as handle:
        return load_plan(handle)
