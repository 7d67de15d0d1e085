"""Context sampling: casts, room layouts, and object inventories.

A pool holds layout templates plus a shared name pool; sampling yields a
fully concrete WorldSpec, so world construction itself stays deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .epistemic import WorldError, WorldSpec

_NAME_POOL = (
    "Alice", "Bashir", "Carmen", "Dmitri", "Elena", "Farid", "Greta", "Hugo",
    "Ingrid", "Jonas", "Keiko", "Lars", "Mireille", "Nadia", "Omar", "Priya",
    "Quentin", "Rosa", "Stefan", "Tomas", "Ulla", "Viktor", "Wanda", "Xenia",
    "Yusuf", "Zofia", "Anouk", "Bram", "Céline", "Darius", "Esther", "Felix",
    "Gloria", "Hamid", "Irene", "Jules", "Katya", "Leon", "Marta", "Nikolai",
    "Odette", "Pablo", "Rahim", "Selma", "Tariq", "Ursula", "Vera", "Wim",
    "Yara", "Zeno", "Agnes", "Boris", "Clara", "Dario", "Edith", "Fabio",
    "Gerda", "Henrik", "Ilse", "Janek", "Kasia", "Louka", "Milena", "Nuno",
    "Olena", "Piotr", "Renata", "Sven", "Talia", "Umberto", "Violet", "Wren",
    "Yekta", "Zara", "Amara", "Benno", "Cora", "Dina", "Emil", "Freya",
)


@dataclass(frozen=True)
class Layout:
    """A room/container/object template awaiting a sampled cast."""

    rooms: tuple[str, ...]
    containers: Mapping[str, str]
    objects: tuple[str, ...]
    n_agents: int

    def to_dict(self) -> dict:
        return {
            "rooms": list(self.rooms),
            "containers": dict(self.containers),
            "objects": list(self.objects),
            "n_agents": self.n_agents,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Layout":
        return cls(
            rooms=tuple(data["rooms"]),
            containers=dict(data["containers"]),
            objects=tuple(data["objects"]),
            n_agents=int(data["n_agents"]),
        )


_DEFAULT_LAYOUTS = (
    Layout(("kitchen", "hallway"), {"cupboard": "kitchen", "basket": "hallway"}, ("apple",), 3),
    Layout(
        ("study", "parlor", "cellar"),
        {"drawer": "study", "chest": "cellar", "crate": "parlor"},
        ("ledger", "coin"),
        4,
    ),
    Layout(("garden", "shed"), {"toolbox": "shed", "planter": "garden"}, ("trowel", "seedbag"), 2),
    Layout(("lab", "office", "lounge"), {"locker": "lab", "cabinet": "office"}, ("vial",), 3),
    Layout(
        ("gallery", "vault"),
        {"pedestal_case": "gallery", "strongbox": "vault"},
        ("medallion", "sketch"),
        3,
    ),
)

_SMALL_LAYOUTS = (
    Layout(("kitchen", "hallway"), {"cupboard": "kitchen", "basket": "hallway"}, ("apple",), 3),
)


@dataclass(frozen=True)
class ContextPool:
    """Predefined agent names, room layouts, and object inventories."""

    names: tuple[str, ...]
    layouts: tuple[Layout, ...]

    def __post_init__(self) -> None:
        if not self.layouts:
            raise WorldError("context pool has no layouts")
        if len(self.names) < self.max_agents:
            raise WorldError("name pool smaller than the largest cast")

    @property
    def max_agents(self) -> int:
        return max(l.n_agents for l in self.layouts)

    @property
    def max_objects(self) -> int:
        return max(len(l.objects) for l in self.layouts)

    def sample(self, rng: np.random.Generator) -> WorldSpec:
        """Draw one concrete world: layout, cast names, rooms, placements."""
        layout = self.layouts[int(rng.integers(len(self.layouts)))]
        idx = rng.choice(len(self.names), size=layout.n_agents, replace=False)
        cast = tuple(self.names[int(i)] for i in idx)
        locations = list(layout.rooms) + sorted(layout.containers)
        placement = {
            obj: locations[int(rng.integers(len(locations)))] for obj in layout.objects
        }
        agent_rooms = {
            agent: layout.rooms[int(rng.integers(len(layout.rooms)))] for agent in cast
        }
        return WorldSpec(
            agents=cast,
            rooms=layout.rooms,
            containers=dict(layout.containers),
            objects=layout.objects,
            object_placement=placement,
            agent_rooms=agent_rooms,
        )

    @classmethod
    def default(cls) -> "ContextPool":
        return cls(names=_NAME_POOL, layouts=_DEFAULT_LAYOUTS)

    @classmethod
    def small(cls) -> "ContextPool":
        """Single-layout pool for fast desk-scale training runs."""
        return cls(names=_NAME_POOL, layouts=_SMALL_LAYOUTS)

    def to_dict(self) -> dict:
        return {"names": list(self.names), "layouts": [l.to_dict() for l in self.layouts]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ContextPool":
        return cls(
            names=tuple(data["names"]),
            layouts=tuple(Layout.from_dict(l) for l in data["layouts"]),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ContextPool":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))
