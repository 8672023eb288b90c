"""
Object and predicate vocabulary.
Base predicates occupy indices 0-5, depth predicates 6-7.
"""
from dataclasses import dataclass
from typing import Dict, Tuple

from src.core.errors import ConfigError, DataError

BASE_PREDICATES = ("left of", "right of", "above", "below", "inside", "surrounding")
AUGMENTED_PREDICATES = ("in front of", "behind")
PREDICATES = BASE_PREDICATES + AUGMENTED_PREDICATES

LEFT_OF, RIGHT_OF, ABOVE, BELOW, INSIDE, SURROUNDING = range(6)
IN_FRONT_OF, BEHIND = 6, 7
NUM_BASE_PREDICATES = len(BASE_PREDICATES)

# Argument swap maps each predicate to its converse
CONVERSE = {
    LEFT_OF: RIGHT_OF,
    RIGHT_OF: LEFT_OF,
    ABOVE: BELOW,
    BELOW: ABOVE,
    INSIDE: SURROUNDING,
    SURROUNDING: INSIDE,
    IN_FRONT_OF: BEHIND,
    BEHIND: IN_FRONT_OF,
}

DEFAULT_CATEGORIES = (
    "sky", "cloud", "tree", "building", "wall",
    "person", "car", "grass", "road", "pavement",
)


@dataclass(frozen=True)
class Vocab:
    """Ordered object categories plus the fixed predicate list."""

    object_categories: Tuple[str, ...]
    predicates: Tuple[str, ...] = PREDICATES

    def __post_init__(self):
        object.__setattr__(self, "object_categories", tuple(self.object_categories))
        object.__setattr__(self, "predicates", tuple(self.predicates))
        if not self.object_categories:
            raise ConfigError("vocabulary needs at least one object category")
        if len(set(self.object_categories)) != len(self.object_categories):
            raise ConfigError("object category names must be unique")
        if self.predicates != PREDICATES:
            raise ConfigError(f"predicates must be exactly {list(PREDICATES)}")

    @classmethod
    def default(cls, n_categories=None):
        categories = DEFAULT_CATEGORIES if n_categories is None else DEFAULT_CATEGORIES[:n_categories]
        return cls(categories)

    @property
    def num_categories(self):
        return len(self.object_categories)

    @property
    def num_predicates(self):
        return len(self.predicates)

    def category_index(self, name):
        try:
            return self._category_lookup[name]
        except KeyError:
            raise DataError(f"unknown object category {name!r}") from None

    def predicate_index(self, name):
        try:
            return self.predicates.index(name)
        except ValueError:
            raise DataError(f"unknown predicate {name!r}") from None

    @property
    def _category_lookup(self) -> Dict[str, int]:
        return {name: i for i, name in enumerate(self.object_categories)}

    def to_dict(self):
        return {"object_categories": list(self.object_categories), "predicates": list(self.predicates)}

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(data["object_categories"]), tuple(data.get("predicates", PREDICATES)))
