"""Description of a NOMA cluster: geometry, path loss, fading and user selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ParameterError
from .geometry import DistanceModel, Mcp, PppVoronoi, Tcp
from .numerics import FadingModel


@dataclass(frozen=True)
class Pairing:
    """Pick users of ranks ``selection`` (1-based, nearest first) out of ``pool_size``."""

    pool_size: int
    selection: tuple

    def __post_init__(self):
        sel = tuple(int(v) for v in self.selection)
        object.__setattr__(self, "selection", sel)
        if int(self.pool_size) != self.pool_size or self.pool_size < 1:
            raise ParameterError(f"pool size must be a positive integer, got {self.pool_size}")
        if not sel:
            raise ParameterError("selection must not be empty")
        if any(b <= a for a, b in zip(sel, sel[1:])):
            raise ParameterError(f"selection must be strictly ascending, got {sel}")
        if sel[0] < 1 or sel[-1] > self.pool_size:
            raise ParameterError(f"selection {sel} outside 1..{self.pool_size}")

    @property
    def gaps(self) -> tuple:
        """Unselected users below, between and above the selected ranks."""
        sel = self.selection
        inner = tuple(b - a - 1 for a, b in zip(sel, sel[1:]))
        return (sel[0] - 1,) + inner + (self.pool_size - sel[-1],)

    def label(self) -> str:
        return "-".join(str(v) for v in self.selection)


@dataclass(frozen=True)
class ClusterSpec:
    model: DistanceModel
    alpha: float
    fading: FadingModel = field(default_factory=FadingModel)
    n_users: int = 2
    pairing: Pairing | None = None

    def __post_init__(self):
        if not isinstance(self.model, (PppVoronoi, Mcp, Tcp)):
            raise ParameterError(f"unknown distance model {self.model!r}")
        if not (math.isfinite(self.alpha) and self.alpha > 2):
            raise ParameterError(f"path-loss exponent must be > 2, got {self.alpha}")
        if not isinstance(self.fading, FadingModel):
            raise ParameterError("fading must be a FadingModel")
        if int(self.n_users) != self.n_users or self.n_users < 1:
            raise ParameterError(f"cluster size must be a positive integer, got {self.n_users}")
        if self.pairing is not None and len(self.pairing.selection) != self.n_users:
            raise ParameterError(
                f"selection {self.pairing.selection} does not have {self.n_users} entries"
            )

    @property
    def pool_size(self) -> int:
        return self.n_users if self.pairing is None else self.pairing.pool_size

    @property
    def selection(self) -> tuple:
        if self.pairing is None:
            return tuple(range(1, self.n_users + 1))
        return self.pairing.selection
