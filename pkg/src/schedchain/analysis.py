"""Deadlock and fairness analytics over trajectories, plus scheme comparison.

The composite ``efficiency_index`` at quantum ``n`` is defined here as

    survival(n) * jain_fairness(conditional process distribution at n)

i.e. the probability of still running times how evenly the remaining mass is
spread over the process slots.  It is a library-defined score (bounded,
unit-free), and the raw survival and fairness curves are always reported next
to it so any alternative composite can be computed from the same data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .model import (
    DimensionError,
    ParameterError,
    Distribution,
    SchemeParams,
    Trajectory,
    build_matrix,
    propagate,
    _check_int,
)
from .schemes import SchemeId, SchemePreset

__all__ = [
    "jain_fairness",
    "SchemeMetrics",
    "SchemeComparison",
    "ComparisonReport",
    "metrics",
    "compare",
]

_SCHEME_ORDER = {scheme: rank for rank, scheme in enumerate(SchemeId)}


def jain_fairness(shares) -> float:
    """Jain index ``(sum c)^2 / (k * sum c^2)`` of non-negative shares.

    Equals 1 for perfectly equal shares and ``1/k`` when a single share
    monopolizes everything.  Scale-invariant.
    """
    c = np.asarray(shares, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise DimensionError("shares must be a non-empty vector")
    if float(c.min()) < 0.0:
        raise ParameterError("shares must be non-negative")
    total = float(c.sum())
    if total <= 0.0:
        raise ParameterError("at least one share must be positive")
    return total * total / (c.size * float((c * c).sum()))


@dataclass(frozen=True, eq=False)
class SchemeMetrics:
    """Per-quantum survival, fairness and efficiency curves of one trajectory.

    ``expected_absorption`` is the mean number of quanta until deadlock,
    ``1/r`` for a state-independent hazard ``r > 0`` and infinite otherwise.
    ``fairness[n]`` is 1 by convention once survival reaches 0.
    """

    survival: np.ndarray
    fairness: np.ndarray
    efficiency_index: np.ndarray
    expected_absorption: float

    def __post_init__(self) -> None:
        for name in ("survival", "fairness", "efficiency_index"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def horizon(self) -> int:
        return self.survival.size - 1


def metrics(trajectory: Trajectory, params: SchemeParams | None = None) -> SchemeMetrics:
    """Compute survival, fairness and efficiency curves for a trajectory.

    When ``params`` is given, the expected absorption time is ``1/params.r``
    (infinite for ``r == 0``).  Without it the hazard is inferred from the
    first survival ratio, which is exact for this chain family because the
    per-quantum deadlock hazard does not depend on the occupied slot; a
    single-row trajectory is treated as hazard-free.
    """
    table = trajectory.to_array()
    survival = 1.0 - table[:, -1]
    m = trajectory.m

    fairness = np.empty(len(trajectory))
    for n, alive in enumerate(survival):
        if alive <= 0.0:
            fairness[n] = 1.0
            continue
        conditional = table[n, :-1] / alive
        if float(conditional.sum()) <= 0.0:
            fairness[n] = 1.0
        else:
            fairness[n] = jain_fairness(conditional)

    if params is not None:
        hazard = params.r
    elif len(trajectory) >= 2 and survival[0] > 0.0:
        hazard = 1.0 - float(survival[1] / survival[0])
    else:
        hazard = 0.0
    expected = math.inf if hazard <= 0.0 else 1.0 / hazard

    return SchemeMetrics(survival, fairness, survival * fairness, expected)


@dataclass(frozen=True, eq=False)
class SchemeComparison:
    """One compared preset together with its exact-propagation metrics."""

    scheme: SchemeId
    params: SchemeParams
    init: Distribution
    metrics: SchemeMetrics


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    """Side-by-side metrics for several presets, ranked at the horizon.

    ``ranking`` holds indices into ``entries`` ordered by descending
    ``efficiency_index`` at the horizon; exact ties fall back to catalog
    order (I_A through IV), then to input position.
    """

    entries: tuple[SchemeComparison, ...]
    ranking: tuple[int, ...]
    horizon: int
    engine: str = "matrix"

    @property
    def ranked_schemes(self) -> tuple[SchemeId, ...]:
        return tuple(self.entries[i].scheme for i in self.ranking)

    def entry_for(self, scheme: SchemeId) -> SchemeComparison:
        """The first entry carrying the given scheme id."""
        for entry in self.entries:
            if entry.scheme is scheme:
                return entry
        raise KeyError(scheme)


def compare(presets: Iterable[SchemePreset], horizon: int) -> ComparisonReport:
    """Propagate every preset for ``horizon`` quanta and rank the outcomes.

    All presets must share the same ring size ``m``.
    """
    presets = tuple(presets)
    if not presets:
        raise ParameterError("compare needs at least one preset")
    horizon = _check_int(horizon, "horizon", 1)
    sizes = {preset.params.m for preset in presets}
    if len(sizes) != 1:
        raise DimensionError(f"presets must share one ring size, got m in {sorted(sizes)}")

    entries = []
    for preset in presets:
        trajectory = propagate(preset.init, build_matrix(preset.params), horizon)
        entries.append(
            SchemeComparison(
                preset.scheme, preset.params, preset.init, metrics(trajectory, preset.params)
            )
        )

    final = [entry.metrics.efficiency_index[horizon] for entry in entries]
    ranking = sorted(
        range(len(entries)),
        key=lambda i: (-final[i], _SCHEME_ORDER[entries[i].scheme], i),
    )
    return ComparisonReport(tuple(entries), tuple(ranking), horizon)
