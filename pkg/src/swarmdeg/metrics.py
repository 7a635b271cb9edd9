"""Per-run result records and cross-replicate aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RunMetrics:
    """Everything a single simulated run reports.

    Lineage keys are stable across replacement, so per-robot counts keep a
    fixed denominator of n_robots for the whole run.
    """

    environment: str
    algorithm: str
    n_robots: int
    replicate: int
    master_seed: int
    duration_s: float
    collected: dict[int, int]
    delivered: dict[int, int]
    lost: dict[int, int]
    carried_at_end: dict[int, int]
    afflicted: dict[int, bool]
    events: list[dict] = field(default_factory=list)
    service_log: list[dict] = field(default_factory=list)
    strandings: int = 0
    obstacles_created: int = 0
    removed_in_base: int = 0
    replacements: int = 0
    final_alive: int = 0
    telemetry: list[dict] = field(default_factory=list)
    harvest: list = field(default_factory=list)  # harvest mode only

    def to_dict(self) -> dict:
        out = {
            "environment": self.environment,
            "algorithm": self.algorithm,
            "n_robots": self.n_robots,
            "replicate": self.replicate,
            "master_seed": self.master_seed,
            "duration_s": self.duration_s,
            "collected": {str(k): v for k, v in sorted(self.collected.items())},
            "delivered": {str(k): v for k, v in sorted(self.delivered.items())},
            "lost": {str(k): v for k, v in sorted(self.lost.items())},
            "carried_at_end": {str(k): v for k, v in sorted(self.carried_at_end.items())},
            "afflicted": {str(k): v for k, v in sorted(self.afflicted.items())},
            "events": self.events,
            "service_log": self.service_log,
            "strandings": self.strandings,
            "obstacles_created": self.obstacles_created,
            "removed_in_base": self.removed_in_base,
            "replacements": self.replacements,
            "final_alive": self.final_alive,
        }
        if self.telemetry:
            out["telemetry"] = self.telemetry
        return out


def pooled_delivered(runs: list[RunMetrics], afflicted: bool | None = None) -> list[int]:
    """Per-robot delivered counts pooled across replicates.

    afflicted=None pools every lineage; True/False filters by fault status.
    """
    pooled = []
    for run in runs:
        for lin, count in sorted(run.delivered.items()):
            if afflicted is None or run.afflicted.get(lin, False) == afflicted:
                pooled.append(count)
    return pooled


def median_or_none(values) -> float | None:
    if not values:
        return None
    return float(np.median(values))


def iqr_or_none(values) -> float | None:
    if not values:
        return None
    q1, q3 = np.percentile(values, [25.0, 75.0])
    return float(q3 - q1)


def pooled_deltas(runs: list[RunMetrics], kind: str) -> list[float]:
    """Ground-truth degradation values at detection, pooled across runs."""
    return [ev["delta"] for run in runs for ev in run.events if ev["kind"] == kind]
