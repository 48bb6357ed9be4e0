"""Empirical cooperate/defect payoff curves over the number of cooperators.

For each k in 0..M-1 the focal company (slot 0) plays a full episode twice,
once as a cooperator and once as a defector, against k cooperating and
M-1-k defecting others.  Both runs of a pair consume identical climate
uniforms (same seeds), so curve differences reflect policy alone.  The
focal payoff is the undiscounted sum of the company's per-period rewards
over the episode; curves aggregate means and standard errors over seeds.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import ConfigError, ScenarioConfig, run_batch, scripted_assignment


@dataclass(frozen=True)
class SchellingCurve:
    """Payoff curves indexed by the number of other cooperators."""

    k_values: np.ndarray  # (M,) ints 0..M-1
    cooperate_payoff: np.ndarray  # (M,) mean over seeds, trillions
    defect_payoff: np.ndarray  # (M,)
    average_payoff_when_defect: np.ndarray  # (M,)
    cooperate_stderr: np.ndarray  # (M,)
    defect_stderr: np.ndarray  # (M,)
    seeds: tuple[int, ...]
    horizon: int

    def __post_init__(self) -> None:
        n = len(self.k_values)
        for name in (
            "cooperate_payoff",
            "defect_payoff",
            "average_payoff_when_defect",
            "cooperate_stderr",
            "defect_stderr",
        ):
            arr = getattr(self, name)
            if len(arr) != n:
                raise ValueError(f"{name}: expected length {n}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name}: payoffs must be finite")


def _episode_totals(config, assignment, seeds) -> np.ndarray:
    """Per-seed (episode-total focal reward, episode-total company mean)."""
    result = run_batch(config, assignment, seeds)
    totals = np.array([rec.company_rewards.sum(axis=0) for rec in result.records])
    return totals  # (seeds, M)


def schelling_curve(
    config: ScenarioConfig,
    cooperator_kind: str = "cooperator",
    defector_kind: str = "defector",
    investor_kind: str = "profit",
    seeds: list[int] | None = None,
) -> SchellingCurve:
    """Sweep k and record focal cooperate/defect payoffs.

    The `*_kind` arguments name scripted company policies; investors are a
    single scripted kind shared by all investor slots.
    """
    config.validate()
    m = config.n_companies
    seeds = list(range(config.batch_size)) if seeds is None else list(seeds)
    if not seeds:
        raise ConfigError("seeds: need at least one seed")

    coop = np.zeros((m, len(seeds)))
    defect = np.zeros((m, len(seeds)))
    avg_when_defect = np.zeros((m, len(seeds)))

    for k in range(m):
        others = [cooperator_kind] * k + [defector_kind] * (m - 1 - k)
        for role, sink in ((cooperator_kind, coop), (defector_kind, defect)):
            assignment = scripted_assignment(config, [role] + others, investor_kind)
            totals = _episode_totals(config, assignment, seeds)
            sink[k] = totals[:, 0]
            if role == defector_kind:
                avg_when_defect[k] = totals.mean(axis=1)

    def stderr(a: np.ndarray) -> np.ndarray:
        if a.shape[1] < 2:
            return np.zeros(a.shape[0])
        return a.std(axis=1, ddof=1) / np.sqrt(a.shape[1])

    return SchellingCurve(
        k_values=np.arange(m),
        cooperate_payoff=coop.mean(axis=1),
        defect_payoff=defect.mean(axis=1),
        average_payoff_when_defect=avg_when_defect.mean(axis=1),
        cooperate_stderr=stderr(coop),
        defect_stderr=stderr(defect),
        seeds=tuple(seeds),
        horizon=config.horizon,
    )


def is_social_dilemma(curve: SchellingCurve) -> tuple[bool, str]:
    """Defection dominates pointwise and group payoff rises with cooperation."""
    dominated = curve.defect_payoff > curve.cooperate_payoff
    increasing = np.all(np.diff(curve.average_payoff_when_defect) > 0.0) if len(
        curve.k_values
    ) > 1 else False
    verdict = bool(np.all(dominated) and increasing)
    parts = []
    if not np.all(dominated):
        failing = [int(k) for k in curve.k_values[~dominated]]
        parts.append(f"defection not dominant at k={failing}")
    else:
        parts.append("defection dominates at every k")
    parts.append(
        "average payoff strictly increases with cooperators"
        if increasing
        else "average payoff not strictly increasing"
    )
    return verdict, "; ".join(parts)


def write_curve(curve: SchellingCurve, path: Path | str) -> Path:
    """Tabular output: k, coop mean/stderr, defect mean/stderr, average."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = "k,coop_mean,coop_stderr,defect_mean,defect_stderr,avg_when_defect_mean"
    try:
        with open(path, "w") as f:
            f.write(header + "\n")
            for i, k in enumerate(curve.k_values):
                f.write(
                    ",".join(
                        [
                            str(int(k)),
                            repr(float(curve.cooperate_payoff[i])),
                            repr(float(curve.cooperate_stderr[i])),
                            repr(float(curve.defect_payoff[i])),
                            repr(float(curve.defect_stderr[i])),
                            repr(float(curve.average_payoff_when_defect[i])),
                        ]
                    )
                    + "\n"
                )
    except OSError as exc:
        raise OSError(f"failed writing schelling table to {path}: {exc}") from exc
    return path
