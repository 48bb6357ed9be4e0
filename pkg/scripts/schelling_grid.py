#!/usr/bin/env python3
"""Generate the five cooperate/defect payoff diagrams as CSV tables.

Variants: profit-driven investors, a 2/3 conscious mix, all-conscious,
resilience-spending defectors, and greenwashing defectors (beta = 2).
"""

import argparse
from pathlib import Path

from esgsim.engine import ScenarioConfig
from esgsim.schelling import is_social_dilemma, schelling_curve, write_curve

VARIANTS = {
    "profit_investors": dict(config=ScenarioConfig(), investor_kind="profit"),
    "two_thirds_conscious": dict(
        config=ScenarioConfig(esg_preference=(0.0, 10.0, 10.0)),
        investor_kind=["profit", "conscious", "conscious"],
    ),
    "all_conscious": dict(config=ScenarioConfig(esg_preference=10.0), investor_kind="conscious"),
    "resilience_defectors": dict(
        config=ScenarioConfig(resilience_enabled=True, esg_preference=10.0),
        investor_kind="conscious",
        defector_kind="resilience_defector",
    ),
    "greenwash_defectors": dict(
        config=ScenarioConfig(
            greenwash_enabled=True, greenwash_coefficient=2.0, esg_preference=10.0
        ),
        investor_kind="conscious",
        defector_kind="greenwasher",
    ),
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="out/schelling", type=Path)
    ap.add_argument("--seeds", default="0,1,2")
    args = ap.parse_args()
    seeds = [int(s) for s in args.seeds.split(",")]

    for name, variant in VARIANTS.items():
        config = variant.pop("config")
        curve = schelling_curve(config, seeds=seeds, **variant)
        path = write_curve(curve, args.out_dir / f"{name}.csv")
        dilemma, diag = is_social_dilemma(curve)
        print(f"{name:<22} social_dilemma={str(dilemma):<5} ({diag}) -> {path}")


if __name__ == "__main__":
    main()
