#!/usr/bin/env python3
"""Run every scenario preset with scripted baselines and tabulate outcomes.

Writes one batch directory per preset under the output root and prints a
summary table (ending risk, wealth, events, bankruptcies) to stdout.
"""

import argparse
from pathlib import Path

from esgsim.engine import PRESETS, run_batch, scenario_preset, scripted_assignment, write_outputs


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="out/scenarios", type=Path)
    ap.add_argument("--seeds", default="0,1,2")
    ap.add_argument("--company-policy", default="defector")
    ap.add_argument("--investor-policy", default="profit")
    args = ap.parse_args()
    seeds = [int(s) for s in args.seeds.split(",")]

    print(f"{'preset':<20} {'P_end':>8} {'W_end':>14} {'events':>7} {'bankrupt':>8}")
    for name in sorted(PRESETS):
        config = scenario_preset(name)
        assignment = scripted_assignment(config, args.company_policy, args.investor_policy)
        result = run_batch(config, assignment, seeds)
        write_outputs(result, args.out_dir / name)
        agg = result.aggregate()
        print(
            f"{name:<20} {agg['P100_mean']:8.4f} {agg['W100_mean']:14.2f} "
            f"{agg['events_total_mean']:7.1f} {agg['bankruptcies_mean']:8.2f}"
        )


if __name__ == "__main__":
    main()
