#!/usr/bin/env python3
"""Train independent learners across disclosure/consciousness presets.

Compares trailing-window mitigation, ending risk, and ending wealth for the
status quo, plain mandate, and conscious-investor scenarios over several
seeds; writes the per-run training reports as JSON.
"""

import argparse
from pathlib import Path

from esgsim.engine import scenario_preset, write_summary
from esgsim.learner import settings_from_config, train_independent

PRESETS = ["status_quo", "mandate", "conscious_0.5", "conscious_1", "conscious_10"]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="out/training", type=Path)
    ap.add_argument("--seeds", default="0,1,2")
    ap.add_argument("--iterations", type=int, default=None)
    args = ap.parse_args()
    seeds = [int(s) for s in args.seeds.split(",")]

    print(f"{'preset':<15} {'seed':>4} {'mitigation':>11} {'P_end':>8} {'W_end':>12}")
    for name in PRESETS:
        config = scenario_preset(name)
        settings = settings_from_config(config, iterations=args.iterations)
        for seed in seeds:
            _, report = train_independent(config, settings, seeds=[seed])
            write_summary(report.to_dict(), args.out_dir / f"{name}_seed{seed}.json")
            print(
                f"{name:<15} {seed:>4} {report.trailing_mitigation:11.2f} "
                f"{report.trailing_p_end:8.4f} {report.trailing_w_end:12.2f}"
            )


if __name__ == "__main__":
    main()
