"""Run every figure preset and render one SVG per panel.

    python scripts/run_figures.py --out figures [--only fig2a fig6b] [--jobs 2]
"""

import argparse
from pathlib import Path

from openchain.cli import run_preset
from openchain.output import emit_plot
from openchain.presets import PRESET_NAMES, get_preset


def _quantity(preset) -> str:
    return "TLN" if "TLN" in preset.description.split(":")[1].split(",")[0] else "TMI"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="figures")
    ap.add_argument("--only", nargs="*", help="subset of preset names")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--dt", type=float)
    args = ap.parse_args()

    out = Path(args.out)
    for name in args.only or PRESET_NAMES:
        preset = get_preset(name)
        m = run_preset(name, out / name, dt=args.dt, jobs=args.jobs)
        csvs = [Path(m.outdir) / r["csv"] for r in m.runs]
        labels = [r["label"].split("_", 1)[-1] for r in m.runs] if len(csvs) > 1 else None
        # sweep presets carry both quantities; single panels plot the one they show
        quantities = ("TMI", "TLN") if preset.sweep else (_quantity(preset),)
        for q in quantities:
            svg = out / f"{name}_{q}.svg" if preset.sweep else out / f"{name}.svg"
            emit_plot(csvs, svg, q, labels)
            print(svg)


if __name__ == "__main__":
    main()
