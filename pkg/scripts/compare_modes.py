"""Run every blending mode on one manifest and tabulate seam energy, mean and timings.

    python3 scripts/compare_modes.py runs/invariance/multiplicative_1.3.txt --save runs/modes
"""
import argparse
from pathlib import Path

from osmoblend.drift import AlphaParams
from osmoblend.image import load_manifest
from osmoblend.io import write_image
from osmoblend.pipeline import MODES, PipelineConfig, blend


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("manifest", type=Path)
    ap.add_argument("--seam", default="optimal", choices=("middle", "optimal"))
    ap.add_argument("--alpha-width", type=int, default=16)
    ap.add_argument("--save", type=Path, help="write each output image into this directory")
    args = ap.parse_args()

    inputs, shape = load_manifest(args.manifest)
    suffix = ".pgm" if inputs[0].image.nc == 1 else ".ppm"
    if args.save is not None:
        args.save.mkdir(parents=True, exist_ok=True)
    print(f"{'mode':<14}{'seam energy':>14}{'ratio':>10}{'mean':>10}{'steps':>7}{'solve':>8}")
    for mode in MODES:
        cfg = PipelineConfig(mode=mode, seam=args.seam, alpha=AlphaParams(args.alpha_width))
        _, out, rep = blend(inputs, shape, cfg)
        before = rep.seam_energy_before
        ratio = rep.seam_energy_after / before if before else float("nan")
        steps = max((r.n_steps for r in rep.solves), default=0)
        print(f"{mode:<14}{rep.seam_energy_after:>14.5g}{ratio:>10.2e}{rep.mean_after[0]:>10.3f}"
              f"{steps:>7d}{rep.timings.get('solve', 0.0):>7.2f}s")
        if args.save is not None:
            write_image(args.save / f"{mode}{suffix}", out)


if __name__ == "__main__":
    main()
