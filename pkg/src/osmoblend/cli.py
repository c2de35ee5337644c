"""Command line entry point: ``osmoblend --manifest FILE --mode M --seam S ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .drift import AlphaParams
from .image import ManifestError
from .pipeline import MODES, SEAMS, PipelineConfig, PipelineError, run_pipeline
from .solver import SolverConfig, SolverError

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="osmoblend", description="Blend aligned, overlapping images with osmosis.")
    p.add_argument("--manifest", required=True, type=Path, help="lines of '<path> <offset_x> <offset_y>'")
    p.add_argument("--mode", required=True, choices=MODES)
    p.add_argument("--seam", required=True, choices=SEAMS)
    p.add_argument("--alpha-width", type=int, default=16, metavar="N", help="alpha window half-width in pixels")
    p.add_argument("--tau", type=float, default=1e5)
    p.add_argument("--linear-tol", type=float, default=1e-9)
    p.add_argument("--steady-decay", type=float, default=1e-6)
    p.add_argument("--max-steps", type=int, default=1000)
    p.add_argument("--max-linear-iters", type=int, default=None)
    p.add_argument("--jacobi", action="store_true", help="diagonally precondition BiCGSTAB")
    p.add_argument("--offset", type=float, default=1.0, help="positivity offset added before solving")
    p.add_argument("--out", type=Path)
    p.add_argument("--report", type=Path, help="convergence history CSV")
    p.add_argument("--dump-seam", type=Path)
    p.add_argument("--dump-field", type=Path)
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    log = logging.getLogger("osmoblend")
    try:
        cfg = PipelineConfig(
            mode=args.mode, seam=args.seam,
            alpha=AlphaParams(args.alpha_width),
            solver=SolverConfig(tau=args.tau, linear_tol=args.linear_tol, steady_decay=args.steady_decay,
                                max_outer_steps=args.max_steps, max_linear_iters=args.max_linear_iters,
                                preconditioner="jacobi" if args.jacobi else "none"),
            offset=args.offset, manifest=args.manifest, out=args.out, report=args.report,
            dump_seam=args.dump_seam, dump_field=args.dump_field)
    except ValueError as e:
        log.error("%s", e)
        return EXIT_INPUT
    try:
        _, report = run_pipeline(cfg)
    except PipelineError as e:
        log.error("%s", e)
        return EXIT_SOLVER if isinstance(e.__cause__, SolverError) else EXIT_INPUT
    except (ManifestError, ValueError, OSError) as e:
        log.error("%s", e)
        return EXIT_INPUT
    for c, rep in enumerate(report.solves):
        log.info("channel %d: %d steps, residual ratio %.3e, mean drift %.2e",
                 c, rep.n_steps, rep.final_ratio, rep.max_mean_drift)
    log.info("seam energy %.6g -> %.6g", report.seam_energy_before, report.seam_energy_after)
    log.info("timings: %s", ", ".join(f"{k} {v:.3f}s" for k, v in report.timings.items()))
    if not report.converged:
        log.error("steady state not reached within %d steps", cfg.solver.max_outer_steps)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
