"""End-to-end blending: seams, drift or gradient composition, per-channel solves, output."""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .drift import (AlphaParams, StaggeredField, alpha_blend_drift, canonical_drift, seam_removal_drift,
                    stitch_drift, write_field)
from .image import AlignedInput, Canvas, clip_to_range, load_manifest, naive_stitch
from .io import write_image
from .metrics import seam_energy
from .poisson import gradient_field, poisson_solve, stitch_gradients
from .seams import Seam, build_partition, chain_overlaps, middle_seam, optimal_seam, write_seams
from .solver import SolverConfig, assemble_operator, steady_state, write_report_csv

log = logging.getLogger(__name__)

MODES = ("naive", "drift", "seam-removal", "alpha", "poisson")
SEAMS = ("middle", "optimal")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class PipelineConfig:
    mode: str = "drift"
    seam: str = "middle"
    alpha: AlphaParams = AlphaParams()
    solver: SolverConfig = SolverConfig()
    offset: float = 1.0
    h: float = 1.0
    threads: Optional[int] = None  # None: $OSMOBLEND_THREADS, else one per channel
    manifest: Optional[Path] = None
    out: Optional[Path] = None
    report: Optional[Path] = None
    dump_seam: Optional[Path] = None
    dump_field: Optional[Path] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {', '.join(MODES)}")
        if self.seam not in SEAMS:
            raise ValueError(f"unknown seam strategy {self.seam!r}; choose from {', '.join(SEAMS)}")
        if self.mode == "alpha" and self.seam != "middle":
            log.warning("alpha blending uses the middle seam; ignoring --seam %s", self.seam)
            object.__setattr__(self, "seam", "middle")
        if self.offset <= 0 and self.mode not in ("naive", "poisson"):
            raise ValueError("the positivity offset must be > 0")


@dataclass
class BlendReport:
    mode: str
    seams: list = field(default_factory=list)
    seam_energy_before: float = 0.0
    seam_energy_after: float = 0.0
    solves: list = field(default_factory=list)  # one SteadyStateReport per channel
    mean_before: list = field(default_factory=list)  # naive stitch, per channel
    mean_after: list = field(default_factory=list)  # output before clipping
    min_before_unoffset: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    alpha_half_width: Optional[int] = None
    drift: Optional[StaggeredField] = None

    @property
    def converged(self) -> bool:
        return all(r.converged for r in self.solves)

    @property
    def mean_drift(self) -> list:
        return [r.max_mean_drift for r in self.solves]


class _Timer:
    def __init__(self, timings: dict, stage: str):
        self.timings, self.stage = timings, stage

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.timings[self.stage] = self.timings.get(self.stage, 0.0) + time.perf_counter() - self.t0
        if exc is not None and not isinstance(exc, PipelineError):
            raise PipelineError(self.stage, str(exc)) from exc
        return False


def thread_count(cfg: PipelineConfig, nc: int) -> int:
    if cfg.threads is not None:
        return max(1, cfg.threads)
    env = os.environ.get("OSMOBLEND_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer OSMOBLEND_THREADS=%r", env)
    return nc


def find_seams(inputs: list[AlignedInput], strategy: str) -> list[Seam]:
    pick = middle_seam if strategy == "middle" else optimal_seam
    return [pick(ov) for ov in chain_overlaps(inputs)]


def max_alpha_width(inputs: list[AlignedInput], seams: list[Seam]) -> int:
    """Largest half-width whose window stays inside every overlap."""
    best = None
    for ov, s in zip(chain_overlaps(inputs), seams):
        x0, _, x1, _ = ov.rect
        w = int(min(np.min(s.faces - x0), np.min(x1 - s.faces)))
        best = w if best is None else min(best, w)
    return max(best if best is not None else 0, 0)


def compose_field(mode: str, inputs: list[AlignedInput], seams: list[Seam], partition, naive: Canvas,
                  shape, alpha: AlphaParams, h: float) -> StaggeredField:
    if mode == "drift":
        fields = [canonical_drift(a.padded(shape), h) for a in inputs]
        return stitch_drift(fields, partition)
    if mode == "seam-removal":
        return seam_removal_drift(naive, seams, h)
    if mode == "alpha":
        fields = [canonical_drift(a.padded(shape), h) for a in inputs]
        out = fields[0]
        for f, s in zip(fields[1:], seams):
            out = alpha_blend_drift(out, f, s, alpha)
        return out
    if mode == "poisson":
        fields = [gradient_field(a.padded(shape), h) for a in inputs]
        return stitch_gradients(fields, partition)
    raise ValueError(mode)


def blend(inputs: list[AlignedInput], shape: tuple[int, int], cfg: PipelineConfig,
          report: BlendReport = None) -> tuple[np.ndarray, Canvas, BlendReport]:
    """Blend aligned inputs on a canvas of ``shape``.

    Returns the unclipped result (nc, ny, nx), the clipped output canvas and
    the report. Solves start from the naive stitch.
    """
    report = report if report is not None else BlendReport(cfg.mode)
    report.mode = cfg.mode
    t = report.timings
    nc = inputs[0].image.nc

    with _Timer(t, "seams"):
        seams = find_seams(inputs, cfg.seam)
        partition = build_partition(inputs, seams, shape)
        naive_plain = naive_stitch(inputs, partition)
    report.seams = seams
    report.seam_energy_before = sum(seam_energy(naive_plain, s) for s in seams)
    mask = partition.mask
    report.mean_before = [float(naive_plain.data[c][mask].mean()) for c in range(nc)]

    if cfg.mode == "naive":
        report.mean_after = list(report.mean_before)
        report.seam_energy_after = report.seam_energy_before
        return naive_plain.data.copy(), naive_plain, report

    off = cfg.offset
    with _Timer(t, "fields"):
        shifted = [AlignedInput(a.image.shifted(off), a.offset) for a in inputs]
        naive = naive_stitch(shifted, partition)
        alpha = cfg.alpha
        if cfg.mode == "alpha":
            wmax = max_alpha_width(inputs, seams)
            if alpha.half_width > wmax:
                log.warning("alpha half-width %d exceeds the overlap; using %d", alpha.half_width, wmax)
                alpha = AlphaParams(wmax)
            report.alpha_half_width = alpha.half_width
        fld = compose_field(cfg.mode, shifted, seams, partition, naive, shape, alpha, cfg.h).restricted(mask)
    report.drift = fld

    def solve(c):
        if cfg.mode == "poisson":
            target = float(naive.data[c][mask].mean())
            plane, rep = poisson_solve(fld, target, cfg.solver, mask=mask, channel=c, h=cfg.h, init=naive.data[c])
            return plane, rep, 0.0
        t0 = time.perf_counter()
        op = assemble_operator(fld, mask, cfg.h, channel=c)
        t_asm = time.perf_counter() - t0
        u, rep = steady_state(op, op.gather(naive.data[c]), cfg.solver)
        return op.scatter(u), rep, t_asm

    with _Timer(t, "solve"):
        workers = min(thread_count(cfg, nc), nc)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(solve, range(nc)))
        else:
            results = [solve(c) for c in range(nc)]
    t["assemble"] = sum(r[2] for r in results)
    planes = np.stack([r[0] for r in results])
    report.solves = [r[1] for r in results]
    report.min_before_unoffset = [float(p[mask].min()) for p in planes]

    raw = np.where(mask, planes - off, 0.0)
    report.mean_after = [float(raw[c][mask].mean()) for c in range(nc)]
    out = clip_to_range(raw, 0.0, 255.0, mask)
    report.seam_energy_after = sum(seam_energy(out, s) for s in seams)
    return raw, out, report


def run_pipeline(cfg: PipelineConfig) -> tuple[Canvas, BlendReport]:
    """Load the manifest, blend, and write every requested output file."""
    report = BlendReport(cfg.mode)
    if cfg.manifest is None:
        raise PipelineError("load", "no manifest given")
    with _Timer(report.timings, "load"):
        inputs, shape = load_manifest(cfg.manifest)
    _, out, report = blend(inputs, shape, cfg, report)
    with _Timer(report.timings, "write"):
        if cfg.out is not None:
            write_image(cfg.out, out)
        if cfg.report is not None:
            write_report_csv(cfg.report, report.solves)
        if cfg.dump_seam is not None:
            write_seams(cfg.dump_seam, report.seams)
        if cfg.dump_field is not None and report.drift is not None:
            write_field(cfg.dump_field, report.drift)
    return out, report

