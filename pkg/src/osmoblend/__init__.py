"""Seamless blending of aligned, overlapping images by linear osmosis."""
from .drift import (AlphaParams, StaggeredField, alpha_blend_drift, canonical_drift, seam_removal_drift,
                    stitch_drift)
from .image import AlignedInput, Canvas, ChannelStats, Partition, channel_stats, clip_to_range, load_manifest, \
    naive_stitch
from .metrics import fit_global_scale, seam_energy, synth_degrade
from .pipeline import BlendReport, PipelineConfig, blend, run_pipeline
from .poisson import gradient_field, poisson_solve, stitch_gradients
from .seams import OverlapRegion, Seam, build_partition, middle_seam, optimal_seam
from .solver import SolverConfig, SparseOperator, assemble_operator, bicgstab, implicit_step, steady_state

__version__ = "0.1.0"
