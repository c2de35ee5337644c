"""Gradient-domain baseline: stitched gradient fields integrated by a Neumann Poisson solve."""
from __future__ import annotations

import numpy as np

from .drift import StaggeredField, face_masks, stitch_fields
from .image import Canvas, Partition
from .solver import SolverConfig, SparseOperator, assemble_operator, steady_state

GradientField = StaggeredField


def gradient_field(canvas: Canvas, h: float = 1.0) -> GradientField:
    """Forward differences (v_b - v_a) / h on faces inside the mask."""
    v, mask = canvas.data, canvas.mask
    fx, fy = face_masks(mask)
    dx = np.zeros(v.shape[:2] + (v.shape[2] + 1,))
    dy = np.zeros((v.shape[0], v.shape[1] + 1, v.shape[2]))
    dx[:, :, 1:-1] = np.where(fx[:, 1:-1], (v[:, :, 1:] - v[:, :, :-1]) / h, 0.0)
    dy[:, 1:-1, :] = np.where(fy[1:-1, :], (v[:, 1:, :] - v[:, :-1, :]) / h, 0.0)
    return StaggeredField(dx, dy, mask.copy())


def stitch_gradients(fields: list[GradientField], partition: Partition) -> GradientField:
    return stitch_fields(fields, partition)


def divergence(g: GradientField, channel: int = 0, h: float = 1.0) -> np.ndarray:
    dx, dy = g.dx[channel], g.dy[channel]
    return (dx[:, 1:] - dx[:, :-1]) / h + (dy[1:, :] - dy[:-1, :]) / h


def laplacian_operator(mask: np.ndarray, h: float = 1.0) -> SparseOperator:
    ny, nx = mask.shape
    zero = StaggeredField(np.zeros((1, ny, nx + 1)), np.zeros((1, ny + 1, nx)), mask)
    return assemble_operator(zero, mask, h)


def poisson_solve(g: GradientField, mean_target: float, cfg: SolverConfig, *, mask: np.ndarray = None,
                  channel: int = 0, h: float = 1.0, init: np.ndarray = None,
                  operator: SparseOperator = None):
    """Integrate ``g`` on ``mask``: solve L w = div g with mean(w) = mean_target.

    The right-hand side is projected onto the range of the Neumann Laplacian
    by removing its mean; the solution is then the steady state of
    u_t = L u - div g, reached with the same implicit stepping as osmosis,
    and finally shifted to the target mean. Returns (plane, report).
    """
    mask = g.support if mask is None else mask
    fx, fy = face_masks(mask)
    if np.any(g.dx[channel][~fx]) or np.any(g.dy[channel][~fy]):
        raise ValueError("gradient samples must vanish on faces touching the mask boundary")
    op = operator if operator is not None else laplacian_operator(mask, h)
    rhs = op.gather(divergence(g, channel, h))
    rhs = rhs - rhs.mean()
    u0 = np.full(op.n, float(mean_target)) if init is None else op.gather(np.asarray(init, dtype=np.float64))
    u, report = steady_state(op, u0, cfg, source=rhs)
    u = u + (mean_target - u.mean())
    return op.scatter(u), report
