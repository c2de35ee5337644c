"""Discrete osmosis operator, BiCGSTAB and implicit time stepping to steady state.

For a face between pixels ``a`` (left/top) and ``b`` (right/bottom) carrying
the drift sample ``d``, the flux

    F = (u_b - u_a) / h**2 - d (u_a + u_b) / (2 h)

enters row ``a`` with a plus sign and row ``b`` with a minus sign. Faces on
the mask boundary carry no flux, which is the discrete no-flux condition.
Every column of the resulting matrix sums to zero, so the implicit scheme
preserves the mean.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .drift import StaggeredField, face_masks

log = logging.getLogger(__name__)

BREAKDOWN = 1e-300
ROUNDOFF = 1e-14  # relative to ||A||_inf ||u||


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SparseOperator:
    matrix: sp.csr_matrix
    index: np.ndarray  # (ny, nx) unknown number per pixel, -1 outside the mask

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def mask(self) -> np.ndarray:
        return self.index >= 0

    def gather(self, plane: np.ndarray) -> np.ndarray:
        return plane[self.mask]

    def scatter(self, vec: np.ndarray, fill: float = 0.0) -> np.ndarray:
        out = np.full(self.index.shape, fill, dtype=np.float64)
        out[self.mask] = vec
        return out

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec


@dataclass(frozen=True)
class SolverConfig:
    tau: float = 1e5
    linear_tol: float = 1e-9
    steady_decay: float = 1e-6
    max_outer_steps: int = 1000
    max_linear_iters: Optional[int] = None  # None: 10 * sqrt(N)
    preconditioner: str = "none"  # or "jacobi"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        for name in ("linear_tol", "steady_decay"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.preconditioner not in ("none", "jacobi"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")

    def linear_cap(self, n: int) -> int:
        if self.max_linear_iters is not None:
            return self.max_linear_iters
        return max(1, int(math.ceil(10 * math.sqrt(n))))


def pixel_index(mask: np.ndarray) -> np.ndarray:
    index = np.full(mask.shape, -1, dtype=np.int64)
    index[mask] = np.arange(int(mask.sum()))
    return index


def assemble_operator(drift: StaggeredField, mask: np.ndarray, h: float = 1.0,
                      channel: int = 0) -> SparseOperator:
    """Sparse matrix of u -> Laplace(u) - div(d u) over the pixels in ``mask``."""
    fx, fy = face_masks(mask)
    dx, dy = drift.dx[channel], drift.dy[channel]
    if np.any(dx[~fx]) or np.any(dy[~fy]):
        raise ValueError("drift must vanish on faces touching the mask boundary")
    index = pixel_index(mask)
    n = int(mask.sum())
    ih2 = 1.0 / (h * h)

    # faces as (a, b, d) triples with a the left/upper pixel
    ya, xa = np.nonzero(fx[:, 1:-1])
    ax_, bx_, d_x = index[ya, xa], index[ya, xa + 1], dx[ya, xa + 1]
    ya, xa = np.nonzero(fy[1:-1, :])
    ay_, by_, d_y = index[ya, xa], index[ya + 1, xa], dy[ya + 1, xa]

    diag = np.zeros(n)
    # per-pixel accumulation order: right, left, down, up
    for a, b, d in ((ax_, bx_, d_x), (ay_, by_, d_y)):
        t = np.zeros(n)
        t[a] = -ih2 - d / (2 * h)
        diag += t
        t = np.zeros(n)
        t[b] = -ih2 + d / (2 * h)
        diag += t
    rows = np.concatenate([np.arange(n), ax_, bx_, ay_, by_])
    cols = np.concatenate([np.arange(n), bx_, ax_, by_, ay_])
    vals = np.concatenate([
        diag,
        ih2 - d_x / (2 * h), ih2 + d_x / (2 * h),
        ih2 - d_y / (2 * h), ih2 + d_y / (2 * h),
    ])
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    mat.sort_indices()
    return SparseOperator(mat, index)


@dataclass
class LinearResult:
    x: np.ndarray
    converged: bool
    iterations: int
    residual: float  # true relative residual ||b - A x|| / ||b||
    restarts: int = 0
    message: str = ""


def bicgstab(A, b: np.ndarray, x0: np.ndarray = None, tol: float = 1e-9,
             max_iters: int = 1000, precond=None) -> LinearResult:
    """Stabilised biconjugate gradients for a general square system.

    ``A`` is anything supporting ``A @ x``; ``precond`` (optional) maps a
    vector to an approximate solve with A. Convergence is declared on the true
    residual. A breakdown (rho or omega below 1e-300 in magnitude) restarts
    once from the current iterate; a second one ends the solve unconverged.
    """
    b = np.asarray(b, dtype=np.float64)
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side must be finite")
    bnorm = float(np.linalg.norm(b))
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    if bnorm == 0.0:
        return LinearResult(np.zeros_like(b), True, 0, 0.0)
    M = precond if precond is not None else (lambda v: v)
    target = tol * bnorm

    r = b - A @ x
    rnorm = float(np.linalg.norm(r))
    best_x, best_r = x.copy(), rnorm
    if rnorm <= target:
        return LinearResult(x, True, 0, rnorm / bnorm)

    it = restarts = refreshes = 0
    while True:
        r_hat = r.copy()
        rho = alpha = omega = 1.0
        v = np.zeros_like(b)
        p = np.zeros_like(b)
        broke = False
        while it < max_iters:
            it += 1
            rho_new = float(r_hat @ r)
            if abs(rho_new) < BREAKDOWN:
                broke = True
                break
            beta = (rho_new / rho) * (alpha / omega)
            rho = rho_new
            p = r + beta * (p - omega * v)
            ph = M(p)
            v = A @ ph
            denom = float(r_hat @ v)
            if abs(denom) < BREAKDOWN:
                broke = True
                break
            alpha = rho / denom
            s = r - alpha * v
            if np.linalg.norm(s) <= target:
                x = x + alpha * ph
                break
            sh = M(s)
            t = A @ sh
            tt = float(t @ t)
            omega = float(t @ s) / tt if tt > 0 else 0.0
            if abs(omega) < BREAKDOWN:
                x = x + alpha * ph
                broke = True
                break
            x = x + alpha * ph + omega * sh
            r = s - omega * t
            rn = float(np.linalg.norm(r))
            if rn < best_r:
                best_x, best_r = x.copy(), rn
            if rn <= target:
                break
        r = b - A @ x
        rnorm = float(np.linalg.norm(r))
        if rnorm <= target:
            return LinearResult(x, True, it, rnorm / bnorm, restarts)
        if rnorm < best_r:
            best_x, best_r = x.copy(), rnorm
        if it >= max_iters:
            message = "iteration cap reached"
            break
        if broke:
            restarts += 1
            if restarts > 1:
                message = "breakdown after restart"
                break
        else:
            # recurrence residual drifted away from the true one
            refreshes += 1
            if refreshes > 5:
                message = "true residual stagnates above tolerance"
                break
    best_true = float(np.linalg.norm(b - A @ best_x))
    return LinearResult(best_x, False, it, best_true / bnorm, restarts, message)


def step_matrix(op: SparseOperator, tau: float) -> sp.csr_matrix:
    return (sp.identity(op.n, format="csr") - tau * op.matrix).tocsr()


def _jacobi(mat: sp.csr_matrix):
    inv = 1.0 / mat.diagonal()
    return lambda v: inv * v


def implicit_step(op: SparseOperator, u: np.ndarray, cfg: SolverConfig, *, source: np.ndarray = None,
                  system: sp.csr_matrix = None, step: int = 0) -> tuple[np.ndarray, LinearResult]:
    """One backward Euler step: solve (I - tau A) u' = u - tau source.

    With a source term the step is solved for the increment,
    (I - tau A) delta = tau (A u - source), which is the same step but keeps
    the right-hand side proportional to the remaining residual instead of
    to tau times the source.
    """
    mat = system if system is not None else step_matrix(op, cfg.tau)
    precond = _jacobi(mat) if cfg.preconditioner == "jacobi" else None
    if source is None:
        rhs, x0 = u, u
    else:
        rhs, x0 = cfg.tau * (op.apply(u) - source), np.zeros_like(u)
    res = bicgstab(mat, rhs, x0=x0, tol=cfg.linear_tol, max_iters=cfg.linear_cap(op.n), precond=precond)
    if not res.converged:
        raise SolverError(f"linear solve failed in step {step}: {res.message} "
                          f"(relative residual {res.residual:.3e} after {res.iterations} iterations)")
    return (res.x if source is None else u + res.x), res


@dataclass
class StepRecord:
    step: int
    residual_ratio: float
    linear_iters: int
    linear_residual: float
    mean_value: float
    mean_drift: float  # |mean change| / |mean before| in this step


@dataclass
class SteadyStateReport:
    converged: bool
    steps: list = field(default_factory=list)
    initial_residual: float = 0.0
    final_ratio: float = 0.0

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def max_mean_drift(self) -> float:
        return max((s.mean_drift for s in self.steps), default=0.0)

    @property
    def max_linear_residual(self) -> float:
        return max((s.linear_residual for s in self.steps), default=0.0)


def steady_state(op: SparseOperator, f: np.ndarray, cfg: SolverConfig, *,
                 source: np.ndarray = None) -> tuple[np.ndarray, SteadyStateReport]:
    """Run implicit steps from ``f`` until the steady-state residual decays.

    The residual is ||A u - source||; the run stops once it falls to
    ``cfg.steady_decay`` times its initial value, when it reaches rounding
    level, or after ``cfg.max_outer_steps`` steps (then ``converged`` is
    False).
    ``f`` is a vector over the unknowns of ``op``.
    """
    u = np.array(f, dtype=np.float64)

    def resid(x):
        r = op.apply(x)
        return r if source is None else r - source

    r0 = float(np.linalg.norm(resid(u)))
    report = SteadyStateReport(converged=True, initial_residual=r0)
    # residuals this small are rounding noise of A u, not distance from steady state
    floor = ROUNDOFF * float(np.max(np.asarray(abs(op.matrix).sum(axis=1)), initial=0.0))
    if r0 <= floor * np.linalg.norm(u):
        return u, report
    system = step_matrix(op, cfg.tau)
    ratio = 1.0
    for k in range(1, cfg.max_outer_steps + 1):
        m0 = float(u.mean())
        u, lin = implicit_step(op, u, cfg, source=source, system=system, step=k)
        m1 = float(u.mean())
        r = float(np.linalg.norm(resid(u)))
        ratio = r / r0
        drift = abs(m1 - m0) / abs(m0) if m0 != 0 else abs(m1 - m0)
        report.steps.append(StepRecord(k, ratio, lin.iterations, lin.residual, m1, drift))
        log.debug("step %d: residual ratio %.3e, %d linear iterations", k, ratio, lin.iterations)
        if ratio <= cfg.steady_decay or r <= floor * np.linalg.norm(u):
            break
    else:
        report.converged = False
        log.warning("steady state not reached after %d steps (ratio %.3e)", cfg.max_outer_steps, ratio)
    report.final_ratio = ratio
    return u, report


def write_report_csv(path, reports: list[SteadyStateReport]) -> None:
    """Convergence history, one row per channel and step."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["channel", "step", "residual_ratio", "linear_iters", "mean_value"])
        for c, rep in enumerate(reports):
            for s in rep.steps:
                w.writerow([c, s.step, f"{s.residual_ratio:.6e}", s.linear_iters, f"{s.mean_value:.12g}"])
