"""Alternating projection driver with Dykstra's correction terms.

Projects transformed observations Y onto the intersection of the sum
hyperplane S with all m half spaces N_i by cycling through the m
closed-form projectors onto S meet N_i. Plain cyclic projection would
converge to some point of the intersection; carrying a correction
matrix per set (Dykstra's scheme) makes the limit the orthogonal
projection of Y itself.

One sweep, given iterate U and corrections Q_1..Q_m:

    for i = 1..m:
        Z   <- U + Q_i
        U   <- project_intersection(i, Z)
        Q_i <- Z - U

Before the first sweep Y is replaced by its hyperplane projection.
The limit is unchanged (the feasible set lies inside S, and projecting
onto a subset of an affine set through the set's own projection is
exact), every iterate and every Z above then stays on S, and each
correction is a difference of points on S. That is what licenses the
z_on_s fast path inside project_intersection for every call after the
very first.

Columns never interact: each pixel's trajectory depends only on the
transform, so the sweep kernel may be run on disjoint column blocks in
any order, or in parallel, without changing a single bit of the result.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import NonFinite, ShapeMismatch
from .projectors import project_hyperplane, project_intersection_geometric
from .subspace import SubspaceTransform

# Guard against a zero-norm iterate in the relative-change denominator.
REL_CHANGE_EPS = 1e-300


@dataclass
class DykstraConfig:
    """Run controls for dykstra_project.

    rel_tol = 0 turns the successive-change test off in practice (it
    only fires on an exact fixed point), giving a fixed-sweep run of
    max_sweeps for benchmarking.
    """

    max_sweeps: int = 2000
    rel_tol: float = 1e-10
    track_per_pixel: bool = False
    pixel_tol_db: float = -100.0
    snapshot_every: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.rel_tol < 0:
            raise ValueError("rel_tol must be non-negative")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be non-negative")


@dataclass
class DykstraState:
    """Mutable loop state: iterate, per-set corrections, progress."""

    u: np.ndarray
    q: list
    sweep: int = 0
    last_delta: float = np.inf


@dataclass(frozen=True)
class DykstraTrace:
    """Per-sweep records of one run, ordered by sweep.

    elapsed_s is cumulative time spent in the sweep kernel and the
    convergence bookkeeping only; snapshot copies and caller callbacks
    run off the clock so instrumented runs time like plain ones.
    objective is |Y - U|_F^2 against the untouched input Y.
    snapshots holds (sweep, copy of U) pairs when snapshotting is on,
    always including the final sweep.
    """

    sweeps: np.ndarray
    elapsed_s: np.ndarray
    rel_change: np.ndarray
    objective: np.ndarray
    max_sum_violation: np.ndarray
    unconverged: np.ndarray | None
    snapshots: list = field(default_factory=list)
    converged: bool = False

    @property
    def n_sweeps(self) -> int:
        return len(self.sweeps)


def _sweep_block(
    t: SubspaceTransform,
    u: np.ndarray,
    q: list,
    lo: int,
    hi: int,
    first_sweep: bool,
) -> None:
    """Run one full sweep on columns [lo, hi) in place."""
    uv = u[:, lo:hi]
    for i in range(t.n_endmembers):
        qv = q[i][:, lo:hi]
        zin = uv + qv
        out = project_intersection_geometric(
            t, i, zin, z_on_s=not (first_sweep and i == 0)
        )
        np.subtract(zin, out, out=qv)
        uv[:] = out


def dykstra_project(
    t: SubspaceTransform,
    y: np.ndarray,
    cfg: DykstraConfig | None = None,
    on_sweep=None,
) -> tuple[np.ndarray, DykstraTrace]:
    """Project every column of Y onto the transformed feasible set.

    Parameters
    ----------
    t : SubspaceTransform
    y : np.ndarray
        Transformed observations, m x n.
    cfg : DykstraConfig, optional
    on_sweep : callable, optional
        Called as on_sweep(sweep, u) after each sweep with the live
        iterate; must treat u as read-only. Runs off the trace clock.

    Returns
    -------
    (u_hat, trace)
        u_hat is m x n with every column on the sum hyperplane to
        roundoff; negative half-space slack shrinks with rel_tol.

    Raises
    ------
    ShapeMismatch
        If y is not m x n with m matching the transform.
    NonFinite
        If an iterate stops being finite, which indicates a broken
        transform or pathological input.
    """
    if cfg is None:
        cfg = DykstraConfig()
    y = np.ascontiguousarray(y, dtype=np.float64)
    m = t.n_endmembers
    if y.ndim != 2 or y.shape[0] != m:
        raise ShapeMismatch(
            f"expected a {m} x n coefficient block, got shape {y.shape}"
        )
    n = y.shape[1]
    if n < 1:
        raise ShapeMismatch("need at least one column to project")

    state = DykstraState(
        u=project_hyperplane(t, y),
        q=[np.zeros((m, n)) for _ in range(m)],
    )
    u = state.u
    u_prev = np.empty_like(u)

    n_workers = min(cfg.threads, n)
    executor = ThreadPoolExecutor(n_workers) if n_workers > 1 else None
    if executor is not None:
        step = -(-n // n_workers)
        bounds = [(lo, min(lo + step, n)) for lo in range(0, n, step)]

    sweeps: list[int] = []
    elapsed: list[float] = []
    rel_changes: list[float] = []
    objectives: list[float] = []
    sum_violations: list[float] = []
    unconverged: list[int] = []
    snapshots: list = []
    pixel_thresh = 10.0 ** (cfg.pixel_tol_db / 10.0)

    clock = 0.0
    converged = False
    try:
        for sweep in range(1, cfg.max_sweeps + 1):
            tic = time.perf_counter()
            u_prev[:] = u
            if executor is None:
                _sweep_block(t, u, state.q, 0, n, sweep == 1)
            else:
                futures = [
                    executor.submit(
                        _sweep_block, t, u, state.q, lo, hi, sweep == 1
                    )
                    for lo, hi in bounds
                ]
                for fut in futures:
                    fut.result()

            if not np.all(np.isfinite(u)):
                raise NonFinite(f"iterate became non-finite at sweep {sweep}")

            diff = u - u_prev
            rel = float(
                np.linalg.norm(diff)
                / max(np.linalg.norm(u), REL_CHANGE_EPS)
            )
            objective = float(np.linalg.norm(y - u) ** 2)
            violation = float(np.max(np.abs(t.b @ u - 1.0)))
            if cfg.track_per_pixel:
                num = np.einsum("ij,ij->j", diff, diff)
                den = np.maximum(
                    np.einsum("ij,ij->j", u, u), REL_CHANGE_EPS
                )
                n_open = int(np.count_nonzero(num > pixel_thresh * den))
            clock += time.perf_counter() - tic

            state.sweep = sweep
            state.last_delta = rel
            sweeps.append(sweep)
            elapsed.append(clock)
            rel_changes.append(rel)
            objectives.append(objective)
            sum_violations.append(violation)
            if cfg.track_per_pixel:
                unconverged.append(n_open)
            if cfg.snapshot_every and sweep % cfg.snapshot_every == 0:
                snapshots.append((sweep, u.copy()))
            if on_sweep is not None:
                on_sweep(sweep, u)

            if rel <= cfg.rel_tol:
                converged = True
                break
    finally:
        if executor is not None:
            executor.shutdown()

    if cfg.snapshot_every and (not snapshots or snapshots[-1][0] != state.sweep):
        snapshots.append((state.sweep, u.copy()))

    trace = DykstraTrace(
        sweeps=np.asarray(sweeps, dtype=np.int64),
        elapsed_s=np.asarray(elapsed),
        rel_change=np.asarray(rel_changes),
        objective=np.asarray(objectives),
        max_sum_violation=np.asarray(sum_violations),
        unconverged=np.asarray(unconverged, dtype=np.int64)
        if cfg.track_per_pixel
        else None,
        snapshots=snapshots,
        converged=converged,
    )
    return u, trace


def per_pixel_unconverged(
    trace: DykstraTrace, u_star: np.ndarray, tol_db: float = -100.0
) -> list:
    """Count columns still far from a reference at each snapshot.

    For every (sweep, U) snapshot in the trace, a column j counts as
    unconverged when 10 log10(|u_j - u*_j|^2 / |u*_j|^2) exceeds tol_db.
    The reference u_star normally comes from a long tight-tolerance run.
    Counts need not fall monotonically, but a run that converged to
    u_star ends at zero.

    Returns a list of (sweep, count) pairs.
    """
    u_star = np.asarray(u_star, dtype=np.float64)
    thresh = 10.0 ** (tol_db / 10.0)
    den = np.maximum(
        np.einsum("ij,ij->j", u_star, u_star), REL_CHANGE_EPS
    )
    out = []
    for sweep, u in trace.snapshots:
        if u.shape != u_star.shape:
            raise ShapeMismatch(
                f"snapshot shape {u.shape} does not match reference "
                f"{u_star.shape}"
            )
        diff = u - u_star
        num = np.einsum("ij,ij->j", diff, diff)
        out.append((int(sweep), int(np.count_nonzero(num > thresh * den))))
    return out
