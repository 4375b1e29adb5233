"""End-to-end unmixing pipelines.

Four solvers share one result type:

* solve_sudap: the subspace route. Transform, project with Dykstra's
  scheme, map back. Handles both constraints.
* solve_ls: unconstrained least squares via the normal equations.
* solve_ls_sum1: least squares with only the sum-to-one constraint,
  closed form.
* solve_oracle_activeset: exact fully constrained solution by active-set
  enumeration. Deliberately built in abundance space directly on E, with
  its own factorizations, so it shares no code path with the subspace
  solver it is used to verify.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dykstra import DykstraConfig, DykstraTrace, dykstra_project
from .errors import NoKKTPoint, RankDeficient, TooManyEndmembers
from .model import (
    AbundanceMatrix,
    EndmemberMatrix,
    ImageCube,
    validate_dimensions,
)
from .subspace import (
    RANK_TOL,
    build_transform,
    forward_transform,
    inverse_transform,
)

SOLVER_IDS = frozenset({"sudap", "ls", "ls_sum1", "oracle"})

# Oracle acceptance slacks: a candidate is primal feasible when no free
# abundance is below -PRIMAL_TOL, dual feasible when no multiplier of a
# zeroed abundance is below -DUAL_TOL.
PRIMAL_TOL = 1e-12
DUAL_TOL = 1e-10

# The oracle enumerates up to 2^m - 2 candidate active sets per pixel.
MAX_ORACLE_ENDMEMBERS = 14


@dataclass(frozen=True)
class SolveResult:
    a_hat: AbundanceMatrix
    trace: DykstraTrace
    solver_id: str
    wall_time: float

    def __post_init__(self):
        if self.solver_id not in SOLVER_IDS:
            raise ValueError(f"unknown solver_id {self.solver_id!r}")


def _empty_trace() -> DykstraTrace:
    z = np.zeros(0)
    return DykstraTrace(
        sweeps=np.zeros(0, dtype=np.int64),
        elapsed_s=z,
        rel_change=z,
        objective=z,
        max_sum_violation=z,
        unconverged=None,
        snapshots=[],
        converged=True,
    )


def _gram_factor(e: EndmemberMatrix):
    """Cholesky-factor E'E for the normal-equation solvers.

    Local to this module on purpose: the direct solvers and the oracle
    must not borrow the subspace module's factorization.
    """
    g = e.data.T @ e.data
    try:
        factor = scipy.linalg.cho_factor(g, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise RankDeficient(
            f"endmember matrix is numerically rank deficient: {exc}"
        ) from None
    m = g.shape[0]
    pivots = np.diag(factor[0]) ** 2
    if np.any(pivots <= RANK_TOL * np.trace(g) / m):
        raise RankDeficient(
            "endmember matrix is numerically rank deficient: "
            f"smallest Cholesky pivot {pivots.min():.3e}"
        )
    return g, factor


def _ones_result(x: ImageCube, solver_id: str, t0: float) -> SolveResult:
    a = AbundanceMatrix(np.ones((1, x.n_pixels)), x.shape, feasible=True)
    return SolveResult(a, _empty_trace(), solver_id, time.perf_counter() - t0)


def solve_sudap(
    e: EndmemberMatrix,
    x: ImageCube,
    cfg: DykstraConfig | None = None,
    on_sweep=None,
) -> SolveResult:
    """Fully constrained unmixing through the projected subspace.

    With the tolerance driven to zero the output is the unique minimizer
    of |X - EA|_F^2 over the simplex. Column sums are exact to roundoff
    at any tolerance; small negative entries can remain when the run
    stops early and are reported as-is (see clip_negatives).
    """
    t0 = time.perf_counter()
    validate_dimensions(e, x)
    if e.n_endmembers == 1:
        return _ones_result(x, "sudap", t0)
    t = build_transform(e)
    y = forward_transform(t, e, x)
    u, trace = dykstra_project(t, y, cfg, on_sweep=on_sweep)
    a = AbundanceMatrix(inverse_transform(t, u), x.shape)
    return SolveResult(a, trace, "sudap", time.perf_counter() - t0)


def solve_ls(e: EndmemberMatrix, x: ImageCube) -> SolveResult:
    """Unconstrained least squares, A = (E'E)^{-1} E'X."""
    t0 = time.perf_counter()
    validate_dimensions(e, x)
    _, factor = _gram_factor(e)
    a = scipy.linalg.cho_solve(factor, e.data.T @ x.data)
    result = AbundanceMatrix(a, x.shape)
    return SolveResult(result, _empty_trace(), "ls", time.perf_counter() - t0)


def solve_ls_sum1(e: EndmemberMatrix, x: ImageCube) -> SolveResult:
    """Least squares under the sum-to-one constraint alone.

    Closed form: shift the unconstrained solution along (E'E)^{-1} 1
    until columns sum to one,

        a = a_ls - (E'E)^{-1} 1 (1'a_ls - 1) / (1'(E'E)^{-1} 1).
    """
    t0 = time.perf_counter()
    validate_dimensions(e, x)
    if e.n_endmembers == 1:
        return _ones_result(x, "ls_sum1", t0)
    _, factor = _gram_factor(e)
    a_ls = scipy.linalg.cho_solve(factor, e.data.T @ x.data)
    g_inv_one = scipy.linalg.cho_solve(
        factor, np.ones(e.n_endmembers)
    )
    shift = (a_ls.sum(axis=0) - 1.0) / g_inv_one.sum()
    a = a_ls - np.outer(g_inv_one, shift)
    result = AbundanceMatrix(a, x.shape)
    return SolveResult(
        result, _empty_trace(), "ls_sum1", time.perf_counter() - t0
    )


def _oracle_abundances(
    e: np.ndarray,
    x: np.ndarray,
    primal_tol: float,
    dual_tol: float,
) -> np.ndarray:
    """Exact simplex-constrained least squares per pixel.

    Enumerates candidate sets Z of abundances pinned to zero, smallest
    sets first and in index order within a size. For each Z the
    stationarity conditions on the free coordinates F reduce to the
    bordered linear system

        [ G_FF  1 ] [a_F]   [h_F]
        [ 1'    0 ] [mu ] = [ 1 ],   G = E'E,  h = E'x.

    A candidate wins if a_F >= -primal_tol and the multipliers of the
    pinned coordinates, (G a - h)_Z + mu, all clear -dual_tol. The true
    solution is unique, so the first winner is the answer.

    Each candidate system is factored once and solved for every pixel
    still unresolved, which keeps the subset loop off the per-pixel
    path.
    """
    m = e.shape[1]
    n = x.shape[1]
    g = e.T @ e
    h = e.T @ x

    def bordered(free: tuple) -> np.ndarray:
        f = len(free)
        k = np.zeros((f + 1, f + 1))
        k[:f, :f] = g[np.ix_(free, free)]
        k[:f, f] = 1.0
        k[f, :f] = 1.0
        return k

    a_hat = np.empty((m, n))
    every = tuple(range(m))
    try:
        lu = scipy.linalg.lu_factor(bordered(every))
    except scipy.linalg.LinAlgError as exc:
        raise NoKKTPoint(f"stationarity system is singular: {exc}") from None
    rhs = np.vstack([h, np.ones((1, n))])
    sol = scipy.linalg.lu_solve(lu, rhs)
    a0 = sol[:m]
    interior = (a0 >= -primal_tol).all(axis=0)
    a_hat[:, interior] = a0[:, interior]
    remaining = np.flatnonzero(~interior)

    for size in range(1, m):
        if remaining.size == 0:
            break
        for zeroed in itertools.combinations(range(m), size):
            if remaining.size == 0:
                break
            free = tuple(i for i in every if i not in zeroed)
            try:
                lu = scipy.linalg.lu_factor(bordered(free))
            except scipy.linalg.LinAlgError:
                continue
            f = len(free)
            rhs = np.vstack(
                [h[free, :][:, remaining], np.ones((1, remaining.size))]
            )
            sol = scipy.linalg.lu_solve(lu, rhs)
            a_free = sol[:f]
            mu = sol[f]
            primal = (a_free >= -primal_tol).all(axis=0)
            a_cand = np.zeros((m, remaining.size))
            a_cand[free, :] = a_free
            lam = g[list(zeroed), :] @ a_cand - h[list(zeroed), :][:, remaining]
            lam += mu
            dual = (lam >= -dual_tol).all(axis=0)
            accept = primal & dual
            if not np.any(accept):
                continue
            a_hat[:, remaining[accept]] = a_cand[:, accept]
            remaining = remaining[~accept]

    if remaining.size:
        raise NoKKTPoint(
            f"{remaining.size} pixel(s) admitted no feasible stationary "
            "point; the endmember matrix is likely ill-conditioned"
        )
    return a_hat


def solve_oracle_activeset(
    e: EndmemberMatrix,
    x: ImageCube,
    primal_tol: float = PRIMAL_TOL,
    dual_tol: float = DUAL_TOL,
) -> SolveResult:
    """Exact fully constrained solution by active-set enumeration.

    Meant as ground truth at desk scale; cost grows with 2^m, hence the
    hard cap on m.

    Raises
    ------
    TooManyEndmembers
        If m exceeds MAX_ORACLE_ENDMEMBERS.
    NoKKTPoint
        If some pixel passes no candidate's feasibility checks, which
        indicates numerical trouble rather than a modelling error.
    """
    t0 = time.perf_counter()
    validate_dimensions(e, x)
    m = e.n_endmembers
    if m > MAX_ORACLE_ENDMEMBERS:
        raise TooManyEndmembers(
            f"active-set enumeration is capped at "
            f"{MAX_ORACLE_ENDMEMBERS} endmembers, got {m}"
        )
    if m == 1:
        return _ones_result(x, "oracle", t0)
    _gram_factor(e)
    a = _oracle_abundances(e.data, x.data, primal_tol, dual_tol)
    result = AbundanceMatrix(a, x.shape)
    return SolveResult(
        result, _empty_trace(), "oracle", time.perf_counter() - t0
    )


def clip_negatives(
    a: AbundanceMatrix, eps: float = 1e-7
) -> AbundanceMatrix:
    """Zero out small negative leakage and renormalize column sums.

    Entries in [-eps, 0) become 0; anything more negative is left alone
    since it signals an unconverged run rather than roundoff. Columns
    with a positive sum are then rescaled to sum to one.
    """
    data = a.data.copy()
    mask = (data < 0.0) & (data >= -eps)
    data[mask] = 0.0
    sums = data.sum(axis=0)
    good = sums > 0.0
    data[:, good] /= sums[good]
    return AbundanceMatrix(data, a.shape)
