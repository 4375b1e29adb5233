"""Change of variables that turns constrained least squares into geometry.

For an endmember matrix E with linearly independent columns, factor
E'E = D'D with D upper triangular (Cholesky). Writing u = D a, the
residual splits as

    |x - E a|^2 = |x|^2 - |y|^2 + |y - u|^2,   y = D^{-T} E' x,

so minimising over the simplex is a closest-point problem in u. The sum
constraint 1'a = 1 becomes the hyperplane b'u = 1 with b' = 1'D^{-1};
each a_i >= 0 becomes the half space d_i'u >= 0 where d_i is row i of
D^{-1}.

The intersection of the hyperplane with one half space is handled by a
closed-form projector that only needs each half-space normal expressed
inside the hyperplane: with P = I - bb'/|b|^2,

    s_i = P d_i / |P d_i|,   f_i = -d_i'c / |P d_i|,   c = b/|b|^2.

P d_i never vanishes: d_i parallel to b would make row i of D^{-1} a
multiple of the sum of all rows, impossible for an invertible triangular
matrix with m >= 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateProblem, DimensionMismatch, RankDeficient
from .model import EndmemberMatrix

# A Cholesky pivot at or below rank_tol * trace(E'E)/m marks E as
# numerically rank deficient.
RANK_TOL = 1e-12


@dataclass(frozen=True)
class SubspaceTransform:
    """Precomputed factorisation and constraint geometry for one E.

    Attributes
    ----------
    d : np.ndarray
        Upper-triangular factor with D'D = E'E.
    d_inv : np.ndarray
        Explicit inverse of D; row i is the half-space normal d_i.
    b : np.ndarray
        Hyperplane normal, b' = 1'D^{-1}.
    c : np.ndarray
        Hyperplane foot point b/|b|^2, the projection of the origin.
    s : np.ndarray
        m x m array, row i the unit in-plane normal of half space i.
    f : np.ndarray
        Offsets paired with s: u feasible for half space i on the
        hyperplane iff s_i'u >= f_i.
    p_norms : np.ndarray
        Norms |P d_i| used to build s and f.
    """

    d: np.ndarray
    d_inv: np.ndarray
    b: np.ndarray
    c: np.ndarray
    s: np.ndarray
    f: np.ndarray
    p_norms: np.ndarray

    @property
    def n_endmembers(self) -> int:
        return self.d.shape[0]


def _geometry_from_d(d: np.ndarray) -> SubspaceTransform:
    """Assemble the transform record from a given upper-triangular factor.

    Split out from build_transform so tests can feed an independently
    computed factor and confirm the geometry does not depend on how D
    was obtained.
    """
    m = d.shape[0]
    d_inv = scipy.linalg.solve_triangular(d, np.eye(m), lower=False)
    b = d_inv.sum(axis=0)
    bb = float(b @ b)
    c = b / bb

    bd = d_inv @ b
    pd = d_inv - np.outer(bd, c)
    p_norms = np.linalg.norm(pd, axis=1)
    row_norms = np.linalg.norm(d_inv, axis=1)
    if np.any(p_norms <= 1e3 * np.finfo(np.float64).eps * row_norms):
        raise DegenerateProblem(
            "a non-negativity constraint is normal to the sum hyperplane"
        )
    s = pd / p_norms[:, None]
    f = -(d_inv @ c) / p_norms
    return SubspaceTransform(
        d=d, d_inv=d_inv, b=b, c=c, s=s, f=f, p_norms=p_norms
    )


def build_transform(
    e: EndmemberMatrix, rank_tol: float = RANK_TOL
) -> SubspaceTransform:
    """Factor E'E and precompute the transformed constraint geometry.

    Parameters
    ----------
    e : EndmemberMatrix
    rank_tol : float
        Relative pivot threshold for declaring E rank deficient.

    Raises
    ------
    RankDeficient
        If the Cholesky factorisation fails or produces a pivot at or
        below rank_tol * trace(E'E)/m.
    DegenerateProblem
        If m == 1; with a single endmember the sum constraint already
        pins the answer and there is no geometry to build.
    """
    m = e.n_endmembers
    if m < 2:
        raise DegenerateProblem(
            "subspace geometry needs at least two endmembers; "
            "with one endmember the sum constraint fixes a = 1"
        )
    g = e.data.T @ e.data
    try:
        lower = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise RankDeficient(
            f"endmember matrix is numerically rank deficient: {exc}"
        ) from None
    pivots = np.diag(lower) ** 2
    threshold = rank_tol * np.trace(g) / m
    if np.any(pivots <= threshold):
        worst = int(np.argmin(pivots))
        raise RankDeficient(
            f"Cholesky pivot {pivots[worst]:.3e} at column {worst} is below "
            f"the rank threshold {threshold:.3e}"
        )
    return _geometry_from_d(lower.T.copy())


def forward_transform(t: SubspaceTransform, e, x) -> np.ndarray:
    """Map observations into the subspace: y = D^{-T} E' x.

    ``e`` and ``x`` may be the model wrappers or plain arrays; x holds
    one pixel per column. E'x is formed first and the triangular system
    D'y = E'x solved, never an explicit Gram inverse. For noiseless
    x = E a the output equals D a.
    """
    e_data = np.asarray(getattr(e, "data", e), dtype=np.float64)
    x_data = np.asarray(getattr(x, "data", x), dtype=np.float64)
    if e_data.shape[0] != x_data.shape[0]:
        raise DimensionMismatch(e_data.shape[0], x_data.shape[0])
    w = e_data.T @ x_data
    return scipy.linalg.solve_triangular(t.d, w, trans="T", lower=False)


def inverse_transform(t: SubspaceTransform, u: np.ndarray) -> np.ndarray:
    """Recover abundances from subspace coefficients: a = D^{-1} u."""
    return scipy.linalg.solve_triangular(t.d, u, lower=False)
