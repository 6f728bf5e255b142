"""Equality constrained indefinite least squares.

The problem

    min_y (b - M y)^T J (b - M y)   subject to   C y = d,

with M of size n x m (n >= m), C of size p x m, and the signature matrix
J = diag(I_{n1}, -I_{n2}), has a unique solution when C has full row rank and
the quadratic form y^T (M^T J M) y is positive on the null space of C. Its
stationarity conditions embed into a double saddle point system

    [ J    M   0   ] [x]        [b]
    [ M^T  0   C^T ] [y]   =    [0]      (x = J (b - M y), z = lambda)
    [ 0    C   0   ] [lambda]   [d]

so the condition numbers of (y, lambda, ...) reduce to the general machinery
with the A, D, E blocks and the middle right-hand side held exactly fixed:
only M (entering as B^T), C, b, and d may be perturbed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dspp import DsppBlocks, Selector, Solution, factorize, solve_dspp
from .errors import (
    DimensionMismatch,
    IndefiniteProblem,
    MalformedProblem,
    RankDeficientC,
    SingularMatrix,
)
from .linalg import LuSolver, as_matrix, as_vector, ddagger, induced_norm
from .partial_cn import CnValue, _as_xi, inv_rows

# Rank tolerance for the constraint matrix, relative to its inf-norm.
RANK_RTOL = 1e-10

# Constraint residual acceptance, matching the solve residual convention.
CONSTRAINT_RTOL = 1e-8


def signature_matrix(n1: int, n2: int) -> np.ndarray:
    """diag(I_{n1}, -I_{n2})."""
    return np.diag(np.concatenate([np.ones(n1), -np.ones(n2)]))


@dataclass(frozen=True)
class EilsProblem:
    """Problem data; construction checks the well-posedness conditions.

    Raises :class:`RankDeficientC` when C loses row rank and
    :class:`IndefiniteProblem` when M^T J M is not positive definite on the
    null space of C.
    """

    M: np.ndarray
    C: np.ndarray
    n1: int
    n2: int
    b: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "M", as_matrix(self.M, "M"))
        object.__setattr__(self, "C", as_matrix(self.C, "C"))
        object.__setattr__(self, "b", as_vector(self.b, "b"))
        object.__setattr__(self, "d", as_vector(self.d, "d"))
        n, m = self.M.shape
        p = self.C.shape[0]
        if self.n1 < 0 or self.n2 < 0 or self.n1 + self.n2 != n:
            raise DimensionMismatch(f"n1 + n2 must equal {n}, got {self.n1} + {self.n2}")
        if n < m:
            raise DimensionMismatch(f"M must have at least as many rows as columns, got {n}x{m}")
        if min(m, p) < 1:
            raise DimensionMismatch("y and the constraints must be nonempty")
        if self.C.shape[1] != m:
            raise DimensionMismatch(f"C has shape {self.C.shape}, expected ({p}, {m})")
        if self.b.size != n or self.d.size != p:
            raise DimensionMismatch("b must have length n and d length p")

        _, r, _ = scipy.linalg.qr(self.C.T, mode="economic", pivoting=True)
        tol = RANK_RTOL * induced_norm(self.C, "inf")
        rank = int(np.sum(np.abs(np.diag(r)) > tol))
        if rank < p:
            raise RankDeficientC(f"constraint matrix has rank {rank} < {p}")

        if m > p:
            null = scipy.linalg.svd(self.C)[2][p:, :].T
            j = signature_matrix(self.n1, self.n2)
            gram = null.T @ (self.M.T @ j @ self.M) @ null
            gram = (gram + gram.T) / 2.0
            if float(np.linalg.eigvalsh(gram)[0]) <= 0.0:
                raise IndefiniteProblem(
                    "quadratic form is not positive definite on the constraint null space"
                )

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def m(self) -> int:
        return self.M.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class EilsSolution:
    """Estimate y, multiplier lam, the sign-weighted residual part x = J r,
    and the plain residual r = b - M y."""

    y: np.ndarray
    lam: np.ndarray
    x: np.ndarray
    residual: np.ndarray


def eils_reduce(prob: EilsProblem) -> DsppBlocks:
    """Embed the problem as a double saddle point system (D = 0, E = 0)."""
    n, m, p = prob.n, prob.m, prob.p
    return DsppBlocks(
        A=signature_matrix(prob.n1, prob.n2),
        B=prob.M.T,
        C=prob.C,
        D=np.zeros((m, m)),
        E=np.zeros((p, p)),
        b=np.concatenate([prob.b, np.zeros(m), prob.d]),
    )


def solve_eils(prob: EilsProblem) -> EilsSolution:
    """Solve through the saddle point embedding and verify the constraint."""
    blocks = eils_reduce(prob)
    sol = solve_dspp(blocks)
    y = sol.y
    resid_c = float(np.linalg.norm(prob.C @ y - prob.d, 2))
    bound = CONSTRAINT_RTOL * (
        induced_norm(prob.C, "inf") * float(np.linalg.norm(y, 2)) + float(np.linalg.norm(prob.d, 2))
    )
    if resid_c > bound:
        raise SingularMatrix(f"constraint residual {resid_c:.3e} exceeds {bound:.3e}")
    return EilsSolution(y=y, lam=sol.z, x=sol.x, residual=prob.b - prob.M @ y)


def _build_ghat(sol: Solution) -> np.ndarray:
    """l x m(n+p) sensitivity map in (vec dM, vec dC) coordinates:

        [ y^T kron I_n   0            ]
        [ I_m kron x^T   I_m kron z^T ]
        [ 0              y^T kron I_p ]
    """
    x, y, z = sol.x, sol.y, sol.z
    n, m, p = x.size, y.size, z.size
    ghat = np.zeros((n + m + p, n * m + p * m))
    nm = n * m
    ghat[:n, :nm] = np.kron(y[None, :], np.eye(n))
    ghat[n : n + m, :nm] = np.kron(np.eye(m), x[None, :])
    ghat[n : n + m, nm:] = np.kron(np.eye(m), z[None, :])
    ghat[n + m :, nm:] = np.kron(y[None, :], np.eye(p))
    return ghat


def _eils_weight_vectors(prob: EilsProblem, psi, chi):
    """Weight vectors over (vec dM, vec dC) and (b, d) positions."""
    n, m, p = prob.n, prob.m, prob.p
    if np.isscalar(psi):
        psi = float(psi)
        if psi <= 0:
            raise ValueError("scalar weight must be positive")
        vec_psi = np.full(n * m + p * m, psi)
    else:
        psi_m, psi_c = psi
        psi_m = np.asarray(psi_m, dtype=float)
        psi_c = np.asarray(psi_c, dtype=float)
        if psi_m.shape != (n, m) or psi_c.shape != (p, m):
            raise DimensionMismatch("entrywise weights must be shaped like M and C")
        vec_psi = np.concatenate([psi_m.flatten(order="F"), psi_c.flatten(order="F")])
    if np.isscalar(chi):
        chi = float(chi)
        if chi <= 0:
            raise ValueError("scalar weight must be positive")
        vec_chi = np.full(n + p, chi)
    else:
        vec_chi = as_vector(chi, "chi")
        if vec_chi.size != n + p:
            raise DimensionMismatch(f"chi must have length {n + p}")
    return vec_psi, vec_chi


def default_scalar_weights(prob: EilsProblem) -> tuple[float, float]:
    """Data-norm weights: Psi over (M, C) jointly, chi over (b, d) jointly."""
    psi = float(np.sqrt(np.sum(prob.M ** 2) + np.sum(prob.C ** 2)))
    chi = float(np.linalg.norm(np.concatenate([prob.b, prob.d]), 2))
    return psi, chi


def eils_cn(
    prob: EilsProblem,
    sel: Selector,
    psi,
    chi,
    xi,
    norm: str,
    *,
    blocks: DsppBlocks | None = None,
    sol: Solution | None = None,
    lu: LuSolver | None = None,
    rows: np.ndarray | None = None,
) -> CnValue:
    """Condition number of L w for the embedded system, perturbing only
    (M, C) and (b, d).

    ``psi`` is a positive scalar or a pair of matrices shaped like (M, C);
    ``chi`` is a positive scalar or a length n+p vector. Equals the general
    weighted condition number of the reduced system with weights pinned to
    zero on A, D, E and the middle right-hand side block.
    """
    if norm not in ("two", "inf"):
        raise ValueError(f"norm must be 'two' or 'inf', got {norm!r}")
    xi = _as_xi(xi)
    if blocks is None:
        blocks = eils_reduce(prob)
    if lu is None and (sol is None or rows is None):
        lu = factorize(blocks)
    if sol is None:
        sol = solve_dspp(blocks, lu)
    if rows is None:
        rows = inv_rows(blocks, sel, lu)
    n, m, p = prob.n, prob.m, prob.p
    vec_psi, vec_chi = _eils_weight_vectors(prob, psi, chi)
    lw = sel.L @ sol.w
    xivec = xi.resolve(lw)

    ghat = rows @ _build_ghat(sol)
    rhs_cols = np.concatenate([np.arange(n), np.arange(n + m, n + m + p)])
    rows_sel = rows[:, rhs_cols]
    if norm == "inf":
        u = np.abs(ghat) @ np.abs(vec_psi) + np.abs(rows_sel) @ np.abs(vec_chi)
        return CnValue(float(np.max(np.abs(ddagger(xivec)) * u)), "eilsInf")
    mat = np.hstack([ghat * vec_psi[None, :], -rows_sel * vec_chi[None, :]])
    mat *= ddagger(xivec)[:, None]
    if not np.any(mat):
        return CnValue(0.0, "eils2")
    return CnValue(induced_norm(mat, "two"), "eils2")


def eils_from_dict(doc) -> EilsProblem:
    """Parse the JSON document {M, C, n1, n2, b, d}."""
    if not isinstance(doc, dict):
        raise MalformedProblem("problem document must be a JSON object")
    missing = [k for k in ("M", "C", "n1", "n2", "b", "d") if k not in doc]
    if missing:
        raise MalformedProblem(f"problem document missing keys: {', '.join(missing)}")
    try:
        return EilsProblem(
            M=doc["M"], C=doc["C"], n1=int(doc["n1"]), n2=int(doc["n2"]),
            b=doc["b"], d=doc["d"],
        )
    except (DimensionMismatch, ValueError, TypeError) as exc:
        raise MalformedProblem(str(exc)) from exc


def eils_to_dict(prob: EilsProblem) -> dict:
    return {
        "M": prob.M.tolist(),
        "C": prob.C.tolist(),
        "n1": prob.n1,
        "n2": prob.n2,
        "b": prob.b.tolist(),
        "d": prob.d.tolist(),
    }


__all__ = [
    "EilsProblem",
    "EilsSolution",
    "signature_matrix",
    "eils_reduce",
    "solve_eils",
    "eils_cn",
    "default_scalar_weights",
    "eils_from_dict",
    "eils_to_dict",
]
