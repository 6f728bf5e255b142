"""Linear structure subspaces and structure-preserving condition numbers.

A structure kind (symmetric, symmetric Toeplitz, diagonal, or full) is encoded
by a 0/1 basis matrix Phi mapping a generator vector g to vec(M) = Phi g. Each
vec position belongs to at most one generator, so Phi^T Phi = diag(u^2) with
integer squared column norms, and membership/extraction are exact scatter and
gather operations.

Restricting the perturbations of A, D, E to such subspaces (B, C stay
unstructured) tightens the condition numbers; the 2-norm variant rescales the
generator columns by u so the structured and unstructured suprema are taken
over comparably normalized directions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse

from .dspp import DsppBlocks, Selector, Solution
from .errors import DimensionMismatch, NotInSubspace, ZeroXi
from .linalg import LuSolver, ddagger, induced_norm, unvec
from .partial_cn import CnValue, PerturbationWeights, XiChoice, _as_xi, _setup, build_g

STRUCTURE_KINDS = ("symmetric", "toeplitz_sym", "diagonal", "full")

# Membership tolerance: residual vs 1e-12 * norm_inf of the matrix.
MEMBERSHIP_RTOL = 1e-12


@dataclass(eq=False)
class StructureBasis:
    """A 0/1 basis of a structure subspace of dim x dim matrices.

    ``rows[t]`` is the vec position (column-major) touched by generator
    ``cols[t]``; ``counts`` are the integer squared column norms and
    ``u = sqrt(counts)`` the column norms themselves.
    """

    kind: str
    dim: int
    rows: np.ndarray
    cols: np.ndarray
    counts: np.ndarray
    u: np.ndarray

    @property
    def generators(self) -> int:
        return self.counts.size

    @cached_property
    def phi(self) -> scipy.sparse.csc_array:
        data = np.ones(self.rows.size)
        return scipy.sparse.csc_array(
            (data, (self.rows, self.cols)), shape=(self.dim * self.dim, self.generators)
        )

    def extract(self, mat) -> np.ndarray:
        """Generator of ``mat``; raises :class:`NotInSubspace` if it has none."""
        mat = np.asarray(mat, dtype=float)
        if mat.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"expected {self.dim}x{self.dim}, got {mat.shape}")
        v = mat.flatten(order="F")
        g = np.bincount(self.cols, weights=v[self.rows], minlength=self.generators)
        g = g / self.counts
        recon = np.zeros(v.size)
        recon[self.rows] = g[self.cols]
        resid = float(np.max(np.abs(v - recon))) if v.size else 0.0
        if resid > MEMBERSHIP_RTOL * induced_norm(mat, "inf"):
            raise NotInSubspace(
                f"matrix is not {self.kind} (residual {resid:.3e})"
            )
        return g

    def reconstruct(self, g) -> np.ndarray:
        """The matrix with generator ``g``."""
        g = np.asarray(g, dtype=float)
        if g.shape != (self.generators,):
            raise DimensionMismatch(f"generator length {g.size}, expected {self.generators}")
        v = np.zeros(self.dim * self.dim)
        v[self.rows] = g[self.cols]
        return unvec(v, self.dim, self.dim)


def structure_basis(kind: str, dim: int) -> StructureBasis:
    """Build the basis for one structure kind.

    Generator orderings: symmetric walks the upper triangle row by row
    ((1,1),(1,2),...,(1,n),(2,2),...); toeplitz_sym uses diagonal offsets
    0..n-1; diagonal and full use entry order.
    """
    if dim < 1:
        raise DimensionMismatch("dimension must be >= 1")
    rows, cols = [], []
    if kind == "symmetric":
        g = 0
        for i in range(dim):
            for j in range(i, dim):
                rows.append(i + j * dim)
                cols.append(g)
                if i != j:
                    rows.append(j + i * dim)
                    cols.append(g)
                g += 1
    elif kind == "toeplitz_sym":
        for off in range(dim):
            for i in range(dim - off):
                rows.append((i + off) + i * dim)
                cols.append(off)
                if off:
                    rows.append(i + (i + off) * dim)
                    cols.append(off)
    elif kind == "diagonal":
        for i in range(dim):
            rows.append(i + i * dim)
            cols.append(i)
    elif kind == "full":
        rows = list(range(dim * dim))
        cols = list(range(dim * dim))
    else:
        raise ValueError(f"unsupported structure kind {kind!r}")
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    counts = np.bincount(cols, minlength=int(cols.max()) + 1)
    return StructureBasis(
        kind=kind, dim=dim, rows=rows, cols=cols,
        counts=counts, u=np.sqrt(counts.astype(float)),
    )


@dataclass(frozen=True)
class StructureTriple:
    """Structure kinds for the A, D, E blocks (B and C stay unstructured)."""

    a: StructureBasis
    d: StructureBasis
    e: StructureBasis

    @classmethod
    def from_kinds(cls, kind_a: str, kind_d: str, kind_e: str, n: int, m: int, p: int):
        return cls(
            a=structure_basis(kind_a, n),
            d=structure_basis(kind_d, m),
            e=structure_basis(kind_e, p),
        )

    @classmethod
    def full(cls, n: int, m: int, p: int):
        return cls.from_kinds("full", "full", "full", n, m, p)

    def kinds(self) -> dict:
        return {"A": self.a.kind, "D": self.d.kind, "E": self.e.kind}


def _check_dims(triple: StructureTriple, blocks: DsppBlocks):
    want = (blocks.n, blocks.m, blocks.p)
    got = (triple.a.dim, triple.d.dim, triple.e.dim)
    if want != got:
        raise DimensionMismatch(f"structure dims {got} do not match blocks {want}")


def _phi_s(triple: StructureTriple, n: int, m: int, p: int) -> scipy.sparse.csc_array:
    """Block-diagonal basis over vec(A..E): [Phi_A, I_{nm+mp}, Phi_D, Phi_E]."""
    eye_bc = scipy.sparse.identity(n * m + m * p, format="csc")
    return scipy.sparse.block_diag(
        [triple.a.phi, eye_bc, triple.d.phi, triple.e.phi], format="csc"
    )


def _u_s(triple: StructureTriple, n: int, m: int, p: int) -> np.ndarray:
    return np.concatenate([triple.a.u, np.ones(n * m + m * p), triple.d.u, triple.e.u])


def structured_ncn(
    blocks: DsppBlocks,
    sel: Selector,
    weights: PerturbationWeights,
    xi,
    triple: StructureTriple,
    *,
    sol: Solution | None = None,
    lu: LuSolver | None = None,
    rows: np.ndarray | None = None,
) -> CnValue:
    """2-norm condition number with A, D, E perturbations kept in-structure.

    A, D, E (and entrywise weight blocks for them) must lie in the declared
    subspaces. Materializes the generator-coordinate map, so desk-scale sizes.
    Never exceeds the unstructured value for the same scalar weights.
    """
    _check_dims(triple, blocks)
    triple.a.extract(blocks.A)
    triple.d.extract(blocks.D)
    triple.e.extract(blocks.E)
    if not weights.is_scalar:
        wa, _, _, wd, we = weights.block_mats(blocks)
        triple.a.extract(wa)
        triple.d.extract(wd)
        triple.e.extract(we)
    xi = _as_xi(xi)
    sol, rows = _setup(blocks, sel, sol, lu, rows)
    lw = sel.L @ sol.w
    xivec = xi.resolve(lw)

    n, m, p = blocks.n, blocks.m, blocks.p
    t = (rows @ build_g(sol)) * weights.vec_psi(blocks)[None, :]
    phi = _phi_s(triple, n, m, p)
    gen_part = (phi.T @ t.T).T / _u_s(triple, n, m, p)[None, :]
    rhs_part = -rows * weights.chi_vec(blocks.l)[None, :]
    mat = np.hstack([gen_part, rhs_part]) * ddagger(xivec)[:, None]
    if not np.any(mat):
        return CnValue(0.0, "structured2")
    return CnValue(induced_norm(mat, "two"), "structured2")


def structured_inf_cn(
    blocks: DsppBlocks,
    sel: Selector,
    xi,
    triple: StructureTriple,
    *,
    sol: Solution | None = None,
    lu: LuSolver | None = None,
    rows: np.ndarray | None = None,
) -> CnValue:
    """Mixed or componentwise condition number with structured A, D, E.

    Weights are the data itself (Psi = H, chi = b) with the A, D, E parts
    expressed through their generators, so structured values never exceed the
    unstructured ones. Materializes the generator map, desk-scale sizes.
    """
    _check_dims(triple, blocks)
    xi = _as_xi(xi)
    if xi.kind not in ("mcn", "ccn"):
        raise ValueError(f"structured_inf_cn supports xi 'mcn' or 'ccn', got {xi.kind!r}")
    gen_abs = np.concatenate([
        np.abs(triple.a.extract(blocks.A)),
        np.abs(blocks.B).flatten(order="F"),
        np.abs(blocks.C).flatten(order="F"),
        np.abs(triple.d.extract(blocks.D)),
        np.abs(triple.e.extract(blocks.E)),
    ])
    sol, rows = _setup(blocks, sel, sol, lu, rows)
    lw = sel.L @ sol.w

    phi = _phi_s(triple, blocks.n, blocks.m, blocks.p)
    t = rows @ build_g(sol)
    gen_map = (phi.T @ t.T).T
    u = np.abs(gen_map) @ gen_abs + np.abs(rows) @ np.abs(blocks.b)
    if xi.kind == "mcn":
        den = float(np.max(np.abs(lw))) if lw.size else 0.0
        if den == 0.0:
            raise ZeroXi("L w is zero, the max-norm normalizer vanishes")
        return CnValue(float(np.max(u)) / den, "structuredInf")
    return CnValue(float(np.max(np.abs(ddagger(lw)) * u)), "structuredInf")


__all__ = [
    "STRUCTURE_KINDS",
    "StructureBasis",
    "StructureTriple",
    "structure_basis",
    "structured_ncn",
    "structured_inf_cn",
]
