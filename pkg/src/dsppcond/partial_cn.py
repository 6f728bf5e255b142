"""Partial condition numbers of a projected solution L w.

For a double saddle point system S w = b and a selector L, the condition
number measures the worst first-order amplification from weighted data
perturbations (dA, dB, dC, dD, dE, db) to the observed part L w:

    sup  || xi^ddag . (L dw) ||_gamma  /  || [vec(Psi^ddag . dH); chi^ddag . db] ||_tau

over admissible perturbation directions, where dw is the first-order response
and the weights Psi (per data block) and chi (right-hand side) define what
"relative" means. Taking tau = gamma = 2 with the 2-norm of L w as normalizer
gives the normwise number; tau = gamma = inf with Psi = H, chi = b gives the
mixed (max-norm normalizer) and componentwise (entrywise normalizer) numbers.

The first-order response is dw = -S^{-1} [G, -I] [vec(dH); db] with G the
l x s sensitivity matrix assembled from x, y, z (s = n^2 + nm + mp + m^2 + p^2).
All closed forms below need only L S^{-1}, obtained from k transposed solves,
never an explicit inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dspp import DsppBlocks, Selector, Solution, factorize, solve_dspp
from .errors import DimensionMismatch, ZeroXi
from .linalg import LuSolver, as_vector, ddagger, induced_norm, spectral_top, unvec

# The explicit k x (s+l) matrix is materialized only up to this entry count;
# past it the normwise path falls back to the Kronecker-free product form.
KRON_ENTRY_LIMIT = 2_000_000

# Temp-tensor budget (entries) for the chunked max-norm numerator.
_CHUNK_ENTRY_LIMIT = 1 << 22

_XI_KINDS = ("ncn", "mcn", "ccn", "custom")


@dataclass(frozen=True)
class CnValue:
    """A computed condition number: nonnegative finite value plus a label."""

    value: float
    flavor: str

    def __post_init__(self):
        v = float(self.value)
        if not np.isfinite(v) or v < 0:
            raise ValueError(f"condition number must be finite and >= 0, got {v!r}")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class PerturbationWeights:
    """Weights defining admissible perturbations and their size.

    Scalar mode: one positive Psi for all data blocks and one positive chi for
    the right-hand side. Entrywise mode: five matrices shaped like A, B, C, D,
    E plus a length-l vector; a zero weight entry pins the corresponding
    perturbation entry to zero.
    """

    mode: str
    psi_scalar: float | None = None
    chi_scalar: float | None = None
    psi_blocks: tuple | None = None
    chi_vector: np.ndarray | None = None

    @classmethod
    def scalar(cls, psi: float, chi: float) -> "PerturbationWeights":
        psi, chi = float(psi), float(chi)
        if not (psi > 0 and chi > 0):
            raise ValueError("scalar weights must be positive")
        return cls(mode="scalar", psi_scalar=psi, chi_scalar=chi)

    @classmethod
    def entrywise(cls, psi_a, psi_b, psi_c, psi_d, psi_e, chi) -> "PerturbationWeights":
        blocks = tuple(np.asarray(w, dtype=float) for w in (psi_a, psi_b, psi_c, psi_d, psi_e))
        return cls(mode="entrywise", psi_blocks=blocks, chi_vector=as_vector(chi, "chi"))

    @classmethod
    def from_problem(cls, blocks: DsppBlocks) -> "PerturbationWeights":
        """The relative-to-the-data choice Psi = H, chi = b."""
        return cls.entrywise(blocks.A, blocks.B, blocks.C, blocks.D, blocks.E, blocks.b)

    @property
    def is_scalar(self) -> bool:
        return self.mode == "scalar"

    def block_mats(self, blocks: DsppBlocks) -> tuple:
        """The five weight matrices, expanding scalar mode to constant blocks."""
        shapes = [blocks.A, blocks.B, blocks.C, blocks.D, blocks.E]
        if self.is_scalar:
            return tuple(np.full(b.shape, self.psi_scalar) for b in shapes)
        for w, b, name in zip(self.psi_blocks, shapes, "ABCDE"):
            if w.shape != b.shape:
                raise DimensionMismatch(f"weight for {name} has shape {w.shape}, expected {b.shape}")
        return self.psi_blocks

    def chi_vec(self, l: int) -> np.ndarray:
        if self.is_scalar:
            return np.full(l, self.chi_scalar)
        if self.chi_vector.size != l:
            raise DimensionMismatch(f"chi has length {self.chi_vector.size}, expected {l}")
        return self.chi_vector

    def vec_psi(self, blocks: DsppBlocks) -> np.ndarray:
        """Column-stacked weight vector over all five blocks, in A,B,C,D,E order."""
        return np.concatenate([w.flatten(order="F") for w in self.block_mats(blocks)])


@dataclass(frozen=True)
class XiChoice:
    """How the observed part normalizes the response.

    ncn: constant ||L w||_2, mcn: constant ||L w||_inf, ccn: the vector L w
    itself (entrywise, with the pseudo-reciprocal convention for zeros),
    custom: a caller-supplied length-k vector.
    """

    kind: str
    custom: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in _XI_KINDS:
            raise ValueError(f"unknown xi kind {self.kind!r}")
        if (self.kind == "custom") != (self.custom is not None):
            raise ValueError("custom xi needs (exactly) an explicit vector")

    def resolve(self, lw: np.ndarray) -> np.ndarray:
        """The length-k normalizer vector for an observed part L w."""
        if self.kind == "ncn":
            nrm = float(np.linalg.norm(lw, 2))
            if nrm == 0.0:
                raise ZeroXi("L w is zero, the 2-norm normalizer vanishes")
            return np.full(lw.size, nrm)
        if self.kind == "mcn":
            nrm = float(np.max(np.abs(lw))) if lw.size else 0.0
            if nrm == 0.0:
                raise ZeroXi("L w is zero, the max-norm normalizer vanishes")
            return np.full(lw.size, nrm)
        if self.kind == "ccn":
            return lw
        xi = as_vector(self.custom, "xi")
        if xi.size != lw.size:
            raise DimensionMismatch(f"custom xi has length {xi.size}, expected {lw.size}")
        return xi


def _as_xi(xi) -> XiChoice:
    return xi if isinstance(xi, XiChoice) else XiChoice(kind=str(xi))


def build_g(sol: Solution) -> np.ndarray:
    """The l x s first-order sensitivity matrix in vec(dA..dE) coordinates.

    Row blocks (x, y, z parts) against column blocks (A, B, C, D, E):

        [ x^T kron I_n   I_n kron y^T   0              0              0            ]
        [ 0              x^T kron I_m   I_m kron z^T  -(y^T kron I_m) 0            ]
        [ 0              0              y^T kron I_p   0              z^T kron I_p ]
    """
    x, y, z = sol.x, sol.y, sol.z
    n, m, p = x.size, y.size, z.size
    widths = [n * n, n * m, m * p, m * m, p * p]
    offs = np.concatenate([[0], np.cumsum(widths)])
    g = np.zeros((n + m + p, offs[-1]))
    g[:n, offs[0] : offs[1]] = np.kron(x[None, :], np.eye(n))
    g[:n, offs[1] : offs[2]] = np.kron(np.eye(n), y[None, :])
    g[n : n + m, offs[1] : offs[2]] = np.kron(x[None, :], np.eye(m))
    g[n : n + m, offs[2] : offs[3]] = np.kron(np.eye(m), z[None, :])
    g[n : n + m, offs[3] : offs[4]] = -np.kron(y[None, :], np.eye(m))
    g[n + m :, offs[2] : offs[3]] = np.kron(y[None, :], np.eye(p))
    g[n + m :, offs[4] :] = np.kron(z[None, :], np.eye(p))
    return g


def build_j(sol: Solution) -> np.ndarray:
    """The l x l Gram matrix of :func:`build_g` in closed form (no Kronecker).

    Diagonal blocks are (|x|^2+|y|^2) I_n, (|x|^2+|y|^2+|z|^2) I_m,
    (|y|^2+|z|^2) I_p; off-diagonal couplings are x y^T and y z^T.
    """
    x, y, z = sol.x, sol.y, sol.z
    n, m, p = x.size, y.size, z.size
    sx, sy, sz = float(x @ x), float(y @ y), float(z @ z)
    j = np.zeros((n + m + p, n + m + p))
    j[:n, :n] = (sx + sy) * np.eye(n)
    j[n : n + m, n : n + m] = (sx + sy + sz) * np.eye(m)
    j[n + m :, n + m :] = (sy + sz) * np.eye(p)
    j[:n, n : n + m] = np.outer(x, y)
    j[n : n + m, :n] = np.outer(y, x)
    j[n : n + m, n + m :] = np.outer(y, z)
    j[n + m :, n : n + m] = np.outer(z, y)
    return j


def inv_rows(blocks: DsppBlocks, sel: Selector, lu: LuSolver | None = None) -> np.ndarray:
    """The k x l matrix L S^{-1}, via k transposed solves of the factorization."""
    if lu is None:
        lu = factorize(blocks)
    if sel.L.shape[1] != blocks.l:
        raise DimensionMismatch(f"selector has {sel.L.shape[1]} columns, system is {blocks.l}")
    return lu.solve(sel.L.T, transpose=True).T


def first_order_delta(
    blocks: DsppBlocks,
    sol: Solution,
    da, db_, dc, dd, de, drhs,
    lu: LuSolver | None = None,
) -> np.ndarray:
    """First-order solution response to a block perturbation.

    Returns -S^{-1} [G, -I] [vec(dH); drhs], evaluated without Kronecker
    products as S^{-1} (drhs - [dA x + dB^T y; dB x - dD y + dC^T z; dC y + dE z]).
    """
    if lu is None:
        lu = factorize(blocks)
    x, y, z = sol.x, sol.y, sol.z
    top = da @ x + db_.T @ y
    mid = db_ @ x - dd @ y + dc.T @ z
    bot = dc @ y + de @ z
    return lu.solve(np.asarray(drhs, dtype=float) - np.concatenate([top, mid, bot]))


def _setup(blocks, sel, sol, lu, rows):
    if (sol is None or rows is None) and lu is None:
        lu = factorize(blocks)
    if sol is None:
        sol = solve_dspp(blocks, lu)
    if rows is None:
        rows = inv_rows(blocks, sel, lu)
    return sol, rows


def _chunks(total: int, size: int):
    for start in range(0, total, size):
        yield slice(start, min(start + size, total))


def _inf_numerator(rows, sol, wa, wb, wc, wd, we, chi_abs) -> np.ndarray:
    """|L S^{-1} [G, -I]| [vec(W); chi] for nonnegative weights, exactly.

    The A, D, E column blocks of L S^{-1} G factor through Kronecker
    identities, so their absolute values reduce to small matrix products. The
    B and C blocks mix two terms before the absolute value and are accumulated
    in column chunks, which keeps memory at O(k * max(m, p)) instead of
    materializing the k x s matrix.
    """
    x, y, z = sol.x, sol.y, sol.z
    n, m, p = x.size, y.size, z.size
    k1, k2, k3 = rows[:, :n], rows[:, n : n + m], rows[:, n + m :]
    a1, a2, a3 = np.abs(k1), np.abs(k2), np.abs(k3)
    u = a1 @ (wa @ np.abs(x)) + a2 @ (wd @ np.abs(y)) + a3 @ (we @ np.abs(z))
    u += np.abs(rows) @ chi_abs

    k = rows.shape[0]
    cb = max(1, _CHUNK_ENTRY_LIMIT // max(1, k * m))
    for cs in _chunks(n, cb):
        t = np.abs(k1[:, cs][:, None, :] * y[None, :, None] + k2[:, :, None] * x[cs][None, None, :])
        u += np.einsum("krc,rc->k", t, wb[:, cs])
    cb = max(1, _CHUNK_ENTRY_LIMIT // max(1, k * p))
    for cs in _chunks(m, cb):
        t = np.abs(k2[:, cs][:, None, :] * z[None, :, None] + k3[:, :, None] * y[cs][None, None, :])
        u += np.einsum("krc,rc->k", t, wc[:, cs])
    return u


def _sym_top_eig(s: np.ndarray) -> float:
    s = (s + s.T) / 2.0
    return float(max(np.linalg.eigvalsh(s)[-1], 0.0))


def unified_cn(
    blocks: DsppBlocks,
    sel: Selector,
    weights: PerturbationWeights,
    xi,
    norm: str,
    *,
    sol: Solution | None = None,
    lu: LuSolver | None = None,
    rows: np.ndarray | None = None,
) -> CnValue:
    """The general weighted condition number for norm "two" or "inf".

    The max-norm case is evaluated through the exact chunked numerator and
    scales to large systems. The 2-norm case with scalar weights uses the
    Kronecker-free Gram form; with entrywise weights it materializes the
    k x (s+l) matrix and is intended for desk-scale systems.

    ``sol``, ``lu`` and ``rows`` (L S^{-1}) may be passed to reuse work.
    """
    if norm not in ("two", "inf"):
        raise ValueError(f"norm must be 'two' or 'inf', got {norm!r}")
    xi = _as_xi(xi)
    sol, rows = _setup(blocks, sel, sol, lu, rows)
    lw = sel.L @ sol.w
    xivec = xi.resolve(lw)

    if norm == "inf":
        wmats = tuple(np.abs(w) for w in weights.block_mats(blocks))
        chiv = np.abs(weights.chi_vec(blocks.l))
        u = _inf_numerator(rows, sol, *wmats, chiv)
        return CnValue(float(np.max(np.abs(ddagger(xivec)) * u)), "unifiedInf")

    if weights.is_scalar:
        w = ddagger(xivec)[:, None] * rows
        core = (weights.psi_scalar ** 2) * build_j(sol) + (weights.chi_scalar ** 2) * np.eye(blocks.l)
        return CnValue(np.sqrt(_sym_top_eig(w @ core @ w.T)), "unified2")

    g = build_g(sol)
    scale = np.concatenate([weights.vec_psi(blocks), weights.chi_vec(blocks.l)])
    m = np.hstack([rows @ g, -rows]) * scale[None, :]
    m *= ddagger(xivec)[:, None]
    if not np.any(m):
        return CnValue(0.0, "unified2")
    return CnValue(induced_norm(m, "two"), "unified2")


def ncn(
    blocks: DsppBlocks,
    sel: Selector,
    psi: float,
    chi: float,
    path: str = "kron",
    *,
    sol: Solution | None = None,
    lu: LuSolver | None = None,
    rows: np.ndarray | None = None,
) -> CnValue:
    """Normwise condition number of L w under scalar weights, 2-norms.

    ``path="kron"`` materializes [psi L S^{-1} G, -chi L S^{-1}] and takes its
    spectral norm; it falls back to ``"kronfree"`` automatically when that
    matrix would exceed the entry budget. ``path="kronfree"`` evaluates the
    same value as the square root of the top eigenvalue of
    L S^{-1} (psi^2 J + chi^2 I) (L S^{-1})^T, with J the closed-form Gram
    matrix. The flavor on the result names the path actually taken.
    """
    if path not in ("kron", "kronfree"):
        raise ValueError(f"path must be 'kron' or 'kronfree', got {path!r}")
    psi, chi = float(psi), float(chi)
    if not (psi > 0 and chi > 0):
        raise ValueError("scalar weights must be positive")
    sol, rows = _setup(blocks, sel, sol, lu, rows)
    lw = sel.L @ sol.w
    xi_l = float(np.linalg.norm(lw, 2))
    if xi_l == 0.0:
        raise ZeroXi("L w is zero, the 2-norm normalizer vanishes")

    n, m, p = blocks.n, blocks.m, blocks.p
    s = n * n + n * m + m * p + m * m + p * p
    k = rows.shape[0]
    if path == "kron" and k * (s + blocks.l) <= KRON_ENTRY_LIMIT:
        mat = np.hstack([psi * (rows @ build_g(sol)), -chi * rows])
        return CnValue(induced_norm(mat, "two") / xi_l, "ncn")
    core = (psi ** 2) * build_j(sol) + (chi ** 2) * np.eye(blocks.l)
    return CnValue(np.sqrt(_sym_top_eig(rows @ core @ rows.T)) / xi_l, "ncn_kronfree")


def ncn_upper(
    blocks: DsppBlocks,
    sel: Selector,
    psi: float,
    chi: float,
    *,
    sol: Solution | None = None,
    lu: LuSolver | None = None,
    rows: np.ndarray | None = None,
) -> CnValue:
    """Cheap upper bound dominating :func:`ncn`:
    ||L S^{-1}||_2 (psi ||J||_2^{1/2} + chi) / ||L w||_2."""
    psi, chi = float(psi), float(chi)
    if not (psi > 0 and chi > 0):
        raise ValueError("scalar weights must be positive")
    sol, rows = _setup(blocks, sel, sol, lu, rows)
    lw = sel.L @ sol.w
    xi_l = float(np.linalg.norm(lw, 2))
    if xi_l == 0.0:
        raise ZeroXi("L w is zero, the 2-norm normalizer vanishes")
    j_top = np.sqrt(_sym_top_eig(build_j(sol)))
    return CnValue(induced_norm(rows, "two") * (psi * j_top + chi) / xi_l, "ncn_upper")


def inf_cn(
    blocks: DsppBlocks,
    sel: Selector,
    xi,
    *,
    sol: Solution | None = None,
    lu: LuSolver | None = None,
    rows: np.ndarray | None = None,
) -> CnValue:
    """Mixed ("mcn") or componentwise ("ccn") condition number of L w.

    Both take the data-relative weights Psi = H, chi = b and differ only in
    the normalizer: the max norm of L w versus L w entrywise (zeros handled by
    the pseudo-reciprocal, so a zero component with zero numerator adds 0).
    """
    xi = _as_xi(xi)
    if xi.kind not in ("mcn", "ccn"):
        raise ValueError(f"inf_cn supports xi 'mcn' or 'ccn', got {xi.kind!r}")
    sol, rows = _setup(blocks, sel, sol, lu, rows)
    u = _inf_numerator(
        rows, sol,
        np.abs(blocks.A), np.abs(blocks.B), np.abs(blocks.C),
        np.abs(blocks.D), np.abs(blocks.E), np.abs(blocks.b),
    )
    lw = sel.L @ sol.w
    if xi.kind == "mcn":
        den = float(np.max(np.abs(lw)))
        if den == 0.0:
            raise ZeroXi("L w is zero, the max-norm normalizer vanishes")
        return CnValue(float(np.max(u)) / den, "mcn")
    return CnValue(float(np.max(np.abs(ddagger(lw)) * u)), "ccn")


def inf_cn_upper(
    blocks: DsppBlocks,
    sel: Selector,
    *,
    sol: Solution | None = None,
    lu: LuSolver | None = None,
    rows: np.ndarray | None = None,
) -> tuple[CnValue, CnValue]:
    """Upper bounds dominating the mixed and componentwise numbers.

    Uses |L S^{-1}| (h + |b|) with the blockwise magnitude vector
    h = [|A||x| + |B^T||y|; |B||x| + |D||y| + |C^T||z|; |C||y| + |E||z|].
    """
    sol, rows = _setup(blocks, sel, sol, lu, rows)
    ax, ay, az = np.abs(sol.x), np.abs(sol.y), np.abs(sol.z)
    h = np.concatenate([
        np.abs(blocks.A) @ ax + np.abs(blocks.B.T) @ ay,
        np.abs(blocks.B) @ ax + np.abs(blocks.D) @ ay + np.abs(blocks.C.T) @ az,
        np.abs(blocks.C) @ ay + np.abs(blocks.E) @ az,
    ])
    v = np.abs(rows) @ (h + np.abs(blocks.b))
    lw = sel.L @ sol.w
    den = float(np.max(np.abs(lw))) if lw.size else 0.0
    if den == 0.0:
        raise ZeroXi("L w is zero, the max-norm normalizer vanishes")
    mcn_u = CnValue(float(np.max(v)) / den, "mcn_upper")
    ccn_u = CnValue(float(np.max(np.abs(ddagger(lw)) * v)), "ccn_upper")
    return mcn_u, ccn_u


def definition_ratio(
    blocks: DsppBlocks,
    sel: Selector,
    weights: PerturbationWeights,
    xi,
    norm: str,
    deltas,
    *,
    sol: Solution | None = None,
    lu: LuSolver | None = None,
) -> float:
    """The defining quotient for one admissible perturbation direction.

    Evaluates || xi^ddag . (L dw) || / || [vec(Psi^ddag . dH); chi^ddag . db] ||
    with dw the first-order response. Any admissible direction yields a value
    at most the corresponding condition number; callers must supply deltas
    that vanish wherever the weights do.
    """
    if norm not in ("two", "inf"):
        raise ValueError(f"norm must be 'two' or 'inf', got {norm!r}")
    xi = _as_xi(xi)
    if lu is None:
        lu = factorize(blocks)
    if sol is None:
        sol = solve_dspp(blocks, lu)
    da, db_, dc, dd, de, drhs = [np.asarray(d, dtype=float) for d in deltas]
    dw = first_order_delta(blocks, sol, da, db_, dc, dd, de, drhs, lu=lu)
    lw = sel.L @ sol.w
    num_vec = ddagger(xi.resolve(lw)) * (sel.L @ dw)

    wmats = weights.block_mats(blocks)
    den_parts = [
        (ddagger(w) * d).flatten(order="F")
        for w, d in zip(wmats, (da, db_, dc, dd, de))
    ]
    den_parts.append(ddagger(weights.chi_vec(blocks.l)) * drhs)
    den_vec = np.concatenate(den_parts)

    ords = {"two": 2, "inf": np.inf}[norm]
    den = float(np.linalg.norm(den_vec, ords))
    if den == 0.0:
        raise ValueError("zero perturbation direction")
    return float(np.linalg.norm(num_vec, ords)) / den


def extremal_direction(
    blocks: DsppBlocks,
    sel: Selector,
    weights: PerturbationWeights,
    xi,
    *,
    sol: Solution | None = None,
    lu: LuSolver | None = None,
    rows: np.ndarray | None = None,
):
    """A 2-norm worst-case perturbation direction and the value it attains.

    Materializes the weighted k x (s+l) map, takes its top right singular
    vector v, and rescales by the weights so the returned block deltas are
    admissible and their :func:`definition_ratio` equals the returned sigma
    (the 2-norm condition number for this xi). Desk-scale sizes only.
    """
    xi = _as_xi(xi)
    sol, rows = _setup(blocks, sel, sol, lu, rows)
    lw = sel.L @ sol.w
    xivec = xi.resolve(lw)
    scale = np.concatenate([weights.vec_psi(blocks), weights.chi_vec(blocks.l)])
    mat = np.hstack([rows @ build_g(sol), -rows]) * scale[None, :]
    mat *= ddagger(xivec)[:, None]
    sigma, _, v = spectral_top(mat)

    d = scale * v
    n, m, p, l = blocks.n, blocks.m, blocks.p, blocks.l
    widths = [n * n, n * m, m * p, m * m, p * p]
    offs = np.concatenate([[0], np.cumsum(widths)])
    da = unvec(d[offs[0] : offs[1]], n, n)
    db_ = unvec(d[offs[1] : offs[2]], m, n)
    dc = unvec(d[offs[2] : offs[3]], p, m)
    dd = unvec(d[offs[3] : offs[4]], m, m)
    de = unvec(d[offs[4] : offs[5]], p, p)
    drhs = d[offs[5] :]
    return (da, db_, dc, dd, de, drhs), float(sigma)


__all__ = [
    "CnValue",
    "PerturbationWeights",
    "XiChoice",
    "KRON_ENTRY_LIMIT",
    "build_g",
    "build_j",
    "inv_rows",
    "first_order_delta",
    "unified_cn",
    "ncn",
    "ncn_upper",
    "inf_cn",
    "inf_cn_upper",
    "definition_ratio",
    "extremal_direction",
]
