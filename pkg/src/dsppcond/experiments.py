"""Perturbation experiments validating the closed-form condition numbers.

Two reproducible problem families, componentwise random perturbations of the
form 10^(-s) * g . data (g standard normal, entrywise product), measured
forward errors against condition-number predictions, and deterministic
CSV/JSON reports.

Randomness: every stream comes from numpy's PCG64 bit generator with
standard_normal variates (ziggurat). A family generator consumes its draws in
a documented order (example1: b; example2: d, e, b) and a perturbation draws
A, B, C, D, E, b in that order, column-major within each block. Experiment
rows derive child seeds from SeedSequence((seed, q, selector_index)), so rows
are independent and a parallel run would agree with a serial one bitwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._version import __version__
from .dspp import DsppBlocks, Selector, Solution, factorize, norm_fro_system, selector, solve_dspp
from .errors import IncompatibleZeroPattern, ZeroXi
from .linalg import ddagger
from .partial_cn import first_order_delta, inf_cn, inf_cn_upper, inv_rows, ncn, ncn_upper
from .partial_cn import PerturbationWeights
from .structured import StructureTriple, structured_inf_cn, structured_ncn

RNG_ALGORITHM = "numpy-pcg64+standard_normal"

FAMILIES = ("example1", "example2")

DEFAULT_SELECTORS = ("full", "x", "y", "z")

# CSV layout; the structured columns appear only when rows carry them.
CSV_COLUMNS = ["selector", "q", "r_k", "K2", "K2U", "r_m", "Km", "KmU", "r_c", "Kc", "KcU", "eps1", "eps2"]
CSV_STRUCTURED_COLUMNS = ["ncn", "ncn_s", "mcn", "mcn_s", "ccn", "ccn_s"]


def _generator(seed) -> np.random.Generator:
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    return np.random.Generator(np.random.PCG64(seed))


def _normal_like(rng: np.random.Generator, mat: np.ndarray) -> np.ndarray:
    # One flat draw reshaped column-major fixes the within-block stream order.
    return rng.standard_normal(mat.size).reshape(mat.shape, order="F")


def _tridiag(lo: float, di: float, up: float, dim: int) -> np.ndarray:
    return (
        di * np.eye(dim)
        + lo * np.diag(np.ones(dim - 1), -1)
        + up * np.diag(np.ones(dim - 1), 1)
    )


def gen_example1(q: int, seed) -> DsppBlocks:
    """Discretized-flow family of size l = 4 q^2 (n = 2q^2, m = p = q^2).

    A stacks two copies of the 2-D Laplacian I kron J + J kron I with
    J = tridiag(-1, 2, -1)/(q+1)^2; B = [I kron Z, Z kron I] with the
    one-sided difference Z = tridiag(0, 1, -1)/(q+1); C = Y kron Z with
    Y = diag(1, q+1, ..., q^2-q+1); D and E are identities; b is standard
    normal from the seed.
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    rng = _generator(seed)
    j = _tridiag(-1.0, 2.0, -1.0, q) / (q + 1) ** 2
    z = _tridiag(0.0, 1.0, -1.0, q) / (q + 1)
    y = np.diag(1.0 + q * np.arange(q))
    eye_q = np.eye(q)
    lap = np.kron(eye_q, j) + np.kron(j, eye_q)
    a = scipy.linalg.block_diag(lap, lap)
    b = np.hstack([np.kron(eye_q, z), np.kron(z, eye_q)])
    c = np.kron(y, z)
    qq = q * q
    rhs = rng.standard_normal(4 * qq)
    return DsppBlocks(A=a, B=b, C=c, D=np.eye(qq), E=np.eye(qq), b=rhs)


def gen_example2(q: int, seed) -> tuple[DsppBlocks, StructureTriple]:
    """Kernel-regularization family of size l = 8 q^2 + 2 q, with structure.

    With qt = q^2 and qh = q(q+1): A = blkdiag(2 Z Z^T + I, S2, S3) where
    Z_ij = exp(-2 ((i/3)^2 + (j/3)^2)) on a qh grid and S2, S3 are the
    documented polynomial diagonals; B = [N, -I, I] with N stacking
    N_hat kron I and I kron N_hat for N_hat = bidiag(2, -1) of shape
    q x (q+1); C = [M_hat kron I, I kron M_hat] for the documented M_hat; D
    and E are random symmetric Toeplitz (generators drawn in order d, e); b
    standard normal. Returns the blocks and the matching structure triple
    (symmetric, toeplitz_sym, toeplitz_sym).
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    rng = _generator(seed)
    qt = q * q
    qh = q * (q + 1)
    idx = np.arange(1, qh + 1) / 3.0
    zmat = np.exp(-2.0 * (idx[:, None] ** 2 + idx[None, :] ** 2))
    s2 = np.concatenate([np.ones(qt), 1e-5 * np.arange(1, qt + 1) ** 2])
    s3 = 1e-5 * (np.arange(1, 2 * qt + 1) + qt) ** 2
    a = scipy.linalg.block_diag(2.0 * zmat @ zmat.T + np.eye(qh), np.diag(s2), np.diag(s3))

    nhat = np.zeros((q, q + 1))
    nhat[np.arange(q), np.arange(q)] = 2.0
    nhat[np.arange(q), np.arange(1, q + 1)] = -1.0
    eye_q = np.eye(q)
    nmat = np.vstack([np.kron(nhat, eye_q), np.kron(eye_q, nhat)])
    bmat = np.hstack([nmat, -np.eye(2 * qt), np.eye(2 * qt)])

    mhat = np.zeros((q + 1, q))
    for i in range(1, q + 1):
        for jj in range(1, q + 1):
            if i == jj:
                mhat[i - 1, jj - 1] = i * q + 1.0
            else:
                off = abs(i - jj)
                mhat[i - 1, jj - 1] = ((-1.0) ** off) * (q - off) / q
    mhat[q, q - 1] = 1.0
    cmat = np.hstack([np.kron(mhat, eye_q), np.kron(eye_q, mhat)])

    n, m, p = 5 * qt + q, 2 * qt, qt + q
    dgen = rng.standard_normal(m)
    egen = rng.standard_normal(p)
    rhs = rng.standard_normal(n + m + p)
    blocks = DsppBlocks(
        A=a, B=bmat, C=cmat,
        D=scipy.linalg.toeplitz(dgen), E=scipy.linalg.toeplitz(egen), b=rhs,
    )
    triple = StructureTriple.from_kinds("symmetric", "toeplitz_sym", "toeplitz_sym", n, m, p)
    return blocks, triple


@dataclass(frozen=True)
class PerturbationSet:
    """Componentwise perturbation deltas of all blocks, at magnitude 10^-s."""

    dA: np.ndarray
    dB: np.ndarray
    dC: np.ndarray
    dD: np.ndarray
    dE: np.ndarray
    db: np.ndarray
    s: int

    @property
    def deltas(self) -> tuple:
        return (self.dA, self.dB, self.dC, self.dD, self.dE, self.db)


def perturb(blocks: DsppBlocks, s: int, seed) -> PerturbationSet:
    """Draw dX = 10^-s * g . X for every block and the right-hand side.

    Draw order is A, B, C, D, E, b; within a block the normal stream fills
    column-major. Zero data entries stay exactly zero.
    """
    s = int(s)
    if s < 1:
        raise ValueError("magnitude exponent s must be >= 1")
    rng = _generator(seed)
    factor = 10.0 ** (-s)
    parts = [
        factor * _normal_like(rng, mat) * mat
        for mat in (blocks.A, blocks.B, blocks.C, blocks.D, blocks.E)
    ]
    db = factor * rng.standard_normal(blocks.l) * blocks.b
    return PerturbationSet(*parts, db=db, s=s)


def apply_perturbation(blocks: DsppBlocks, pert: PerturbationSet, scale: float = 1.0) -> DsppBlocks:
    return DsppBlocks(
        A=blocks.A + scale * pert.dA,
        B=blocks.B + scale * pert.dB,
        C=blocks.C + scale * pert.dC,
        D=blocks.D + scale * pert.dD,
        E=blocks.E + scale * pert.dE,
        b=blocks.b + scale * pert.db,
    )


def forward_errors(sol: Solution, sol_tilde: Solution, sel: Selector) -> tuple[float, float, float]:
    """Measured relative changes of L w: 2-norm, max-norm, componentwise."""
    lw = sel.L @ sol.w
    dlw = sel.L @ sol_tilde.w - lw
    n2 = float(np.linalg.norm(lw, 2))
    ninf = float(np.max(np.abs(lw))) if lw.size else 0.0
    if n2 == 0.0 or ninf == 0.0:
        raise ZeroXi("L w is zero, relative forward errors are undefined")
    r_k = float(np.linalg.norm(dlw, 2)) / n2
    r_m = float(np.max(np.abs(dlw))) / ninf
    r_c = float(np.max(np.abs(ddagger(lw) * dlw)))
    return r_k, r_m, r_c


def _sumsq(x) -> float:
    return float(np.sum(np.asarray(x) ** 2))


def epsilons(pert: PerturbationSet, blocks: DsppBlocks) -> tuple[float, float]:
    """Normwise and componentwise perturbation magnitudes.

    eps1 compares Frobenius norms of the assembled [dS, db] against [S, b]
    (B and C enter twice, computed blockwise). eps2 is the smallest eps with
    |dS| <= eps |S| and |db| <= eps |b|; a perturbation on a zero data entry
    raises :class:`IncompatibleZeroPattern`.
    """
    num = (
        _sumsq(pert.dA) + 2 * _sumsq(pert.dB) + 2 * _sumsq(pert.dC)
        + _sumsq(pert.dD) + _sumsq(pert.dE) + _sumsq(pert.db)
    )
    den = (
        _sumsq(blocks.A) + 2 * _sumsq(blocks.B) + 2 * _sumsq(blocks.C)
        + _sumsq(blocks.D) + _sumsq(blocks.E) + _sumsq(blocks.b)
    )
    eps1 = float(np.sqrt(num / den))

    eps2 = 0.0
    pairs = list(zip(pert.deltas, (blocks.A, blocks.B, blocks.C, blocks.D, blocks.E, blocks.b)))
    for delta, base in pairs:
        delta = np.asarray(delta, dtype=float)
        base = np.asarray(base, dtype=float)
        zero = base == 0
        if np.any(delta[zero] != 0):
            raise IncompatibleZeroPattern("perturbation hits an exactly zero data entry")
        if np.any(~zero):
            eps2 = max(eps2, float(np.max(np.abs(delta[~zero]) / np.abs(base[~zero]))))
    return eps1, eps2


@dataclass(frozen=True)
class FirstOrderCheck:
    """Actual versus first-order-predicted solution change, with a scaling
    curve of remainder norms at perturbation scales t = 1, 1/2, 1/4."""

    actual: np.ndarray
    predicted: np.ndarray
    curve: tuple


def first_order_residual(blocks: DsppBlocks, pert: PerturbationSet) -> FirstOrderCheck:
    """Compare the true solution change against the first-order prediction.

    The true change at scale t solves (S + t dS) dw = (b + t db) - (S + t dS) w,
    the increment form of re-solving; this avoids cancellation in w~ - w. The
    remainder ||actual(t) - t predicted|| shrinks quadratically in t.
    """
    lu = factorize(blocks)
    sol = solve_dspp(blocks, lu)
    predicted = first_order_delta(blocks, sol, *pert.deltas, lu=lu)

    def actual_change(t: float) -> np.ndarray:
        pb = apply_perturbation(blocks, pert, t)
        from .dspp import assemble

        return factorize(pb).solve(pb.b - assemble(pb) @ sol.w)

    curve = []
    actual_full = None
    for t in (1.0, 0.5, 0.25):
        act = actual_change(t)
        if t == 1.0:
            actual_full = act
        curve.append((t, float(np.linalg.norm(act - t * predicted, 2))))
    return FirstOrderCheck(actual=actual_full, predicted=predicted, curve=tuple(curve))


@dataclass(frozen=True)
class ExperimentRow:
    """One measured row: forward errors against eps-scaled predictions.

    K2/K2U premultiply the 2-norm condition number and its bound by eps1;
    Km/KmU and Kc/KcU premultiply the max-norm pair by eps2. When structured
    values are computed, the raw (un-premultiplied) condition numbers and
    their structured counterparts ride along.
    """

    selector: str
    q: int
    r_k: float
    k2: float
    k2_upper: float
    r_m: float
    km: float
    km_upper: float
    r_c: float
    kc: float
    kc_upper: float
    eps1: float
    eps2: float
    ncn_value: float | None = None
    ncn_structured: float | None = None
    mcn_value: float | None = None
    mcn_structured: float | None = None
    ccn_value: float | None = None
    ccn_structured: float | None = None

    def __post_init__(self):
        for name in ("r_k", "k2", "k2_upper", "r_m", "km", "km_upper", "r_c", "kc", "kc_upper", "eps1", "eps2"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v!r}")

    @property
    def has_structured(self) -> bool:
        return self.ncn_structured is not None


def _row_seeds(seed, q: int, selector_index: int) -> tuple[int, int]:
    ss = np.random.SeedSequence(entropy=(int(seed), int(q), int(selector_index)))
    gen_seed, pert_seed = ss.generate_state(2, dtype=np.uint64)
    return int(gen_seed), int(pert_seed)


def run_experiment(
    family: str,
    q_list,
    s: int = 8,
    seed=42,
    selectors=DEFAULT_SELECTORS,
    structured: bool = False,
) -> list[ExperimentRow]:
    """One row per (q, selector): generate, perturb, measure, predict.

    Each row reseeds from (seed, q, selector index), so any subset of rows is
    reproducible in isolation. The 2-norm prediction uses scalar weights
    Psi = ||S||_F, chi = ||b||_2; the max-norm predictions use the data itself.
    With ``structured=True`` the raw condition numbers and their structured
    counterparts (symmetric A, symmetric Toeplitz D and E) are added.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    rows_out: list[ExperimentRow] = []
    for q in q_list:
        for idx, kind in enumerate(selectors):
            gen_seed, pert_seed = _row_seeds(seed, q, idx)
            if family == "example1":
                blocks = gen_example1(q, gen_seed)
                triple = StructureTriple.from_kinds(
                    "symmetric", "toeplitz_sym", "toeplitz_sym", blocks.n, blocks.m, blocks.p
                ) if structured else None
            else:
                blocks, triple = gen_example2(q, gen_seed)
            sel = selector(kind, blocks.n, blocks.m, blocks.p)
            lu = factorize(blocks)
            sol = solve_dspp(blocks, lu)
            rows = inv_rows(blocks, sel, lu)

            pert = perturb(blocks, s, pert_seed)
            sol_tilde = solve_dspp(apply_perturbation(blocks, pert))
            r_k, r_m, r_c = forward_errors(sol, sol_tilde, sel)
            eps1, eps2 = epsilons(pert, blocks)

            psi = norm_fro_system(blocks)
            chi = float(np.linalg.norm(blocks.b, 2))
            shared = dict(sol=sol, lu=lu, rows=rows)
            cn2 = ncn(blocks, sel, psi, chi, path="kronfree", **shared).value
            cn2_u = ncn_upper(blocks, sel, psi, chi, **shared).value
            mcn_v = inf_cn(blocks, sel, "mcn", **shared).value
            ccn_v = inf_cn(blocks, sel, "ccn", **shared).value
            mcn_u, ccn_u = (v.value for v in inf_cn_upper(blocks, sel, **shared))

            extra = {}
            if structured:
                w = PerturbationWeights.scalar(psi, chi)
                extra = dict(
                    ncn_value=cn2,
                    ncn_structured=structured_ncn(blocks, sel, w, "ncn", triple, **shared).value,
                    mcn_value=mcn_v,
                    mcn_structured=structured_inf_cn(blocks, sel, "mcn", triple, **shared).value,
                    ccn_value=ccn_v,
                    ccn_structured=structured_inf_cn(blocks, sel, "ccn", triple, **shared).value,
                )
            rows_out.append(ExperimentRow(
                selector=kind, q=int(q),
                r_k=r_k, k2=eps1 * cn2, k2_upper=eps1 * cn2_u,
                r_m=r_m, km=eps2 * mcn_v, km_upper=eps2 * mcn_u,
                r_c=r_c, kc=eps2 * ccn_v, kc_upper=eps2 * ccn_u,
                eps1=eps1, eps2=eps2, **extra,
            ))
    return rows_out


def report_meta(family: str | None = None, s: int | None = None, seed=None) -> dict:
    """Reproducibility header recorded in every report."""
    meta = {
        "generator": "dsppcond",
        "version": __version__,
        "rng": RNG_ALGORITHM,
        "numpy": np.__version__,
    }
    if family is not None:
        meta["family"] = family
    if s is not None:
        meta["s"] = int(s)
    if seed is not None:
        meta["seed"] = int(seed)
    return meta


def _row_values(row: ExperimentRow) -> list:
    vals = [row.selector, row.q, row.r_k, row.k2, row.k2_upper, row.r_m, row.km,
            row.km_upper, row.r_c, row.kc, row.kc_upper, row.eps1, row.eps2]
    if row.has_structured:
        vals += [row.ncn_value, row.ncn_structured, row.mcn_value,
                 row.mcn_structured, row.ccn_value, row.ccn_structured]
    return vals


def format_float(v: float) -> str:
    """Scientific notation with 10 significant digits."""
    return f"{v:.9E}"


def write_csv_report(rows, fh, meta: dict) -> None:
    """Deterministic CSV: '#' header lines with the metadata, then the rows."""
    for key, value in meta.items():
        fh.write(f"# {key}={value}\n")
    structured = bool(rows) and rows[0].has_structured
    cols = CSV_COLUMNS + (CSV_STRUCTURED_COLUMNS if structured else [])
    fh.write(",".join(cols) + "\n")
    for row in rows:
        if row.has_structured != structured:
            raise ValueError("mixed structured and unstructured rows")
        cells = []
        for v in _row_values(row):
            if isinstance(v, str):
                cells.append(v)
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            else:
                cells.append(format_float(float(v)))
        fh.write(",".join(cells) + "\n")


def rows_to_dicts(rows) -> list[dict]:
    out = []
    for row in rows:
        structured = row.has_structured
        cols = CSV_COLUMNS + (CSV_STRUCTURED_COLUMNS if structured else [])
        out.append({c: v for c, v in zip(cols, _row_values(row))})
    return out


def write_json_report(rows, fh, meta: dict) -> None:
    """JSON mirror of the CSV with full float fidelity."""
    json.dump({"meta": meta, "rows": rows_to_dicts(rows)}, fh, indent=2)
    fh.write("\n")


__all__ = [
    "RNG_ALGORITHM",
    "FAMILIES",
    "DEFAULT_SELECTORS",
    "CSV_COLUMNS",
    "CSV_STRUCTURED_COLUMNS",
    "PerturbationSet",
    "FirstOrderCheck",
    "ExperimentRow",
    "gen_example1",
    "gen_example2",
    "perturb",
    "apply_perturbation",
    "forward_errors",
    "epsilons",
    "first_order_residual",
    "run_experiment",
    "report_meta",
    "format_float",
    "write_csv_report",
    "write_json_report",
    "rows_to_dicts",
]
