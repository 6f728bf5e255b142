"""Condition number machinery: sensitivity maps, closed forms, bounds.

The load-bearing oracles are action properties (the sensitivity matrix must
reproduce the assembled perturbation response) plus hand-computed values on
one-dimensional and identity systems.
"""

import numpy as np
import pytest

import dsppcond.partial_cn as pc
from conftest import random_dspp, rel_err
from dsppcond.dspp import DsppBlocks, Solution, assemble, factorize, selector, solve_dspp
from dsppcond.errors import DimensionMismatch, ZeroXi
from dsppcond.linalg import ddagger
from dsppcond.partial_cn import (
    CnValue,
    PerturbationWeights,
    XiChoice,
    build_g,
    build_j,
    definition_ratio,
    extremal_direction,
    first_order_delta,
    inf_cn,
    inf_cn_upper,
    inv_rows,
    ncn,
    ncn_upper,
    unified_cn,
)


def random_deltas(rng, blocks):
    return (
        rng.standard_normal((blocks.n, blocks.n)),
        rng.standard_normal((blocks.m, blocks.n)),
        rng.standard_normal((blocks.p, blocks.m)),
        rng.standard_normal((blocks.m, blocks.m)),
        rng.standard_normal((blocks.p, blocks.p)),
        rng.standard_normal(blocks.l),
    )


def stack_deltas(deltas):
    parts = [np.asarray(d).flatten(order="F") for d in deltas[:5]]
    return np.concatenate(parts)


def perturbation_response(blocks, sol, deltas):
    """[dA x + dB^T y; dB x - dD y + dC^T z; dC y + dE z], the action of dS on w."""
    da, db_, dc, dd, de, _ = deltas
    return np.concatenate([
        da @ sol.x + db_.T @ sol.y,
        db_ @ sol.x - dd @ sol.y + dc.T @ sol.z,
        dc @ sol.y + de @ sol.z,
    ])


def test_build_g_hand_value_scalar_case():
    sol = Solution(x=np.array([1.0]), y=np.array([1.0]), z=np.array([1.0]))
    want = np.array([
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 1.0, -1.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 1.0],
    ])
    assert np.array_equal(build_g(sol), want)


def test_build_g_reproduces_perturbation_action():
    rng = np.random.default_rng(20)
    for _ in range(20):
        n, m, p = (int(v) for v in rng.integers(1, 6, size=3))
        blocks = random_dspp(rng, n, m, p)
        sol = solve_dspp(blocks)
        deltas = random_deltas(rng, blocks)
        got = build_g(sol) @ stack_deltas(deltas)
        want = perturbation_response(blocks, sol, deltas)
        assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


def test_build_j_is_gram_of_g():
    sol = Solution(x=np.array([1.0]), y=np.array([1.0]), z=np.array([1.0]))
    assert np.array_equal(build_j(sol), [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]])
    rng = np.random.default_rng(21)
    for _ in range(10):
        n, m, p = (int(v) for v in rng.integers(1, 6, size=3))
        sol = Solution(
            x=rng.standard_normal(n), y=rng.standard_normal(m), z=rng.standard_normal(p)
        )
        g = build_g(sol)
        assert np.allclose(build_j(sol), g @ g.T, rtol=1e-12, atol=1e-12)


def test_inv_rows_solves_against_selector():
    rng = np.random.default_rng(22)
    blocks = random_dspp(rng, 3, 2, 2)
    for kind in ("full", "x", "y", "z"):
        sel = selector(kind, 3, 2, 2)
        rows = inv_rows(blocks, sel)
        assert np.allclose(rows @ assemble(blocks), sel.L, rtol=0, atol=1e-10)
    with pytest.raises(DimensionMismatch):
        inv_rows(blocks, selector("x", 3, 2, 3))


def test_first_order_delta_solves_increment_equation():
    rng = np.random.default_rng(23)
    for _ in range(10):
        n, m, p = (int(v) for v in rng.integers(1, 5, size=3))
        blocks = random_dspp(rng, n, m, p)
        sol = solve_dspp(blocks)
        deltas = random_deltas(rng, blocks)
        dw = first_order_delta(blocks, sol, *deltas)
        want = deltas[5] - perturbation_response(blocks, sol, deltas)
        assert np.allclose(assemble(blocks) @ dw, want, rtol=0, atol=1e-10)


def test_ncn_paths_agree_and_label_flavor():
    rng = np.random.default_rng(24)
    for _ in range(10):
        n, m, p = (int(v) for v in rng.integers(2, 6, size=3))
        blocks = random_dspp(rng, n, m, p)
        sel = selector(("full", "x", "y", "z")[int(rng.integers(4))], n, m, p)
        psi = float(rng.uniform(0.5, 3.0))
        chi = float(rng.uniform(0.5, 3.0))
        a = ncn(blocks, sel, psi, chi, path="kron")
        b = ncn(blocks, sel, psi, chi, path="kronfree")
        assert a.flavor == "ncn" and b.flavor == "ncn_kronfree"
        assert rel_err(a.value, b.value) < 1e-11


def test_ncn_kron_falls_back_past_entry_budget(monkeypatch):
    rng = np.random.default_rng(25)
    blocks = random_dspp(rng, 3, 2, 2)
    sel = selector("x", 3, 2, 2)
    full = ncn(blocks, sel, 1.0, 1.0, path="kron")
    monkeypatch.setattr(pc, "KRON_ENTRY_LIMIT", 4)
    small = ncn(blocks, sel, 1.0, 1.0, path="kron")
    assert small.flavor == "ncn_kronfree"
    assert rel_err(small.value, full.value) < 1e-11


def test_ncn_scales_linearly_in_weights():
    rng = np.random.default_rng(26)
    blocks = random_dspp(rng, 3, 3, 2)
    sel = selector("y", 3, 3, 2)
    base = ncn(blocks, sel, 1.5, 2.5).value
    scaled = ncn(blocks, sel, 3.0, 5.0).value
    assert rel_err(scaled, 2.0 * base) < 1e-12


def test_ncn_rejects_bad_arguments():
    rng = np.random.default_rng(27)
    blocks = random_dspp(rng, 2, 2, 2)
    sel = selector("x", 2, 2, 2)
    with pytest.raises(ValueError):
        ncn(blocks, sel, 0.0, 1.0)
    with pytest.raises(ValueError):
        ncn(blocks, sel, 1.0, 1.0, path="exact")


def identity_blocks(n=2, m=2, p=2):
    """Assembles to the identity: A = I, B = C = 0, D = -I (negated to +I), E = I."""
    l = n + m + p
    b = np.zeros(l)
    b[0] = 1.0
    return DsppBlocks(
        A=np.eye(n), B=np.zeros((m, n)), C=np.zeros((p, m)),
        D=-np.eye(m), E=np.eye(p), b=b,
    )


def test_identity_system_hand_values():
    # w = e1 exactly; for selector x the numerator is |A||x| + |b| = 2 e1,
    # so mcn = ccn = 2 and both max-norm upper bounds coincide at 2.
    blocks = identity_blocks()
    assert np.array_equal(assemble(blocks), np.eye(6))
    sel = selector("x", 2, 2, 2)
    assert abs(inf_cn(blocks, sel, "mcn").value - 2.0) <= 1e-14
    assert abs(inf_cn(blocks, sel, "ccn").value - 2.0) <= 1e-14
    mu, cu = inf_cn_upper(blocks, sel)
    assert abs(mu.value - 2.0) <= 1e-14
    assert abs(cu.value - 2.0) <= 1e-14


def test_zero_projection_raises_zero_xi_for_norm_normalizers():
    blocks = identity_blocks()
    # Move the mass out of the x part: w = b has zero x block, exactly.
    b = np.zeros(6)
    b[2:] = 1.0
    blocks = DsppBlocks(A=blocks.A, B=blocks.B, C=blocks.C, D=blocks.D, E=blocks.E, b=b)
    sel = selector("x", 2, 2, 2)
    with pytest.raises(ZeroXi):
        ncn(blocks, sel, 1.0, 1.0)
    with pytest.raises(ZeroXi):
        inf_cn(blocks, sel, "mcn")
    # The componentwise number stays finite: zero numerator over a zero entry.
    assert inf_cn(blocks, sel, "ccn").value >= 0.0


def naive_inf_numerator(blocks, sel, weights):
    rows = inv_rows(blocks, sel)
    sol = solve_dspp(blocks)
    g = build_g(sol)
    vec_psi = np.abs(weights.vec_psi(blocks))
    chi = np.abs(weights.chi_vec(blocks.l))
    return np.abs(rows @ g) @ vec_psi + np.abs(rows) @ chi


def test_chunked_numerator_matches_materialized(monkeypatch):
    rng = np.random.default_rng(28)
    for trial in range(8):
        n, m, p = (int(v) for v in rng.integers(2, 6, size=3))
        blocks = random_dspp(rng, n, m, p)
        sel = selector(("full", "x", "y", "z")[trial % 4], n, m, p)
        weights = PerturbationWeights.from_problem(blocks)
        sol = solve_dspp(blocks)
        lw = sel.L @ sol.w
        want = float(np.max(np.abs(ddagger(lw)) * naive_inf_numerator(blocks, sel, weights)))
        got = unified_cn(blocks, sel, weights, "ccn", "inf").value
        assert rel_err(got, want) < 1e-12
        # Force many tiny chunks through the same values.
        monkeypatch.setattr(pc, "_CHUNK_ENTRY_LIMIT", 2)
        got_chunked = unified_cn(blocks, sel, weights, "ccn", "inf").value
        monkeypatch.undo()
        assert rel_err(got_chunked, want) < 1e-12


def test_unified_cn_consistent_with_specialized_entry_points():
    rng = np.random.default_rng(29)
    blocks = random_dspp(rng, 3, 2, 3)
    sel = selector("z", 3, 2, 3)
    psi, chi = 2.0, 3.0
    scalar = PerturbationWeights.scalar(psi, chi)
    assert rel_err(
        unified_cn(blocks, sel, scalar, "ncn", "two").value,
        ncn(blocks, sel, psi, chi, path="kronfree").value,
    ) < 1e-12
    from_data = PerturbationWeights.from_problem(blocks)
    assert rel_err(
        unified_cn(blocks, sel, from_data, "mcn", "inf").value,
        inf_cn(blocks, sel, "mcn").value,
    ) < 1e-12
    # Entrywise constant weights reproduce the scalar 2-norm value.
    const = PerturbationWeights.entrywise(
        np.full((3, 3), psi), np.full((2, 3), psi), np.full((3, 2), psi),
        np.full((2, 2), psi), np.full((3, 3), psi), np.full(8, chi),
    )
    assert rel_err(
        unified_cn(blocks, sel, const, "ncn", "two").value,
        ncn(blocks, sel, psi, chi, path="kron").value,
    ) < 1e-11
    with pytest.raises(ValueError):
        unified_cn(blocks, sel, scalar, "ncn", "one")


def test_dominance_on_random_instances():
    rng = np.random.default_rng(30)
    for _ in range(10):
        n, m, p = (int(v) for v in rng.integers(2, 6, size=3))
        blocks = random_dspp(rng, n, m, p)
        psi = float(np.linalg.norm(assemble(blocks)))
        chi = float(np.linalg.norm(blocks.b))
        for kind in ("full", "x", "y", "z"):
            sel = selector(kind, n, m, p)
            assert ncn(blocks, sel, psi, chi).value <= ncn_upper(blocks, sel, psi, chi).value * (1 + 1e-12)
            mu, cu = inf_cn_upper(blocks, sel)
            assert inf_cn(blocks, sel, "mcn").value <= mu.value * (1 + 1e-12)
            assert inf_cn(blocks, sel, "ccn").value <= cu.value * (1 + 1e-12)


def test_upper_bound_dominates_for_asymmetric_d():
    # The middle magnitude term must use |D| (not |D^T|) to dominate when D
    # is far from symmetric; a lopsided D would expose a transposed term.
    blocks = DsppBlocks(
        A=np.eye(2), B=np.array([[1.0, 0.0], [0.0, 1.0]]),
        C=np.array([[1.0, 0.0]]),
        D=np.array([[0.1, 100.0], [0.0, 0.1]]),
        E=np.array([[1.0]]),
        b=np.array([1.0, 2.0, -1.0, 1.0, 0.5]),
    )
    for kind in ("full", "x", "y", "z"):
        sel = selector(kind, 2, 2, 1)
        mu, cu = inf_cn_upper(blocks, sel)
        assert inf_cn(blocks, sel, "mcn").value <= mu.value * (1 + 1e-12)
        assert inf_cn(blocks, sel, "ccn").value <= cu.value * (1 + 1e-12)


def test_definition_ratio_bounded_by_cn_and_extremal_attains():
    rng = np.random.default_rng(31)
    blocks = random_dspp(rng, 3, 3, 2)
    sel = selector("x", 3, 3, 2)
    psi = float(np.linalg.norm(assemble(blocks)))
    chi = float(np.linalg.norm(blocks.b))
    weights = PerturbationWeights.scalar(psi, chi)
    cn2 = ncn(blocks, sel, psi, chi).value
    lu = factorize(blocks)
    sol = solve_dspp(blocks, lu)
    for _ in range(50):
        ratio = definition_ratio(
            blocks, sel, weights, "ncn", "two", random_deltas(rng, blocks), sol=sol, lu=lu
        )
        assert ratio <= cn2 * (1 + 1e-10)
    deltas, sigma = extremal_direction(blocks, sel, weights, "ncn")
    assert rel_err(sigma, cn2) < 1e-10
    attained = definition_ratio(blocks, sel, weights, "ncn", "two", deltas, sol=sol, lu=lu)
    assert rel_err(attained, cn2) < 1e-10


def test_extremal_direction_respects_zero_weights():
    rng = np.random.default_rng(32)
    blocks = random_dspp(rng, 3, 2, 2)
    bmat = blocks.B.copy()
    bmat[0, :] = 0.0
    blocks = DsppBlocks(A=blocks.A, B=bmat, C=blocks.C, D=blocks.D, E=blocks.E, b=blocks.b)
    weights = PerturbationWeights.from_problem(blocks)
    deltas, sigma = extremal_direction(blocks, selector("y", 3, 2, 2), weights, "ncn")
    assert np.array_equal(deltas[1][0, :], np.zeros(3))
    assert sigma > 0


def test_definition_ratio_rejects_zero_direction():
    rng = np.random.default_rng(33)
    blocks = random_dspp(rng, 2, 2, 2)
    weights = PerturbationWeights.scalar(1.0, 1.0)
    zeros = (
        np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)),
        np.zeros((2, 2)), np.zeros((2, 2)), np.zeros(6),
    )
    with pytest.raises(ValueError):
        definition_ratio(blocks, selector("x", 2, 2, 2), weights, "ncn", "two", zeros)


def test_weights_and_xi_validation():
    with pytest.raises(ValueError):
        PerturbationWeights.scalar(-1.0, 1.0)
    with pytest.raises(ValueError):
        XiChoice(kind="relative")
    with pytest.raises(ValueError):
        XiChoice(kind="custom")
    with pytest.raises(ValueError):
        XiChoice(kind="ncn", custom=np.ones(2))
    xi = XiChoice(kind="custom", custom=np.array([1.0, 2.0]))
    assert np.array_equal(xi.resolve(np.zeros(2)), [1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        xi.resolve(np.zeros(3))
    rng = np.random.default_rng(34)
    blocks = random_dspp(rng, 2, 2, 2)
    wrong = PerturbationWeights.entrywise(
        np.ones((3, 3)), np.ones((2, 2)), np.ones((2, 2)), np.ones((2, 2)),
        np.ones((2, 2)), np.ones(6),
    )
    with pytest.raises(DimensionMismatch):
        wrong.block_mats(blocks)


def test_cn_value_validation():
    with pytest.raises(ValueError):
        CnValue(value=-1.0, flavor="ncn")
    with pytest.raises(ValueError):
        CnValue(value=float("nan"), flavor="ncn")
    assert CnValue(value=np.float64(2.0), flavor="ncn").value == 2.0
