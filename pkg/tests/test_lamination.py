import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stablenorm.cell_solver import SolverParams, solve_cell
from stablenorm.lamination import (
    EmptyBoundary, InconsistentInput, analyze, birkhoff_direction, gap_cells, gap_mask_svg,
    heteroclinic_probe, level_set, planelike_width, rational_structure,
)
from stablenorm.scenarios import ScenarioSpec, build

IRR = np.array([1.0, np.sqrt(2.0)]) / np.sqrt(3.0)


@pytest.fixture(scope="module")
def homog():
    spec = ScenarioSpec("homogeneous", n=32)
    F = build(spec)
    return spec, F, solve_cell(F, None, [1.0, 0.0], spec.grid, SolverParams(tol_gap=1e-6))


@pytest.fixture(scope="module")
def stripe():
    spec = ScenarioSpec("stripe", n=64)
    F = build(spec)
    params = SolverParams(tol_gap=1e-5)
    return spec, F, params, solve_cell(F, None, [1.0, 0.0], spec.grid, params)


def test_homogeneous_is_a_foliation(homog):
    _, _, sol = homog
    mask, frac, fol = gap_cells(sol)
    assert frac == 0.0 and fol and not mask.any()


def test_stripe_e1_has_a_gap(stripe):
    _, _, _, sol = stripe
    _, frac, fol = gap_cells(sol)
    assert frac >= 0.9 and not fol


def test_stripe_irrational_is_a_foliation(stripe):
    spec, F, params, _ = stripe
    sol = solve_cell(F, None, IRR, spec.grid, params)
    _, frac, fol = gap_cells(sol)
    assert fol and frac < 0.05


def test_level_set_translation_identity(homog):
    # E_s + q == E_{s + p.q}: block k of E_s equals block 0 of E_{s - p.k}
    spec, _, sol = homog
    n = spec.n
    p = np.array([1.0, 0.0])
    E = level_set(sol, p, 0.3, periods=3)
    for k in itertools.product((-1, 0, 1), repeat=2):
        block = E[(k[0] + 1) * n:(k[0] + 2) * n, (k[1] + 1) * n:(k[1] + 2) * n]
        base = level_set(sol, p, 0.3 - float(np.dot(p, k)), periods=1)
        assert np.array_equal(block, base)


def test_planelike_width_flat(homog):
    spec, _, sol = homog
    # a flat interface is one cell thick
    assert planelike_width(sol, [1.0, 0.0], 0.5) <= spec.grid.h + 1e-12


def test_empty_boundary(homog):
    _, _, sol = homog
    with pytest.raises(EmptyBoundary):
        planelike_width(sol, [1.0, 0.0], 100.0)


def test_analyze_report_round_trip(stripe):
    _, _, _, sol = stripe
    rep = analyze(sol)
    data = json.loads(rep.to_json())
    assert data["foliation"] is False
    assert data["V_r_basis"] == [[0, 1]]
    fr = [f for _, f in rep.tolerance_sweep]
    assert fr == sorted(fr)  # a looser tolerance can only mark more cells
    assert rep.M_est > 0


def test_rational_structure_examples():
    assert rational_structure([1.0, 0.0])[0] == [(0, 1)]
    basis, irr = rational_structure([1.0, np.sqrt(2.0)])
    assert basis == [] and irr
    basis, irr = rational_structure([1.0, np.sqrt(2.0), np.sqrt(3.0)])
    assert basis == [] and irr
    assert len(rational_structure([1.0, 0.0, 0.0])[0]) == 2


def test_rational_structure_brute_force():
    # oracle: exhaustive search for the shortest integer vector orthogonal to (2, 3, 6)
    p = (2, 3, 6)
    best = min(
        (q for q in itertools.product(range(-5, 6), repeat=3) if any(q) and sum(a * b for a, b in zip(p, q)) == 0),
        key=lambda q: (sum(c * c for c in q), q),
    )
    basis, irr = rational_structure(p)
    assert not irr and len(basis) == 2
    assert sum(c * c for c in basis[0]) == sum(c * c for c in best)
    for q in basis:
        assert sum(a * b for a, b in zip(p, q)) == 0
    assert basis[0] == (0, 2, -1)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=2, max_size=3).filter(any), st.integers(0, 2**31))
def test_birkhoff_recovers_hidden_direction(p_star, seed):
    rng = np.random.default_rng(seed)
    d = len(p_star)
    classified = []
    for _ in range(12):
        q = tuple(int(c) for c in rng.integers(-4, 5, d))
        dot = sum(a * b for a, b in zip(q, p_star))
        if dot > 0:
            classified.append((q, "inside"))
        elif dot < 0:
            classified.append((q, "outside"))
    if not classified:
        return
    res = birkhoff_direction(classified)
    assert not res.degenerate
    assert res.p_exact is not None
    for q, side in classified:
        dot = sum(Fraction(c) * x for c, x in zip(q, res.p_exact))
        assert dot >= 0 if side == "inside" else dot <= 0


@pytest.mark.parametrize("d", [2, 3])
def test_birkhoff_degenerate_construction(d):
    # -sum e_i inside while every e_i is inside: only p = 0 fits
    classified = [(tuple(int(i == j) for j in range(d)), "inside") for i in range(d)]
    classified.append((tuple([-1] * d), "inside"))
    assert birkhoff_direction(classified).degenerate


def test_birkhoff_inconsistent_input():
    with pytest.raises(InconsistentInput):
        birkhoff_direction([((1, 0), "inside"), ((-1, 0), "inside")])
    with pytest.raises(InconsistentInput):
        birkhoff_direction([((1, 0), "up")])


def test_heteroclinic_probe_on_stripe(stripe):
    spec, F, params, base = stripe
    rep = heteroclinic_probe(F, None, [1.0, 0.0], [0.0, 1.0], (0.08, 0.04), spec.grid, params, base=base)
    assert rep.crossing
    assert all(0 < f <= 1 for f in rep.crossing_fraction)


def test_heteroclinic_rejects_non_orthogonal(stripe):
    spec, F, params, base = stripe
    with pytest.raises(ValueError):
        heteroclinic_probe(F, None, [1.0, 0.0], [1.0, 1.0], (0.1,), spec.grid, params, base=base)


def test_gap_mask_svg(stripe):
    _, _, _, sol = stripe
    mask, _, _ = gap_cells(sol)
    svg = gap_mask_svg(sol, sol.p, mask)
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg == gap_mask_svg(sol, sol.p, mask)
