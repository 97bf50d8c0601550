import itertools

import numpy as np
import pytest

from gstudy.anova import ems_matrix, run_anova
from gstudy.dataset import Dataset
from gstudy.design import parse_design
from gstudy.errors import AnalysisError, NotCrossed
from gstudy.oracle import (
    TrueComponents,
    naive_t_ss,
    naive_t_u,
    rank_df,
    replicate_seeds,
    simulate,
    simulate_with_effects,
    true_components,
    universe_scores,
)

from conftest import CATALOG


def test_naive_worked(worked):
    assert naive_t_u(worked) == 30.25
    by_name = {c.name: v for c, v in naive_t_ss(worked).items()}
    assert by_name == {"p": (36.5, 6.25), "i": (32.5, 2.25), "p x i": (39.0, 0.25)}


def test_naive_constant_data():
    data = Dataset.from_array(parse_design("p x (r:i)"), np.full((3, 2, 2), 7.5))
    assert all(ss == 0 for _, ss in naive_t_ss(data).values())


def test_rank_df_nested():
    design = parse_design("p x (r:i)")
    counts = {"p": 3, "r": 2, "i": 4}
    got = {c.name: rank_df(design, counts, c) for c in design.components}
    assert got == {"p": 2, "i": 3, "p x i": 6, "r:i": 4, "p x r:i": 8}


def test_ems_symbolic_closed_form():
    design = parse_design("p x r x i")
    levels = {"p": 5, "r": 3, "i": 4}
    m = ems_symbolic_by_name(design, levels)
    assert m["p"] == {"p": 1 / 12, "p x r": -1 / 12, "p x i": -1 / 12, "p x r x i": 1 / 12}


def ems_symbolic_by_name(design, levels):
    from gstudy.oracle import ems_symbolic

    comps = design.components
    m = ems_symbolic(design, levels)
    return {a.name: {b.name: m[i, j] for j, b in enumerate(comps) if m[i, j]} for i, a in enumerate(comps)}


@pytest.mark.parametrize("design_str", ["p x i", "a x b x c", "a x b x c x d"])
def test_ems_symbolic_is_inverse_of_containment(design_str):
    from gstudy.oracle import ems_symbolic

    design = parse_design(design_str)
    rng = np.random.default_rng(len(design_str))
    for _ in range(5):
        levels = {n: int(rng.integers(2, 7)) for n in design.names}
        e = np.asarray(ems_matrix(design, levels), dtype=float)
        assert np.allclose(ems_symbolic(design, levels) @ e, np.eye(len(e)), atol=1e-12)


def test_ems_symbolic_rejects_nesting():
    from gstudy.oracle import ems_symbolic

    with pytest.raises(NotCrossed):
        ems_symbolic(parse_design("p x (r:i)"), {"p": 2, "r": 2, "i": 2})


def test_truth_keys_and_validation():
    design = parse_design("p x (r:i)")
    t = true_components(design, {"p": 2, ("p", "r", "i"): 1.5, "r:i": 0.5})
    assert {c.name: v for c, v in t.variances.items() if v} == {"p": 2.0, "r:i": 0.5, "p x r:i": 1.5}
    with pytest.raises(AnalysisError):
        TrueComponents({design.components[0]: -1.0})


def test_simulate_deterministic():
    design = parse_design("p x r x i")
    levels, truth = CATALOG["p x r x i"]
    t = true_components(design, truth, 3.0)
    a = simulate(design, levels, t, 11)
    b = simulate(design, levels, t, 11)
    c = simulate(design, levels, t, 12)
    assert np.array_equal(a.cells, b.cells)
    assert not np.array_equal(a.cells, c.cells)
    s1, s2 = replicate_seeds(3, 2)
    assert np.array_equal(simulate(design, levels, t, s1).cells, simulate(design, levels, t, replicate_seeds(3, 2)[0]).cells)
    assert not np.array_equal(simulate(design, levels, t, s1).cells, simulate(design, levels, t, s2).cells)


def test_residual_only_variance():
    design = parse_design("p x i")
    data = simulate(design, {"p": 50, "i": 50}, true_components(design, {"p x i": 1.0}, 10.0), 1)
    assert data.n_obs >= 2000
    assert data.cells.var(ddof=1) == pytest.approx(1.0, rel=0.1)
    assert data.cells.mean() == pytest.approx(10.0, abs=0.1)


def test_dominant_person_variance():
    design = parse_design("p x i")
    t = true_components(design, {"p": 4, "i": 0.1, "p x i": 0.5})
    wins = 0
    for seed in replicate_seeds(99, 200):
        cells = simulate(design, {"p": 20, "i": 10}, t, seed).cells
        wins += cells.mean(axis=1).var(ddof=1) > cells.mean(axis=0).var(ddof=1)
    assert wins >= 190


def test_effects_broadcast_and_universe_scores():
    design = parse_design("(r:p) x i")
    levels = {"p": 4, "r": 3, "i": 5}
    t = true_components(design, {"p": 1, "r:p": 1, "p x i": 1, "r p i": 1}, 2.0)
    data, eff = simulate_with_effects(design, levels, t, 0)
    rebuilt = 2.0 + sum(eff.values())
    assert np.allclose(rebuilt, data.cells)
    u = universe_scores(design, t, eff, "r")
    assert u.shape == (3, 4)  # design order: r, p
    p = design.component("p")
    rp = design.component("r", "p")
    assert np.allclose(u, 2.0 + eff[p][:, :, 0] + eff[rp][:, :, 0])


def test_engine_matches_naive_on_simulated(rng):
    for design_str, (levels, truth) in CATALOG.items():
        design = parse_design(design_str)
        small = {n: min(v, 4) for n, v in levels.items()}
        data = simulate(design, small, true_components(design, truth, 5.0), int(rng.integers(1 << 30)))
        table = run_anova(data)
        for c, (t, ss) in naive_t_ss(data).items():
            assert table.row(c).t_value == pytest.approx(t, rel=1e-10)
            assert table.row(c).ss == pytest.approx(ss, rel=1e-9, abs=1e-9)
