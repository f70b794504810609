import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gdlstbc import design, engine, graph, metric, pamreduce
from gdlstbc.design import SpecError
from gdlstbc.graph import CoreTree

from conftest import beta_grid, brute_assignment, random_block


def grid_argmin(zeta, xi00, q):
    lv = design.pam_levels(q)
    return lv[int(np.argmin([xi00 * x * x + zeta * x for x in lv]))]


def test_hard_limit_random_cases():
    rng = np.random.default_rng(5)
    fails = 0
    for _ in range(10 ** 4):
        q = int(rng.choice([2, 4, 8]))
        xi00 = rng.uniform(0.01, 5)
        zeta = rng.normal(scale=3 * q * xi00)
        got = pamreduce.hard_limit(zeta, xi00, q)
        lv = design.pam_levels(q)
        vals = xi00 * np.asarray(lv) ** 2 + zeta * np.asarray(lv)
        fails += not np.isclose(xi00 * got ** 2 + zeta * got, vals.min(), atol=1e-12)
    assert fails == 0


@settings(max_examples=300, deadline=None)
@given(st.floats(-50, 50), st.floats(0.01, 10), st.sampled_from([2, 3, 4, 8]))
def test_hard_limit_property(zeta, xi00, q):
    got = pamreduce.hard_limit(zeta, xi00, q)
    best = grid_argmin(zeta, xi00, q)
    assert xi00 * got ** 2 + zeta * got <= xi00 * best ** 2 + zeta * best + 1e-9


def test_hard_limit_edges():
    assert pamreduce.hard_limit(0.0, 1.0, 2) == 0.5
    assert pamreduce.hard_limit(1e9, 1.0, 4) == -1.5
    assert pamreduce.hard_limit(-1e9, 1.0, 4) == 1.5
    with pytest.raises(ValueError):
        pamreduce.hard_limit(1.0, 0.0, 2)


def test_eligibility(golden):
    g = graph.moral_graph(golden)
    assert pamreduce.eligible(g, (0, 1), golden)
    assert not pamreduce.eligible(g, (0, 2), golden)
    assert pamreduce.eligible(g, (), golden)
    with pytest.raises(SpecError):
        pamreduce.eligible(graph.moral_graph(design.catalog("cda2x2")), (0,),
                           design.catalog("cda2x2"))


def test_zeta_single_neighbor():
    spec = design.CodeSpec(1, 1, np.ones((2, 1, 1)),
                           [design.EncodingGroup((0,), design.SignalSet.pam(4)),
                            design.EncodingGroup((1,), design.SignalSet.pam(4))])
    xi = metric.XiCoefficients(np.array([0.7, 0.1]), np.ones(2), np.array([[0, 2.0], [2.0, 0]]))
    g = graph.MoralGraph(2, frozenset({(0, 1)}))
    z = pamreduce.compute_zeta_star(spec, xi, 0, graph=g)
    assert np.allclose(z.values, 0.7 + 2.0 * np.asarray(design.pam_levels(4)))


def test_zeta_matches_direct(golden, rng):
    xi = metric.compute_xi(golden, *random_block(golden, rng))
    g = graph.moral_graph(golden)
    z = pamreduce.compute_zeta_star(golden, xi, 0, graph=g)
    assert z.domain == g.neighbors(0) and z.size == 2 ** 5
    for pt in np.ndindex(*z.values.shape):
        assert abs(z.values[pt] - pamreduce.zeta_direct(golden, xi, 0, z.domain, pt)) <= 1e-10


def test_isolated_variable_elimination():
    spec = design.catalog("alamouti", q=4)
    xi = metric.compute_xi(spec, np.eye(2), np.ones((2, 2)))
    e = pamreduce.eliminate(spec, xi, 0)
    assert e.neighbors == ()
    assert np.isclose(float(e.h.values), metric.build_alpha_n(xi, spec, 0).values.min())


@pytest.mark.parametrize("seed", range(10))
def test_exact_elimination(golden, seed):
    rng = np.random.default_rng(seed)
    xi = metric.compute_xi(golden, *random_block(golden, rng))
    res = pamreduce.decode_pam(golden, xi)
    assert res.solution == brute_assignment(golden, xi)
    assert np.isclose(res.metric, beta_grid(golden, xi).min())


def test_reduced_beta_is_a_marginal(golden, rng):
    xi = metric.compute_xi(golden, *random_block(golden, rng))
    g = graph.moral_graph(golden)
    grid = beta_grid(golden, xi)
    e = pamreduce.eliminate(golden, xi, 0, graph=g)
    alpha0 = metric.build_alpha_n(xi, golden, 0).values
    # min over x1 of the x1-dependent part equals h over the neighbours
    lv = np.asarray(design.pam_levels(2))
    for pt in np.ndindex(*e.h.values.shape):
        z = pamreduce.zeta_direct(golden, xi, 0, e.neighbors, pt)
        assert np.isclose(e.h.values[pt], min(alpha0[k] - xi.linear[0] * lv[k] + z * lv[k]
                                              for k in range(2)))


def test_golden_pam_tree_order(golden):
    tree, R, g = pamreduce.build_pam_tree(golden)
    assert R == [0, 1]
    assert engine.complexity_order(tree, golden.sizes) == 2 ** 5
    for q in (2, 4):
        spec = design.catalog("golden_s2", q=q)
        t, _, _ = pamreduce.build_pam_tree(spec)
        assert engine.complexity_order(t, spec.sizes) == q ** 5


def test_reduce_core():
    golden_core = CoreTree(((4, 5, 6, 7), (0, 2, 4, 5, 6, 7), (1, 3, 4, 5, 6, 7)), ((0, 1), (0, 2)))
    r = pamreduce.reduce_core(pamreduce.reduce_core(golden_core, 0), 1)
    assert r.vertices == ((4, 5, 6, 7), (2, 4, 5, 6, 7), (3, 4, 5, 6, 7))
    assert pamreduce.reduce_core(graph.core_full(4), 2).vertices == ((0, 1, 3),)
    with pytest.raises(SpecError):
        pamreduce.reduce_core(CoreTree(((0, 1), (0, 2)), ((0, 1),)), 0)


def test_pam_core_is_conditional(golden):
    assert pamreduce.pam_core(golden).vertices[0] == (4, 5, 6, 7)
