import json

import numpy as np
import pytest

from gdlstbc import design, graph
from gdlstbc.design import SpecError
from gdlstbc.graph import CoreTree, JunctionTree, MoralGraph, Vertex
from gdlstbc.verify import DIAMOND_EDGES


def mg(N, edges):
    return MoralGraph(N, frozenset(tuple(sorted(e)) for e in edges))


def complete(N):
    return mg(N, [(a, b) for a in range(N) for b in range(a + 1, N)])


def test_hr_orthogonality():
    a = design.catalog("alamouti").weights
    assert graph.hr_orthogonal(a[0], a[2])
    g = design.catalog("golden_naive").weights
    # s1 sits on the diagonal, s5 and s7 off it: A1 is orthogonal to A5, not to A7
    assert graph.hr_orthogonal(g[0], g[4])
    assert not graph.hr_orthogonal(g[0], g[6])
    assert graph.hr_orthogonal(np.zeros((2, 2)), g[3])


@pytest.mark.parametrize("name,edges", [
    ("alamouti", 0), ("golden_naive", 1), ("golden_s2", 20), ("toeplitz2xT", 8),
    ("oac4x14", 10), ("cda2x2", 6), ("fe3x3", 3)])
def test_moral_edge_counts(name, edges):
    assert len(graph.moral_graph(design.catalog(name)).edges) == edges


def test_golden_non_edges():
    g = graph.moral_graph(design.catalog("golden_s2"))
    missing = {(a, b) for a in range(8) for b in range(a + 1, 8) if not g.has(a, b)}
    assert missing == {(0, 1), (0, 3), (1, 2), (2, 3), (4, 5), (4, 7), (5, 6), (6, 7)}


def test_toeplitz_structure():
    g = graph.moral_graph(design.catalog("toeplitz2xT", T=10))
    assert graph.components(g, [n for n in range(9) if n != 4]) == [(0, 1, 2, 3), (5, 6, 7, 8)]
    cs = graph.conditional_structure(g, (1, 2), nodes=(0, 1, 2, 3))
    assert cs.groups == ((0,), (3,))


def test_components():
    assert graph.components(graph.moral_graph(design.catalog("alamouti"))) == [(0,), (1,), (2,), (3,)]
    assert len(graph.components(graph.moral_graph(design.catalog("oac4x14")))) == 2
    assert len(graph.components(complete(4))) == 1


def test_conditional_structures():
    g = graph.moral_graph(design.catalog("golden_s2"))
    cs = graph.conditional_structure(g, (4, 5, 6, 7))
    assert cs.groups == ((0, 2), (1, 3)) and cs.g == 2
    t = graph.moral_graph(design.catalog("toeplitz2xT", T=10))
    assert graph.conditional_structure(t, (4,)).groups == ((0, 1, 2, 3), (5, 6, 7, 8))
    empty = mg(5, [])
    assert graph.conditional_structure(empty, (0, 1)).groups == ((2,), (3,), (4,))


def test_search_conditioning():
    g = graph.moral_graph(design.catalog("golden_s2"))
    cs = graph.search_conditioning(g, 4, [2] * 8)
    assert cs.gamma_c == (4, 5, 6, 7)
    cs = graph.search_conditioning(complete(3).__class__(3, frozenset({(0, 2), (1, 2)})), 1)
    assert cs.gamma_c == (2,) and cs.g == 2
    assert graph.search_conditioning(mg(4, []), 1).g == 3
    with pytest.raises(ValueError):
        graph.search_conditioning(g, 0)
    assert graph.search_conditioning(complete(4), 3) is None


@pytest.mark.parametrize("name,params,verdict", [
    ("alamouti", {}, "4-group decodable"),
    ("golden_naive", {}, "fully-interfering (moral graph complete)"),
    ("golden_s2", {}, "conditionally 2-group; Gamma^c = {5,6,7,8}"),
    ("toeplitz2xT", {"T": 10}, "conditionally 2-group; Gamma^c = {5}"),
    ("oac4x14", {}, "2-group decodable"),
    ("cda2x2", {}, "fully-interfering (moral graph complete)"),
])
def test_classify(name, params, verdict):
    spec = design.catalog(name, **params)
    assert graph.classify(graph.moral_graph(spec), spec.sizes).verdict() == verdict


def test_core_builders():
    assert graph.core_full(5).vertices == ((0, 1, 2, 3, 4),)
    c = graph.core_lemma2(mg(4, [(0, 2), (1, 3)]), 0, 1)
    assert c.vertices == ((0, 2, 3), (1, 2, 3)) and c.edges == ((0, 1),)
    with pytest.raises(SpecError):
        graph.core_lemma2(complete(3), 0, 1)
    ch = graph.core_chain(range(9))
    assert ch.vertices == tuple((n, n + 1) for n in range(8))
    assert len(ch.edges) == 7


def test_core_from_file(tmp_path):
    p = tmp_path / "core.json"
    p.write_text(json.dumps({"vertices": [[1, 2, 3], [2, 3, 4]], "edges": [[0, 1]]}))
    g = mg(5, DIAMOND_EDGES)
    core = graph.core_from_file(p, g)
    assert core.vertices == ((0, 1, 2), (1, 2, 3))
    p.write_text("{}")
    with pytest.raises(SpecError):
        graph.core_from_file(p)


def test_clique_tree_is_a_core():
    g = mg(5, DIAMOND_EDGES)
    core = graph.core_clique_tree(g)
    assert graph.core_problems(core, g) == []
    assert sorted(core.vertices) == [(0, 1, 2), (1, 2, 3), (4,)] or core.order([2] * 5) == 8


def test_diamond_tree():
    g = mg(5, DIAMOND_EDGES)
    core = CoreTree(((0, 1, 2), (1, 2, 3)), ((0, 1),))
    t = graph.attach_tiers(core, g, [2] * 5)
    assert len(t.edges) == 11
    assert sorted(v.domain for v in t.vertices if v.tier == "tier1") == sorted(DIAMOND_EDGES)
    assert sorted(v.domain for v in t.vertices if v.tier == "tier2") == [(n,) for n in range(5)]
    assert graph.validate_tree(t, g) == []
    parts = graph.partition_tree(t)
    assert [graph.tree_variables(p) for p, _ in parts] == [[0, 1, 2, 3], [4]]


def test_edgeless_partition():
    spec = design.catalog("alamouti")
    g = graph.moral_graph(spec)
    core = graph.core_auto(g, spec.sizes)
    t = graph.attach_tiers(core, g, spec.sizes)
    parts = graph.partition_tree(t)
    assert len(parts) == 4
    assert [graph.tree_variables(p) for p, _ in parts] == [[0], [1], [2], [3]]


def test_partition_without_empty_edges():
    g = complete(3)
    t = graph.attach_tiers(graph.core_full(3), g, [2] * 3)
    assert len(graph.partition_tree(t)) == 1


def test_golden_conditional_tree_covers_edges():
    spec = design.catalog("golden_s2")
    g = graph.moral_graph(spec)
    cs = graph.conditional_structure(g, (4, 5, 6, 7))
    core = graph.core_conditional(cs, [CoreTree((grp,)) for grp in cs.groups])
    t = graph.attach_tiers(core, g, spec.sizes)
    assert graph.validate_tree(t, g) == []


@pytest.mark.parametrize("N", [2, 3, 5])
def test_full_core_tree_valid(N):
    g = complete(N)
    assert graph.validate_tree(graph.attach_tiers(graph.core_full(N), g, [3] * N), g) == []


def test_validate_tree_violations():
    g = mg(3, [(0, 1)])
    bad = JunctionTree([Vertex((0, 1), "core", [("pair", 0, 1)]), Vertex((2,), "core"),
                        Vertex((0,), "core", [("single", 0)])], [(0, 1), (1, 2)], 3)
    assert any("x1" in r for r in graph.validate_tree(bad, g))
    missing = JunctionTree([Vertex((0, 1), "core"), Vertex((2,), "core")], [(0, 1)], 3)
    assert any("missing" in r for r in graph.validate_tree(missing, g))


def test_complexity_formulas():
    t = JunctionTree([Vertex((0, 1), "core"), Vertex((1, 2), "core")], [(0, 1)], 3)
    assert graph.complexity_single_vertex(t, [2, 2, 2]) == 4 + 4 - 2
    assert graph.all_vertex_bound(t, [2, 2, 2]) == 24
    assert graph.complexity_order(t, [2, 2, 2]) == 4


@pytest.mark.parametrize("T", range(4, 13))
def test_toeplitz_chain_order(T):
    M = 4
    spec = design.catalog("toeplitz2xT", T=T, M=M)
    g = graph.moral_graph(spec)
    t = graph.attach_tiers(graph.core_chain(range(spec.N)), g, spec.sizes)
    assert graph.validate_tree(t, g) == []
    assert graph.complexity_order(t, spec.sizes) == M ** 2


def test_oac_partition_order():
    spec = design.catalog("oac4x14")
    g = graph.moral_graph(spec)
    t = graph.attach_tiers(graph.core_auto(g, spec.sizes), g, spec.sizes)
    parts = graph.partition_tree(t)
    assert max(graph.complexity_order(p, spec.sizes) for p, _ in parts) == 16


def test_dot_output():
    g = graph.moral_graph(design.catalog("fe3x3"))
    dot = g.to_dot()
    assert dot.startswith("graph moral {") and dot.count("--") == 3
    t = graph.attach_tiers(graph.core_full(3), g, [8] * 3)
    assert t.to_dot().count("--") == len(t.edges)
