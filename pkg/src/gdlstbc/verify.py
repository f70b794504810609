"""Reproduction suite: closed-form operation counts against instrumented runs.

Counts depend on table sizes only, so each row decodes one random block and
compares the OpCount total with the published closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cml, design, engine, metric, pamreduce
from .design import CodeSpec, EncodingGroup, SignalSet
from .graph import CoreTree, MoralGraph, attach_tiers, core_auto, core_full


@dataclass
class Row:
    label: str
    expected: int
    got: int

    @property
    def ok(self):
        return self.expected == self.got

    def line(self):
        return f"{'PASS' if self.ok else 'FAIL'}  {self.label}: expected {self.expected}, got {self.got}"


def synthetic(N, edges, q, t=1, seed=0):
    """Code with a prescribed moral graph and random metric coefficients.

    The weight matrices are placeholders; every decoder is driven by the
    returned (xi, graph), with xi_ij = 0 across non-adjacent groups.
    """
    rng = np.random.default_rng(seed)
    sset = SignalSet.pam(q) if t == 1 else SignalSet.product_pam(q, t)
    groups = [EncodingGroup(tuple(range(n * t, (n + 1) * t)), sset) for n in range(N)]
    K = N * t
    spec = CodeSpec(1, 1, np.ones((K, 1, 1)), groups, "synthetic")
    cross = rng.normal(size=(K, K))
    cross = cross + cross.T
    adj = {frozenset(e) for e in edges}
    for n in range(N):
        for m in range(N):
            if n != m and frozenset((n, m)) not in adj:
                cross[np.ix_(groups[n].indices, groups[m].indices)] = 0
    np.fill_diagonal(cross, 0)
    xi = metric.XiCoefficients(rng.normal(size=K), rng.uniform(0.5, 2, size=K), cross)
    return spec, xi, MoralGraph(N, frozenset(tuple(sorted(e)) for e in edges))


DIAMOND_EDGES = ((0, 1), (0, 2), (1, 2), (1, 3), (2, 3))


def diamond_tree(g):
    """Junction tree on the 2-core (x1,x2,x3)-(x2,x3,x4) and its root (x1,x3)."""
    core = CoreTree([(0, 1, 2), (1, 2, 3)], [(0, 1)])
    t = attach_tiers(core, g, (2,) * g.N)
    return t, t.find((0, 2), "tier1")


def diamond_counts(q, seed=0):
    spec, xi, g = synthetic(4, DIAMOND_EDGES, q, seed=seed)
    tree, root = diamond_tree(g)
    kern = engine.build_kernels(spec, xi, tree)
    local = engine.local_kernels(tree, kern, spec.sizes)
    c1 = metric.OpCount()
    st = engine.run_single_vertex(tree, local, root, c1)
    sol1, _ = engine.traceback(tree, st, c1)
    c2 = metric.OpCount()
    st2 = engine.run_all_vertex(tree, local, c2)
    sol2 = engine.all_vertex_decisions(tree, st2, c2)
    return c1.total, c2.total, sol1, sol2


PATH3_EDGES = ((0, 2), (1, 2))


def path3_counts(t, q, seed=0):
    spec, xi, g = synthetic(3, PATH3_EDGES, q, t, seed)
    c1 = metric.OpCount()
    # the closed form searches every conditional group over its grid
    r1 = cml.decode_plan(spec, xi, cml.plan_auto(spec, g, hard_limit=False), c1)
    tree = attach_tiers(core_auto(g, spec.sizes), g, spec.sizes)
    c2 = metric.OpCount()
    r2 = engine.decode(spec, xi, tree, c2)
    return c1.total, c2.total, r1, r2


def _one_block(spec, seed=0):
    rng = np.random.default_rng(seed)
    n_r = spec.n_t
    H = rng.normal(size=(n_r, spec.n_t)) + 1j * rng.normal(size=(n_r, spec.n_t))
    Y = rng.normal(size=(n_r, spec.T)) + 1j * rng.normal(size=(n_r, spec.T))
    return metric.compute_xi(spec, H, Y)


def full_interference_counts(name, **params):
    """(brute CML, GDL on the single-vertex core with a pair root)."""
    spec = design.catalog(name, **params)
    xi = _one_block(spec)
    g = engine.moral_graph(spec)
    c1 = metric.OpCount()
    cml.decode_brute(spec, xi, c1)
    tree = attach_tiers(core_full(spec.N), g, spec.sizes)
    c2 = metric.OpCount()
    engine.decode(spec, xi, tree, c2, root="pair")
    return c1.total, c2.total


def golden_counts(q):
    spec = design.catalog("golden_s2", q=q)
    xi = _one_block(spec)
    c1 = metric.OpCount()
    cml.decode_plan(spec, xi, cml.plan_auto(spec), c1)
    c2 = metric.OpCount()
    pamreduce.decode_pam(spec, xi, counter=c2)
    return c1.total, c2.total


def reproduction_rows():
    rows = []
    cda = full_interference_counts("cda2x2", const="psk", M=8)
    fe = full_interference_counts("fe3x3", const="psk", M=8)
    Q8 = 8 ** 0.5
    rows += [Row("cda2x2 8-PSK brute CML (closed form)", 507903, cml.cml_formula(4, 2, Q8)),
             Row("cda2x2 8-PSK brute CML (instrumented)", 507903, cda[0]),
             Row("cda2x2 8-PSK GDL (closed form)", 26718, cml.gdl_formula(4, 2, Q8)),
             Row("cda2x2 8-PSK GDL (instrumented)", 26718, cda[1]),
             Row("fe3x3 8-PSK brute CML (closed form)", 38399, cml.cml_formula(3, 2, Q8)),
             Row("fe3x3 8-PSK brute CML (instrumented)", 38399, fe[0]),
             Row("fe3x3 8-PSK GDL (closed form)", 2758, cml.gdl_formula(3, 2, Q8)),
             Row("fe3x3 8-PSK GDL (instrumented)", 2758, fe[1])]
    for q in (2, 4):
        c, g = golden_counts(q)
        rows += [Row(f"golden q={q} CML", cml.golden_cml_reference(q), c),
                 Row(f"golden q={q} GDL with PAM removal", cml.golden_gdl_reference(q), g)]
    for q in (2, 3, 4):
        single, full, _, _ = diamond_counts(q)
        rows += [Row(f"tree example q={q} single-vertex + traceback", cml.diamond_single_count(q), single),
                 Row(f"tree example q={q} all-vertex", cml.diamond_all_vertex_count(q), full)]
    for t in (1, 2):
        for q in (2, 3, 4):
            c, g, _, _ = path3_counts(t, q)
            rows += [Row(f"three-group code t={t} q={q} conditional CML", cml.three_group_cml(t, q), c),
                     Row(f"three-group code t={t} q={q} GDL", cml.three_group_gdl(t, q), g)]
    return rows
