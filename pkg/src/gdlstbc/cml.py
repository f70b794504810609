"""Conditional ML decoding: brute force, multigroup and nested conditioning.

Charging conventions (all from xi):

* evaluating f on n symbols: 4 per symbol, 2 per cross term, and the
  additions that sum the terms, 3 C(n,2) + 5n - 1 in all;
* one comparison per candidate after the first when keeping a running best;
* conditioning: folding a fixed symbol s_j into the linear coefficient of a
  free symbol s_i costs one multiplication and one addition;
* combining the conditioned scalar with g conditional minima: g additions;
* a hard-limited PAM symbol: 6 for the limiter and 5 to evaluate its value.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb, prod

import numpy as np

from . import metric
from .design import SpecError
from .engine import DecodeResult
from .graph import components, conditional_structure, moral_graph, search_conditioning
from .pamreduce import H_EVAL_OPS, HARD_LIMIT_OPS, hard_limit_index

MODES = ("brute", "multigroup", "conditional", "hardlimit")


@dataclass
class CmlPlan:
    mode: str
    nodes: tuple
    gamma_c: tuple = ()
    parts: list = field(default_factory=list)

    def describe(self, depth=0):
        pad = "  " * depth
        lab = lambda ns: "{" + ",".join(f"x{n + 1}" for n in ns) + "}"
        if self.mode == "conditional":
            head = f"{pad}conditional on {lab(self.gamma_c)}"
        else:
            head = f"{pad}{self.mode} {lab(self.nodes)}"
        return "\n".join([head] + [p.describe(depth + 1) for p in self.parts])


def _syms(spec, nodes):
    return [i for n in nodes for i in spec.groups[n].indices]


def _ksize(spec, nodes):
    return prod(spec.groups[n].signal_set.size for n in nodes)


def plan_cost(spec, plan):
    """Closed-form operation count of a plan under the conventions above."""
    if plan.mode == "brute":
        P = _ksize(spec, plan.nodes)
        return P * sum(metric.f_eval_cost(len(_syms(spec, plan.nodes)))) + P - 1
    if plan.mode == "hardlimit":
        return sum(HARD_LIMIT_OPS.values()) + sum(H_EVAL_OPS.values())
    if plan.mode == "multigroup":
        return sum(plan_cost(spec, p) for p in plan.parts)
    P = _ksize(spec, plan.gamma_c)
    nc = len(_syms(spec, plan.gamma_c))
    nf = len(_syms(spec, plan.nodes)) - nc
    per = (sum(metric.f_eval_cost(nc)) + 2 * nc * nf
           + sum(plan_cost(spec, p) for p in plan.parts) + len(plan.parts) + 1)
    return P * per - 1


def plan_order(spec, plan):
    if plan.mode == "brute":
        return _ksize(spec, plan.nodes)
    if plan.mode == "hardlimit":
        return 1
    if plan.mode == "multigroup":
        return max(plan_order(spec, p) for p in plan.parts)
    return _ksize(spec, plan.gamma_c) * max(plan_order(spec, p) for p in plan.parts)


def _is_pam(spec, n):
    grp = spec.groups[n]
    return grp.t == 1 and grp.signal_set.is_pam_scalar()


def plan_auto(spec, g=None, nodes=None, hard_limit=True, conditioned=False):
    """Cheapest plan found: multigroup split, then nested conditioning chosen
    by complexity order, with hard-limited PAM symbols as conditional groups."""
    g = g or moral_graph(spec)
    nodes = tuple(range(spec.N) if nodes is None else nodes)
    comps = components(g, nodes)
    if len(comps) > 1 and not conditioned:
        return CmlPlan("multigroup", nodes, parts=[plan_auto(spec, g, c, hard_limit) for c in comps])
    if len(comps) > 1:
        raise SpecError("conditional groups must be connected")
    if len(nodes) == 1:
        if hard_limit and conditioned and _is_pam(spec, nodes[0]):
            return CmlPlan("hardlimit", nodes)
        return CmlPlan("brute", nodes)
    cands = [CmlPlan("brute", nodes)]
    if hard_limit:
        for n in nodes:
            if _is_pam(spec, n):
                rest = tuple(m for m in nodes if m != n)
                cands.append(CmlPlan("conditional", nodes, rest, [CmlPlan("hardlimit", (n,))]))
                break
    if not g.is_complete(nodes):
        sizes = [x.signal_set.size for x in spec.groups]
        order_of = lambda grp: plan_order(spec, plan_auto(spec, g, grp, hard_limit, True))
        cs = search_conditioning(g, len(nodes) - 1, sizes, nodes, order_of)
        if cs is not None:
            cands.append(CmlPlan("conditional", nodes, cs.gamma_c,
                                 [plan_auto(spec, g, grp, hard_limit, True) for grp in cs.groups]))
    return min(cands, key=lambda p: (plan_order(spec, p), plan_cost(spec, p)))


def plan_conditional(spec, gamma_c, g=None, hard_limit=True):
    """Conditional plan for a given conditioning set (sub-plans chosen automatically)."""
    g = g or moral_graph(spec)
    cs = conditional_structure(g, gamma_c)
    if cs is None:
        raise SpecError("conditioning set does not split the remaining variables")
    return CmlPlan("conditional", tuple(range(spec.N)), cs.gamma_c,
                   [plan_auto(spec, g, grp, hard_limit, True) for grp in cs.groups])


def check_plan(spec, plan, g=None):
    g = g or moral_graph(spec)
    if plan.mode == "multigroup":
        for a, b in itertools.combinations(plan.parts, 2):
            if any(g.has(x, y) for x in a.nodes for y in b.nodes):
                raise SpecError("multigroup parts interfere")
    if plan.mode == "conditional":
        for a, b in itertools.combinations(plan.parts, 2):
            if any(g.has(x, y) for x in a.nodes for y in b.nodes):
                raise SpecError("conditional groups interfere given the conditioning set")
        covered = set(plan.gamma_c).union(*(p.nodes for p in plan.parts))
        if covered != set(plan.nodes):
            raise SpecError("conditional plan does not cover its variables")
    if plan.mode == "hardlimit" and not _is_pam(spec, plan.nodes[0]):
        raise SpecError("hard limiting needs a single PAM symbol")
    for p in plan.parts:
        check_plan(spec, p, g)


# ----------------------------------------------------------------------------
# execution

def _points(spec, nodes):
    """All points of A_nodes (lexicographic) as (assignments, symbol matrix)."""
    grids = np.meshgrid(*(np.arange(spec.groups[n].signal_set.size) for n in nodes), indexing="ij")
    assign = np.stack([x.ravel() for x in grids], axis=1)
    cols = [spec.groups[n].signal_set.array()[assign[:, k]] for k, n in enumerate(nodes)]
    return assign, np.concatenate(cols, axis=1)


def _f_local(xi, lin, idx, S):
    c = xi.cross[np.ix_(idx, idx)]
    return S @ lin[idx] + (S * S) @ xi.diag[idx] + 0.5 * np.einsum("pi,ij,pj->p", S, c, S)


def _solve(spec, xi, plan, lin, counter):
    if plan.mode == "brute":
        idx = _syms(spec, plan.nodes)
        assign, S = _points(spec, plan.nodes)
        vals = _f_local(xi, lin, idx, S)
        k = int(np.argmin(vals))
        P = len(vals)
        m, a = metric.f_eval_cost(len(idx))
        counter.charge(mult=P * m, add=P * a, cmp=P - 1, what="brute")
        return float(vals[k]), dict(zip(plan.nodes, map(int, assign[k])))
    if plan.mode == "hardlimit":
        (n,) = plan.nodes
        (i,) = spec.groups[n].indices
        q = spec.groups[n].signal_set.size
        levels = spec.groups[n].signal_set.array()[:, 0]
        counter.charge(**HARD_LIMIT_OPS, what="hardlimit")
        counter.charge(**H_EVAL_OPS, what="h")
        d = xi.diag[i]
        if d > 0:
            k = int(hard_limit_index(lin[i], d, q))
        else:
            k = int(np.argmin(d * levels ** 2 + lin[i] * levels))
        x = levels[k]
        return float(d * x * x + lin[i] * x), {n: k}
    if plan.mode == "multigroup":
        val, sol = 0.0, {}
        for p in plan.parts:
            v, s = _solve(spec, xi, p, lin, counter)
            val += v
            sol.update(s)
        return val, sol
    return _solve_conditional(spec, xi, plan, lin, counter)


def _solve_conditional(spec, xi, plan, lin, counter):
    gc = plan.gamma_c
    cidx = _syms(spec, gc)
    fidx = [i for i in _syms(spec, plan.nodes) if i not in cidx]
    assign, S = _points(spec, gc)
    scal = _f_local(xi, lin, cidx, S)
    m, a = metric.f_eval_cost(len(cidx))
    best, best_sol = None, None
    g = len(plan.parts)
    for row in range(len(S)):
        counter.charge(mult=m + len(cidx) * len(fidx),
                       add=a + len(cidx) * len(fidx) + g, what="conditional")
        lin2 = lin.copy()
        lin2[fidx] = lin[fidx] + xi.cross[np.ix_(fidx, cidx)] @ S[row]
        val = scal[row]
        sol = dict(zip(gc, map(int, assign[row])))
        for p in plan.parts:
            v, s = _solve(spec, xi, p, lin2, counter)
            val += v
            sol.update(s)
        if best is not None:
            counter.charge(cmp=1, what="conditional")
        if best is None or val < best:
            best, best_sol = val, sol
    return float(best), best_sol


def decode_plan(spec, xi, plan, counter=None):
    counter = counter if counter is not None else metric.OpCount()
    val, sol = _solve(spec, xi, plan, xi.linear.astype(float).copy(), counter)
    return DecodeResult(tuple(sol[n] for n in range(spec.N)), val, counter, plan_order(spec, plan))


def decode_brute(spec, xi, counter=None, cap=2 ** 24):
    if _ksize(spec, range(spec.N)) > cap:
        raise SpecError("brute-force search exceeds the enumeration cap")
    return decode_plan(spec, xi, CmlPlan("brute", tuple(range(spec.N))), counter)


# ----------------------------------------------------------------------------
# closed forms (Q = |A_n| = q^t)

def _Q(t, q):
    Q = q ** t
    Qi = int(round(Q))
    if abs(Q - Qi) > 1e-9 * max(1.0, Q):
        raise ValueError(f"q^t = {Q} is not an integer table size")
    return Qi


def cml_formula(N, t, q):
    """Brute-force count for a fully-interfering code."""
    Q = _Q(t, q)
    return Q ** N * (3 * comb(N * t, 2) + 5 * N * t) - 1


def gdl_formula(N, t, q):
    """Full-vertex tree with a pair root and traceback, fully-interfering code."""
    Q = _Q(t, q)
    c = comb(N, 2)
    return (Q ** N * c + Q ** (N - 2) + Q ** 2 * (c * (2 * t - 1) + N + 1)
            + Q * (c * (2 * t * t - t) + N * (t * t + 3 * t)) - 2)


def conditional_formula(n_cond, t, q, child_costs, N):
    """Recursion for conditional decoding with the '2Nt + g' evaluation term."""
    Q = _Q(t, q)
    g = len(child_costs)
    nt = n_cond * t
    return Q ** n_cond * (sum(child_costs) + 3 * comb(nt, 2) + 5 * nt + 2 * N * t + g) - 1


def three_group_cml(t, q):
    Q = _Q(t, q)
    return Q ** 2 * (3 * t * t + 7 * t) + Q * (4 * t * t + 3 * comb(t, 2) + 5 * t) - 1


def three_group_gdl(t, q):
    Q = _Q(t, q)
    return Q ** 2 * (4 * t + 2) + Q * (7 * t * t + 7 * t + 3) - 3


def golden_gdl_reference(q):
    return 42 * q ** 5 + 6 * q ** 4 + 21 * q ** 2 + 52 * q - 5


def golden_cml_reference(q):
    return 76 * q ** 5 + 43 * q ** 4 - 1


def diamond_single_count(q):
    return 7 * q ** 3 + 4 * q ** 2 + 2 * q - 3


def diamond_all_vertex_count(q):
    return 28 * q ** 3 + 12 * q ** 2 + 4 * q - 1
