"""Min-sum message passing on junction trees.

Charging follows the tree complexity sum over edges of
|A_w| + |A_u| - |A_{w cap u}|: a non-root vertex pays (d_u - 1)|A_u|
additions to fold its kernel with the messages from its children and
|A_u| - |A_{u cap p(u)}| comparisons to marginalise; the root pays
d_root |A_root| additions. Every argmin over n table entries costs n - 1
comparisons.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from math import prod

import numpy as np

from . import metric
from .graph import (attach_tiers, complexity_order, complexity_single_vertex,
                    core_auto, moral_graph, partition_tree, validate_tree)


class ScheduleError(RuntimeError):
    pass


@dataclass
class EngineState:
    root: int | None = None
    parent: dict = field(default_factory=dict)
    order: list = field(default_factory=list)
    messages: dict = field(default_factory=dict)
    partial: dict = field(default_factory=dict)
    states: dict = field(default_factory=dict)


@dataclass
class DecodeResult:
    solution: tuple
    metric: float
    ops: metric.OpCount
    order: int = 0

    def as_dict(self, spec=None):
        d = {"solution": [int(a) for a in self.solution], "metric": self.metric,
             "ops": self.ops.as_dict(), "order": self.order}
        if spec is not None:
            d["symbols"] = spec.symbols(self.solution).tolist()
        return d


def _sizes(t_or_spec):
    return tuple(g.signal_set.size for g in t_or_spec.groups)


def _tsize(sizes, dom):
    return prod(sizes[n] for n in dom)


def build_kernels(spec, xi, tree, counter=None, given=None):
    """Compute every kernel referenced by the tree (plus any precomputed ones)."""
    out = dict(given or {})
    for key in tree.kernel_keys():
        if key in out:
            continue
        if key[0] == "single":
            out[key] = metric.build_alpha_n(xi, spec, key[1], counter)
        elif key[0] == "pair":
            out[key] = metric.build_alpha_nm(xi, spec, key[1], key[2], counter)
        else:
            raise ScheduleError(f"kernel {key} is not bound")
    return out


def local_kernels(tree, kernels, sizes, counter=None):
    """Per-vertex local kernel as a dense array over the vertex domain."""
    out = []
    for v in tree.vertices:
        shape = [sizes[n] for n in v.domain]
        acc = np.zeros(shape)
        for k in v.kernels:
            if k not in kernels:
                raise ScheduleError(f"kernel {k} is not bound")
            acc = acc + kernels[k].expand(v.domain)
        if counter is not None and len(v.kernels) > 1:
            counter.charge(add=(len(v.kernels) - 1) * acc.size, what="fold")
        out.append(acc)
    return out


def _bfs(tree, root):
    adj = tree.adjacency()
    parent, order = {root: None}, [root]
    dq = deque([root])
    while dq:
        u = dq.popleft()
        for w in adj[u]:
            if w not in parent:
                parent[w] = u
                order.append(w)
                dq.append(w)
    if len(order) != len(tree.vertices):
        raise ScheduleError("tree is not connected")
    return parent, order


def _marginalise(vals, dom, keep):
    axes = tuple(i for i, n in enumerate(dom) if n not in keep)
    return vals.min(axis=axes) if axes else vals


def message(tree, local, u, v, incoming, counter=None):
    """mu_{u,v}: fold u's kernel with messages from all neighbours except v,
    then minimise out the variables not shared with v."""
    adj = tree.adjacency()
    du = tree.vertices[u].domain
    acc = local[u]
    for w in adj[u]:
        if w == v:
            continue
        if (w, u) not in incoming:
            raise ScheduleError(f"message from vertex {w} to {u} not yet available")
        acc = acc + _broadcast(incoming[(w, u)], tree.vertices[w].domain, du)
    keep = set(du) & set(tree.vertices[v].domain)
    out = _marginalise(acc, du, keep)
    if counter is not None:
        counter.charge(add=(len(adj[u]) - 1) * acc.size, cmp=acc.size - out.size,
                       what=f"message:{u}->{v}")
    return out, acc


def _broadcast(msg, sender_dom, dom):
    """Broadcast a message over sender cap receiver onto the receiver domain."""
    shared = [n for n in sender_dom if n in dom]
    shape = [1] * len(dom)
    for n, k in zip(shared, msg.shape):
        shape[dom.index(n)] = k
    return np.reshape(msg, shape)


def run_single_vertex(tree, local, root, counter=None):
    parent, order = _bfs(tree, root)
    st = EngineState(root, parent, order)
    for u in reversed(order[1:]):
        p = parent[u]
        mu, lam = message(tree, local, u, p, st.messages, counter)
        st.messages[(u, p)] = mu
        st.partial[u] = lam
    adj = tree.adjacency()
    dom = tree.vertices[root].domain
    acc = local[root]
    for w in adj[root]:
        acc = acc + _broadcast(st.messages[(w, root)], tree.vertices[w].domain, dom)
    if counter is not None:
        counter.charge(add=len(adj[root]) * acc.size, what="root")
    st.partial[root] = acc
    st.states[root] = acc
    return st


def traceback(tree, st, counter=None):
    """Resolve every variable from the root state and the partial states."""
    root = st.root
    dom = tree.vertices[root].domain
    sig = st.states[root]
    flat = int(np.argmin(sig))
    if counter is not None:
        counter.charge(cmp=sig.size - 1, what="traceback:root")
    sol = dict(zip(dom, np.unravel_index(flat, sig.shape))) if dom else {}
    best = float(sig.ravel()[flat])
    for u in st.order[1:]:
        du = tree.vertices[u].domain
        pdom = tree.vertices[st.parent[u]].domain
        free = [n for n in du if n not in pdom]
        if not free:
            continue
        lam = st.partial[u]
        idx = tuple(sol[n] if n not in free else slice(None) for n in du)
        sub = lam[idx]
        k = int(np.argmin(sub))
        if counter is not None:
            counter.charge(cmp=sub.size - 1, what=f"traceback:{u}")
        for n, a in zip(free, np.unravel_index(k, sub.shape)):
            sol[n] = int(a)
    return {n: int(a) for n, a in sol.items()}, best


def traceback_cost(tree, root, sizes):
    parent, order = _bfs(tree, root)
    cost = _tsize(sizes, tree.vertices[root].domain) - 1
    for u in order[1:]:
        free = [n for n in tree.vertices[u].domain if n not in tree.vertices[parent[u]].domain]
        if free:
            cost += _tsize(sizes, free) - 1
    return cost


def run_all_vertex(tree, local, counter=None):
    """Every directed message and every state.

    The schedule is booked at the standard 4 C(G) implementation cost.
    """
    adj = tree.adjacency()
    st = EngineState()
    pending = [(u, v) for u, v in tree.edges] + [(v, u) for u, v in tree.edges]
    while pending:
        progressed = False
        for u, v in list(pending):
            if all((w, u) in st.messages for w in adj[u] if w != v):
                st.messages[(u, v)], _ = message(tree, local, u, v, st.messages)
                pending.remove((u, v))
                progressed = True
        if not progressed:
            raise ScheduleError("all-vertex schedule stalled")
    for u, vert in enumerate(tree.vertices):
        acc = local[u]
        for w in adj[u]:
            acc = acc + _broadcast(st.messages[(w, u)], tree.vertices[w].domain, vert.domain)
        st.states[u] = acc
    if counter is not None:
        sizes = {n: k for vert, loc in zip(tree.vertices, local)
                 for n, k in zip(vert.domain, loc.shape)}
        counter.charge(add=4 * complexity_single_vertex(tree, sizes), what="all-vertex")
    return st


def all_vertex_decisions(tree, st, counter=None):
    """Per-variable argmin from the smallest state containing each variable."""
    sol = {}
    for n in sorted({n for v in tree.vertices for n in v.domain}):
        u = min((i for i, v in enumerate(tree.vertices) if n in v.domain),
                key=lambda i: (st.states[i].size, i))
        dom = tree.vertices[u].domain
        marg = _marginalise(st.states[u], dom, {n})
        sol[n] = int(np.argmin(marg))
        if counter is not None:
            counter.charge(cmp=st.states[u].size - 1, what=f"decision:{n}")
    return sol


# ----------------------------------------------------------------------------
# root policy and full decoding

ROOT_POLICIES = ("pair", "min_traceback")


def choose_root(tree, sizes, policy="pair"):
    """Root vertex for the single-vertex schedule.

    ``pair``: a tier-1 vertex with the cheapest traceback (first in vertex order
    on ties); without tier-1 vertices the cheapest traceback over all vertices.
    ``min_traceback``: cheapest traceback over all vertices. An integer picks
    that vertex.
    """
    if isinstance(policy, (int, np.integer)) and not isinstance(policy, bool):
        return int(policy)
    if policy not in ROOT_POLICIES:
        raise ValueError(f"unknown root policy {policy!r}")
    cands = list(range(len(tree.vertices)))
    if policy == "pair":
        pairs = [i for i in cands if tree.vertices[i].tier == "tier1"]
        cands = pairs or cands
    return min(cands, key=lambda i: (traceback_cost(tree, i, sizes), i))


def decode_tree(tree, kernels, sizes, counter=None, root="pair", partition=True):
    """Single-vertex schedule plus traceback on each part of the tree."""
    local = local_kernels(tree, kernels, sizes, counter)
    sol, total = {}, 0.0
    parts = partition_tree(tree) if partition else [(tree, list(range(len(tree.vertices))))]
    for sub, ids in parts:
        sub_local = [local[i] for i in ids]
        if isinstance(root, int) and not isinstance(root, bool):
            r = ids.index(root) if root in ids else choose_root(sub, sizes)
        else:
            r = choose_root(sub, sizes, root)
        st = run_single_vertex(sub, sub_local, r, counter)
        s, val = traceback(sub, st, counter)
        sol.update(s)
        total += val
    return sol, total


def build_tree(spec, core=None, graph=None, extra=None):
    g = graph or moral_graph(spec)
    sizes = _sizes(spec)
    core = core or core_auto(g, sizes)
    return attach_tiers(core, g, sizes, extra), g


def decode(spec, xi, tree=None, counter=None, root="pair", partition=True, graph=None):
    """GDL ML decoding of one received block from its xi coefficients."""
    counter = counter if counter is not None else metric.OpCount()
    if tree is None:
        tree, graph = build_tree(spec, graph=graph)
    elif graph is not None:
        rep = validate_tree(tree, graph)
        if rep:
            raise ScheduleError("invalid junction tree: " + "; ".join(rep))
    sizes = _sizes(spec)
    kernels = build_kernels(spec, xi, tree, counter)
    sol, val = decode_tree(tree, kernels, sizes, counter, root, partition)
    assignment = tuple(sol[n] for n in range(spec.N))
    return DecodeResult(assignment, val, counter, complexity_order(tree, sizes))
