"""Moral graphs, cores and junction trees.

Two encoding groups interfere when some pair of their weight matrices is not
Hurwitz-Radon orthogonal; the moral graph has an edge for each interfering
pair. A core is a tree of local domains that satisfies the junction tree
condition and covers every moral edge. Attaching pair (tier-1) and single
(tier-2) kernel vertices to a core gives a junction tree for the ML metric.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from math import prod

import networkx as nx
import numpy as np

from .design import SpecError


def hr_orthogonal(A, B, tol=None):
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    if tol is None:
        tol = 1e-9 * max(1.0, np.linalg.norm(A) * np.linalg.norm(B))
    M = A @ B.conj().T + B @ A.conj().T
    return bool(np.linalg.norm(M) <= tol)


@dataclass(frozen=True)
class MoralGraph:
    N: int
    edges: frozenset

    def __post_init__(self):
        es = set()
        for a, b in self.edges:
            if a == b:
                raise ValueError("moral graph cannot have loops")
            es.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(es))

    def has(self, n, m):
        return (min(n, m), max(n, m)) in self.edges

    def neighbors(self, n):
        return tuple(sorted({b if a == n else a for a, b in self.edges if n in (a, b)}))

    def sorted_edges(self):
        return sorted(self.edges)

    def nx(self, nodes=None):
        G = nx.Graph()
        nodes = range(self.N) if nodes is None else nodes
        G.add_nodes_from(nodes)
        ns = set(nodes)
        G.add_edges_from(e for e in self.edges if e[0] in ns and e[1] in ns)
        return G

    def is_complete(self, nodes=None):
        nodes = list(range(self.N) if nodes is None else nodes)
        return all(self.has(a, b) for a, b in itertools.combinations(nodes, 2))

    def with_edges(self, extra):
        return MoralGraph(self.N, self.edges | {tuple(e) for e in extra})

    def to_dot(self, name="moral"):
        lines = [f"graph {name} {{"]
        lines += [f'  x{n + 1} [label="x{n + 1}"];' for n in range(self.N)]
        lines += [f"  x{a + 1} -- x{b + 1};" for a, b in self.sorted_edges()]
        return "\n".join(lines + ["}"]) + "\n"


def moral_graph(spec, tol=None):
    W = spec.weights
    edges = set()
    for n, m in itertools.combinations(range(spec.N), 2):
        if any(not hr_orthogonal(W[i], W[j], tol)
               for i in spec.groups[n].indices for j in spec.groups[m].indices):
            edges.add((n, m))
    return MoralGraph(spec.N, frozenset(edges))


def components(g, nodes=None):
    """Connected components as sorted tuples, ordered by smallest member."""
    G = g.nx(nodes)
    return sorted(tuple(sorted(c)) for c in nx.connected_components(G))


@dataclass(frozen=True)
class ConditionalStructure:
    gamma_c: tuple
    groups: tuple

    @property
    def g(self):
        return len(self.groups)


def conditional_structure(g, gamma_c, nodes=None):
    nodes = tuple(range(g.N) if nodes is None else nodes)
    gamma_c = tuple(sorted(gamma_c))
    rest = [n for n in nodes if n not in gamma_c]
    if not set(gamma_c) < set(nodes) or not rest:
        return None
    comps = components(g, rest)
    return ConditionalStructure(gamma_c, tuple(comps)) if len(comps) >= 2 else None


def _size(sizes, dom):
    return prod(sizes[n] for n in dom)


def search_conditioning(g, budget, sizes=None, nodes=None, order_of=None):
    """Exhaustive search for the conditioning set of smallest CML order.

    The order of a split is |A_gc| * max_k order(G_k); by default order(G_k) is
    the brute-force size |A_{G_k}|. Ties go to the smaller conditioning set, then
    to the most balanced split (smallest largest group), then to the
    lexicographically smaller list of conditional groups.
    """
    if budget < 1:
        raise ValueError("conditioning budget must be >= 1")
    nodes = tuple(range(g.N) if nodes is None else nodes)
    sizes = sizes or [2] * g.N
    order_of = order_of or (lambda grp: _size(sizes, grp))
    best, best_key = None, None
    for r in range(1, min(budget, len(nodes) - 1) + 1):
        for gc in itertools.combinations(nodes, r):
            cs = conditional_structure(g, gc, nodes)
            if cs is None:
                continue
            order = _size(sizes, gc) * max(order_of(grp) for grp in cs.groups)
            key = (order, r, max(len(grp) for grp in cs.groups), cs.groups, gc)
            if best_key is None or key < best_key:
                best, best_key = cs, key
    return best


@dataclass(frozen=True)
class Classification:
    kind: str  # "single", "multigroup", "fully-interfering", "conditional", "interfering"
    groups: tuple = ()
    gamma_c: tuple = ()

    def verdict(self):
        lab = lambda ns: "{" + ",".join(str(n + 1) for n in ns) + "}"
        if self.kind == "multigroup":
            return f"{len(self.groups)}-group decodable"
        if self.kind == "fully-interfering":
            return "fully-interfering (moral graph complete)"
        if self.kind == "conditional":
            return (f"conditionally {len(self.groups)}-group; "
                    f"Gamma^c = {lab(self.gamma_c)}")
        if self.kind == "single":
            return "single encoding group"
        return "interfering, not conditionally multigroup within the budget"


def classify(g, sizes=None, budget=None):
    """Multigroup, fully-interfering or conditionally multigroup verdict.

    The conditioning set is the one of smallest brute-force conditional
    order, with the tie-breaks of search_conditioning.
    """
    if g.N == 1:
        return Classification("single", ((0,),))
    comps = components(g)
    if len(comps) > 1:
        return Classification("multigroup", tuple(comps))
    if g.is_complete():
        return Classification("fully-interfering", (tuple(range(g.N)),))
    cs = search_conditioning(g, budget or g.N - 1, sizes)
    if cs is None:
        return Classification("interfering", (tuple(range(g.N)),))
    return Classification("conditional", cs.groups, cs.gamma_c)


# ----------------------------------------------------------------------------
# cores

@dataclass(frozen=True)
class CoreTree:
    vertices: tuple
    edges: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(tuple(sorted(set(v))) for v in self.vertices))
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))

    def variables(self):
        return sorted({n for v in self.vertices for n in v})

    def order(self, sizes):
        return max(_size(sizes, v) for v in self.vertices)

    def to_dict(self):
        return {"vertices": [[n + 1 for n in v] for v in self.vertices],
                "edges": [list(e) for e in self.edges]}

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    def to_dot(self, name="core"):
        lines = [f"graph {name} {{"]
        for i, v in enumerate(self.vertices):
            lines.append(f'  v{i} [shape=box, label="({_label(v)})"];')
        lines += [f"  v{u} -- v{w};" for u, w in self.edges]
        return "\n".join(lines + ["}"]) + "\n"


def _label(dom):
    return ",".join(f"x{n + 1}" for n in dom)


def _tree_problems(n_vertices, edges, domains=None):
    out = []
    G = nx.Graph()
    G.add_nodes_from(range(n_vertices))
    for u, v in edges:
        if not (0 <= u < n_vertices and 0 <= v < n_vertices):
            return [f"edge ({u}, {v}) refers to a missing vertex"]
        G.add_edge(u, v)
    if n_vertices and not nx.is_connected(G):
        out.append("tree is not connected")
    if len(edges) != n_vertices - 1 or G.number_of_edges() != len(edges):
        out.append("graph is not a tree (cycle or repeated edge)")
    if domains is not None and not out:
        for n in sorted({x for d in domains for x in d}):
            holders = [i for i, d in enumerate(domains) if n in d]
            if not nx.is_connected(G.subgraph(holders)):
                out.append(f"junction tree condition fails for x{n + 1}")
    return out


def core_problems(core, g):
    """Violations of the core definition against a moral graph."""
    out = _tree_problems(len(core.vertices), core.edges, core.vertices)
    for a, b in g.sorted_edges():
        if not any(a in v and b in v for v in core.vertices):
            out.append(f"moral edge (x{a + 1}, x{b + 1}) not covered by any core vertex")
    for v in core.vertices:
        if any(not 0 <= n < g.N for n in v):
            out.append(f"core vertex ({_label(v)}) uses an unknown variable")
    return out


def core_full(N, nodes=None):
    nodes = tuple(range(N) if nodes is None else nodes)
    return CoreTree((nodes,))


def core_lemma2(g, n, m, nodes=None):
    nodes = tuple(range(g.N) if nodes is None else nodes)
    if g.has(n, m):
        raise SpecError(f"x{n + 1} and x{m + 1} interfere; the two-vertex core needs a "
                        "non-adjacent pair")
    rest = [k for k in nodes if k not in (n, m)]
    return CoreTree(((n, *rest), (m, *rest)), ((0, 1),))


def core_chain(ordering, width=2):
    """Chain of sliding windows over an ordering of the variables."""
    ordering = list(ordering)
    if len(ordering) <= width:
        return CoreTree((tuple(ordering),))
    verts = [tuple(ordering[k:k + width]) for k in range(len(ordering) - width + 1)]
    return CoreTree(verts, tuple((k, k + 1) for k in range(len(verts) - 1)))


def core_conditional(cs, subcores):
    """Append the conditioning set to each subcore and hang them on one new vertex."""
    gc = tuple(cs.gamma_c)
    verts, edges = [gc], []
    for sub in subcores:
        off = len(verts)
        verts += [tuple(v) + gc for v in sub.vertices]
        edges += [(u + off, w + off) for u, w in sub.edges]
        edges.append((0, off))
    return CoreTree(verts, tuple(edges))


def core_join(subcores):
    """Disjoint cores joined into one tree by arbitrary edges."""
    verts, edges = [], []
    for sub in subcores:
        off = len(verts)
        verts += list(sub.vertices)
        edges += [(u + off, w + off) for u, w in sub.edges]
        if off:
            edges.append((0, off))
    return CoreTree(verts, tuple(edges))


def core_clique_tree(g, nodes=None, triangulate=False):
    """Clique tree of the (triangulated) induced moral graph."""
    G = g.nx(nodes)
    if triangulate and not nx.is_chordal(G):
        G, _ = nx.complete_to_chordal_graph(G)
    if not nx.is_chordal(G):
        return None
    cliques = sorted(tuple(sorted(c)) for c in nx.chordal_graph_cliques(G))
    if len(cliques) == 1:
        return CoreTree((cliques[0],))
    C = nx.Graph()
    C.add_nodes_from(range(len(cliques)))
    for i, j in itertools.combinations(range(len(cliques)), 2):
        w = len(set(cliques[i]) & set(cliques[j]))
        C.add_edge(i, j, weight=w)
    T = nx.maximum_spanning_tree(C, algorithm="kruskal")
    return CoreTree(cliques, tuple(sorted((min(u, v), max(u, v)) for u, v in T.edges)))


def core_from_file(path, g=None):
    try:
        with open(path) as fh:
            d = json.load(fh)
        core = CoreTree([[n - 1 for n in v] for v in d["vertices"]],
                        [tuple(e) for e in d.get("edges", [])])
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"cannot read core file {path}: {exc}") from exc
    if g is not None:
        rep = core_problems(core, g)
        if rep:
            raise SpecError("invalid core: " + "; ".join(rep))
    return core


def _core_cost(core, sizes, g=None):
    """(order, schedule cost of the attached tree, vertex weight) for ranking."""
    sched = 0
    if g is not None:
        # rank on the subproblem spanned by the core, relabelled 0..k-1
        nodes = core.variables()
        pos = {n: i for i, n in enumerate(nodes)}
        sub = MoralGraph(len(nodes), frozenset((pos[a], pos[b]) for a, b in g.edges
                                               if a in pos and b in pos))
        core = CoreTree([[pos[n] for n in v] for v in core.vertices], core.edges)
        sizes = [sizes[n] for n in nodes]
        t = attach_tiers(core, sub, sizes)
        sched = complexity_single_vertex(t, sizes) + min(
            _traceback_cost(t, r, sizes) for r in range(len(t.vertices)))
    return (core.order(sizes), sched, sum(_size(sizes, v) for v in core.vertices))


def _traceback_cost(t, root, sizes):
    adj = t.adjacency()
    seen, stack, cost = {root}, [root], _size(sizes, t.vertices[root].domain) - 1
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
                free = set(t.vertices[w].domain) - set(t.vertices[u].domain)
                if free:
                    cost += _size(sizes, free) - 1
    return cost


def cml_order(g, sizes, nodes, budget=None):
    """Order of the cheapest nested conditional plan on ``nodes``."""
    nodes = tuple(nodes)
    comps = components(g, nodes)
    if len(comps) > 1:
        return max(cml_order(g, sizes, c, budget) for c in comps)
    if len(nodes) == 1 or g.is_complete(nodes):
        return _size(sizes, nodes)
    cs = search_conditioning(g, budget or len(nodes) - 1, sizes, nodes,
                             order_of=lambda grp: cml_order(g, sizes, grp, budget))
    if cs is None:
        return _size(sizes, nodes)
    return _size(sizes, cs.gamma_c) * max(cml_order(g, sizes, grp, budget) for grp in cs.groups)


def core_auto(g, sizes, nodes=None):
    """A low-order core: per component, the best of the clique tree (after
    triangulation), the nested conditional core and the single full vertex."""
    nodes = tuple(range(g.N) if nodes is None else nodes)
    comps = components(g, nodes)
    if len(comps) > 1:
        return core_join([core_auto(g, sizes, c) for c in comps])
    if len(nodes) == 1 or g.is_complete(nodes):
        return core_full(None, nodes)
    cands = [core_full(None, nodes), core_clique_tree(g, nodes, triangulate=True)]
    cs = search_conditioning(g, len(nodes) - 1, sizes, nodes,
                             order_of=lambda grp: cml_order(g, sizes, grp))
    if cs is not None:
        cands.append(core_conditional(cs, [core_auto(g, sizes, grp) for grp in cs.groups]))
    return min((c for c in cands if c is not None), key=lambda c: _core_cost(c, sizes, g))


# ----------------------------------------------------------------------------
# junction trees

TIERS = ("core", "tier1", "tier2")


@dataclass
class Vertex:
    domain: tuple
    tier: str
    kernels: list = field(default_factory=list)

    def label(self):
        return f"({_label(self.domain)})" if self.domain else "()"


@dataclass
class JunctionTree:
    vertices: list
    edges: list
    N: int = 0

    def adjacency(self):
        adj = {i: [] for i in range(len(self.vertices))}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for k in adj:
            adj[k].sort()
        return adj

    def degree(self, u):
        return sum(u in e for e in self.edges)

    def find(self, domain, tier=None):
        domain = tuple(sorted(domain))
        for i, v in enumerate(self.vertices):
            if v.domain == domain and (tier is None or v.tier == tier):
                return i
        raise KeyError(domain)

    def kernel_keys(self):
        return [k for v in self.vertices for k in v.kernels]

    def to_dot(self, name="jtree"):
        shape = {"core": "box", "tier1": "ellipse", "tier2": "circle"}
        lines = [f"graph {name} {{"]
        for i, v in enumerate(self.vertices):
            lines.append(f'  v{i} [shape={shape[v.tier]}, label="{v.label()}"];')
        lines += [f"  v{u} -- v{w};" for u, w in self.edges]
        return "\n".join(lines + ["}"]) + "\n"


def attach_tiers(core, g, sizes, extra=None):
    """Junction tree from a core.

    ``extra`` maps additional kernel keys to domains; each is placed on the
    smallest core vertex covering it. Pair kernels go on a core vertex whose
    domain is exactly the pair, otherwise on a new tier-1 vertex hung on the
    smallest covering core vertex. Single kernels go on a core vertex equal to
    {n} if there is one, otherwise on a new tier-2 vertex.
    """
    rep = core_problems(core, g)
    if rep:
        raise SpecError("core is invalid: " + "; ".join(rep))
    verts = [Vertex(v, "core") for v in core.vertices]
    edges = [tuple(e) for e in core.edges]
    # anchor core vertex of every non-core vertex, used for tie-breaking
    anchor = {}
    ncore = len(verts)

    def covering(dom):
        cands = [i for i in range(ncore) if set(dom) <= set(verts[i].domain)]
        return min(cands, key=lambda i: (_size(sizes, verts[i].domain), i)) if cands else None

    for key, dom in (extra or {}).items():
        i = covering(dom)
        if i is None:
            raise SpecError(f"no core vertex covers the domain of {key}")
        verts[i].kernels.append(key)

    pair_holders = []
    for a, b in g.sorted_edges():
        exact = [i for i in range(ncore) if verts[i].domain == (a, b)]
        if exact:
            verts[exact[0]].kernels.append(("pair", a, b))
            pair_holders.append(exact[0])
            anchor[exact[0]] = exact[0]
            continue
        i = covering((a, b))
        verts.append(Vertex((a, b), "tier1", [("pair", a, b)]))
        j = len(verts) - 1
        edges.append((i, j))
        anchor[j] = i
        pair_holders.append(j)

    for n in range(g.N):
        exact = [i for i in range(ncore) if verts[i].domain == (n,)]
        if exact:
            verts[exact[0]].kernels.append(("single", n))
            continue
        holders = [j for j in pair_holders if n in verts[j].domain]
        if holders:
            j = min(holders, key=lambda j: (_size(sizes, verts[anchor[j]].domain), anchor[j], j))
        else:
            inside = [i for i in range(ncore) if n in verts[i].domain]
            j = (min(inside, key=lambda i: (_size(sizes, verts[i].domain), i)) if inside
                 else (pair_holders[0] if pair_holders else 0))
        verts.append(Vertex((n,), "tier2", [("single", n)]))
        edges.append((j, len(verts) - 1))
    return JunctionTree(verts, edges, g.N)


def validate_tree(t, g, extra_keys=()):
    """Violations of the tree and running-intersection conditions, moral-edge coverage and kernel completeness."""
    doms = [v.domain for v in t.vertices]
    out = _tree_problems(len(doms), t.edges, doms)
    keys = t.kernel_keys()
    present = set(keys)
    for a, b in g.sorted_edges():
        if not any(a in d and b in d for d in doms):
            out.append(f"moral edge (x{a + 1}, x{b + 1}) not covered by any vertex")
        if ("pair", a, b) not in present:
            out.append(f"kernel for interfering pair (x{a + 1}, x{b + 1}) missing")
    for v in t.vertices:
        for k in v.kernels:
            need = {"single": k[1:], "pair": k[1:]}.get(k[0], ())
            if not set(need) <= set(v.domain):
                out.append(f"kernel {k} placed outside its domain")
    for k in extra_keys:
        if k not in present:
            out.append(f"kernel {k} missing")
    if len(keys) != len(present):
        out.append("a kernel is attached twice")
    return out


def complexity_single_vertex(t, sizes):
    s = lambda d: _size(sizes, d)
    return sum(s(t.vertices[u].domain) + s(t.vertices[v].domain)
               - s(set(t.vertices[u].domain) & set(t.vertices[v].domain)) for u, v in t.edges)


def complexity_order(t, sizes):
    return max(_size(sizes, v.domain) for v in t.vertices)


def all_vertex_bound(t, sizes):
    return 4 * complexity_single_vertex(t, sizes)


def partition_tree(t):
    """Split at edges whose endpoints share no variable.

    Returns a list of (subtree, original vertex ids).
    """
    keep = [(u, v) for u, v in t.edges
            if set(t.vertices[u].domain) & set(t.vertices[v].domain)]
    G = nx.Graph()
    G.add_nodes_from(range(len(t.vertices)))
    G.add_edges_from(keep)
    parts = sorted(sorted(c) for c in nx.connected_components(G))
    out = []
    for ids in parts:
        pos = {old: new for new, old in enumerate(ids)}
        sub = JunctionTree([t.vertices[i] for i in ids],
                           [(pos[u], pos[v]) for u, v in keep if u in pos], t.N)
        out.append((sub, ids))
    return out


def tree_variables(t):
    return sorted({n for v in t.vertices for n in v.domain})
