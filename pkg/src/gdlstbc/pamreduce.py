"""Removal of PAM-encoded single-symbol variables by hard limiting.

For a variable x_n0 = [s] with a q-PAM set, the part of beta that depends on
s is xi_00 s^2 + zeta s with zeta = xi_n0 + sum_{m in N(n0)} sum_{i in psi(m)}
xi_{n0,i} s_i. Its minimum over the grid is found by rounding and clamping,
so beta' = min_s beta is a kernel h_{n0} on the neighbours of n0.

Per neighbour point the hard limiter books 6 operations (one scaling, a
shift, the rounding, two clamps and the shift back) and evaluating h books 5
(one subtraction, two squares, one difference, one scaling).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import prod

import numpy as np

from . import metric
from .design import SpecError
from .engine import (DecodeResult, build_kernels, choose_root, local_kernels,
                     partition_tree, run_single_vertex, traceback)
from .graph import (CoreTree, attach_tiers, complexity_order, core_auto, core_conditional,
                    core_full, components, moral_graph, search_conditioning)

HARD_LIMIT_OPS = dict(mult=1, add=3, cmp=2)
H_EVAL_OPS = dict(mult=3, add=2)


@dataclass
class PamElimination:
    n0: int
    neighbors: tuple
    zeta: metric.KernelTable
    h: metric.KernelTable
    recovery: np.ndarray  # PAM point index per neighbour point


def _pam_q(spec, n):
    g = spec.groups[n]
    if g.t != 1 or not g.signal_set.is_pam_scalar():
        raise SpecError(f"x{n + 1} is not a single PAM-encoded symbol")
    return g.signal_set.size


def eligible(g, R, spec):
    for n in R:
        _pam_q(spec, n)
    R = sorted(R)
    return not any(g.has(a, b) for i, a in enumerate(R) for b in R[i + 1:])


def rnd(x):
    """Nearest integer, halves rounded towards +infinity."""
    return np.floor(np.asarray(x, dtype=float) + 0.5)


def hard_limit_index(zeta, xi00, q):
    """Grid index in 0..q-1 of the minimiser of xi00 x^2 + zeta x."""
    xi00 = np.asarray(xi00, dtype=float)
    if np.any(xi00 <= 0):
        raise ValueError("hard limiting needs a positive curvature xi_00")
    u = (q - 1) / 2 - np.asarray(zeta, dtype=float) / (2 * xi00)
    return np.minimum(np.maximum(rnd(u), 0), q - 1).astype(int)


def hard_limit(zeta, xi00, q):
    return hard_limit_index(zeta, xi00, q) - (q - 1) / 2


def compute_zeta_star(spec, xi, n0, counter=None, graph=None):
    """zeta over A_{N(n0)} as the central state of a star tree.

    Leaves carry omega_m(x_m) = sum_{i in psi(m)} xi_{n0,i} s_i; the centre
    carries the constant xi_n0 and sums the full-domain messages.
    """
    g = graph or moral_graph(spec)
    nb = g.neighbors(n0)
    if not nb:
        raise SpecError(f"x{n0 + 1} has no neighbours; zeta is the constant xi")
    (i0,) = spec.groups[n0].indices
    shape = [spec.groups[m].signal_set.size for m in nb]
    zeta = np.full(shape, xi.linear[i0])
    for k, m in enumerate(nb):
        gm = spec.groups[m]
        omega = gm.signal_set.array() @ xi.cross[i0, list(gm.indices)]
        if counter is not None:
            counter.charge(mult=gm.signal_set.size * gm.t,
                           add=gm.signal_set.size * (gm.t - 1), what=f"omega:{n0},{m}")
        sh = [1] * len(nb)
        sh[k] = shape[k]
        zeta = zeta + omega.reshape(sh)
    if counter is not None:
        counter.charge(add=len(nb) * zeta.size, what=f"zeta:{n0}")
    return metric.KernelTable(nb, zeta)


def eliminate(spec, xi, n0, counter=None, graph=None):
    g = graph or moral_graph(spec)
    q = _pam_q(spec, n0)
    (i0,) = spec.groups[n0].indices
    xi00 = xi.diag[i0]
    levels = spec.groups[n0].signal_set.array()[:, 0]
    nb = g.neighbors(n0)
    if nb:
        z = compute_zeta_star(spec, xi, n0, counter, g)
    else:
        z = metric.KernelTable((), np.array(xi.linear[i0]))
    zv = z.values
    if xi00 > 0:
        idx = hard_limit_index(zv, xi00, q)
        x = levels[idx]
        u = zv / (2 * xi00)
        hv = xi00 * ((x + u) ** 2 - u ** 2)
    else:
        # degenerate curvature: search the grid directly
        vals = xi00 * levels ** 2 + np.multiply.outer(zv, levels)
        idx = np.argmin(vals, axis=-1)
        hv = np.take_along_axis(vals, idx[..., None], axis=-1)[..., 0]
    if counter is not None:
        n = zv.size
        counter.charge(**{k: v * n for k, v in HARD_LIMIT_OPS.items()}, what=f"hardlimit:{n0}")
        counter.charge(**{k: v * n for k, v in H_EVAL_OPS.items()}, what=f"h:{n0}")
    return PamElimination(n0, nb, z, metric.KernelTable(nb, hv), np.asarray(idx))


def reduce_core(core, n0):
    holders = [i for i, v in enumerate(core.vertices) if n0 in v]
    if len(holders) != 1:
        raise SpecError(f"x{n0 + 1} appears in {len(holders)} core vertices, expected 1")
    (k,) = holders
    verts = [tuple(n for n in v if n != n0) if i == k else v for i, v in enumerate(core.vertices)]
    edges = list(core.edges)
    if not verts[k]:
        # an emptied vertex is dropped; its neighbours are chained together
        nbrs = sorted({w for e in edges for w in e if k in e} - {k})
        edges = [e for e in edges if k not in e]
        edges += [(nbrs[0], w) for w in nbrs[1:]]
        remap = {old: new for new, old in enumerate(i for i in range(len(verts)) if i != k)}
        verts = [v for i, v in enumerate(verts) if i != k]
        edges = [(remap[a], remap[b]) for a, b in edges]
    return CoreTree(verts, tuple(edges))


def pam_candidates(spec, core, g):
    """Ascending greedy choice of PAM singletons that can be removed together."""
    R = []
    for n, grp in enumerate(spec.groups):
        if grp.t != 1 or not grp.signal_set.is_pam_scalar():
            continue
        if sum(n in v for v in core.vertices) != 1:
            continue
        if any(g.has(n, r) for r in R):
            continue
        R.append(n)
    return R


def reduced_graph(g, R):
    return g.__class__(g.N, frozenset(e for e in g.edges if not set(e) & set(R)))


def pam_conditioning(spec, g=None):
    """Conditioning structure behind pam_core, or None for a single full vertex."""
    g = g or moral_graph(spec)
    if len(components(g)) > 1:
        return None
    sizes = tuple(x.signal_set.size for x in spec.groups)
    return search_conditioning(g, spec.N - 1, sizes)


def pam_core(spec, g=None):
    """Core used before elimination: the nested conditional core when the code
    is conditionally multigroup, else the single full vertex per component."""
    g = g or moral_graph(spec)
    comps = components(g)
    if len(comps) > 1:
        from .graph import core_join
        return core_join([CoreTree((c,)) for c in comps])
    cs = pam_conditioning(spec, g)
    if cs is None:
        return core_full(spec.N)
    return core_conditional(cs, [CoreTree((grp,)) for grp in cs.groups])


def build_pam_tree(spec, core=None, R=None, graph=None, conditioning_pairs=True):
    """(tree, removed variables, graph) for decoding with hard limiting.

    With ``conditioning_pairs`` and the default conditional core, every pair
    inside the conditioning set gets its own cross-kernel vertex hung on the
    conditioning vertex, interfering or not, as in the conditional junction
    tree construction.
    """
    g = graph or moral_graph(spec)
    gamma_pairs = ()
    auto = core is None
    if auto:
        core = pam_core(spec, g)
        cs = pam_conditioning(spec, g) if conditioning_pairs else None
        if cs is not None:
            gamma_pairs = tuple(combinations(cs.gamma_c, 2))
    R = pam_candidates(spec, core, g) if R is None else sorted(R)
    if auto and not R:
        # nothing to remove: the ordinary low-order core is at least as good
        core = core_auto(g, tuple(x.signal_set.size for x in spec.groups))
        gamma_pairs = ()
    if not eligible(g, R, spec):
        raise SpecError("removed variables must be pairwise non-interfering")
    reduced = core
    for n0 in R:
        reduced = reduce_core(reduced, n0)
    rest_graph = reduced_graph(g, R).with_edges(gamma_pairs)
    sizes = tuple(x.signal_set.size for x in spec.groups)
    extra = {("h", n0): g.neighbors(n0) for n0 in R if g.neighbors(n0)}
    keep = [n for n in range(spec.N) if n not in R]
    tree = _attach_subset(reduced, rest_graph, sizes, extra, keep) if keep else None
    return tree, R, g


def _attach_subset(core, g, sizes, extra, keep):
    t = attach_tiers(core, g, sizes, extra)
    drop = [i for i, v in enumerate(t.vertices) if v.tier == "tier2" and v.domain[0] not in keep]
    if not drop:
        return t
    ids = [i for i in range(len(t.vertices)) if i not in drop]
    pos = {old: new for new, old in enumerate(ids)}
    t.vertices = [t.vertices[i] for i in ids]
    t.edges = [(pos[a], pos[b]) for a, b in t.edges if a in pos and b in pos]
    return t


def decode_pam(spec, xi, tree=None, R=None, counter=None, root="min_traceback", graph=None):
    """GDL decoding with the variables in R removed by hard limiting."""
    counter = counter if counter is not None else metric.OpCount()
    if tree is None:
        tree, R, graph = build_pam_tree(spec, R=R, graph=graph)
    g = graph or moral_graph(spec)
    elim = {n0: eliminate(spec, xi, n0, counter, g) for n0 in R}
    sizes = tuple(x.signal_set.size for x in spec.groups)
    sol, val = {}, 0.0
    if tree is not None:
        given = {("h", n0): e.h for n0, e in elim.items() if e.neighbors}
        kernels = build_kernels(spec, xi, tree, counter, given)
        local = local_kernels(tree, kernels, sizes, counter)
        for sub, ids in partition_tree(tree):
            st = run_single_vertex(sub, [local[i] for i in ids], choose_root(sub, sizes, root),
                                   counter)
            s, v = traceback(sub, st, counter)
            sol.update(s)
            val += v
    for n0, e in elim.items():
        if e.neighbors:
            sol[n0] = int(e.recovery[tuple(sol[m] for m in e.neighbors)])
        else:
            sol[n0] = int(e.recovery)
            val += float(e.h.values)
    assignment = tuple(sol[n] for n in range(spec.N))
    order = max([complexity_order(tree, sizes) if tree is not None else 1] +
                [e.zeta.size for e in elim.values()])
    return DecodeResult(assignment, val, counter, order)


def zeta_direct(spec, xi, n0, neighbors, point):
    """Reference value of zeta at one neighbour assignment (no shortcuts)."""
    (i0,) = spec.groups[n0].indices
    z = xi.linear[i0]
    for m, a in zip(neighbors, point):
        gm = spec.groups[m]
        for i, s in zip(gm.indices, gm.signal_set.points[a]):
            z += xi.cross[i0, i] * s
    return z


def table_total(t):
    return prod(t.values.shape)
