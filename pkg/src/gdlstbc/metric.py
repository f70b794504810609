"""ML metric coefficients, local kernels and operation counting.

The metric ||Y - H S||^2 - tr(Y Y^H) is the real quadratic

    f(s) = sum_i (s_i xi_i + s_i^2 xi_ii) + sum_{i<j} s_i s_j xi_ij

and decoders work from the xi values. Computing xi itself is common to all
decoders and is never charged to an OpCount.

Charges are declarative: each step books the closed-form number of
multiplications, additions and comparisons for the factored algorithm it
implements, so counts depend on table sizes only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb, prod

import numpy as np


@dataclass
class OpCount:
    mult: int = 0
    add: int = 0
    cmp: int = 0
    log: list = field(default_factory=list, repr=False)
    trace: bool = False

    def charge(self, mult=0, add=0, cmp=0, what=None):
        if min(mult, add, cmp) < 0:
            raise ValueError("negative operation charge")
        self.mult += int(mult)
        self.add += int(add)
        self.cmp += int(cmp)
        if self.trace and what:
            self.log.append((what, int(mult), int(add), int(cmp)))

    @property
    def total(self):
        return self.mult + self.add + self.cmp

    def merge(self, other):
        self.charge(other.mult, other.add, other.cmp)
        if self.trace:
            self.log.extend(other.log)
        return self

    def as_dict(self):
        return {"mult": self.mult, "add": self.add, "cmp": self.cmp, "total": self.total}

    def breakdown(self):
        """Totals per step label (requires trace=True)."""
        out = {}
        for what, m, a, c in self.log:
            key = what.split(":")[0]
            out[key] = out.get(key, 0) + m + a + c
        return out


def f_eval_cost(n):
    """Ops to evaluate f on n symbols from xi: 4 per symbol, 2 per cross term, then sum."""
    return 3 * n + 2 * comb(n, 2), n + comb(n, 2) + n - 1


@dataclass(frozen=True, eq=False)
class XiCoefficients:
    linear: np.ndarray
    diag: np.ndarray
    cross: np.ndarray  # symmetric K x K, zero diagonal

    @property
    def K(self):
        return self.linear.shape[0]

    def problems(self):
        out = []
        for name in ("linear", "diag", "cross"):
            if not np.all(np.isfinite(getattr(self, name))):
                out.append(f"{name} coefficients not finite")
        if np.any(self.diag < -1e-12):
            out.append("negative diagonal coefficient")
        return out


def _check_shapes(spec, H, Y):
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    if H.shape[1] != spec.n_t:
        raise ValueError(f"H has {H.shape[1]} columns, design has n_t={spec.n_t}")
    if Y.shape != (H.shape[0], spec.T):
        raise ValueError(f"Y must be {H.shape[0]}x{spec.T}, got {Y.shape[0]}x{Y.shape[1]}")
    return H, Y


def compute_xi(spec, H, Y):
    H, Y = _check_shapes(spec, H, Y)
    HA = np.einsum("rn,knt->krt", H, spec.weights)
    # tr(H A_i A_j^H H^H) = <HA_i, HA_j>
    G = np.einsum("irt,jrt->ij", HA, HA.conj())
    lin = -2.0 * np.einsum("irt,rt->i", HA, Y.conj()).real
    diag = G.diagonal().real.copy()
    cross = 2.0 * G.real
    np.fill_diagonal(cross, 0.0)
    return XiCoefficients(lin, diag, cross)


def metric_f(xi, s):
    s = np.asarray(s, dtype=float)
    return float(s @ xi.linear + (s * s) @ xi.diag + 0.5 * s @ xi.cross @ s)


def metric_f_batch(xi, S):
    S = np.atleast_2d(S)
    return S @ xi.linear + (S * S) @ xi.diag + 0.5 * np.einsum("pi,ij,pj->p", S, xi.cross, S)


def frobenius_metric(spec, H, Y, s):
    """Oracle ||Y - H S(s)||^2 - tr(YY^H) computed from matrices."""
    H, Y = _check_shapes(spec, H, Y)
    X = spec.codeword(s)
    return float(np.linalg.norm(Y - H @ X) ** 2 - np.linalg.norm(Y) ** 2)


@dataclass(frozen=True, eq=False)
class KernelTable:
    """Real table over the product of group signal sets; last group fastest."""

    domain: tuple
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(int(n) for n in self.domain))
        v = np.asarray(self.values, dtype=float)
        if v.ndim != len(self.domain):
            raise ValueError("table rank does not match domain")
        object.__setattr__(self, "values", v)

    @property
    def size(self):
        return int(self.values.size)

    def expand(self, domain):
        """View of the table broadcast over a superset domain (sorted)."""
        domain = tuple(domain)
        pos = [domain.index(n) for n in self.domain]
        order = np.argsort(pos)
        v = np.transpose(self.values, order) if len(pos) > 1 else self.values
        shape = [1] * len(domain)
        for n, k in zip(np.array(self.domain)[order], v.shape):
            shape[domain.index(int(n))] = k
        return v.reshape(shape)

    def at(self, point):
        """Value at a {group: point index} assignment."""
        return float(self.values[tuple(point[n] for n in self.domain)])

    def to_json(self):
        return json.dumps({"domain": [n + 1 for n in self.domain],
                           "shape": list(self.values.shape),
                           "values": self.values.ravel().tolist()})


def zeros(domain, spec):
    return KernelTable(domain, np.zeros([spec.groups[n].signal_set.size for n in domain]))


def build_alpha_n(xi, spec, n, counter=None):
    """alpha_n(x_n) = sum_{i in psi(n)} s_i (xi_i + s_i xi_ii + sum_{j > i} s_j xi_ij)."""
    g = spec.groups[n]
    idx = list(g.indices)
    P = g.signal_set.array()
    inner = np.triu(xi.cross[np.ix_(idx, idx)], 1)
    vals = (P * (xi.linear[idx] + P * xi.diag[idx] + P @ inner.T)).sum(axis=1)
    if counter is not None:
        t, Q = g.t, g.signal_set.size
        counter.charge(mult=Q * t * (t + 1), add=Q * 2 * t, what=f"alpha_n:{n}")
    return KernelTable((n,), vals)


def build_alpha_nm(xi, spec, n, m, counter=None):
    """alpha_nm(x_n, x_m) = sum_{i in psi(n)} s_i sum_{j in psi(m)} s_j xi_ij.

    Two steps: the inner sums per (i, x_m), then one dot product per (x_n, x_m).
    """
    if n == m:
        raise ValueError("cross kernel needs two distinct groups")
    if n > m:
        n, m = m, n
    gn, gm = spec.groups[n], spec.groups[m]
    Pn, Pm = gn.signal_set.array(), gm.signal_set.array()
    C = xi.cross[np.ix_(list(gn.indices), list(gm.indices))]
    inner = Pm @ C.T  # (|A_m|, t_n)
    vals = Pn @ inner.T
    if counter is not None:
        tn, tm, Qn, Qm = gn.t, gm.t, gn.signal_set.size, gm.signal_set.size
        counter.charge(mult=Qm * tn * tm, add=Qm * tn * (tm - 1), what=f"alpha_nm:{n},{m}")
        counter.charge(mult=Qn * Qm * tn, add=Qn * Qm * (tn - 1), what=f"alpha_nm:{n},{m}")
    return KernelTable((n, m), vals)


def global_beta(spec, xi, assignment, pairs=None):
    """beta = sum_n alpha_n + sum_{n<m} alpha_nm at one point per group."""
    N = spec.N
    total = sum(build_alpha_n(xi, spec, n).values[assignment[n]] for n in range(N))
    if pairs is None:
        pairs = [(n, m) for n in range(N) for m in range(n + 1, N)]
    for n, m in pairs:
        total += build_alpha_nm(xi, spec, n, m).values[assignment[n], assignment[m]]
    return float(total)


def uniform_size(spec, group_ids=None):
    """(t, |A|) if all listed groups share them, else None."""
    gs = spec.groups if group_ids is None else [spec.groups[n] for n in group_ids]
    keys = {(g.t, g.signal_set.size) for g in gs}
    return keys.pop() if len(keys) == 1 else None


def table_size(spec, domain):
    return prod(spec.groups[n].signal_set.size for n in domain)
