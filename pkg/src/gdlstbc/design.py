"""Linear STBC designs, encoding groups and signal sets.

A design is S = sum_i s_i A_i with real symbols s_i and complex n_t x T
weight matrices A_i. The symbols are partitioned into encoding groups; each
group is jointly encoded with a finite signal set of real vectors.

Internally symbol and group indices are 0-based. Files and reports use the
1-based indices of the usual notation.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_ENUM_CAP = 2 ** 24

KINDS = ("PAM", "PRODUCT_PAM", "COMPLEX_LIST", "CUSTOM")


class SpecError(ValueError):
    """Raised for an invalid code description or catalog parameter."""


def pam_levels(q):
    """Levels -(q-1)/2, ..., (q-1)/2 in unit steps."""
    q = int(q)
    if q < 2:
        raise SpecError(f"PAM size must be >= 2, got {q}")
    return [k - (q - 1) / 2 for k in range(q)]


@dataclass(frozen=True)
class SignalSet:
    kind: str
    points: tuple
    q: int | None = None

    def __post_init__(self):
        pts = tuple(tuple(float(v) for v in p) for p in self.points)
        object.__setattr__(self, "points", pts)

    @property
    def dimension(self):
        return len(self.points[0]) if self.points else 0

    @property
    def size(self):
        return len(self.points)

    def array(self):
        return np.array(self.points, dtype=float).reshape(self.size, self.dimension)

    def problems(self):
        out = []
        if self.kind not in KINDS:
            out.append(f"unknown signal-set kind {self.kind!r}")
        if len(self.points) < 2:
            out.append("signal set needs at least 2 points")
        if any(len(p) != self.dimension for p in self.points):
            out.append("signal-set points have mixed dimensions")
        if len(set(self.points)) != len(self.points):
            out.append("signal-set points are not distinct")
        return out

    def to_dict(self):
        d = {"kind": self.kind, "dimension": self.dimension,
             "points": [list(p) for p in self.points]}
        if self.q is not None:
            d["q"] = self.q
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], tuple(tuple(p) for p in d["points"]), d.get("q"))

    @classmethod
    def pam(cls, q):
        return cls("PAM", tuple((v,) for v in pam_levels(q)), int(q))

    @classmethod
    def product_pam(cls, q, t):
        lv = pam_levels(q)
        return cls("PRODUCT_PAM", tuple(itertools.product(lv, repeat=t)), int(q))

    @classmethod
    def complex_list(cls, values):
        return cls("COMPLEX_LIST", tuple((complex(z).real, complex(z).imag) for z in values))

    @classmethod
    def psk(cls, M):
        M = int(M)
        if M < 2:
            raise SpecError("PSK size must be >= 2")
        zs = [np.exp(2j * np.pi * k / M) for k in range(M)]
        # snap tiny float residue so that e.g. BPSK is exactly {1, -1}
        zs = [complex(round(z.real, 15) + 0.0, round(z.imag, 15) + 0.0) for z in zs]
        return cls.complex_list(zs)

    @classmethod
    def qam(cls, M):
        r = math.isqrt(int(M))
        if r * r != M or r < 2:
            raise SpecError(f"square QAM needs a square size, got {M}")
        return cls.product_pam(r, 2)

    def is_pam_scalar(self):
        return self.kind == "PAM" and self.dimension == 1


@dataclass(frozen=True)
class EncodingGroup:
    indices: tuple
    signal_set: SignalSet

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))

    @property
    def t(self):
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """An n_t x T linear design with its encoding-group partition."""

    n_t: int
    T: int
    weights: np.ndarray
    groups: tuple
    name: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "groups", tuple(self.groups))

    @property
    def K(self):
        return self.weights.shape[0]

    @property
    def N(self):
        return len(self.groups)

    @property
    def sizes(self):
        return tuple(g.signal_set.size for g in self.groups)

    def codeword(self, s):
        s = np.asarray(s, dtype=float)
        return np.tensordot(s, self.weights, axes=(0, 0))

    def symbols(self, assignment):
        """Real symbol vector for a tuple of per-group point indices."""
        s = np.zeros(self.K)
        for g, a in zip(self.groups, assignment):
            s[list(g.indices)] = g.signal_set.points[a]
        return s

    def subset(self, group_ids):
        return [self.groups[n] for n in group_ids]

    def to_dict(self):
        return {
            "n_t": self.n_t,
            "T": self.T,
            "K": self.K,
            "N": self.N,
            "weights": [[[[float(v.real), float(v.imag)] for v in row] for row in A]
                        for A in self.weights],
            "groups": [{"indices": [i + 1 for i in g.indices],
                        "signal_set": g.signal_set.to_dict()} for g in self.groups],
            "name": self.name,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            w = np.array([[[complex(re, im) for re, im in row] for row in A]
                          for A in d["weights"]], dtype=complex)
            groups = [EncodingGroup([i - 1 for i in g["indices"]],
                                    SignalSet.from_dict(g["signal_set"]))
                      for g in d["groups"]]
            spec = cls(int(d["n_t"]), int(d["T"]), w, groups, d.get("name", ""))
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"malformed code spec: {exc}") from exc
        if "K" in d and int(d["K"]) != spec.K:
            raise SpecError("declared K does not match the weight list")
        if "N" in d and int(d["N"]) != spec.N:
            raise SpecError("declared N does not match the group list")
        return spec

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def validate(spec):
    """Return a list of human-readable invariant violations (empty if valid)."""
    report = []
    w = spec.weights
    if w.ndim != 3 or w.shape[0] == 0:
        return ["weights must be a non-empty list of matrices"]
    if w.shape[1:] != (spec.n_t, spec.T):
        report.append(f"weight matrices are {w.shape[1]}x{w.shape[2]}, design is "
                      f"{spec.n_t}x{spec.T}")
    seen = {}
    for n, g in enumerate(spec.groups):
        report += [f"group {n + 1}: {p}" for p in g.signal_set.problems()]
        if g.t != g.signal_set.dimension:
            report.append(f"group {n + 1}: {g.t} symbols but signal-set dimension "
                          f"{g.signal_set.dimension}")
        for i in g.indices:
            if not 0 <= i < spec.K:
                report.append(f"group {n + 1}: symbol index {i + 1} out of range")
            elif i in seen:
                report.append(f"symbol {i + 1} in groups {seen[i] + 1} and {n + 1} (overlap)")
            else:
                seen[i] = n
    missing = sorted(set(range(spec.K)) - set(seen))
    if missing:
        report.append("symbols not in any group (gap): " + ", ".join(str(i + 1) for i in missing))
    if not np.all(np.isfinite(w)):
        report.append("weights contain non-finite entries")
    return report


def check(spec):
    rep = validate(spec)
    if rep:
        raise SpecError("; ".join(rep))
    return spec


def _z_weights(n_t, T, entries, n_complex):
    """Real weight matrices from a design written in complex symbols.

    ``entries[r][c]`` is a list of (z index, coefficient, conjugated) terms.
    z_n = s_{2n-1} + j s_{2n}, so conj(z_n) contributes -j to the odd symbol's
    imaginary partner.
    """
    A = np.zeros((2 * n_complex, n_t, T), dtype=complex)
    for r in range(n_t):
        for c in range(T):
            for n, coef, conj in entries[r][c]:
                A[2 * n, r, c] += coef
                A[2 * n + 1, r, c] += coef * (-1j if conj else 1j)
    return A


def _pair_groups(n_complex, sset):
    return [EncodingGroup((2 * n, 2 * n + 1), sset) for n in range(n_complex)]


def complex_set(params, default="qam", default_M=4):
    const = params.get("const", default)
    M = int(params.get("M", default_M))
    if const == "qam":
        return SignalSet.qam(M)
    if const == "psk":
        return SignalSet.psk(M)
    if const == "custom":
        return SignalSet.complex_list([complex(*p) for p in params["points"]])
    raise SpecError(f"unknown complex constellation {const!r}")


def _alamouti(p):
    q = int(p.get("q", 2))
    A = np.zeros((4, 2, 2), dtype=complex)
    A[0] = [[1, 0], [0, 1]]
    A[1] = [[1j, 0], [0, -1j]]
    A[2] = [[0, -1], [1, 0]]
    A[3] = [[0, 1j], [1j, 0]]
    return 2, 2, A, [EncodingGroup((i,), SignalSet.pam(q)) for i in range(4)]


def golden_constants():
    gamma = np.sqrt(-1j + 0j)
    theta = math.atan(2.0) / 2
    return gamma, math.cos(theta), math.sin(theta)


def _golden_naive_matrices():
    g, _, _ = golden_constants()
    A = np.zeros((8, 2, 2), dtype=complex)
    A[0][0, 0] = 1
    A[1][0, 0] = 1j
    A[2][1, 1] = 1
    A[3][1, 1] = 1j
    A[4][0, 1] = g
    A[5][0, 1] = 1j * g
    A[6][1, 0] = g
    A[7][1, 0] = 1j * g
    return A


def _golden_rotation():
    """Map from the singly-encoded symbols to the naive design's symbols."""
    _, c, s = golden_constants()
    R = np.zeros((8, 8))
    for off in (0, 4):
        # (u1, u3) = rot(s1, s3), (u2, u4) = rot(s2, s4), same for 5..8
        for a, b in ((0, 2), (1, 3)):
            R[off + a, off + a], R[off + a, off + b] = c, s
            R[off + b, off + a], R[off + b, off + b] = -s, c
    return R


def _golden_s2_matrices():
    # S2 = S1 composed with the rotation: A2_k = sum_i R[i, k] A1_i
    return np.tensordot(_golden_rotation().T, _golden_naive_matrices(), axes=(1, 0))


def _golden_naive(p):
    q = int(p.get("q", 2))
    R = _golden_rotation()
    lv = pam_levels(q)
    block = R[:4, :4]
    pts = [tuple(block @ np.array(v)) for v in itertools.product(lv, repeat=4)]
    sset = SignalSet("CUSTOM", tuple(pts), q)
    return 2, 2, _golden_naive_matrices(), [EncodingGroup(range(0, 4), sset),
                                            EncodingGroup(range(4, 8), sset)]


def _golden_s2(p):
    q = int(p.get("q", 2))
    return 2, 2, _golden_s2_matrices(), [EncodingGroup((i,), SignalSet.pam(q)) for i in range(8)]


def _toeplitz(p):
    T = int(p.get("T", 10))
    if T < 2:
        raise SpecError("Toeplitz design needs T >= 2")
    nz = T - 1
    e = [[[] for _ in range(T)] for _ in range(2)]
    for n in range(nz):
        e[0][n].append((n, 1, False))
        e[1][n + 1].append((n, 1, False))
    return 2, T, _z_weights(2, T, e, nz), _pair_groups(nz, complex_set(p))


def _oac(p):
    # rows of the 4 x 14 overlapped Alamouti design; (k, conj, sign), k 1-based
    rows = [
        [(1, 0, 1), None, (3, 0, 1), (2, 1, -1), (5, 0, 1), (4, 1, -1), (7, 0, 1),
         (6, 1, -1), (9, 0, 1), (8, 1, -1), (11, 0, 1), (10, 1, -1), None, (12, 1, -1)],
        [None, (1, 1, 1), (2, 0, 1), (3, 1, 1), (4, 0, 1), (5, 1, 1), (6, 0, 1),
         (7, 1, 1), (8, 0, 1), (9, 1, 1), (10, 0, 1), (11, 1, 1), (12, 0, 1), None],
        [None, (2, 1, -1), (1, 0, 1), (4, 1, -1), (3, 0, 1), (6, 1, -1), (5, 0, 1),
         (8, 1, -1), (7, 0, 1), (10, 1, -1), (9, 0, 1), (12, 1, -1), (11, 0, 1), None],
        [(2, 0, 1), None, (4, 0, 1), (1, 1, 1), (6, 0, 1), (3, 1, 1), (8, 0, 1),
         (5, 1, 1), (10, 0, 1), (7, 1, 1), (12, 0, 1), (9, 1, 1), None, (11, 1, 1)],
    ]
    e = [[[] if x is None else [(x[0] - 1, x[2], bool(x[1]))] for x in row] for row in rows]
    return 4, 14, _z_weights(4, 14, e, 12), _pair_groups(12, complex_set(p))


def cda_delta():
    return complex(np.exp(1j))


def _cda(p):
    g = np.exp(2j * np.pi / 8)
    d = cda_delta()
    e = [[[(0, 1, False), (1, g, False)], [(2, d, False), (3, -g * d, False)]],
         [[(2, 1, False), (3, g, False)], [(0, 1, False), (1, -g, False)]]]
    return 2, 2, _z_weights(2, 2, e, 4), _pair_groups(4, complex_set(p, "psk", 8))


def _fe(p):
    g = np.exp(2j * np.pi / 6)
    e = [[[(0, 1, False)], [(2, g, False)], [(1, g, False)]],
         [[(1, 1, False)], [(0, 1, False)], [(2, g, False)]],
         [[(2, 1, False)], [(1, 1, False)], [(0, 1, False)]]]
    return 3, 3, _z_weights(3, 3, e, 3), _pair_groups(3, complex_set(p, "psk", 8))


_CATALOG = {
    "alamouti": _alamouti,
    "golden_naive": _golden_naive,
    "golden_s2": _golden_s2,
    "toeplitz2xT": _toeplitz,
    "oac4x14": _oac,
    "cda2x2": _cda,
    "fe3x3": _fe,
}

CATALOG_NAMES = tuple(_CATALOG)


def catalog(name, **params):
    """Build a catalog code. ``q`` sets PAM sizes, ``M``/``const`` complex sets."""
    if name not in _CATALOG:
        raise SpecError(f"unknown code {name!r}; choose from {', '.join(_CATALOG)}")
    for k in ("q", "M", "T"):
        if k in params and int(params[k]) <= 0:
            raise SpecError(f"parameter {k} must be positive")
    n_t, T, A, groups = _CATALOG[name](params)
    return check(CodeSpec(n_t, T, A, groups, name, dict(params)))


def num_codewords(spec):
    return math.prod(spec.sizes)


def _check_cap(spec, cap):
    total = num_codewords(spec)
    if total > cap:
        raise SpecError(f"{total} codewords exceed the enumeration cap {cap}")
    return total


def enumerate_codewords(spec, cap=DEFAULT_ENUM_CAP):
    """Yield (assignment, X) over all group points, last group fastest."""
    _check_cap(spec, cap)
    for a in itertools.product(*(range(n) for n in spec.sizes)):
        yield a, spec.codeword(spec.symbols(a))


def codebook(spec, cap=DEFAULT_ENUM_CAP):
    """Vectorised enumeration: (assignments P x N, symbols P x K, codewords P x n_t x T)."""
    _check_cap(spec, cap)
    grids = np.meshgrid(*(np.arange(n) for n in spec.sizes), indexing="ij")
    assign = np.stack([g.ravel() for g in grids], axis=1)
    S = np.zeros((assign.shape[0], spec.K))
    for n, g in enumerate(spec.groups):
        S[:, list(g.indices)] = g.signal_set.array()[assign[:, n]]
    X = np.tensordot(S, spec.weights, axes=(1, 0))
    return assign, S, X
