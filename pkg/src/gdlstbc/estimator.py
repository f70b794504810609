"""Decoder objects with an estimator-style interface.

``fit(spec)`` does the structural work once (moral graph, junction tree or
conditional plan); ``predict(H, Y)`` then decodes one block or a batch.
Parameters follow the usual conventions: everything passed to ``__init__`` is
returned by ``get_params`` and can be changed with ``set_params``, and fitted
attributes carry a trailing underscore.
"""

from __future__ import annotations

import inspect

import numpy as np

from . import cml, engine, metric, pamreduce
from .design import CodeSpec, SpecError
from .graph import moral_graph

DECODER_NAMES = ("gdl", "gdl-pam", "cml-brute", "cml-conditional")


class NotFittedError(RuntimeError):
    pass


def check_is_fitted(est, attr="spec_"):
    if getattr(est, attr, None) is None:
        raise NotFittedError(f"{type(est).__name__} is not fitted; call fit(spec) first")


def check_spec(spec):
    if not isinstance(spec, CodeSpec):
        raise TypeError(f"expected a CodeSpec, got {type(spec).__name__}")
    return spec


def check_channel(spec, H, Y):
    """Coerce (H, Y) to complex arrays of shape (B, n_r, n_t) and (B, n_r, T).

    Returns the arrays and whether the input was a single block.
    """
    H = np.asarray(H, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    single = H.ndim == 2
    if single:
        H, Y = H[None], Y[None]
    if H.ndim != 3 or Y.ndim != 3:
        raise ValueError("H and Y must be 2-d (one block) or 3-d (a batch)")
    if H.shape[0] != Y.shape[0]:
        raise ValueError(f"batch sizes differ: {H.shape[0]} channels, {Y.shape[0]} blocks")
    if H.shape[2] != spec.n_t:
        raise ValueError(f"H has {H.shape[2]} columns, design has n_t={spec.n_t}")
    if Y.shape[1:] != (H.shape[1], spec.T):
        raise ValueError(f"Y blocks must be {H.shape[1]}x{spec.T}, got {Y.shape[1]}x{Y.shape[2]}")
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(Y))):
        raise ValueError("H and Y must be finite")
    return H, Y, single


class BaseDecoder:
    def get_params(self, deep=True):
        names = [p for p in inspect.signature(type(self).__init__).parameters if p != "self"]
        return {n: getattr(self, n) for n in names}

    def set_params(self, **params):
        valid = self.get_params()
        for k, v in params.items():
            if k not in valid:
                raise ValueError(f"invalid parameter {k!r} for {type(self).__name__}")
            setattr(self, k, v)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"

    def fit(self, spec, graph=None):
        self.spec_ = check_spec(spec)
        self.graph_ = graph or moral_graph(spec)
        self._build()
        return self

    def _build(self):
        raise NotImplementedError

    def decode_xi(self, xi, counter=None):
        """Decode from precomputed metric coefficients."""
        raise NotImplementedError

    def decode(self, H, Y):
        """List of DecodeResult, one per block (a single result for 2-d input)."""
        check_is_fitted(self)
        Hb, Yb, single = check_channel(self.spec_, H, Y)
        out = [self.decode_xi(metric.compute_xi(self.spec_, h, y)) for h, y in zip(Hb, Yb)]
        return out[0] if single else out

    def predict(self, H, Y):
        """Per-group point indices: shape (N,) for one block, (B, N) for a batch."""
        res = self.decode(H, Y)
        if isinstance(res, list):
            return np.array([r.solution for r in res], dtype=int).reshape(len(res), self.spec_.N)
        return np.array(res.solution, dtype=int)

    def transform(self, H, Y):
        """Decoded real symbol vectors, shape (K,) or (B, K)."""
        a = self.predict(H, Y)
        if a.ndim == 1:
            return self.spec_.symbols(a)
        return np.stack([self.spec_.symbols(row) for row in a])

    def operation_count(self):
        """Operations of one decode; counts do not depend on the channel."""
        check_is_fitted(self)
        xi = metric.XiCoefficients(np.zeros(self.spec_.K), np.ones(self.spec_.K),
                                   np.zeros((self.spec_.K, self.spec_.K)))
        c = metric.OpCount()
        self.decode_xi(xi, c)
        return c


class GDLDecoder(BaseDecoder):
    """Single-vertex GDL schedule with traceback.

    tree: a JunctionTree, or None to build one from the automatic core.
    core: a CoreTree used when no tree is given.
    root: "pair", "min_traceback" or a vertex index.
    """

    def __init__(self, tree=None, core=None, root="pair", partition=True):
        self.tree = tree
        self.core = core
        self.root = root
        self.partition = partition

    def _build(self):
        if self.tree is not None:
            rep = engine.validate_tree(self.tree, self.graph_)
            if rep:
                raise SpecError("invalid junction tree: " + "; ".join(rep))
            self.tree_ = self.tree
        else:
            self.tree_, _ = engine.build_tree(self.spec_, self.core, self.graph_)
        self.order_ = engine.complexity_order(self.tree_, self.spec_.sizes)

    def decode_xi(self, xi, counter=None):
        check_is_fitted(self)
        return engine.decode(self.spec_, xi, self.tree_, counter, self.root, self.partition)


class GDLPamDecoder(BaseDecoder):
    """GDL decoding after removing PAM singletons by hard limiting."""

    def __init__(self, removed=None, root="min_traceback", conditioning_pairs=True):
        self.removed = removed
        self.root = root
        self.conditioning_pairs = conditioning_pairs

    def _build(self):
        self.tree_, self.removed_, _ = pamreduce.build_pam_tree(
            self.spec_, R=self.removed, graph=self.graph_,
            conditioning_pairs=self.conditioning_pairs)
        self.order_ = self.operation_order()

    def operation_order(self):
        sizes = self.spec_.sizes
        orders = [engine.complexity_order(self.tree_, sizes)] if self.tree_ is not None else [1]
        orders += [metric.table_size(self.spec_, self.graph_.neighbors(n)) for n in self.removed_]
        return max(orders)

    def decode_xi(self, xi, counter=None):
        check_is_fitted(self)
        return pamreduce.decode_pam(self.spec_, xi, self.tree_, self.removed_, counter,
                                    self.root, self.graph_)


class CMLDecoder(BaseDecoder):
    """Conditional ML decoding.

    plan: "auto" (cheapest nested plan), "brute", a CmlPlan, or a tuple of
    0-based group indices to condition on at the top level.
    """

    def __init__(self, plan="auto", hard_limit=True, cap=2 ** 24):
        self.plan = plan
        self.hard_limit = hard_limit
        self.cap = cap

    def _build(self):
        spec, g = self.spec_, self.graph_
        if isinstance(self.plan, cml.CmlPlan):
            plan = self.plan
        elif self.plan == "auto":
            plan = cml.plan_auto(spec, g, hard_limit=self.hard_limit)
        elif self.plan == "brute":
            if cml._ksize(spec, range(spec.N)) > self.cap:
                raise SpecError("brute-force search exceeds the enumeration cap")
            plan = cml.CmlPlan("brute", tuple(range(spec.N)))
        else:
            plan = cml.plan_conditional(spec, tuple(self.plan), g, self.hard_limit)
        cml.check_plan(spec, plan, g)
        self.plan_ = plan
        self.order_ = cml.plan_order(spec, plan)

    def decode_xi(self, xi, counter=None):
        check_is_fitted(self)
        return cml.decode_plan(self.spec_, xi, self.plan_, counter)


def make_decoder(name, **params):
    """Decoder by its short name (see DECODER_NAMES)."""
    if name == "gdl":
        return GDLDecoder(**params)
    if name == "gdl-pam":
        return GDLPamDecoder(**params)
    if name == "cml-brute":
        return CMLDecoder(plan="brute", **params)
    if name == "cml-conditional":
        return CMLDecoder(**params)
    raise ValueError(f"unknown decoder {name!r}; choose from {', '.join(DECODER_NAMES)}")
