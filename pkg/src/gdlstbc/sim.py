"""Rayleigh-fading simulation, the brute-force ML oracle and the experiment harness."""

from __future__ import annotations

import csv
import io
import json
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import design, metric
from .design import SpecError
from .estimator import DECODER_NAMES, make_decoder

TIE_GAP = 1e-6
# small constellations at which every catalog code can be enumerated
DESK_PARAMS = {"alamouti": {"q": 2}, "golden_naive": {"q": 2}, "golden_s2": {"q": 2},
               "toeplitz2xT": {"T": 10, "const": "psk", "M": 2},
               "oac4x14": {"const": "psk", "M": 2},
               "cda2x2": {"const": "psk", "M": 8}, "fe3x3": {"const": "psk", "M": 8}}
CSV_COLUMNS = ("code", "snr_db", "trials", "decoder", "agree_rate", "cer",
               "ops_mult", "ops_add", "ops_cmp", "ops_total", "order")


@dataclass
class ChannelRealization:
    H: np.ndarray
    stream: tuple = ()


@dataclass
class OracleResult:
    assignment: tuple
    metric: float  # ||Y - HX||_F^2
    gap: float  # second best minus best


@dataclass
class TrialRecord:
    code: str
    snr_db: float
    sent: tuple
    oracle: OracleResult
    decisions: dict = field(default_factory=dict)  # decoder -> (assignment, f metric)


def sample_channel(n_r, n_t, rng, stream=()):
    if n_r < 1 or n_t < 1:
        raise ValueError("channel dimensions must be positive")
    H = (rng.standard_normal((n_r, n_t)) + 1j * rng.standard_normal((n_r, n_t))) / np.sqrt(2)
    return ChannelRealization(H, tuple(stream))


def average_energy(spec):
    """Codebook mean of ||X||_F^2 = sum_ij E[s_i s_j] Re tr(A_i A_j^H)."""
    A = spec.weights
    gram = np.einsum("irt,jrt->ij", A, A.conj()).real
    means = np.zeros(spec.K)
    moment = np.zeros((spec.K, spec.K))
    for g in spec.groups:
        P = g.signal_set.array()
        idx = list(g.indices)
        means[idx] = P.mean(axis=0)
    # groups are independent: across groups E[s_i s_j] = E[s_i] E[s_j]
    moment[:] = np.outer(means, means)
    for g in spec.groups:
        P = g.signal_set.array()
        idx = list(g.indices)
        moment[np.ix_(idx, idx)] = P.T @ P / len(P)
    return float(np.sum(moment * gram))


def snr_scale(spec, snr_db):
    """Amplitude so that the mean received energy per channel use and antenna is SNR."""
    return float(np.sqrt(10 ** (snr_db / 10) * spec.T / average_energy(spec)))


def transmit(X, H, snr_db, rng, energy=None, T=None, noise=True):
    """Y = H (scale X) + N with unit-variance complex Gaussian noise.

    ``energy`` is the codebook-average ||X||_F^2 (defaults to ||X||_F^2) and
    the scale sets energy * scale^2 / T to the linear SNR. Returns (Y, scale).
    """
    X = np.asarray(X, dtype=complex)
    H = np.asarray(H, dtype=complex)
    if H.shape[1] != X.shape[0]:
        raise ValueError(f"H has {H.shape[1]} columns but X has {X.shape[0]} rows")
    T = T or X.shape[1]
    energy = float(np.linalg.norm(X) ** 2) if energy is None else float(energy)
    scale = np.sqrt(10 ** (snr_db / 10) * T / energy) if energy > 0 else 1.0
    Y = scale * (H @ X)
    if noise:
        shape = Y.shape
        Y = Y + (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    return Y, scale


def oracle_ml(spec, H, Y, cap=design.DEFAULT_ENUM_CAP, book=None, chunk=1 << 14):
    """Exhaustive min of ||Y - HX||_F^2 straight from the codeword matrices."""
    H = np.asarray(H, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    assign, _, X = book if book is not None else design.codebook(spec, cap)
    d = np.empty(len(X))
    for lo in range(0, len(X), chunk):
        R = Y[None] - np.einsum("rn,pnt->prt", H, X[lo:lo + chunk])
        d[lo:lo + chunk] = np.einsum("prt,prt->p", R, R.conj()).real
    k = int(np.argmin(d))
    rest = np.delete(d, k)
    gap = float(rest.min() - d[k]) if rest.size else np.inf
    return OracleResult(tuple(int(a) for a in assign[k]), float(d[k]), gap)


def version_string():
    from . import __version__
    try:
        sha = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True,
                             text=True, timeout=5, cwd=Path(__file__).parent).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        sha = ""
    return f"{__version__}+g{sha}" if sha else __version__


@dataclass
class ExperimentResult:
    rows: list
    config: dict
    ties: int = 0
    max_metric_error: float = 0.0
    disagreements: list = field(default_factory=list)

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow(r)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def as_dict(self):
        return {"version": version_string(), "config": self.config, "rows": self.rows,
                "ties": self.ties, "max_metric_error": self.max_metric_error,
                "disagreements": self.disagreements}

    def to_json(self, path=None):
        text = json.dumps(self.as_dict(), indent=1, default=float)
        if path is not None:
            Path(path).write_text(text)
        return text


DEFAULTS = {"params": {}, "decoders": list(DECODER_NAMES), "snr_db": [10.0],
            "trials": 100, "seed": 0, "n_r": None, "tie_gap": TIE_GAP, "spec_file": None}


def check_config(config):
    cfg = dict(DEFAULTS)
    cfg.update(config or {})
    if not cfg.get("code") and not cfg.get("spec_file"):
        raise SpecError("config needs a code name or a spec_file")
    unknown = set(cfg) - set(DEFAULTS) - {"code"}
    if unknown:
        raise SpecError(f"unknown config keys: {', '.join(sorted(unknown))}")
    bad = [d for d in cfg["decoders"] if d not in DECODER_NAMES]
    if bad:
        raise SpecError(f"unknown decoders: {', '.join(bad)}")
    if isinstance(cfg["snr_db"], (int, float)):
        cfg["snr_db"] = [cfg["snr_db"]]
    cfg["snr_db"] = [float(s) for s in cfg["snr_db"]]
    if int(cfg["trials"]) < 1:
        raise SpecError("trials must be positive")
    cfg["trials"] = int(cfg["trials"])
    cfg["seed"] = int(cfg["seed"])
    return cfg


def load_spec(cfg):
    if cfg.get("spec_file"):
        return design.check(design.CodeSpec.load(cfg["spec_file"]))
    return design.catalog(cfg["code"], **cfg["params"])


def trial_rng(seed, snr_index, trial):
    """Independent substream per (SNR point, trial)."""
    return np.random.default_rng(np.random.SeedSequence([seed, snr_index, trial]))


def run_experiment(config, spec=None, progress=None):
    """Agreement with the oracle, codeword errors and op counts per decoder."""
    cfg = check_config(config)
    spec = spec or load_spec(cfg)
    n_r = int(cfg["n_r"] or spec.n_t)
    book = design.codebook(spec)
    energy = average_energy(spec)
    decs = {name: make_decoder(name).fit(spec) for name in cfg["decoders"]}
    counts = {name: d.operation_count() for name, d in decs.items()}
    name = spec.name or cfg.get("code") or "spec"
    rows, disagreements = [], []
    ties, worst = 0, 0.0
    for si, snr in enumerate(cfg["snr_db"]):
        agree = {n: 0 for n in decs}
        errors = {n: 0 for n in decs}
        untied = 0
        for t in range(cfg["trials"]):
            rng = trial_rng(cfg["seed"], si, t)
            H = sample_channel(n_r, spec.n_t, rng).H
            k = int(rng.integers(len(book[0])))
            Y, scale = transmit(book[2][k], H, snr, rng, energy=energy, T=spec.T)
            He = scale * H
            orc = oracle_ml(spec, He, Y, book=book)
            tied = orc.gap <= cfg["tie_gap"]
            ties += tied
            untied += not tied
            xi = metric.compute_xi(spec, He, Y)
            y2 = float(np.linalg.norm(Y) ** 2)
            sent = tuple(int(a) for a in book[0][k])
            for n, d in decs.items():
                r = d.decode_xi(xi)
                err = abs(r.metric + y2 - orc.metric) / max(1.0, orc.metric)
                worst = max(worst, err)
                errors[n] += r.solution != sent
                if not tied:
                    if r.solution == orc.assignment:
                        agree[n] += 1
                    else:
                        disagreements.append({"decoder": n, "snr_db": snr, "trial": t,
                                              "gap": orc.gap})
            if progress:
                progress(si, t)
        for n, d in decs.items():
            c = counts[n]
            rows.append({"code": name, "snr_db": snr, "trials": cfg["trials"], "decoder": n,
                         "agree_rate": agree[n] / untied if untied else float("nan"),
                         "cer": errors[n] / cfg["trials"], "ops_mult": c.mult,
                         "ops_add": c.add, "ops_cmp": c.cmp, "ops_total": c.total,
                         "order": d.order_})
    echo = {k: v for k, v in cfg.items()}
    return ExperimentResult(rows, echo, int(ties), float(worst), disagreements)
