"""Command-line front end.

Exit codes: 0 ok, 2 bad arguments, 3 invalid code spec or tree, 4 a
verification row failed.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import cml, design, engine, graph, metric, sim, verify
from .design import SpecError
from .estimator import DECODER_NAMES, make_decoder

EXIT_OK, EXIT_ARGS, EXIT_SPEC, EXIT_VERIFY = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _code_params(args):
    params = {}
    for k in ("q", "M", "T"):
        v = getattr(args, k, None)
        if v is not None:
            params[k] = v
    if getattr(args, "const", None):
        params["const"] = args.const
    return params


def load_spec(args):
    if getattr(args, "spec", None):
        try:
            return design.check(design.CodeSpec.load(args.spec))
        except OSError as exc:
            raise SpecError(f"cannot read spec file {args.spec}: {exc}") from exc
    if not getattr(args, "code", None):
        raise UsageError("give --code NAME or --spec FILE")
    return design.catalog(args.code, **_code_params(args))


def _emit(text, out=None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _core(args, spec, g):
    if getattr(args, "tree", None):
        return graph.core_from_file(args.tree, g)
    return graph.core_auto(g, spec.sizes)


# ----------------------------------------------------------------------------
# subcommands

def cmd_analyze(args):
    spec = load_spec(args)
    g = graph.moral_graph(spec)
    cls = graph.classify(g, spec.sizes, args.budget)
    tree, _ = engine.build_tree(spec, _core(args, spec, g), g)
    gdl_order = engine.complexity_order(tree, spec.sizes)
    pam = make_decoder("gdl-pam").fit(spec, g)
    plan = cml.plan_auto(spec, g)
    brute = design.num_codewords(spec)
    verdict = cls.verdict()
    if cls.kind == "fully-interfering":
        verdict += f"; GDL order = |C| = {gdl_order}"
    elif cls.kind == "multigroup" and g.N == len(cls.groups):
        verdict += f"; GDL order |A_n| = {gdl_order}"
    report = {
        "code": spec.name or args.spec,
        "N": spec.N, "K": spec.K,
        "t": [grp.t for grp in spec.groups],
        "signal_set_sizes": list(spec.sizes),
        "moral_edges": len(g.edges),
        "components": [[n + 1 for n in c] for c in graph.components(g)],
        "classification": cls.kind,
        "gamma_c": [n + 1 for n in cls.gamma_c],
        "groups": [[n + 1 for n in c] for c in cls.groups],
        "fast_gdl_decodable": not g.is_complete(),
        "order_gdl": gdl_order,
        "order_gdl_pam": pam.order_,
        "pam_removed": [n + 1 for n in pam.removed_],
        "order_cml": cml.plan_order(spec, plan),
        "order_brute": brute,
        "cml_plan": plan.describe(),
        "verdict": verdict,
    }
    if args.json:
        _emit(json.dumps(report, indent=1), args.out)
        return EXIT_OK
    lines = [f"code: {report['code']}  N={spec.N} K={spec.K} t={report['t']}",
             f"moral graph: {len(g.edges)} edges, components {report['components']}",
             f"verdict: {verdict}",
             f"fast GDL decodable: {'yes' if report['fast_gdl_decodable'] else 'no'}",
             f"orders: GDL {gdl_order}, GDL with PAM removal {pam.order_}, "
             f"CML {report['order_cml']}, brute force {brute}",
             "CML plan:", plan.describe()]
    _emit("\n".join(lines), args.out)
    return EXIT_OK


def cmd_tree(args):
    spec = load_spec(args)
    g = graph.moral_graph(spec)
    if args.kind == "moral":
        text = g.to_dot()
    else:
        core = _core(args, spec, g)
        text = core.to_dot() if args.kind == "core" else graph.attach_tiers(core, g, spec.sizes).to_dot()
    _emit(text, args.out)
    return EXIT_OK


def _random_block(spec, rng, snr_db, n_r=None):
    n_r = n_r or spec.n_t
    H = sim.sample_channel(n_r, spec.n_t, rng).H
    a = tuple(int(rng.integers(k)) for k in spec.sizes)
    X = spec.codeword(spec.symbols(a))
    Y, scale = sim.transmit(X, H, snr_db, rng, energy=sim.average_energy(spec), T=spec.T)
    return scale * H, Y, a


def _decoders(args):
    names = args.decoder or list(DECODER_NAMES)
    bad = [n for n in names if n not in DECODER_NAMES]
    if bad:
        raise UsageError(f"unknown decoder(s) {', '.join(bad)}")
    return names


def cmd_count(args):
    spec = load_spec(args)
    g = graph.moral_graph(spec)
    rng = np.random.default_rng(args.seed)
    H, Y, _ = _random_block(spec, rng, 10.0)
    xi = metric.compute_xi(spec, H, Y)
    rows = []
    for name in _decoders(args):
        if name == "cml-brute" and design.num_codewords(spec) > args.cap:
            continue
        d = make_decoder(name).fit(spec, g)
        c = metric.OpCount()
        d.decode_xi(xi, c)
        closed = cml.plan_cost(spec, d.plan_) if name.startswith("cml") else None
        rows.append({"decoder": name, "mult": c.mult, "add": c.add, "cmp": c.cmp,
                     "total": c.total, "order": d.order_, "closed_form": closed})
    uni = metric.uniform_size(spec)
    if uni is not None:
        t, Q = uni
        q = Q ** (1.0 / t)
        rows.append({"decoder": "brute closed form", "total": cml.cml_formula(spec.N, t, q),
                     "closed_form": cml.cml_formula(spec.N, t, q)})
        if g.is_complete():
            rows.append({"decoder": "GDL closed form (full interference)",
                         "total": cml.gdl_formula(spec.N, t, q),
                         "closed_form": cml.gdl_formula(spec.N, t, q)})
    if args.json:
        _emit(json.dumps(rows, indent=1), args.out)
        return EXIT_OK
    lines = [f"{'decoder':<38}{'total':>12}{'order':>10}  closed form"]
    for r in rows:
        cf = r.get("closed_form")
        mark = "" if cf is None else f"{cf}  {'PASS' if cf == r['total'] else 'FAIL'}"
        lines.append(f"{r['decoder']:<38}{r['total']:>12}{r.get('order', ''):>10}  {mark}")
    _emit("\n".join(lines), args.out)
    bad = any(r.get("closed_form") is not None and r["closed_form"] != r["total"] for r in rows)
    return EXIT_VERIFY if bad else EXIT_OK


def _read_block(path, spec):
    with open(path) as fh:
        d = json.load(fh)
    try:
        H = np.array([[complex(*v) for v in row] for row in d["H"]])
        Y = np.array([[complex(*v) for v in row] for row in d["Y"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed block file {path}: {exc}") from exc
    return H, Y


def cmd_decode(args):
    spec = load_spec(args)
    g = graph.moral_graph(spec)
    sent = None
    if args.input:
        H, Y = _read_block(args.input, spec)
    else:
        H, Y, sent = _random_block(spec, np.random.default_rng(args.seed), args.snr[0])
    out = {"code": spec.name, "decoders": {}}
    if sent is not None:
        out["sent"] = list(sent)
    for name in _decoders(args):
        if name == "cml-brute" and design.num_codewords(spec) > args.cap:
            continue
        d = make_decoder(name).fit(spec, g)
        try:
            r = d.decode(H, Y)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        out["decoders"][name] = r.as_dict(spec)
    _emit(json.dumps(out, indent=1), args.out)
    return EXIT_OK


def cmd_simulate(args):
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
    if args.code:
        cfg["code"] = args.code
    if args.spec:
        cfg["spec_file"] = args.spec
    params = _code_params(args)
    if params:
        cfg["params"] = {**cfg.get("params", {}), **params}
    for key, val in (("trials", args.trials), ("seed", args.seed_given)):
        if val is not None:
            cfg[key] = val
    if args.snr_given:
        cfg["snr_db"] = args.snr
    if args.decoder:
        cfg["decoders"] = args.decoder
    res = sim.run_experiment(cfg)
    if args.out:
        res.to_csv(args.out)
    if args.json:
        _emit(res.to_json())
    elif not args.out:
        _emit(res.to_csv())
    return EXIT_OK


def cmd_verify_formulas(args):
    rows = verify.reproduction_rows()
    if args.json:
        _emit(json.dumps([{"label": r.label, "expected": r.expected, "got": r.got,
                           "pass": r.ok} for r in rows], indent=1), args.out)
    else:
        _emit("\n".join(r.line() for r in rows), args.out)
    return EXIT_OK if all(r.ok for r in rows) else EXIT_VERIFY


# ----------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _code_args(p):
    p.add_argument("--code", choices=design.CATALOG_NAMES, help="catalog code")
    p.add_argument("--spec", help="code spec JSON file")
    p.add_argument("--q", type=int, help="PAM size")
    p.add_argument("--M", type=int, help="complex constellation size")
    p.add_argument("--const", choices=("qam", "psk"), help="complex constellation")
    p.add_argument("--T", type=int, help="delay of the Toeplitz code")


def build_parser():
    p = _Parser(prog="gdlstbc", description="GDL and conditional ML decoding of linear STBCs")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    a = sub.add_parser("analyze", help="moral graph, decodability verdict and orders")
    _code_args(a)
    a.add_argument("--tree", help="core JSON file (1-based variable lists)")
    a.add_argument("--budget", type=int, help="largest conditioning set to search")

    t = sub.add_parser("tree", help="DOT of the moral graph, core or junction tree")
    _code_args(t)
    t.add_argument("--tree", help="core JSON file")
    t.add_argument("--kind", choices=("moral", "core", "jtree"), default="jtree")

    for name, helptext in (("count", "instrumented operation counts per decoder"),
                           ("decode", "decode one block and print the result as JSON")):
        c = sub.add_parser(name, help=helptext)
        _code_args(c)
        c.add_argument("--decoder", action="append", help="decoder name (repeatable)")
        c.add_argument("--cap", type=int, default=2 ** 20, help="brute-force size limit")
        if name == "decode":
            c.add_argument("--input", help="JSON file with H and Y as [re, im] pairs")

    s = sub.add_parser("simulate", help="oracle agreement and op counts over random trials")
    _code_args(s)
    s.add_argument("--config", help="experiment JSON; flags override it")
    s.add_argument("--trials", type=int)
    s.add_argument("--decoder", action="append")

    sub.add_parser("verify_formulas", help="reproduce the published operation counts")

    for sp in sub.choices.values():
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--snr", type=float, nargs="+", default=None, help="SNR in dB")
        sp.add_argument("--out", help="output file")
        sp.add_argument("--json", action="store_true", help="machine-readable output")
    return p


COMMANDS = {"analyze": cmd_analyze, "tree": cmd_tree, "count": cmd_count,
            "decode": cmd_decode, "simulate": cmd_simulate,
            "verify_formulas": cmd_verify_formulas}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
        args.seed_given = args.seed
        args.snr_given = args.snr is not None
        args.seed = 0 if args.seed is None else args.seed
        args.snr = args.snr or [10.0]
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except SpecError as exc:
        print(f"invalid spec: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":
    sys.exit(main())
