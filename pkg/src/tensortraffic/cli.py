"""Command-line front end.

One binary, subcommand style. Machine-readable output (JSON, or CSV where a
table is natural) goes to stdout and optionally to --out; diagnostics go to
stderr. Exit codes: 0 success, 2 invalid arguments, 3 resource limit,
4 numerical failure. All randomness flows from --seed, so identical
invocations produce byte-identical output.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .errors import (InvalidArgumentError, NumericalFailureError,
                     ResourceLimitError, TensorTrafficError)
from .graphs import (LinearGraph, canonical_form, graph_from_json,
                     load_graph, minimal_graph, quotient)
from .invariants import (classify_labeling, cutting_edges, forest_of_tec,
                         is_forest_of_cacti, is_well_oriented, leaf_count)
from .graphs import component_count
from .operands import StateSpec, TensorOperand
from .partitions import SetPartition, enumerate_partitions, mobius
from .traces import (contraction_plan, decompose_invariant_state, graph_trace,
                     injective_graph_trace, reconstruction_value, tau_trace,
                     zeta_trace)
from .words import StarWord, is_trivial
from .haar import haar_limit_injective, predict_freeness_limit
from .sampling import (RngStream, mc_run, norm_absorption_demo,
                       sample_haar_unitary)
from .characters import (Signature, character_reference,
                         conditional_expectation_sd, leg_permutation,
                         normalized_character)

MC_CSV_COLUMNS = ("N", "estimate_re", "estimate_im", "stderr", "variance",
                  "samples")
CHARACTER_CSV_COLUMNS = ("N", "mean_abs", "mean_re", "mean_im", "stderr",
                         "ref_error", "samples")
AMALGAM_CSV_COLUMNS = ("N", "norm_mean", "stderr", "samples")


def _emit(args, text: str):
    sys.stdout.write(text)
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _json_text(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in row))
    return "\n".join(lines) + "\n"


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise InvalidArgumentError(f"expected comma-separated integers: {text!r}") \
            from exc


def _load_operand(path: str, n_hint=None) -> TensorOperand:
    """Operand file: .npy stack of K complex matrices, or a JSON list of
    matrices whose entries are numbers or [re, im] pairs.
    """
    if not os.path.exists(path):
        raise InvalidArgumentError(f"operand file not found: {path}")
    if path.endswith(".npy"):
        arr = np.load(path)
        if arr.ndim == 2:
            arr = arr[None]
        return TensorOperand.factored(list(np.asarray(arr, dtype=np.complex128)))
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    mats = []
    for entry in doc:
        rows = []
        for row in entry:
            rows.append([complex(v[0], v[1]) if isinstance(v, list) else complex(v)
                         for v in row])
        mats.append(np.array(rows, dtype=np.complex128))
    return TensorOperand.factored(mats)


def _state_for(name: str, k: int, n: int):
    if name == "tracial":
        return StateSpec("tracial", k=k, n=n)
    if name in ("entangled", "max_entangled_vector"):
        return StateSpec("max_entangled_vector", k=k, n=n)
    if name in ("diagonal", "diagonal_uniform"):
        return StateSpec("diagonal_uniform", k=k, n=n)
    if name.endswith(".json"):
        with open(name, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if int(doc["K"]) != k:
            raise InvalidArgumentError("coefficient file K does not match blocks")
        coeffs = {SetPartition.from_string(rgs): complex(v[0], v[1])
                  for rgs, v in doc["coefficients"].items()}
        return StateSpec("elementary_combination", k=k, n=n, coeffs=coeffs)
    raise InvalidArgumentError(f"unknown state {name!r}")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _cmd_trace(args) -> int:
    graph, labels = load_graph(args.graph)
    operand = _load_operand(args.operand)
    letters = _parse_ints(args.letters) if args.letters else None
    if args.injective:
        value = injective_graph_trace(graph, operand, letters)
    elif args.zeta:
        value = zeta_trace(graph, operand, letters)
    elif args.tau:
        value = tau_trace(graph, operand, letters)
    else:
        value = graph_trace(graph, operand, letters)
    payload = {
        "value_re": value.real, "value_im": value.imag,
        "L": leaf_count(graph), "c": component_count(graph),
        "plan_width": contraction_plan(graph).width,
    }
    _emit(args, _json_text(payload))
    return 0


def _cmd_invariants(args) -> int:
    graph, labels = load_graph(args.graph)
    forest = forest_of_tec(graph)
    payload = {
        "leaf_count": leaf_count(graph),
        "bridges": sorted(cutting_edges(graph)),
        "tec_components": [sorted(c) for c in forest.components],
        "components": component_count(graph),
        "cactus": is_forest_of_cacti(graph),
        "well_oriented": is_well_oriented(graph),
    }
    if labels is not None:
        payload["validity"] = classify_labeling(graph, labels[0], labels[1])
    _emit(args, _json_text(payload))
    return 0


def _cmd_mobius(args) -> int:
    parts = enumerate_partitions(args.n)
    bottom = SetPartition.discrete(args.n)
    rows = [{"partition": pi.to_string(), "blocks": pi.num_blocks,
             "mobius_from_bottom": mobius(bottom, pi)} for pi in parts]
    if args.format == "csv":
        _emit(args, _csv_text(("partition", "blocks", "mobius_from_bottom"),
                              [(r["partition"].replace(",", ";"), r["blocks"],
                                r["mobius_from_bottom"]) for r in rows]))
    else:
        _emit(args, _json_text({"n": args.n, "count": len(rows),
                                "partitions": rows}))
    return 0


def _cmd_decompose(args) -> int:
    state = _state_for(args.state, args.k, args.n)
    coeffs = decompose_invariant_state(state, args.k, args.n, seed=args.seed)
    rng = RngStream(args.seed, 10 ** 6).generator()
    worst = 0.0
    for _ in range(5):
        probe = TensorOperand.factored(
            [rng.standard_normal((args.n, args.n))
             + 1j * rng.standard_normal((args.n, args.n))
             for _ in range(args.k)])
        from .traces import apply_state
        worst = max(worst, abs(apply_state(state, probe)
                               - reconstruction_value(coeffs, probe)))
    if worst > 1e-9:
        raise NumericalFailureError(
            f"reconstruction residual {worst:.2e} exceeds 1e-9")
    payload = {
        "K": args.k, "N": args.n,
        "coefficients": {pi.to_string(): [c.real, c.imag]
                         for pi, c in sorted(coeffs.items(),
                                             key=lambda kv: kv[0].rgs)},
        "reconstruction_residual": worst,
    }
    _emit(args, _json_text(payload))
    return 0


def _cmd_predict(args) -> int:
    word = StarWord.parse(args.word)
    if args.graph:
        graph, _ = load_graph(args.graph)
    else:
        k = sum(_parse_ints(args.blocks))
        graph = LinearGraph(1, tuple((0, 0) for _ in range(k)))
    k1, k2, k3 = _parse_ints(args.blocks)
    cert = predict_freeness_limit(word, graph, k1, k2, k3,
                                  include_variance_graph=args.variance)
    _emit(args, _json_text(cert.to_json()))
    return 0


def _cmd_limit(args) -> int:
    graph, labels = load_graph(args.graph)
    if labels is None:
        raise InvalidArgumentError("the limit command needs edge labels")
    delta, eps = labels
    validity = classify_labeling(graph, delta, eps)
    coeff = haar_limit_injective(graph, delta, eps)
    payload = {"validity": validity, "coefficient": str(coeff),
               "value": float(coeff), "components": component_count(graph)}
    _emit(args, _json_text(payload))
    return 0


def _cmd_mc(args) -> int:
    k1, k2, k3 = _parse_ints(args.blocks)
    k = k1 + k2 + k3
    word = StarWord.parse(args.word)
    dims = _parse_ints(args.dims)
    if sorted(dims) != dims or len(set(dims)) != len(dims):
        raise InvalidArgumentError("--dims must be strictly increasing")
    rows = []
    for n in dims:
        state = _state_for(args.state, k, n)
        expect, variance = mc_run(state, word, (k1, k2, k3), n, args.samples,
                                  seed=args.seed, v_mode=args.v_mode,
                                  threads=args.threads)
        rows.append((n, float(expect.estimate.real), float(expect.estimate.imag),
                     float(expect.stderr), float(variance.estimate.real),
                     args.samples))
    if args.format == "json":
        _emit(args, _json_text({"word": word.to_string(),
                                "blocks": [k1, k2, k3],
                                "state": args.state, "seed": args.seed,
                                "rows": [dict(zip(MC_CSV_COLUMNS, r))
                                         for r in rows]}))
    else:
        _emit(args, _csv_text(MC_CSV_COLUMNS, rows))
    return 0


def _cmd_character(args) -> int:
    lam = tuple(_parse_ints(args.lam)) if args.lam else ()
    mu = tuple(_parse_ints(args.mu)) if args.mu else ()
    sig = Signature(lam, mu)
    word = StarWord.parse(args.word) if args.word else None
    rows = []
    for n in _parse_ints(args.dims):
        base = RngStream(args.seed)
        vals = np.empty(args.samples, dtype=np.complex128)
        err = 0.0
        for s in range(args.samples):
            rng = base.child(s).generator()
            if word is None:
                u = sample_haar_unitary(n, rng)
            else:
                k = word.alphabet
                us = [sample_haar_unitary(n, rng) for _ in range(k)]
                # letters act as U_1..U_K and their entrywise conjugates
                u = np.eye(n, dtype=np.complex128)
                for idx, star in word.letters:
                    m = us[(idx - 1) % k] if idx <= k else np.conj(us[idx - k - 1])
                    u = u @ (m.conj().T if star else m)
            chi = normalized_character(sig, u)
            vals[s] = chi
            err += abs(chi - character_reference(sig, u))
        mean = vals.mean()
        stderr = float(np.sqrt(vals.real.var(ddof=1) / args.samples
                               + vals.imag.var(ddof=1) / args.samples)) \
            if args.samples > 1 else 0.0
        rows.append((n, float(np.mean(np.abs(vals))), float(mean.real),
                     float(mean.imag), stderr, float(err / args.samples),
                     args.samples))
    if args.format == "json":
        _emit(args, _json_text({"lambda": list(lam), "mu": list(mu),
                                "word": args.word, "seed": args.seed,
                                "rows": [dict(zip(CHARACTER_CSV_COLUMNS, r))
                                         for r in rows]}))
    else:
        _emit(args, _csv_text(CHARACTER_CSV_COLUMNS, rows))
    return 0


def _cmd_amalgam(args) -> int:
    word = StarWord.parse(args.word)
    if is_trivial(word):
        raise InvalidArgumentError("the probe word is trivial")
    d = args.d
    rows = []
    for n in _parse_ints(args.dims):
        base = RngStream(args.seed)
        norms = np.empty(args.samples)
        for s in range(args.samples):
            rng = base.child(s).generator()
            us = [sample_haar_unitary(n, rng) for _ in range(word.alphabet)]
            prod = None
            for idx, star in word.letters:
                u = us[idx - 1].conj().T if star else us[idx - 1]
                x = np.eye(1, dtype=np.complex128)
                for _ in range(d):
                    x = np.kron(x, u)
                ex = conditional_expectation_sd(
                    TensorOperand.factored([u] * d), d, n)
                centered = x - ex.to_dense()
                prod = centered if prod is None else prod @ centered
            projected = conditional_expectation_sd(prod, d, n)
            vec = np.array(list(projected.coefficients.values()))
            norms[s] = float(np.linalg.norm(vec))
        rows.append((n, float(norms.mean()),
                     float(norms.std(ddof=1) / np.sqrt(args.samples))
                     if args.samples > 1 else 0.0,
                     args.samples))
    if args.format == "json":
        _emit(args, _json_text({"word": word.to_string(), "d": d,
                                "seed": args.seed,
                                "rows": [dict(zip(AMALGAM_CSV_COLUMNS, r))
                                         for r in rows]}))
    else:
        _emit(args, _csv_text(AMALGAM_CSV_COLUMNS, rows))
    return 0


def _cmd_normdemo(args) -> int:
    report = norm_absorption_demo(args.letters, args.n, args.mode,
                                  seed=args.seed)
    _emit(args, _json_text(report.to_json()))
    return 0


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest
    ok, lines = run_selftest()
    _emit(args, "".join(line + "\n" for line in lines))
    if not ok:
        raise NumericalFailureError("selftest failed")
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tensortraffic",
        description="Graph traces on tensor matrix spaces and Monte-Carlo "
                    "freeness checks for tensor products of Haar unitaries.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_default="json"):
        p.add_argument("--out", help="also write the primary output to a file")
        p.add_argument("--format", choices=("json", "csv"), default=fmt_default,
                       help="primary output format")

    p = sub.add_parser("trace", help="evaluate a graph trace on an operand")
    p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--operand", required=True,
                   help="operand file (.npy stack or JSON matrix list)")
    p.add_argument("--letters", help="comma-separated edge-to-factor map")
    p.add_argument("--injective", action="store_true",
                   help="restrict to injective vertex labelings")
    p.add_argument("--zeta", action="store_true",
                   help="scale by N^(-L/2)")
    p.add_argument("--tau", action="store_true",
                   help="scale by N^(-c)")
    common(p)
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("invariants", help="structural invariants of a graph")
    p.add_argument("--graph", required=True)
    common(p)
    p.set_defaults(func=_cmd_invariants)

    p = sub.add_parser("mobius", help="Möbius function table over partitions")
    p.add_argument("--n", type=int, required=True, help="ground-set size")
    common(p)
    p.set_defaults(func=_cmd_mobius)

    p = sub.add_parser("decompose",
                       help="elementary-form coefficients of an invariant state")
    p.add_argument("--state", required=True,
                   help="tracial | entangled | diagonal | coeffs.json")
    p.add_argument("--k", type=int, required=True, help="number of legs")
    p.add_argument("--n", type=int, required=True, help="matrix dimension")
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("predict",
                       help="vanishing certificate for a word of tensor unitaries")
    p.add_argument("--word", required=True, help='e.g. "1,2,1*,2*"')
    p.add_argument("--blocks", required=True, help="K1,K2,K3")
    p.add_argument("--graph", help="base graph JSON (default: loops)")
    p.add_argument("--variance", action="store_true",
                   help="analyze the doubled graph of the variance pipeline")
    common(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("limit",
                       help="exact Haar limit of a labeled graph's injective trace")
    p.add_argument("--graph", required=True, help="graph JSON with labels")
    common(p)
    p.set_defaults(func=_cmd_limit)

    p = sub.add_parser("mc", help="Monte-Carlo moments of word tensors")
    p.add_argument("--state", required=True,
                   help="tracial | entangled | diagonal | coeffs.json")
    p.add_argument("--word", required=True)
    p.add_argument("--blocks", required=True, help="K1,K2,K3")
    p.add_argument("--dims", required=True, help="strictly increasing N list")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--v-mode", choices=("perm", "haar"), default="perm",
                   help="third-block family: permutation tensors or Haar")
    p.add_argument("--threads", type=int, default=max(1, os.cpu_count() or 1),
                   help="worker threads (results do not depend on this)")
    common(p, fmt_default="csv")
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("character",
                       help="normalized rational characters on Haar samples")
    p.add_argument("--lambda", dest="lam", default="",
                   help="decreasing positive parts, e.g. 2,1")
    p.add_argument("--mu", dest="mu", default="")
    p.add_argument("--dims", required=True)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--word", help="optional word over U letters (conjugates "
                                  "addressed as letters K+1..2K)")
    common(p, fmt_default="csv")
    p.set_defaults(func=_cmd_character)

    p = sub.add_parser("amalgam",
                       help="conditional-expectation probe of centered tensor words")
    p.add_argument("--d", type=int, required=True, help="tensor power (<= 4)")
    p.add_argument("--word", required=True)
    p.add_argument("--dims", required=True)
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    common(p, fmt_default="csv")
    p.set_defaults(func=_cmd_amalgam)

    p = sub.add_parser("normdemo", help="operator-norm absorption demo")
    p.add_argument("--letters", "--L", dest="letters", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=("haar_pair", "conjugate_pair"),
                   required=True)
    p.add_argument("--seed", type=int, default=0)
    common(p)
    p.set_defaults(func=_cmd_normdemo)

    p = sub.add_parser("selftest", help="run the exact-identity suite")
    common(p)
    p.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except TensorTrafficError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
