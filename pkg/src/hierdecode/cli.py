"""Command-line front end.

Exit status: 0 success, 1 usage error, 2 bad input data, 3 a fast decoder
disagreed with its brute-force reference.
"""
from __future__ import annotations

import argparse
import json
import sys

from .datasets import apply_stop_nodes, load_dataset, save_dataset, synth_generate
from .errors import DataError, InvalidParam, OracleMismatch
from .evaluation import agreement_map, bench, evaluate, make_decoder, smooth_sweep
from .hierarchy import aggregate, read_hierarchy
from .metrics import CostModel, Space, check_reasonable, parse_metric, read_matrix
from .verify import run_all

DEFAULT_DECODERS = ("optimal", "argmax", "topdown", "hie-self", "karthik", "majority",
                    "plurality", "darts:0", "expinfo")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p: argparse.ArgumentParser, hierarchy=True):
    if hierarchy:
        p.add_argument("--hierarchy", required=True, help="parent<TAB>child edge file")
        p.add_argument("--add-stop-nodes", metavar="all|NAME,...",
                       help="give internal nodes an extra '#stop' leaf before use")
    p.add_argument("--metric", help="metric name, e.g. dl, dlc:0.5, wp, zhao, hf:1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hierdecode", description="Optimal decoding for hierarchical classifiers.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a hierarchy and optionally a cost matrix")
    _common(p)
    p.add_argument("--matrix", help="cost/gain grid file (rows follow node ids)")
    p.add_argument("--orientation", choices=("cost", "gain"), default="cost")

    p = sub.add_parser("decode", help="decode a probability file")
    _common(p)
    p.add_argument("--probs", required=True)
    p.add_argument("--decoder", default="optimal")

    p = sub.add_parser("eval", help="mean score of decoders on a labelled dataset")
    _common(p)
    p.add_argument("--probs", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--decoders", default=",".join(DEFAULT_DECODERS))

    p = sub.add_parser("sweep", help="evaluate while smoothing rows toward uniform")
    _common(p)
    p.add_argument("--probs", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--decoders", default="argmax")
    p.add_argument("--lambdas", default="0,0.25,0.5,0.75")
    p.add_argument("--keep-labels", action="store_true",
                   help="keep the original labels instead of resampling them")

    p = sub.add_parser("agreement", help="agreement map of two decoders on a 3-leaf tree")
    _common(p)
    p.add_argument("--decoder-a", default="optimal")
    p.add_argument("--decoder-b", default="majority")
    p.add_argument("--resolution", type=int, default=200)
    p.add_argument("--ppm", help="also write a P3 raster here")

    p = sub.add_parser("bench", help="per-sample decoding time")
    _common(p)
    p.add_argument("--decoder", default="optimal")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--alpha", type=float, default=1.0)

    p = sub.add_parser("synth", help="sample a synthetic labelled dataset")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--labels-output", help="label file (default: OUTPUT with .labels suffix)")

    p = sub.add_parser("verify", help="randomised checks against brute force")
    _common(p, hierarchy=False)
    p.add_argument("--trials", type=int, default=200)
    return parser


def _split(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def _hierarchy(args):
    return apply_stop_nodes(read_hierarchy(args.hierarchy), args.add_stop_nodes)


def _metric(args, required=True):
    if args.metric is None:
        if required:
            raise UsageError("--metric is required for this command")
        return None
    return parse_metric(args.metric)


def _emit(args, text: str):
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _report(args, report):
    _emit(args, report.to_json() + "\n" if args.format == "json" else report.to_text())


def cmd_validate(args):
    h = _hierarchy(args)
    info = {"nodes": h.node_count, "leaves": h.leaf_count, "max_depth": h.max_depth}
    model = None
    if args.matrix:
        model = CostModel.explicit(read_matrix(args.matrix), h, args.orientation, Space.NODES)
    elif args.metric:
        model = CostModel.builtin(parse_metric(args.metric), h, Space.NODES)
    verdict = check_reasonable(model, h) if model is not None else None
    if args.format == "json":
        if verdict is not None:
            info["verdict"] = verdict.tag
            info["witness"] = None if verdict.witness is None else [h.names[i] for i in verdict.witness]
        _emit(args, json.dumps(info, indent=2) + "\n")
    elif verdict is None:
        _emit(args, f"ok: {h.node_count} nodes, {h.leaf_count} leaves, max depth {h.max_depth}\n")
    else:
        extra = "" if verdict.witness is None else \
            " (node {}, leaf {})".format(*(h.names[i] for i in verdict.witness))
        _emit(args, f"{verdict.tag}{extra}\n")


def cmd_decode(args):
    metric = _metric(args, required=args.decoder.partition(":")[0] == "optimal")
    ds = load_dataset(args.hierarchy, args.probs, stop_nodes=args.add_stop_nodes)
    h = ds.hierarchy
    dec = make_decoder(args.decoder, h, metric)
    raw = dec.predict(ds.probs, aggregate(h, ds.probs), args.threads)
    preds = [dec.as_prediction(v) for v in raw]
    if args.format == "json":
        out = json.dumps([p.names(h) for p in preds], indent=2) + "\n"
    else:
        out = "".join(" ".join(p.names(h)) + "\n" for p in preds)
    _emit(args, out)


def cmd_eval(args):
    metric = _metric(args)
    ds = load_dataset(args.hierarchy, args.probs, args.labels, stop_nodes=args.add_stop_nodes)
    _report(args, evaluate(ds, metric, _split(args.decoders), threads=args.threads))


def cmd_sweep(args):
    metric = _metric(args)
    ds = load_dataset(args.hierarchy, args.probs, args.labels, stop_nodes=args.add_stop_nodes)
    try:
        lambdas = [float(x) for x in _split(args.lambdas)]
    except ValueError:
        raise UsageError(f"bad --lambdas {args.lambdas!r}") from None
    report = smooth_sweep(ds, metric, _split(args.decoders), lambdas, seed=args.seed,
                          resample_labels=not args.keep_labels, threads=args.threads)
    _report(args, report)


def cmd_agreement(args):
    h = _hierarchy(args)
    metric = _metric(args, required=False)
    grid = agreement_map(h, args.decoder_a, args.decoder_b, args.resolution, metric)
    if args.ppm:
        with open(args.ppm, "w", encoding="ascii", newline="\n") as f:
            f.write(grid.to_ppm())
    if args.format == "json":
        _emit(args, json.dumps({"resolution": grid.resolution, "points": len(grid.agree),
                                "agreement": grid.fraction}, indent=2) + "\n")
    else:
        _emit(args, grid.to_csv())


def cmd_bench(args):
    h = _hierarchy(args)
    metric = _metric(args)
    _report(args, bench(h, metric, args.decoder, args.n, seed=args.seed, alpha=args.alpha))


def cmd_synth(args):
    h = _hierarchy(args)
    if not args.output:
        raise UsageError("synth needs --output")
    ds = synth_generate(h, args.n, args.alpha, seed=args.seed)
    labels = args.labels_output or _labels_path(args.output)
    save_dataset(ds, args.output, labels)


def _labels_path(path: str) -> str:
    stem = path[:-4] if path.endswith(".csv") else path
    return stem + ".labels"


def cmd_verify(args):
    results = run_all(args.trials, seed=args.seed, strict=False)
    if args.format == "json":
        text = json.dumps([{"suite": r.name, "trials": r.trials, "failures": r.failures,
                            "bound_failures": r.bound_failures} for r in results], indent=2) + "\n"
    else:
        text = "".join(r.line() + "\n" for r in results)
    _emit(args, text)
    bad = [r for r in results if not r.ok]
    if bad:
        raise OracleMismatch("; ".join(r.line() for r in bad))


COMMANDS = {
    "validate": cmd_validate, "decode": cmd_decode, "eval": cmd_eval, "sweep": cmd_sweep,
    "agreement": cmd_agreement, "bench": cmd_bench, "synth": cmd_synth, "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be at least 1")
        COMMANDS[args.command](args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    except InvalidParam as e:
        # unknown metric or decoder names are usage mistakes
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OracleMismatch as e:
        print(f"oracle mismatch: {e}", file=sys.stderr)
        return 3
    except (DataError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
