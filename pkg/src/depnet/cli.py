"""Command-line surface: ingest, learn, sample, oracle, recommend, evaluate, export, serve."""

from __future__ import annotations

import argparse
import http.server
import mimetypes
import sys
import time
from pathlib import Path

from . import msweb
from .data import (
    CaseMatrix,
    DataError,
    ItemVocabulary,
    parse_sparse_pairs,
    parse_uci_web,
    popularity,
    serialize_uci_web,
    split_train_test,
)
from .evaluate import EvalConfig, EvaluationError, cf_evaluate
from .modelio import (
    ModelFormatError,
    ModelMeta,
    bundle_to_dict,
    canonical_json,
    load_bundle,
    load_model,
    save_model,
)
from .network import learn_dependency_network
from .recommend import recommend
from .sampler import GibbsConfig, SamplerError, chain_matrix, exact_stationary, ordered_gibbs_run
from .trees import ScoreConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    # exit code 1 for usage errors (argparse defaults to 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_cases(path: str, fmt: str, n_items: int | None, vocabulary=None):
    data = Path(path).read_bytes()
    if fmt == "uci":
        return parse_uci_web(data, vocabulary=vocabulary)
    if n_items is None:
        raise DataError("--n-items is required for the pairs format")
    matrix = parse_sparse_pairs(data, n_items)
    vocab = vocabulary if vocabulary is not None else ItemVocabulary.generic(n_items)
    return vocab, matrix


def _write_cases(path: str, fmt: str, vocab: ItemVocabulary, matrix: CaseMatrix) -> None:
    if fmt == "uci":
        Path(path).write_bytes(serialize_uci_web(vocab, matrix))
    else:
        lines = []
        for ordinal, case in enumerate(matrix.cases, start=1):
            for j in sorted(case):
                lines.append(f"{ordinal},{j}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_ingest(args) -> int:
    vocab, matrix = _read_cases(args.input, args.format, args.n_items)
    print(f"items\t{matrix.n_items}")
    print(f"cases\t{matrix.n_cases}")
    if matrix.n_cases:
        print(f"mean_items_per_case\t{matrix.mean_items_per_case():.4f}")
    if args.split is not None:
        if not (args.out_train and args.out_test):
            raise DataError("--split requires --out-train and --out-test")
        print(f"seed\t{args.seed}", file=sys.stderr)
        train, test = split_train_test(matrix, args.split, args.seed)
        _write_cases(args.out_train, args.format, vocab, train)
        _write_cases(args.out_test, args.format, vocab, test)
        print(f"train_cases\t{train.n_cases}")
        print(f"test_cases\t{test.n_cases}")
    return EXIT_OK


def cmd_learn(args) -> int:
    vocab, matrix = _read_cases(args.input, args.format, args.n_items)
    cfg = ScoreConfig(kappa=args.kappa)
    started = time.monotonic()
    dn = learn_dependency_network(matrix, cfg, vocabulary=vocab, n_jobs=args.threads)
    elapsed = time.monotonic() - started
    meta = ModelMeta(
        kappa=args.kappa, seed=args.seed, n_cases=matrix.n_cases, checksum=matrix.fingerprint()
    )
    save_model(dn, meta, args.out)
    leaf_counts = [len(t.leaves()) for t in dn.trees]
    print(f"items\t{dn.n_vars}")
    print(f"cases\t{matrix.n_cases}")
    print(f"arcs\t{len(dn.arcs)}")
    print(f"leaves_per_variable\t{','.join(str(c) for c in leaf_counts)}")
    print(f"seed\t{args.seed}", file=sys.stderr)
    print(f"wall_seconds\t{elapsed:.2f}", file=sys.stderr)
    print(f"model\t{args.out}")
    return EXIT_OK


def cmd_sample(args) -> int:
    dn, _meta = load_model(args.model)
    cfg = GibbsConfig(
        seed=args.seed, burn_in=args.burn_in, samples=args.samples, thin=args.thin, init=args.init
    )
    print(f"seed\t{args.seed}", file=sys.stderr)
    result = ordered_gibbs_run(dn, cfg)
    if args.marginals:
        probs = result.marginals()
        for i, item in enumerate(dn.vocabulary.items):
            print(f"{item.item_id}\t{format(probs[i, 1], '.17g')}")
    else:
        for row in result.samples:
            print(" ".join(str(int(v)) for v in row))
    return EXIT_OK


def cmd_oracle(args) -> int:
    dn, _meta = load_model(args.model)
    order = None
    if args.order:
        order = [int(t) for t in args.order.split(",")]
    matrix = chain_matrix(dn, order)
    pi = exact_stationary(matrix)
    n = dn.n_vars
    for idx in range(matrix.n_states):
        bits = format(idx, f"0{n}b")
        print(f"{bits}\t{format(pi[idx], '.17g')}")
    return EXIT_OK


def cmd_recommend(args) -> int:
    dn, _meta = load_model(args.model)
    input_set = set()
    if args.input:
        for token in args.input.split(","):
            input_set.add(dn.vocabulary.dense(int(token)))
    ranking = recommend(dn, input_set)
    entries = ranking.entries[: args.top] if args.top else ranking.entries
    for rank, (item, score) in enumerate(entries):
        meta = dn.vocabulary.items[item]
        print(f"{rank}\t{meta.item_id}\t{meta.title}\t{format(score, '.17g')}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = EvalConfig(
        protocol=args.protocol,
        half_life=args.half_life,
        seed=args.seed,
        min_preferred=args.min_preferred,
    )
    if args.model == "baseline":
        if not args.train:
            raise DataError("--model baseline requires --train")
        vocab, train = _read_cases(args.train, args.format, args.n_items)
        model = popularity(train)
        _vocab, test = _read_cases(args.test, args.format, train.n_items, vocabulary=vocab)
        label = "baseline"
    elif args.model.startswith("dn:"):
        dn, _meta = load_model(args.model[3:])
        model = dn
        _vocab, test = _read_cases(args.test, args.format, dn.n_vars, vocabulary=dn.vocabulary)
        label = args.model
    else:
        raise DataError(f"--model must be 'baseline' or 'dn:<file>', got {args.model!r}")
    print(f"seed\t{args.seed}", file=sys.stderr)
    report = cf_evaluate(model, test, cfg, n_jobs=args.threads)
    print(f"{args.protocol}\t{label}\t{report.score:.4f}\t{report.n_users}\t{report.skipped}")
    if args.per_user:
        with open(args.per_user, "w", encoding="utf-8") as fh:
            fh.write("user\tk\tutility\n")
            for ordinal, k, util in report.per_user:
                fh.write(f"{ordinal}\t{k}\t{format(util, '.17g')}\n")
    return EXIT_OK


def cmd_export_viewer(args) -> int:
    dn, meta = load_model(args.model)
    Path(args.out).write_text(canonical_json(bundle_to_dict(dn, meta)), encoding="ascii")
    print(f"bundle\t{args.out}")
    return EXIT_OK


def _viewer_fallback_page() -> bytes:
    return (
        "<!doctype html><html><head><meta charset='utf-8'>"
        "<title>dependency network viewer</title></head><body>"
        "<p>Viewer assets not bundled. The model is served at "
        "<a href='/model.json'>/model.json</a>; point --assets at a built "
        "viewer distribution to serve the interactive UI.</p>"
        "</body></html>"
    ).encode()


def make_server(bundle_path: str | Path, assets_dir: str | Path | None, port: int):
    """HTTP server for GET /, GET /assets/*, GET /model.json."""
    bundle_bytes = Path(bundle_path).read_bytes()
    load_bundle(bundle_path)  # validate format/version before serving
    assets = Path(assets_dir).resolve() if assets_dir else None

    class Handler(http.server.BaseHTTPRequestHandler):
        def _send(self, code: int, content_type: str, body: bytes):
            self.send_response(code)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):  # noqa: N802 (http.server API)
            path = self.path.split("?", 1)[0]
            if path == "/model.json":
                self._send(200, "application/json", bundle_bytes)
                return
            if path == "/":
                index = assets / "index.html" if assets else None
                if index is not None and index.is_file():
                    self._send(200, "text/html", index.read_bytes())
                else:
                    self._send(200, "text/html", _viewer_fallback_page())
                return
            if path.startswith("/assets/") and assets is not None:
                target = (assets / path[len("/assets/"):]).resolve()
                if target.is_file() and target.is_relative_to(assets):
                    ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
                    self._send(200, ctype, target.read_bytes())
                    return
            self._send(404, "text/plain", b"not found\n")

        def log_message(self, fmt, *log_args):
            sys.stderr.write("serve: " + fmt % log_args + "\n")

    return http.server.ThreadingHTTPServer(("127.0.0.1", port), Handler)


def cmd_serve(args) -> int:
    server = make_server(args.bundle, args.assets, args.port)
    host, port = server.server_address[:2]
    print(f"serving {args.bundle} on http://{host}:{port}/ (ctrl-c stops)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def cmd_fetch_msweb(args) -> int:
    train, test = msweb.fetch(args.dest)
    print(f"train\t{train}")
    print(f"test\t{test}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="depnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, fmt=True):
        if fmt:
            p.add_argument("--format", choices=("uci", "pairs"), default="uci")
            p.add_argument("--n-items", type=int, default=None, help="item count (pairs format)")

    p = sub.add_parser("ingest", help="parse a dataset, print stats, optionally split")
    p.add_argument("input")
    add_common(p)
    p.add_argument("--split", type=float, default=None, help="test fraction in (0,1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-train")
    p.add_argument("--out-test")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("learn", help="learn a dependency network, write a model file")
    p.add_argument("input")
    add_common(p)
    p.add_argument("--kappa", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("sample", help="ordered Gibbs sampling from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=("zeros", "marginal-random"), default="zeros")
    p.add_argument("--marginals", action="store_true", help="emit per-item marginals instead of states")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("oracle", help="exact stationary distribution (small models)")
    p.add_argument("--model", required=True)
    p.add_argument("--order", default=None, help="visit order, e.g. 2,0,1")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("recommend", help="rank items for an input set")
    p.add_argument("--model", required=True)
    p.add_argument("--input", default="", help="comma-separated external item ids")
    p.add_argument("--top", type=int, default=0, help="truncate display (0 = all)")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("evaluate", help="cfaccuracy of a model on a test set")
    p.add_argument("test")
    add_common(p)
    p.add_argument("--model", required=True, help="'baseline' or 'dn:<model file>'")
    p.add_argument("--train", default=None, help="training file (baseline popularity)")
    p.add_argument("--protocol", choices=("allbut1", "given2", "given5", "given10"), default="allbut1")
    p.add_argument("--half-life", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-preferred", type=int, default=1)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--per-user", default=None, help="write per-user TSV here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-viewer", help="export a model to a viewer bundle")
    p.add_argument("model")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_viewer)

    p = sub.add_parser("serve", help="serve a viewer bundle over HTTP")
    p.add_argument("bundle")
    p.add_argument("--port", type=int, default=8341)
    p.add_argument("--assets", default=None, help="built viewer distribution directory")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("fetch-msweb", help="download the anonymous web benchmark dataset")
    p.add_argument("--dest", default=str(msweb.default_dir()))
    p.set_defaults(func=cmd_fetch_msweb)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, EvaluationError, ModelFormatError, SamplerError, OSError) as exc:
        print(f"depnet: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"depnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # invariant violation
        print(f"depnet: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
