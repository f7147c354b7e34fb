"""Command-line harness.

Subcommands: ``accuracy``, ``growth``, ``bench``, ``factor``, ``gen``.
Configuration comes from a flat key=value file (``--config``) with
individual flags overriding it. Exit codes: 0 ok, 1 usage or I/O error,
2 tolerance not reached within the rank budget, 3 rank exhausted.
"""

import argparse
import os
import sys

from .errors import DimensionError, ParseError
from .harness import (
    ACCURACY_COLUMNS,
    BENCH_COLUMNS,
    GROWTH_COLUMNS,
    ExperimentConfig,
    accuracy_experiment,
    bench_experiment,
    factor_run,
    growth_experiment,
    load_matrix,
    write_rows,
)
from .skeleton import STATUS_NOT_CONVERGED, STATUS_RANK_EXHAUSTED
from .zoo import (
    MatrixRecipe,
    materialize,
    write_csv_matrix,
    write_csv_trace,
    write_raw_f64,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_CONVERGED = 2
EXIT_RANK_EXHAUSTED = 3

_STATUS_EXIT = {
    STATUS_NOT_CONVERGED: EXIT_NOT_CONVERGED,
    STATUS_RANK_EXHAUSTED: EXIT_RANK_EXHAUSTED,
}


def parse_recipe(text, fmt=None):
    """Parse a matrix recipe string.

    Forms: ``fastdecay:m=500,n=500[,beta=1e-16]``, ``kahan:n=500[,zeta=0.99]``,
    ``chan:n=500``, ``file:path=data.f64,format=raw,m=100,n=80``, or a bare
    file path (format from ``fmt`` or the extension).
    """
    head, _, rest = text.partition(":")
    if head in ("fastdecay", "kahan", "chan", "file"):
        kv = {}
        if rest:
            for item in rest.split(","):
                key, _, val = item.partition("=")
                if not _:
                    raise ValueError(f"recipe parameter {item!r} is not key=value")
                kv[key.strip()] = val.strip()
        kind = head
    else:
        kind, kv = "file", {"path": text}
    args = {"kind": kind}
    for key in ("m", "n"):
        if key in kv:
            args[key] = int(kv[key])
    for key in ("beta", "zeta"):
        if key in kv:
            args[key] = float(kv[key])
    if "path" in kv:
        args["path"] = kv["path"]
    if kv.get("format") or fmt:
        args["format"] = kv.get("format") or fmt
    if kind == "kahan" and "m" not in args:
        args["m"] = args.get("n", 0)
    if kind == "chan" and "m" not in args:
        args["m"] = args.get("n", 0)
    return MatrixRecipe(**args)


def read_config_file(path):
    """Flat key=value config; blank lines and # comments ignored."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            key, eq, val = stripped.partition("=")
            if not eq:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


_CONFIG_TYPES = {
    "matrix": str, "format": str, "sketch": str, "b": int, "p": int,
    "tau": float, "relative": lambda s: s.lower() in ("1", "true", "yes"),
    "trials": int, "seed": int, "max_rank": int, "out": str,
    "threads": int, "zeta": int, "runs": int,
}


def merge_config(args):
    """Flags override config-file values; both override defaults."""
    merged = {}
    if getattr(args, "config", None):
        raw = read_config_file(args.config)
        for key, val in raw.items():
            if key not in _CONFIG_TYPES:
                raise ValueError(f"unknown config key {key!r}")
            merged[key] = _CONFIG_TYPES[key](val)
    for key in _CONFIG_TYPES:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


def build_experiment_config(merged, defaults):
    if "matrix" not in merged:
        raise ValueError("a matrix must be given (--matrix or config file)")
    recipe = parse_recipe(merged["matrix"], merged.get("format"))
    kwargs = dict(defaults)
    for key in ("sketch", "b", "p", "tau", "relative", "trials", "seed",
                "max_rank", "out", "threads", "zeta"):
        if key in merged:
            kwargs[key] = merged[key]
    if "p" not in kwargs:
        # Default oversampling, capped so it stays below the block size.
        kwargs["p"] = min(10, kwargs.get("b", 50) - 1)
    return ExperimentConfig(recipe=recipe, **kwargs)


def _means_path(out):
    if out.endswith(".csv"):
        return out[:-4] + ".means.csv"
    return out + ".means.csv"


def _orientation_comment(transposed):
    return f"orientation={'transposed' if transposed else 'as-given'}"


def cmd_accuracy(args):
    config = build_experiment_config(merge_config(args), {"out": "accuracy.csv"})
    a, sigma, transposed = load_matrix(config, transpose_wide=True)
    rows, (mean_cols, mean_rows) = accuracy_experiment(a, sigma, config)
    comments = (_orientation_comment(transposed),)
    write_rows(config.out, "randskel-accuracy v1", ACCURACY_COLUMNS, rows, comments)
    write_rows(_means_path(config.out), "randskel-accuracy-means v1",
               mean_cols, mean_rows, comments)
    print(f"wrote {len(rows)} rows to {config.out} "
          f"and {len(mean_rows)} means to {_means_path(config.out)}")
    return EXIT_OK


def cmd_growth(args):
    config = build_experiment_config(merge_config(args), {"out": "growth.csv"})
    a, sigma, transposed = load_matrix(config, transpose_wide=True)
    rows, (mean_cols, mean_rows) = growth_experiment(a, sigma, config)
    comments = (_orientation_comment(transposed),)
    write_rows(config.out, "randskel-growth v1", GROWTH_COLUMNS, rows, comments)
    write_rows(_means_path(config.out), "randskel-growth-means v1",
               mean_cols, mean_rows, comments)
    print(f"wrote {len(rows)} rows to {config.out} "
          f"and {len(mean_rows)} means to {_means_path(config.out)}")
    return EXIT_OK


def cmd_bench(args):
    merged = merge_config(args)
    config = build_experiment_config(merged, {"out": "bench.csv", "tau": 1e-8,
                                              "relative": True})
    a, _, transposed = load_matrix(config, transpose_wide=True)
    rows = bench_experiment(a, config, runs=merged.get("runs", 5))
    write_rows(config.out, "randskel-bench v1", BENCH_COLUMNS, rows,
               (_orientation_comment(transposed),))
    print(f"wrote {len(rows)} timings to {config.out}")
    return EXIT_OK


def cmd_factor(args):
    config = build_experiment_config(merge_config(args), {"out": "factor"})
    a, _, _ = load_matrix(config)
    result = factor_run(a, config)
    prefix = config.out
    with open(prefix + ".indices.txt", "w") as fh:
        for idx in result.row_idx:
            fh.write(f"{idx}\n")
    write_raw_f64(prefix + ".w.f64", result.w)
    write_csv_trace(prefix + ".trace.csv", result.trace)
    print(f"rank {result.rank} ({result.status}); wrote {prefix}.indices.txt, "
          f"{prefix}.w.f64 ({result.w.shape[0]}x{result.w.shape[1]} column-major), "
          f"{prefix}.trace.csv")
    return _STATUS_EXIT.get(result.status, EXIT_OK)


def cmd_gen(args):
    merged = merge_config(args)
    if "matrix" not in merged:
        raise ValueError("gen needs --matrix")
    if "out" not in merged:
        raise ValueError("gen needs --out")
    recipe = parse_recipe(merged["matrix"])
    seed = merged.get("seed", 0)
    from .sketching import RngStream

    a, _ = materialize(recipe, RngStream(seed).child(1 << 41))
    out = merged["out"]
    fmt = merged.get("format") or out.rsplit(".", 1)[-1].lower()
    if fmt in ("raw", "f64"):
        write_raw_f64(out, a)
    elif fmt == "csv":
        write_csv_matrix(out, a)
    else:
        raise ValueError(f"gen supports csv or raw output, not {fmt!r}")
    print(f"wrote {a.shape[0]}x{a.shape[1]} matrix to {out} ({fmt})")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="randskel",
        description="Randomized skeletonization experiments and factorization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--matrix", help="matrix recipe or file path")
    common.add_argument("--format", help="file format: mm, idx, raw, csv")
    common.add_argument("--sketch", choices=["gaussian", "srtt", "sparsesign"])
    common.add_argument("--b", type=int, help="block size")
    common.add_argument("--p", type=int, help="residual oversample count")
    common.add_argument("--tau", type=float, help="error tolerance")
    common.add_argument("--relative", action="store_const", const=True,
                        help="interpret tau relative to a sketched ||A||_F")
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--max-rank", dest="max_rank", type=int)
    common.add_argument("--out")
    common.add_argument("--threads", type=int)
    common.add_argument("--zeta", type=int, help="sparse-sign nonzeros per row")

    p_acc = sub.add_parser("accuracy", parents=[common],
                           help="per-iteration error comparison experiment")
    p_acc.set_defaults(func=cmd_accuracy)
    p_gro = sub.add_parser("growth", parents=[common],
                           help="growth-factor ratio experiment")
    p_gro.set_defaults(func=cmd_growth)
    p_ben = sub.add_parser("bench", parents=[common],
                           help="wall-clock medians at matched ranks")
    p_ben.add_argument("--runs", type=int, help="timed runs per method (>= 5)")
    p_ben.set_defaults(func=cmd_bench)
    p_fac = sub.add_parser("factor", parents=[common],
                           help="adaptive factorization of a user matrix")
    p_fac.set_defaults(func=cmd_factor)
    p_gen = sub.add_parser("gen", parents=[common],
                           help="materialize a matrix recipe to a file")
    p_gen.set_defaults(func=cmd_gen)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        threads = getattr(args, "threads", None)
        if threads:
            from threadpoolctl import threadpool_limits

            # BLAS pools crash or thrash when oversubscribed past the
            # physical cores; clamp the requested pin.
            limit = max(1, min(threads, os.cpu_count() or 1))
            with threadpool_limits(limits=limit):
                return args.func(args)
        return args.func(args)
    except (OSError, ValueError, DimensionError, ParseError) as exc:
        print(f"randskel {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
