"""Command-line interface.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from dataclasses import asdict
from importlib import metadata
from pathlib import Path

import numpy as np

from rcit import citest, discovery, evaluation, synth
from rcit.data import DataMatrix
from rcit.exceptions import AccuracyError, InvalidInputError

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    pass


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover
        return "0+unknown"


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _manifest(args: argparse.Namespace, started: str) -> dict:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    return {
        "command": args.command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "version": _version(),
        "started": started,
        "finished": _now(),
    }


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default)
    if out:
        Path(out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o)}")


def _int_list(text: str) -> list[int]:
    """Parse ``"1,2,5"`` or ``"1..10"``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _names(text: str | None) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()] if text else []


def _tests(text: str) -> list[str]:
    tests = _names(text)
    if not tests:
        raise InputError("empty test list")
    for t in tests:
        if t.lower() not in ("rcot", "rcit", "fisher-z"):
            raise InputError(f"unknown test {t!r}")
    return [t.lower() for t in tests]


def _read(path: str) -> DataMatrix:
    if not Path(path).is_file():
        raise InputError(f"no such file: {path}")
    return DataMatrix.read_csv(path)


def _config(args) -> citest.CITestConfig:
    return citest.CITestConfig(
        num_features_xy=args.num_f, num_features_z=args.num_fz,
        approx_method=args.approx, seed=args.seed, num_permutations=args.perms,
    )


def cmd_test(args) -> int:
    started = _now()
    data = _read(args.data)
    x = data.columns(_names(args.x))
    y = data.columns(_names(args.y))
    z_names = _names(args.z)
    z = data.columns(z_names) if z_names else None
    method = args.method.lower()
    if method == "fisher-z" and (x.shape[1] != 1 or y.shape[1] != 1):
        raise InputError("fisher-z needs single x and y columns")
    res = citest.run_test(method, x, y, z, _config(args))
    out = {
        "statistic": res.statistic,
        "p_value": res.p_value,
        "method": res.method,
        "approx": res.approx,
        "n": res.n,
        "eigenvalue_count": len(res.eigenvalues),
        "fallback_flag": res.fallback_flag,
        "elapsed_ms": 1000.0 * res.elapsed,
        "seed": args.seed,
        "manifest": _manifest(args, started),
    }
    _emit(out, args.out)
    return EXIT_OK


def cmd_synth(args) -> int:
    started = _now()
    if args.n < 2:
        raise InputError("n must be >= 2")
    rng = np.random.default_rng(args.seed)
    meta: dict = {"generator": args.generator}
    if args.generator in ("pnl-null", "pnl-alt"):
        if args.k < 1:
            raise InputError("k must be >= 1")
        funcs = (synth.sample_nonlinearity(rng), synth.sample_nonlinearity(rng))
        gen = synth.gen_pnl_null if args.generator == "pnl-null" else synth.gen_pnl_alt
        x, y, z = gen(args.n, args.k, rng, funcs)
        values = np.hstack([x, y, z])
        names = ["X", "Y"] + [f"Z{i + 1}" for i in range(args.k)]
        meta.update({"n": args.n, "k": args.k, "nonlinearities": list(funcs)})
    else:
        if args.v < 2 or not 0 < args.en <= args.v - 1:
            raise InputError("need v >= 2 and 0 < en <= v - 1")
        dag = synth.gen_random_dag(args.v, args.en, rng)
        values, tags = synth.simulate_dag_data(dag, args.n, args.nonlinear, rng)
        names = list(dag.vertex_names)
        meta.update({"n": args.n, "v": args.v, "expected_neighbors": args.en,
                     "nonlinearities": tags, "dag": discovery.dag_to_json(dag)})
        if args.latents or args.selection:
            values, lat = synth.apply_latent_and_selection(
                values, dag, rng,
                num_latent=None if args.latents else 0,
                num_selection=None if args.selection else 0)
            names = [names[i] for i in lat["observed"]]
            meta["latent_selection"] = lat
    DataMatrix(values, tuple(names)).to_csv(args.out)
    meta["columns"] = names
    meta["manifest"] = _manifest(args, started)
    _emit(meta, str(args.out) + ".json")
    return EXIT_OK


def _suite_output(reports, args, started) -> dict:
    return {"reports": [r.to_dict() for r in reports], "manifest": _manifest(args, started)}


def cmd_calibrate(args) -> int:
    started = _now()
    reports = evaluation.run_calibration_suite(
        _tests(args.tests), _int_list(args.n), _int_list(args.k), args.trials, args.seed,
        args.approx, args.threads)
    _emit(_suite_output(reports, args, started), args.out)
    return EXIT_OK


def cmd_power(args) -> int:
    started = _now()
    reports = evaluation.run_power_suite(
        _tests(args.tests), _int_list(args.n), _int_list(args.k), args.trials, args.seed,
        args.approx, args.threads)
    _emit(_suite_output(reports, args, started), args.out)
    return EXIT_OK


def cmd_perm(args) -> int:
    started = _now()
    sizes = _int_list(args.n)
    if len(sizes) != 1:
        raise InputError("perm takes a single --n")
    reports = evaluation.run_permutation_calibration(
        _tests(args.tests), sizes[0], _int_list(args.k), args.trials, args.seed,
        args.approx, args.threads)
    _emit(_suite_output(reports, args, started), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    started = _now()
    rows = evaluation.run_runtime_benchmark(_tests(args.tests), _int_list(args.n), args.repeats,
                                            args.seed)
    _emit({"rows": [asdict(r) for r in rows], "manifest": _manifest(args, started)}, args.out)
    return EXIT_OK


def cmd_bench_null(args) -> int:
    started = _now()
    if args.weights == "random":
        sets = evaluation.random_weight_sets(args.sets, args.seed)
    else:
        sets = [[float(w) for w in _names(args.weights)]]
    rows = evaluation.null_accuracy_table(sets, draws=args.draws, seed=args.seed)
    _emit({"rows": rows, "manifest": _manifest(args, started)}, args.out)
    return EXIT_OK


def cmd_discover(args) -> int:
    started = _now()
    data = _read(args.data)
    truth = None
    if args.truth:
        if not Path(args.truth).is_file():
            raise InputError(f"no such file: {args.truth}")
        obj = json.loads(Path(args.truth).read_text())
        try:
            truth = discovery.dag_from_json(obj.get("dag", obj))
        except (KeyError, ValueError) as exc:
            raise InputError(f"invalid truth graph: {exc}") from None
        if truth.vertex_names != list(data.column_names):
            raise InputError("truth graph vertices do not match data columns; "
                             "SHD scoring needs every vertex observed, without latents")
    cfg = citest.CITestConfig(approx_method=args.approx, seed=args.seed)
    graph, sepsets = discovery.pc(discovery.data_ci(data.values, args.test, cfg), data.p,
                                  args.alpha, list(data.column_names))
    out = {"graph": graph.to_json(), "alpha": args.alpha, "test": args.test,
           "manifest": _manifest(args, started)}
    if truth is not None:
        out["shd"] = discovery.structural_hamming_distance(graph, discovery.true_cpdag(truth))
    if args.csv:
        Path(args.csv).write_text(graph.to_csv())
    _emit(out, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rcit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def ci_opts(p):
        p.add_argument("--approx", default="lpb", type=str.upper, choices=citest.APPROX_METHODS)
        p.add_argument("--seed", type=int, default=0)

    def suite_opts(p, n_default):
        p.add_argument("--tests", default="rcot,rcit")
        p.add_argument("--n", default=n_default, help="comma list or a..b range")
        p.add_argument("--k", default="1", help="comma list or a..b range")
        p.add_argument("--trials", type=int, default=200)
        p.add_argument("--threads", type=int, default=evaluation.default_threads())
        p.add_argument("--out")
        ci_opts(p)

    p = sub.add_parser("test", help="run one CI test on CSV columns")
    p.add_argument("--data", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--z")
    p.add_argument("--method", default="rcot", type=str.lower, choices=("rcot", "rcit", "fisher-z"))
    p.add_argument("--num-f", type=int, default=5, dest="num_f")
    p.add_argument("--num-fz", type=int, default=25, dest="num_fz")
    p.add_argument("--perms", type=int, default=500)
    p.add_argument("--out")
    ci_opts(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("synth", help="write synthetic data as CSV plus a JSON sidecar")
    p.add_argument("generator", choices=("pnl-null", "pnl-alt", "dag"))
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--v", type=int, default=20)
    p.add_argument("--en", type=float, default=2.0)
    p.add_argument("--nonlinear", action="store_true")
    p.add_argument("--latents", action="store_true")
    p.add_argument("--selection", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("calibrate", help="null calibration suite (KS statistics)")
    suite_opts(p, "500,1000,2000,10000")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("power", help="power suite (AUPC)")
    suite_opts(p, "500,1000,2000,10000")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("perm", help="calibration after permuting X in the alternative model")
    suite_opts(p, "1000")
    p.set_defaults(func=cmd_perm)

    p = sub.add_parser("bench", help="runtime benchmark")
    p.add_argument("--tests", default="rcot,rcit")
    p.add_argument("--n", default="1000,10000,100000")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("bench-null", help="accuracy of null approximations against Imhof")
    p.add_argument("--weights", default="random", help="'random' or a comma list of weights")
    p.add_argument("--sets", type=int, default=20)
    p.add_argument("--draws", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench_null)

    p = sub.add_parser("discover", help="PC on a CSV data file")
    p.add_argument("--data", required=True)
    p.add_argument("--test", default="rcot", type=str.lower, choices=("rcot", "rcit", "fisher-z"))
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--truth", help="DAG JSON (or a synth sidecar) for SHD scoring")
    p.add_argument("--csv", help="also write the graph as an adjacency CSV")
    p.add_argument("--out")
    ci_opts(p)
    p.set_defaults(func=cmd_discover)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (AccuracyError, ArithmeticError, FloatingPointError, np.linalg.LinAlgError) as exc:
        _emit({"error": type(exc).__name__, "message": str(exc)}, None)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
