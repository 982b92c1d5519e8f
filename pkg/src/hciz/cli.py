"""Command line entry point (``hciz``)."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .exceptions import DomainError, InconsistentTriangleError, StructureError
from .fiber import sample_fiber_batch
from .linalg import as_generator
from .mcmc import SamplerConfig, run_sampler
from .orbit import OrbitProblem, expected_inner_product, log_partition, sample_orbit
from .polytope import build_polytope, reduce_exponent
from .privacy import DPConfig, dp_rank_k_projection
from .validation import SUITES, validate

DEFAULTS = {"mode": "tv", "num": 1, "seed": 0, "format": "json", "epsilon": 1.0, "k": 1}
DEFAULT_XI = 0.01


def _vector(text):
    text = text.strip()
    if text.startswith("["):
        return [float(v) for v in json.loads(text)]
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda", dest="lambda_", type=_vector, help="spectrum, e.g. 1,0.5,0")
    common.add_argument("--y", type=_vector, help="diagonal of Y")
    common.add_argument("--Y-file", dest="Y_file", help="JSON matrix for a general Hermitian Y")
    common.add_argument("--A-file", dest="A_file", help="JSON matrix for dp-lowrank")
    common.add_argument("--P-file", dest="P_file", help="JSON triangle(s) for sample-fiber")
    common.add_argument("--k", type=int)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--mode", choices=["tv", "inf"])
    common.add_argument("--xi", type=float)
    common.add_argument("--num", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--burn-in", dest="burn_in", type=int)
    common.add_argument("--thin", type=int)
    common.add_argument("--chains", type=int)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=["json", "csv"])
    common.add_argument("--config", help="JSON file of option values; flags take precedence")

    parser = argparse.ArgumentParser(prog="hciz", description="Sample HCIZ densities on unitary orbits.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("sample-orbit", "draw matrices from exp(<Y, X>) on the orbit of diag(lambda)"),
        ("sample-gt", "draw Rayleigh triangles from the pushed-forward density"),
        ("sample-fiber", "draw uniform matrices with a given Rayleigh triangle"),
        ("dp-lowrank", "release private rank-k projections of a PSD matrix"),
        ("partition", "print log Z and the derivative E<Y, X>"),
    ]:
        sub.add_parser(name, parents=[common], help=help_text)
    val = sub.add_parser("validate", parents=[common], help="run a validation suite")
    val.add_argument("suite", choices=sorted(SUITES))
    return parser


def _resolve(args):
    opts = dict(DEFAULTS)
    explicit = set()
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except json.JSONDecodeError as exc:
            raise io.ParseError(f"{args.config}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        except OSError as exc:
            raise io.ParseError(f"{args.config}: {exc.strerror}") from exc
        if not isinstance(loaded, dict):
            raise io.ParseError(f"{args.config}: expected a JSON object")
        for key, value in loaded.items():
            key = key.replace("-", "_")
            key = "lambda_" if key == "lambda" else key
            opts[key] = value
            explicit.add(key)
    for key, value in vars(args).items():
        if value is not None and key != "config":
            opts[key] = value
    # suites have their own nominal sizes; only an explicit count overrides them
    opts["num_flag"] = args.num if args.num is not None else (opts["num"] if "num" in explicit else None)
    return opts


def _sampler(opts):
    return SamplerConfig(mode=opts["mode"], xi=opts.get("xi", DEFAULT_XI), burn_in=opts.get("burn_in"),
                         thinning=opts.get("thin"), chains=opts.get("chains"))


def _require(opts, key, flag):
    if opts.get(key) is None:
        raise DomainError(f"{flag} is required")
    return opts[key]


def _emit_matrices(X, opts, meta=None):
    if opts["format"] == "csv":
        return io.matrices_to_csv(X)
    return io.matrices_to_json(X, meta) + "\n"


def _cmd_sample_orbit(opts):
    lam = _require(opts, "lambda_", "--lambda")
    if opts.get("Y_file"):
        Y = io.load_matrix(opts["Y_file"])
    else:
        Y = np.asarray(_require(opts, "y", "--y or --Y-file"), dtype=float)
    problem = OrbitProblem(lam, Y, mode=opts["mode"], xi=opts.get("xi", DEFAULT_XI))
    X = sample_orbit(problem, _sampler(opts), opts["seed"], size=opts["num"])
    return _emit_matrices(X, opts)


def _cmd_sample_gt(opts):
    lam = np.asarray(_require(opts, "lambda_", "--lambda"), dtype=float)
    y = np.asarray(opts.get("y") or np.zeros(lam.size), dtype=float)
    poly = build_polytope(lam)
    spec = reduce_exponent(y, poly.lambda_, poly=poly)
    run = run_sampler(poly, spec, _sampler(opts), as_generator(opts["seed"]), opts["num"])
    flat = poly.from_free(run.samples)
    if opts["format"] == "csv":
        return io.triangles_to_csv(flat)
    return io.triangles_to_json(flat) + "\n"


def _cmd_sample_fiber(opts):
    triangles = io.load_triangles(_require(opts, "P_file", "--P-file"))
    flat = np.array([np.repeat(t.values[None], opts["num"], axis=0) for t in triangles])
    X = sample_fiber_batch(flat.reshape(-1, flat.shape[-1]), opts["seed"])
    return _emit_matrices(X, opts)


def _cmd_dp_lowrank(opts):
    A = io.load_matrix(_require(opts, "A_file", "--A-file"))
    cfg = DPConfig(epsilon=opts["epsilon"], k=opts["k"], xi=opts.get("xi"))
    sampler = SamplerConfig(mode="inf", xi=cfg.sampler_xi, burn_in=opts.get("burn_in"),
                            thinning=opts.get("thin"), chains=opts.get("chains"))
    release = dp_rank_k_projection(A, cfg, sampler, opts["seed"], size=opts["num"])
    scores = np.atleast_1d(release.score(A))
    return _emit_matrices(release.P, opts, {"k": cfg.k, "epsilon": cfg.epsilon,
                                            "xi": cfg.sampler_xi, "scores": scores.tolist()})


def _cmd_partition(opts):
    lam = _require(opts, "lambda_", "--lambda")
    y = io.load_matrix(opts["Y_file"]) if opts.get("Y_file") else _require(opts, "y", "--y or --Y-file")
    value = log_partition(y, lam)
    y_vec = np.linalg.eigvalsh(y)[::-1] if np.ndim(y) == 2 else y
    derivative = expected_inner_product(y_vec, lam)
    if opts["format"] == "csv":
        return io.series_to_csv({"log_partition": [value], "expected_inner_product": [derivative]})
    return json.dumps({"log_partition": value, "expected_inner_product": derivative}) + "\n"


def _cmd_validate(opts):
    report = validate(opts["suite"], num=opts.get("num_flag"), seed=opts["seed"])
    opts["_report"] = report
    return json.dumps(report.to_dict(), indent=2) + "\n"


COMMANDS = {
    "sample-orbit": _cmd_sample_orbit,
    "sample-gt": _cmd_sample_gt,
    "sample-fiber": _cmd_sample_fiber,
    "dp-lowrank": _cmd_dp_lowrank,
    "partition": _cmd_partition,
    "validate": _cmd_validate,
}


def _run(argv):
    args = build_parser().parse_args(argv)
    opts = _resolve(args)
    return COMMANDS[args.command](opts), opts


def render(argv):
    """Output text of a command, without writing it anywhere."""
    return _run(argv)[0]


def _write_series(report, out):
    stem = Path(out)
    for name, columns in report.series.items():
        path = stem.with_name(f"{stem.stem}_{name}.csv")
        path.write_text(io.series_to_csv(columns))


def main(argv=None):
    try:
        text, opts = _run(argv)
    except (DomainError, StructureError, InconsistentTriangleError, io.ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if opts.get("out"):
        Path(opts["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    report = opts.get("_report")
    if report is not None:
        if opts.get("out"):
            _write_series(report, opts["out"])
        for check in report.checks:
            print(check.line(), file=sys.stderr)
        return 0 if report.passed else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
