"""Command-line entry point: ``dtsir {simulate,fit,experiment,plot}``.

Exit status: 0 success, 1 usage error, 2 data error, 3 numerical error.
``DTSIR_SEED`` and ``DTSIR_THREADS`` override the default seed and pool size.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .covariance import CovarianceConfig
from .errors import DtSirError, InvalidArgumentError, NumericalError
from .metrics import NORMS, subspace_distance, vector_angle
from .screening import default_slice_counts, dtsir_fit, parse_threshold
from .simgen import (
    SETTINGS,
    SettingSpec,
    generate,
    make_rng,
    read_dataset_csv,
    read_truth_csv,
    write_dataset_csv,
    write_truth_csv,
)
from .sir import ModelConfig, sir_fit
from .svgplot import plot_csv

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

KIND_ALIASES = {
    "table": "table",
    "phase-fixed": "phase_fixed_rho",
    "phase-sweep": "phase_sweep",
    "timing": "timing",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def resolve_seed(arg):
    if arg is None:
        env = os.environ.get("DTSIR_SEED")
        return int(env) if env else ex.DEFAULT_SEED
    if str(arg).lower() == "random":
        return int(np.random.SeedSequence().entropy % (2**63))
    try:
        return int(arg)
    except ValueError:
        raise UsageError(f"--seed must be an integer or 'random', got {arg!r}") from None


def truth_path_for(path):
    p = Path(path)
    return p.with_name(p.stem + ".truth.csv")


def cmd_simulate(args):
    seed = resolve_seed(args.seed)
    try:
        spec = SettingSpec(args.setting, args.n, args.p, rho=args.rho, seed=seed)
    except InvalidArgumentError as exc:
        raise UsageError(str(exc)) from None
    data, truth = generate(spec)
    out = Path(args.out or f"setting{spec.setting}_n{spec.n}_p{spec.p}_seed{seed}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_dataset_csv(out, data)
    write_truth_csv(truth_path_for(out), truth)
    print(out)
    return EXIT_OK


def _direction_angles(beta, V_true):
    Q, _ = np.linalg.qr(V_true)
    angles = []
    for b in beta.T:
        proj = Q @ (Q.T @ b)
        angles.append(float(np.pi / 2) if np.linalg.norm(proj) == 0 else vector_angle(b, proj))
    return angles


def cmd_fit(args):
    seed = resolve_seed(args.seed)
    data = read_dataset_csv(args.input)
    rng = make_rng(seed)
    hs, hr = default_slice_counts(data.n)
    H = args.H or hr
    report = {"input": str(args.input), "method": args.method, "n": data.n, "p": data.p,
              "d": args.d, "seed": seed}
    if args.method == "sir":
        cfg = ModelConfig(H=H, d=args.d, covariance_mode=args.cov, bandwidth=args.bandwidth,
                          ridge=args.ridge, beta_form=args.beta_form)
        est = sir_fit(data, cfg, rng=rng)
        beta = est.beta_hat
        report.update(H=H, covariance=args.cov, bandwidth=est.bandwidth,
                      eigenvalues=est.eigvals.tolist())
    else:
        threshold = parse_threshold(args.threshold)
        cov = CovarianceConfig(mode=args.cov, bandwidth=args.bandwidth, ridge=args.ridge)
        est = dtsir_fit(data, d=args.d, H_screen=args.H_screen or hs, H_sir=H,
                        threshold=threshold, cov=cov, rng=rng)
        beta = est.beta_hat
        s = est.screening
        report.update(
            H_screen=est.H_screen, H=est.H_sir, covariance=args.cov, bandwidth=est.bandwidth,
            screening={"threshold": s.threshold, "threshold_source": s.threshold_source,
                       "included": s.included.tolist(), "stats": s.stats.tolist()},
            eigenvalues=est.restricted_sir.eigvals.tolist(),
        )
    report["beta_hat"] = beta.T.tolist()
    truth_file = Path(args.truth) if args.truth else truth_path_for(args.input)
    if truth_file.exists():
        V_true = read_truth_csv(truth_file)
        report["truth"] = str(truth_file)
        report["distance"] = subspace_distance(beta, V_true, norm=args.norm)
        report["norm"] = args.norm
        report["angles"] = _direction_angles(beta, V_true)
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_experiment(args):
    kind = KIND_ALIASES[args.kind]
    cfg = ex.load_config(args.config)
    # precedence: --seed, then DTSIR_SEED, then the config's own seed, then the default
    if args.seed is not None or os.environ.get("DTSIR_SEED"):
        seed = resolve_seed(args.seed)
    else:
        seed = None
    threads = args.threads or ex.default_threads()
    try:
        result = ex.run_from_config(kind, cfg, seed=seed, threads=threads)
    except ex.ConfigError as exc:
        raise UsageError(f"config {args.config}: {exc}") from None
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.name or args.kind
    result.write_csv(out_dir / f"{stem}.csv")
    echo = dict(cfg) if isinstance(cfg, dict) else {"config": cfg}
    echo["seed"] = seed if seed is not None else int(echo.get("seed", ex.DEFAULT_SEED))
    (out_dir / f"{stem}.json").write_text(
        json.dumps(result.to_json(spec_echo=echo, threads=threads), indent=2) + "\n"
    )
    print(out_dir / f"{stem}.csv")
    return EXIT_OK


def cmd_plot(args):
    try:
        svg = plot_csv(args.input, args.x, args.y, args.group)
    except InvalidArgumentError as exc:
        if exc.exit_code == EXIT_USAGE:
            raise UsageError(str(exc)) from None
        raise
    out = Path(args.out or Path(args.input).with_suffix(".svg"))
    out.write_text(svg)
    print(out)
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="dtsir", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="draw a dataset from a benchmark setting")
    p.add_argument("--setting", required=True, help="one of " + ", ".join(SETTINGS))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--seed")
    p.add_argument("--out", help="CSV path; the truth basis goes to <stem>.truth.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit SIR or DT-SIR to a CSV dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=("sir", "dtsir"), default="dtsir")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--H", type=int, help="slices for the SIR step")
    p.add_argument("--H-screen", type=int, dest="H_screen")
    p.add_argument("--threshold", default="aux", help="aux | fixed=<v> | theory=<a,s,w>")
    p.add_argument("--cov", choices=("sample", "banded", "identity"), default=None)
    p.add_argument("--bandwidth", type=int)
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--beta-form", choices=("eigen", "generalized"), default="eigen",
                   dest="beta_form")
    p.add_argument("--norm", choices=NORMS, default="frobenius")
    p.add_argument("--truth", help="truth basis CSV (default: <input stem>.truth.csv)")
    p.add_argument("--seed")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("experiment", help="run a replicated experiment from a JSON config")
    p.add_argument("--kind", required=True, choices=tuple(KIND_ALIASES))
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default="results")
    p.add_argument("--name", help="output file stem (default: the kind)")
    p.add_argument("--seed")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("plot", help="line chart of a results CSV as SVG")
    p.add_argument("--input", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--group")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if getattr(args, "cov", "unset") is None:
            args.cov = "sample" if args.method == "sir" else "banded"
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DtSirError as exc:
        status = EXIT_USAGE if exc.exit_code == EXIT_USAGE else exc.exit_code
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return status
    except (OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
