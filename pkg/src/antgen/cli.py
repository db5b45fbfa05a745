"""``antgen`` command line: estimate, simulate, test-csr, generate, replay.

Exit codes: 0 success, 1 usage error, 2 domain/data error. Every command
writes ``<primary output>.manifest.json``; ``antgen replay`` re-runs it.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as aio
from .core import PointPattern, Window
from .deform import DeformConfig, NoiseSpec, generate_synthetic
from .errors import AntgenError
from .intensity import KernelConfig, default_bandwidths, fit_field, select_bandwidth
from .simulate import (
    derive_seed,
    simulate_homogeneous,
    simulate_inhomogeneous_grid,
    simulate_inhomogeneous_reject,
)
from .stats import csr_test

logger = logging.getLogger("antgen")

EXIT_USAGE = 1
EXIT_DOMAIN = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_float(s):
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not (np.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"must be positive, got {s}")
    return v


def _nonneg_float(s):
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not (np.isfinite(v) and v >= 0):
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {s}")
    return v


def _int_at_least(lo):
    def parse(s):
        try:
            v = int(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
        if v < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}, got {v}")
        return v

    return parse


def _seed(s):
    v = _int_at_least(0)(s)
    if v >= 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def _bandwidth(s):
    return "auto" if s == "auto" else _positive_float(s)


def _window(s):
    if s == "auto":
        return s
    try:
        vals = [float(v) for v in s.split(",")]
        return list(Window(*vals).as_tuple())
    except (TypeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"window must be 'auto' or a,b,c,d: {exc}") from None


def _epsilon(s):
    if s == "sqrt":
        return s
    if s.startswith("const:"):
        _nonneg_float(s[6:])
        return s
    raise argparse.ArgumentTypeError(f"epsilon must be const:<value> or sqrt, got {s!r}")


def _path(s):
    return str(Path(s).resolve())


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="antgen", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"antgen {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("estimate", help="kernel intensity estimate on a grid")
    e.add_argument("--input", required=True, type=_path)
    e.add_argument("--window", default="auto", type=_window)
    e.add_argument("--bandwidth", default="auto", type=_bandwidth)
    e.add_argument("--candidates", default=20, type=_int_at_least(2), help="bandwidth grid size for auto")
    e.add_argument("--grid-m", default=64, type=_int_at_least(2))
    e.add_argument("--out-field", required=True, type=_path)
    e.add_argument("--out-risk", type=_path)
    e.add_argument("--plot", action="store_true", help="also write SVG figures next to the CSVs")

    s = sub.add_parser("simulate", help="simulate a Poisson point process")
    s.add_argument("--mode", required=True, choices=["homog", "grid", "reject"])
    s.add_argument("--rate", type=_nonneg_float)
    s.add_argument("--field", type=_path, help="IntensityField CSV for grid/reject")
    s.add_argument("--window", default="0,1,0,1", type=_window)
    s.add_argument("--m-sim", default=100, type=_int_at_least(1))
    s.add_argument("--lmax", type=_nonneg_float)
    s.add_argument("--seed", default=0, type=_seed)
    s.add_argument("--out", required=True, type=_path)
    s.add_argument("--plot", action="store_true")

    t = sub.add_parser("test-csr", help="thinning-based test of the Poisson hypothesis")
    t.add_argument("--input", required=True, type=_path)
    t.add_argument("--window", default="auto", type=_window)
    g = t.add_mutually_exclusive_group()
    g.add_argument("--field", type=_path)
    g.add_argument("--bandwidth", type=_bandwidth)
    t.add_argument("--grid-m", default=64, type=_int_at_least(2))
    t.add_argument("--sims", default=100, type=_int_at_least(2))
    t.add_argument("--seed", default=0, type=_seed)
    t.add_argument("--out-report", required=True, type=_path)
    t.add_argument("--out-k", type=_path)
    t.add_argument("--out-envelope", type=_path)
    t.add_argument("--plot", action="store_true")

    gen = sub.add_parser("generate", help="synthetic pattern by harmonic deformation")
    gen.add_argument("--input", required=True, type=_path)
    gen.add_argument("--window", default="auto", type=_window)
    gen.add_argument("--inflation", type=_positive_float, help="box margin per side (default: diameter / 4)")
    gen.add_argument("--grid-m", default=64, type=_int_at_least(2))
    gen.add_argument("--bandwidth", default="auto", type=_bandwidth)
    gen.add_argument("--epsilon", default="sqrt", type=_epsilon)
    gen.add_argument("--eps-scale", default=1.0, type=_nonneg_float)
    gen.add_argument("--k", default=3.0, type=_positive_float)
    gen.add_argument("--max-sweeps", default=1000, type=_int_at_least(1))
    gen.add_argument("--seed", default=0, type=_seed)
    gen.add_argument("--out", required=True, type=_path)
    gen.add_argument("--out-diagnostics", type=_path)
    gen.add_argument("--out-full", type=_path, help="deformed pattern including fixed auxiliary points")
    gen.add_argument("--plot", action="store_true")

    r = sub.add_parser("replay", help="re-run a command from its manifest")
    r.add_argument("manifest", type=_path)
    return p


def _read_input(args) -> PointPattern:
    window = args.window if args.window == "auto" else Window(*args.window)
    return aio.read_pattern(args.input, window)


def _svg(path) -> Path:
    return Path(path).with_suffix(".svg")


def _cmd_estimate(args):
    from .plot import plot_svg

    pattern = _read_input(args)
    outputs = [args.out_field]
    if args.bandwidth == "auto":
        bw, curve = select_bandwidth(pattern, default_bandwidths(pattern.window, args.candidates))
        if args.out_risk:
            aio.write_risk(curve, args.out_risk)
            outputs.append(args.out_risk)
            if args.plot:
                plot_svg(curve, _svg(args.out_risk))
                outputs.append(str(_svg(args.out_risk)))
        logger.info("selected bandwidth %.6g", bw)
    else:
        bw = args.bandwidth
    field = fit_field(pattern, KernelConfig(bw), pattern.window, args.grid_m)
    aio.write_field(field, args.out_field)
    if args.plot:
        plot_svg(field, _svg(args.out_field))
        outputs.append(str(_svg(args.out_field)))
    return outputs


def _cmd_simulate(args):
    if args.mode == "homog":
        if args.rate is None:
            raise _UsageError("--mode homog needs --rate")
        pattern = simulate_homogeneous(args.rate, Window(*args.window), args.seed)
    else:
        if args.field is None:
            raise _UsageError(f"--mode {args.mode} needs --field")
        field = aio.read_field(args.field)
        if args.mode == "grid":
            pattern = simulate_inhomogeneous_grid(field, args.m_sim, args.seed)
        else:
            lmax = field.max_value() if args.lmax is None else args.lmax
            pattern = simulate_inhomogeneous_reject(field, lmax, args.seed)
    aio.write_pattern(pattern, args.out)
    outputs = [args.out]
    if args.plot:
        from .plot import plot_svg

        plot_svg(pattern, _svg(args.out))
        outputs.append(str(_svg(args.out)))
    return outputs


def _cmd_test_csr(args):
    pattern = _read_input(args)
    if args.field:
        field = aio.read_field(args.field)
    else:
        bw = "auto" if args.bandwidth is None else args.bandwidth
        if bw == "auto":
            bw, _ = select_bandwidth(pattern, default_bandwidths(pattern.window))
        field = fit_field(pattern, KernelConfig(bw), pattern.window, args.grid_m)
    report = csr_test(pattern, field, n_sims=args.sims, seed=args.seed)
    aio.write_report(report, args.out_report)
    outputs = [args.out_report]
    if args.out_k:
        aio.write_k(report.observed, args.out_k)
        outputs.append(args.out_k)
    if args.out_envelope:
        aio.write_envelope(report.envelope, args.out_envelope)
        outputs.append(args.out_envelope)
    if args.plot:
        from .plot import plot_svg

        plot_svg(report, _svg(args.out_report))
        outputs.append(str(_svg(args.out_report)))
    print(f"verdict: {report.verdict} ({report.n_thinned} of {report.n_points} points after thinning)")
    return outputs


def _cmd_generate(args):
    pattern = _read_input(args)
    if args.epsilon == "sqrt":
        noise = NoiseSpec.sqrt_intensity(scale=args.eps_scale)
    else:
        noise = NoiseSpec.constant(float(args.epsilon[6:]), scale=args.eps_scale)
    config = DeformConfig(k=args.k, max_sweeps=args.max_sweeps, noise=noise, seed=args.seed)
    synthetic, diag = generate_synthetic(
        pattern,
        box_inflation=args.inflation,
        grid_m=args.grid_m,
        bandwidth=args.bandwidth,
        config=config,
    )
    aio.write_pattern(synthetic, args.out)
    outputs = [args.out]
    if args.out_diagnostics:
        aio.write_json(diag.to_json(), args.out_diagnostics)
        outputs.append(args.out_diagnostics)
    if args.out_full:
        aio.write_pattern(diag.deformed, args.out_full)
        outputs.append(args.out_full)
    if args.plot:
        from .plot import plot_svg

        plot_svg(diag.deformed, _svg(args.out))
        plot_svg(diag.field, _svg(args.out).with_name(_svg(args.out).stem + "_field.svg"))
        outputs += [str(_svg(args.out)), str(_svg(args.out).with_name(_svg(args.out).stem + "_field.svg"))]
    print(f"{len(synthetic)} synthetic points; sweeps={diag.sweeps_used} converged={diag.converged}")
    return outputs


_COMMANDS = {
    "estimate": (_cmd_estimate, "out_field", ["input", "field"]),
    "simulate": (_cmd_simulate, "out", ["field"]),
    "test-csr": (_cmd_test_csr, "out_report", ["input", "field"]),
    "generate": (_cmd_generate, "out", ["input"]),
}


class _UsageError(Exception):
    pass


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest_path(primary) -> Path:
    return Path(str(primary) + ".manifest.json")


def _manifest(command, args, outputs) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "verbose")}
    inputs = {}
    for key in _COMMANDS[command][2]:
        path = params.get(key)
        if path:
            inputs[path] = _digest(path)
    return {
        "tool": "antgen",
        "version": __version__,
        "command": command,
        "args": params,
        "seed": params.get("seed"),
        "inputs": inputs,
        "outputs": outputs,
    }


def _run(command, args):
    func, primary, _ = _COMMANDS[command]
    outputs = func(args)
    aio.write_json(_manifest(command, args, outputs), manifest_path(getattr(args, primary)))
    return outputs


def _replay(path):
    try:
        man = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise AntgenError(f"cannot read manifest {path}: {exc}") from exc
    if man.get("tool") != "antgen" or man.get("command") not in _COMMANDS:
        raise AntgenError(f"{path} is not an antgen run manifest")
    for inp, digest in man.get("inputs", {}).items():
        if not Path(inp).exists() or _digest(inp) != digest:
            raise AntgenError(f"input {inp} is missing or differs from the recorded digest")
    if man.get("version") != __version__:
        logger.warning("manifest written by antgen %s, replaying with %s", man.get("version"), __version__)
    args = argparse.Namespace(command=man["command"], verbose=False, **man["args"])
    return _run(man["command"], args)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay":
            _replay(args.manifest)
        else:
            _run(args.command, args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"antgen: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AntgenError as exc:
        print(f"antgen: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"antgen: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return 0


if __name__ == "__main__":
    sys.exit(main())
