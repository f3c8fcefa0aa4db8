"""Command-line interface.

Usage::

    povm-merit validate detector.json
    povm-merit report detector.json --modes 0,1 --target-bits 4 --markdown
    povm-merit dist detector.json --outcome click --domain time --bin 0.05 --out t.csv
    povm-merit model pixel_array --pixels 2 --max-clicks 2 --out pixels.json
    povm-merit resolution detector.json --target-bits 4

Exit codes: 0 success, 1 validation failure, 2 parse/IO error,
3 computation error.
"""

from __future__ import annotations

import argparse
import sys

from . import classical
from .exceptions import DimensionMismatch, ParseError, PovmMeritError, ValidationFailed
from .hilbert import TimeWindow
from .io import file_digest, load, save
from .models import MODEL_KINDS, ModelSpec, build_model
from .povm import validate
from .report import _fmt_float, build_report

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_COMPUTE = 0, 1, 2, 3


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _window(text: str) -> TimeWindow:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("time window must be 't_min,t_max,num_points'")
    try:
        return TimeWindow(float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="povm-merit", description="Photodetector figures of merit from a POVM.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check hermiticity, positivity and completeness")
    p.add_argument("file")

    p = sub.add_parser("report", help="compute all figures of merit")
    p.add_argument("file")
    p.add_argument("--modes", type=_int_list, default=None, help="modes for photon-number entropies")
    p.add_argument("--target-bits", type=float, default=4.0)
    p.add_argument("--time-window", type=_window, default=None, metavar="A,B,N")
    p.add_argument("--duration", type=float, default=1.0, help="switch-on time T in seconds for the dark-count rate")
    p.add_argument("--no-response", action="store_true", help="skip the response-time scan")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--markdown", dest="fmt", action="store_const", const="markdown")
    p.set_defaults(fmt="json")

    p = sub.add_parser("dist", help="binned posterior frequency or time distribution as CSV")
    p.add_argument("file")
    p.add_argument("--outcome", required=True)
    p.add_argument("--domain", choices=("freq", "time"), required=True)
    p.add_argument("--bin", type=float, required=True, dest="bin_width")
    p.add_argument("--origin", type=float, default=None)
    p.add_argument("--time-window", type=_window, default=None, metavar="A,B,N")
    p.add_argument("--out", required=True)

    p = sub.add_parser("model", help="write a built-in model POVM")
    p.add_argument("kind", choices=MODEL_KINDS)
    p.add_argument("--modes", type=int, default=1, dest="num_modes")
    p.add_argument("--n-max", type=int, default=2)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--p-dark", type=float, default=0.0)
    p.add_argument("--mode", type=int, default=0)
    p.add_argument("--pixels", type=int, default=2)
    p.add_argument("--max-clicks", type=int, default=2)
    p.add_argument("--alpha-extent", type=float, default=4.0)
    p.add_argument("--alpha-step", type=float, default=0.5)
    p.add_argument("--center", type=float, default=50.0)
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--points-per-width", type=int, default=50)
    p.add_argument("--inline", choices=("auto", "yes", "no"), default="auto")
    p.add_argument("--out", required=True)

    p = sub.add_parser("resolution", help="frequency and timing resolution")
    p.add_argument("file")
    p.add_argument("--target-bits", type=float, default=4.0)
    p.add_argument("--time-window", type=_window, default=None, metavar="A,B,N")
    return parser


def _cmd_validate(args) -> int:
    _, povm = load(args.file, check=False)
    report = validate(povm)
    print(report.to_text())
    return EXIT_OK if report.valid else EXIT_INVALID


def _cmd_report(args) -> int:
    _, povm = load(args.file)
    report = build_report(
        povm,
        modes=args.modes,
        target_bits=args.target_bits,
        time_window=args.time_window,
        duration=args.duration,
        response=not args.no_response,
        input_hash=file_digest(args.file),
    )
    sys.stdout.write(report.to_markdown() if args.fmt == "markdown" else report.to_json())
    return EXIT_OK


def _cmd_dist(args) -> int:
    basis, povm = load(args.file)
    try:
        element = povm[args.outcome]
    except KeyError:
        print(f"error: no outcome labelled {args.outcome!r}", file=sys.stderr)
        return EXIT_PARSE
    block = classical.single_photon_block(element, basis)
    decomp = classical.eigenmodes(block, basis.mode_basis)
    if args.domain == "freq":
        dist = classical.posterior_frequency(decomp)
    else:
        dist = classical.posterior_time(decomp, args.time_window)
    binned = classical.bin_distribution(dist, args.bin_width, args.origin)
    rows = ["bin_index,bin_start,probability"]
    for j, start, p in zip(binned.indices, binned.bin_starts, binned.probabilities):
        rows.append(f"{int(j)},{_fmt_float(float(start))},{_fmt_float(float(p))}")
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")
    return EXIT_OK


def _cmd_model(args) -> int:
    spec = ModelSpec(
        kind=args.kind,
        num_modes=args.num_modes,
        n_max=args.n_max,
        eta=args.eta,
        p_dark=args.p_dark,
        mode=args.mode,
        pixels=args.pixels,
        max_clicks=args.max_clicks,
        alpha_extent=args.alpha_extent,
        alpha_step=args.alpha_step,
        center=args.center,
        width=args.width,
        points_per_width=args.points_per_width,
    )
    povm = build_model(spec)
    inline = {"auto": None, "yes": True, "no": False}[args.inline]
    save(povm, args.out, inline=inline)
    print(f"wrote {args.out}: {args.kind}, D={povm.dimension}, "
          f"{len(povm)} non-null outcomes ({len(povm) + 1} incl. null)")
    return EXIT_OK


def _cmd_resolution(args) -> int:
    _, povm = load(args.file)
    res = classical.resolutions(povm, args.target_bits, args.time_window)
    for name, value in [
        ("delta_omega", res.delta_omega),
        ("delta_t", res.delta_t),
        ("H_omega", res.entropy_omega),
        ("H_t", res.entropy_t),
        ("Delta_omega", res.resolution_omega),
        ("Delta_t", res.resolution_t),
        ("product", res.product),
    ]:
        print(f"{name}: {_fmt_float(value)}")
    return EXIT_OK


COMMANDS = {
    "validate": _cmd_validate,
    "report": _cmd_report,
    "dist": _cmd_dist,
    "model": _cmd_model,
    "resolution": _cmd_resolution,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except ValidationFailed as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ParseError, DimensionMismatch, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (PovmMeritError, ValueError, ArithmeticError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
