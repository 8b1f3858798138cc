"""Command-line interface: ``difx render|diff|estimate|sweep|report``.

Exit codes: 0 success, 2 invalid arguments or config, 3 no signal
(estimate only), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .differential import ThresholdParams, diff, grayscale, threshold
from .errors import FormatError, InvalidArgument, NoSignalError
from .estimate import EstimateParams, estimate_all
from .harness import (
    RenderCache,
    SweepSpec,
    read_csv,
    run_sweep,
    write_csv,
    write_provenance,
)
from .noise import DEFAULT_SNR_LEVELS, parse_snr
from .raster import read_ppm16, read_rawf32, write_pbm, write_ppm16, write_rawf32
from .render import render_scene
from .scene import PRESETS, SceneConfig, validate

EXIT_OK, EXIT_INVALID, EXIT_NO_SIGNAL, EXIT_IO = 0, 2, 3, 4


def read_image(path: str):
    if path.lower().endswith(".ppm"):
        return read_ppm16(path)
    return read_rawf32(path)


def cmd_render(args) -> int:
    scene = SceneConfig.load(args.config) if args.config else PRESETS[args.preset]()
    check = validate(scene)
    if not check.ok:
        raise InvalidArgument("; ".join(check.violations))
    img = render_scene(scene, args.present, args.seed, workers=args.workers)
    write_rawf32(img, args.out)
    if args.ppm:
        write_ppm16(img, args.ppm)
    return EXIT_OK


def cmd_diff(args) -> int:
    d = diff(read_image(args.a), read_image(args.b))
    write_rawf32(d, args.out)
    if args.mask:
        mask = threshold(grayscale(d), ThresholdParams(tau=args.tau))
        write_pbm(mask, args.mask)
    return EXIT_OK


def cmd_estimate(args) -> int:
    params = EstimateParams(tau=args.tau, alpha=args.alpha, sigma_px=args.sigma)
    ThresholdParams(params.tau)  # validates tau
    report = estimate_all(read_image(args.a), read_image(args.b), params)
    Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return EXIT_NO_SIGNAL if report.no_signal else EXIT_OK


def cmd_sweep(args) -> int:
    from .plotting import render_plot_svg

    spec = SweepSpec(
        parameter=args.param,
        low=args.low,
        high=args.high,
        n_points=args.points,
        snr_levels=tuple(parse_snr(s) for s in args.snr.split(",")),
        base_seed=args.seed,
        preset=args.preset,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cache = RenderCache(args.cache_dir, enabled=not args.no_cache)
    table = run_sweep(spec, cache, workers=args.workers)
    write_csv(table, out / "sweep.csv")
    write_provenance(table, out / "sweep.json")
    render_plot_svg(table, out / "fig.svg")
    return EXIT_OK


def cmd_report(args) -> int:
    from .plotting import render_plot_svg

    render_plot_svg(read_csv(args.table), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="difx", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("render", help="render one photo (P1 or P2)")
    r.add_argument("--config", help="scene JSON; defaults to the --preset scene")
    r.add_argument("--preset", choices=sorted(PRESETS), default="paper")
    flag = r.add_mutually_exclusive_group(required=True)
    flag.add_argument("--present", dest="present", action="store_true")
    flag.add_argument("--absent", dest="present", action="store_false")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--out", required=True)
    r.add_argument("--ppm")
    r.add_argument("--workers", type=int, default=1)
    r.set_defaults(func=cmd_render)

    d = sub.add_parser("diff", help="signed difference A - B")
    d.add_argument("--a", required=True)
    d.add_argument("--b", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--mask")
    d.add_argument("--tau", type=float, default=1 / 20)
    d.set_defaults(func=cmd_diff)

    e = sub.add_parser("estimate", help="estimate jacket parameters from a pair")
    e.add_argument("--a", required=True)
    e.add_argument("--b", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--tau", type=float, default=1 / 20)
    e.add_argument("--alpha", type=float, default=2.0)
    e.add_argument("--sigma", type=float, default=5.0)
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("sweep", help="run one parameter sweep")
    s.add_argument("--param", required=True, choices=["width", "height", "bump", "bump_depth", "green"])
    s.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    s.add_argument("--snr", default=",".join("inf" if x == float("inf") else f"{x:g}" for x in DEFAULT_SNR_LEVELS))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--points", type=int, default=8)
    s.add_argument("--low", type=float)
    s.add_argument("--high", type=float)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--cache-dir")
    s.add_argument("--no-cache", action="store_true")
    s.set_defaults(func=cmd_sweep)

    rp = sub.add_parser("report", help="plot a sweep CSV")
    rp.add_argument("--table", required=True)
    rp.add_argument("--out", required=True)
    rp.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NoSignalError as exc:
        print(f"difx: no signal: {exc}", file=sys.stderr)
        return EXIT_NO_SIGNAL
    except (FormatError, OSError) as exc:
        print(f"difx: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvalidArgument, ValueError, TypeError) as exc:
        print(f"difx: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
