"""Command-line entry point.

    irsobf run [config] [--preset fig1|fig2] [--seed S] [--out PATH]
               [--format csv|jsonl] [--trials T] [--frames F]
               [--workers W] [--plot] [--verbose]

A config file is a flat key = value document; a preset supplies a bundled
sweep.  When both are given, config-file entries override the preset.  The
resolved configuration is echoed next to the output so every run is
reproducible from its artifacts alone.
"""

import argparse
import sys
from pathlib import Path

from .harness import emit_results, run_experiment
from .scenario import (
    ConfigError,
    _parse_lines,
    parse_config,
    preset_text,
    render_effective_config,
)

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irsobf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario or sweep and emit result rows")
    run.add_argument("config", nargs="?", help="flat key = value config file")
    run.add_argument("--preset", choices=("fig1", "fig2"), help="bundled sweep preset")
    run.add_argument("--seed", type=int, help="master seed override")
    run.add_argument("--out", type=Path, help="output file (default: stdout)")
    run.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    run.add_argument("--trials", type=int, help="trials per scenario override")
    run.add_argument("--frames", type=int, help="frames per trial override")
    run.add_argument("--workers", type=int, default=1, help="parallel trial processes")
    run.add_argument("--plot", action="store_true", help="render figures next to --out")
    run.add_argument("--verbose", action="store_true", help="progress lines on stderr")
    return parser


def _load_scenarios(args):
    if args.config is None and args.preset is None:
        raise ConfigError("give a config file, a --preset, or both")
    flag_overrides = {
        key: str(getattr(args, key))
        for key in ("seed", "trials", "frames")
        if getattr(args, key) is not None
    }
    file_text = None
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        file_text = path.read_text()
    if args.preset is not None:
        overrides = dict(_parse_lines(file_text)) if file_text is not None else {}
        overrides.update(flag_overrides)
        return parse_config(preset_text(args.preset), overrides=overrides)
    return parse_config(file_text, overrides=flag_overrides)


def _cmd_run(args) -> int:
    scenarios, resolved = _load_scenarios(args)
    if args.plot and args.out is None:
        raise ConfigError("--plot needs --out to know where to render figures")

    progress = None
    if args.verbose:
        def progress(scenario, row):
            print(
                f"done {scenario.scenario_id}: sum_rate={row.sum_rate:.4f} "
                f"(stderr {row.stderr:.4f})",
                file=sys.stderr,
            )

    rows = run_experiment(scenarios, workers=args.workers, progress=progress)
    text = emit_results(rows, args.format)
    echo = render_effective_config(resolved)
    if args.out is None:
        sys.stdout.write(text)
        sys.stderr.write("# effective config\n" + echo)
    else:
        args.out.write_text(text)
        config_path = args.out.with_name(args.out.name + ".config")
        config_path.write_text(echo)
        if args.verbose:
            print(f"wrote {args.out} and {config_path}", file=sys.stderr)
        if args.plot:
            from .plots import render_report

            base = args.out.with_suffix("") if args.out.suffix else args.out
            for path in render_report(rows, base):
                if args.verbose:
                    print(f"wrote {path}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _cmd_run(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
