"""Command line front end over the experiment runner.

Subcommands map one-to-one onto config kinds (``evolve`` accepts both
the 2D FEM kind and the 1D oracle kind).  Exit codes: 0 on success, 2
on config or input validation errors, 3 on solver failures.
"""

import argparse
import json
import sys

from .errors import EngineError, ValidationError
from .experiments import ConfigError, parse_config, run_experiment
from .potential import ParseError

_COMMAND_KINDS = {
    "stationary": ("stationary1d",),
    "critical": ("critical",),
    "evolve": ("evolve2d", "evolve1d-oracle"),
    "currents": ("currents",),
    "sweep": ("gap-sweep",),
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="fermidrift",
        description="Zero-temperature drift-diffusion experiments on the unit square.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "stationary": "solve the 1D stationary boundary value problem",
        "critical": "report critical boundary values for a potential",
        "evolve": "march an evolution problem (2D FEM or 1D oracle)",
        "currents": "evolve in 2D recording boundary current series",
        "sweep": "current versus boundary gap sweep",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, metavar="FILE",
                       help="JSON experiment config")
        p.add_argument("--out", metavar="DIR", help="output directory override")
        p.add_argument("--mesh-n", type=int, metavar="N",
                       help="mesh resolution override")
        p.add_argument("--dt", type=float, metavar="DT", help="time step override")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError("", f"cannot read {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"{args.config} is not valid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise ConfigError("", "top level must be a JSON object")
        if args.out is not None:
            raw["out_dir"] = args.out
        if args.mesh_n is not None:
            if raw.get("kind") == "evolve1d-oracle":
                raw["nx"] = args.mesh_n
            else:
                raw["mesh_n"] = args.mesh_n
        if args.dt is not None:
            raw["dt"] = args.dt
        cfg = parse_config(raw)
        if cfg.kind not in _COMMAND_KINDS[args.command]:
            expected = " or ".join(_COMMAND_KINDS[args.command])
            raise ConfigError("kind",
                              f"subcommand {args.command!r} expects kind {expected}, "
                              f"got {cfg.kind!r}")
        outputs = run_experiment(cfg)
    except (ConfigError, ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EngineError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    for path in outputs:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
