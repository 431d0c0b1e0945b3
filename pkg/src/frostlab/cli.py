"""Command line entry point: ``frostlab <kind> [options]``."""
import argparse
import json
import sys

from .errors import ConfigError, PreconditionError
from .harness import KINDS, SCHEMA, ExperimentConfig, load_config, run

EXIT_CONFIG = 2
EXIT_PRECONDITION = 3


def _parser():
    ap = argparse.ArgumentParser(prog="frostlab", description="Run a projection/energy experiment.")
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--config", help="JSON configuration file")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--frames", type=int)
    ap.add_argument("--depth", type=int)
    ap.add_argument("--threads", type=int)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=JSON",
                    help="override any configuration key, e.g. --set p=1.5")
    ap.add_argument("--schema", action="store_true", help="print the configuration schema and exit")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.schema:
        print(json.dumps({k: {"type": t, "default": d, "help": h} for k, (t, d, h) in SCHEMA.items()},
                         indent=2))
        return 0
    try:
        raw = load_config(args.config) if args.config else {}
        raw["kind"] = args.kind
        for item in args.set:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError("--set", f"expected KEY=VALUE, got {item!r}")
            try:
                raw[key] = json.loads(value)
            except json.JSONDecodeError:
                raw[key] = value
        for key in ("out", "seed", "frames", "depth", "threads"):
            v = getattr(args, key)
            if v is not None:
                raw[key] = v
        cfg = ExperimentConfig.from_dict(raw)
        rec = run(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as e:
        print(f"precondition failed: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    print(json.dumps({"experiment_id": rec.experiment_id, "out": cfg["out"], "value": rec.payload.get("value")}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
