"""Command-line entry point for the adapter server."""

from __future__ import annotations

import argparse
import sys

from .server import AdapterConfig, run_adapter


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(prog="bridge-adapter", description=__doc__)
    parser.add_argument("--transport", default="stdio", help="stdio | tcp:HOST:PORT")
    parser.add_argument(
        "--model",
        default="echo-freq",
        help="echo-freq, or an import spec module:ClassName of a fit/predict_proba classifier",
    )
    parser.add_argument("--snapshot-dir", default="./snapshots")
    args = parser.parse_args(argv)
    config = AdapterConfig(transport=args.transport, model_spec=args.model, snapshot_dir=args.snapshot_dir)
    try:
        run_adapter(config)
    except KeyboardInterrupt:
        sys.exit(1)


if __name__ == "__main__":
    main()
