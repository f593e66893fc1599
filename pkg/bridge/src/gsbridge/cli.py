"""gsbridge command line: serve a guidance backend over HTTP."""

from __future__ import annotations

import argparse
import sys

from .models import ModelError
from .server import BridgeConfig, serve


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gsbridge",
        description="Guidance bridge server (splat-trainer wire protocol).",
    )
    parser.add_argument("--mock", action="store_true",
                        help="echo backend: zero residual, identity refine")
    parser.add_argument("--model", default=None,
                        choices=["mock", "novel-view", "text-to-image"],
                        help="backend; exactly one mode is active")
    parser.add_argument("--model-id", default=None,
                        help="override the pretrained checkpoint id")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--listen", default="127.0.0.1:8040",
                        help="host:port to bind")
    parser.add_argument("--train-timesteps", type=int, default=1000,
                        help="scheduler steps the fractional timestep maps onto")
    parser.add_argument("--guidance-scale", type=float, default=7.5,
                        help="classifier-free guidance scale for real priors")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.mock and args.model and args.model != "mock":
        print("error: --mock conflicts with --model", file=sys.stderr)
        return 2
    model = "mock" if args.mock or args.model is None else args.model
    try:
        host, port = args.listen.rsplit(":", 1)
        config = BridgeConfig(
            model=model,
            device=args.device,
            host=host,
            port=int(port),
            train_timesteps=args.train_timesteps,
            guidance_scale=args.guidance_scale,
            model_kwargs={"model_id": args.model_id} if args.model_id else {},
        )
    except ValueError:
        print(f"error: bad --listen value {args.listen!r}", file=sys.stderr)
        return 2
    try:
        serve(config)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: cannot bind {args.listen}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
