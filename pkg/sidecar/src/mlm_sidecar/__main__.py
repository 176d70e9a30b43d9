"""Serve a masked-LM scoring backend: ``python -m mlm_sidecar --model ...``."""

from __future__ import annotations

import argparse

import uvicorn

from .service import BackendConfig, MaskedLMBackend, create_app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mlm-sidecar",
        description="HTTP mask-scoring service over a pretrained masked LM",
    )
    parser.add_argument("--model", required=True,
                        help="model name or local path resolvable by transformers")
    parser.add_argument("--device", default="cpu", help="cpu, cuda, cuda:N, ...")
    parser.add_argument("--port", type=int, default=8400)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--max-length", type=int, default=None,
                        help="cap on input tokens (default: model capacity)")
    parser.add_argument("--checkpoint-dir", default="checkpoints")
    args = parser.parse_args(argv)

    backend = MaskedLMBackend(
        BackendConfig(
            model=args.model,
            device=args.device,
            max_length=args.max_length,
            checkpoint_dir=args.checkpoint_dir,
        )
    )
    app = create_app(backend)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
