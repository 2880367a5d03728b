from __future__ import annotations

import argparse
import sys

from .formats import load_job
from .train import train_and_predict


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="trainer-bridge",
        description="Fine-tune a local model on an exported corpus and emit predictions",
    )
    parser.add_argument("job", help="key:value job spec file")
    args = parser.parse_args(argv)
    try:
        manifest = train_and_predict(load_job(args.job))
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(
        f"predictions for {manifest['eval_items']} items written "
        f"(eval accuracy {manifest['eval_accuracy']:.4f})"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
