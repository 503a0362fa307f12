"""Run the service: ``python3 -m qcomp.service [--host H] [--port P]``."""

import argparse
import os

import uvicorn

from .app import create_app


def main(argv=None) -> None:
    p = argparse.ArgumentParser(prog="python3 -m qcomp.service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--cache-dir", default=os.environ.get("QCOMP_CACHE_DIR"))
    args = p.parse_args(argv)
    uvicorn.run(create_app(args.cache_dir), host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
