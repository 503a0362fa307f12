"""Command-line client.

Every subcommand builds a request body and posts it to the service, either
in-process (the default) or to a running server given by ``--server``. The
primary artifact goes to ``--out`` (stdout by default) and the JSON report to
``--report`` (stderr by default). Failures print one JSON error object on
stderr and exit with 2 (bad input), 3 (capacity) or 4 (numerical).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

from . import SCHEMA_VERSIONS, __version__

EXIT_INPUT = 2


class CliError(Exception):
    def __init__(self, body: dict):
        super().__init__(body.get("message", ""))
        self.body = body


def _input_error(message: str) -> CliError:
    return CliError({"error": "input_error", "message": message, "exit_code": EXIT_INPUT})


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise _input_error(f"cannot read {path}: {exc.strerror}") from exc


def _read_json(path: str):
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise _input_error(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def _triple(text: str) -> list[int]:
    parts = [int(p) for p in text.split(",")]
    if len(parts) == 1:
        parts = parts * 2 + [4]
    elif len(parts) == 2:
        parts.append(4)
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected M[,N[,T]]")
    return parts


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


class Client:
    """Thin wrapper over an HTTP client, in-process unless ``server`` is set."""

    def __init__(self, server: str | None = None, cache_dir: str | None = None):
        if server:
            import httpx

            self._http = httpx.Client(base_url=server.rstrip("/"), timeout=None)
        else:
            with warnings.catch_warnings():
                # starlette warns about its httpx transport on import
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._http = TestClient(create_app(cache_dir), raise_server_exceptions=False)

    def post(self, path: str, body: dict) -> dict:
        resp = self._http.post(path, json=body)
        data = resp.json()
        if resp.status_code == 200:
            return data
        if isinstance(data, dict) and "exit_code" in data:
            raise CliError(data)
        # request validation failures from the framework
        detail = data.get("detail") if isinstance(data, dict) else data
        if isinstance(detail, list):
            msg = "; ".join(f"{'.'.join(str(x) for x in d.get('loc', [])[1:])}: {d.get('msg')}" for d in detail)
        else:
            msg = str(detail)
        raise _input_error(msg)


def _options(args) -> dict:
    opts = {
        "reads": args.reads,
        "sweeps": args.sweeps,
        "beta_min": args.beta_min,
        "beta_max": args.beta_max,
        "beta_steps": args.beta_steps,
        "threads": args.threads,
        "total_time": args.total_time,
    }
    if args.dt is not None:
        opts["dt"] = args.dt
    if args.schedule is not None:
        opts["schedule_csv"] = _read_text(args.schedule)
    return opts


def _hardware(args):
    if args.chimera is not None:
        return {"chimera": args.chimera}
    if args.target is not None:
        return _read_json(args.target)
    return None


def cmd_transpile(args, client):
    if args.line is not None:
        coupling = {"line": args.line}
    elif args.coupling is not None:
        coupling = _read_json(args.coupling)
    else:
        raise _input_error("transpile needs --coupling or --line")
    res = client.post("/transpile", {
        "qasm": _read_text(args.input), "coupling": coupling, "layout": args.layout,
        "routing": args.routing, "window": args.window, "seed": args.seed,
    })
    return res["qasm"], res["metrics"]


def cmd_synth(args, client):
    body = {"mode": args.mode, "basis": args.basis.split(","), "l0": args.l0, "gates": args.gate or []}
    if args.unitary is not None:
        body["unitary"] = _read_json(args.unitary)
    if args.depth is not None:
        body["depth"] = args.depth
    if args.epsilon is not None:
        body["epsilon"] = args.epsilon
    res = client.post("/synth", body)
    return res["qasm"], res["report"]


def cmd_reduce(args, client):
    body = {"model": _read_json(args.model), "negate": args.negate}
    if args.M is not None:
        body["M"] = args.M
    res = client.post("/reduce", body)
    return _dump(res["model"]), {"log": res["log"]}


def cmd_embed(args, client):
    target = _hardware(args)
    if target is None:
        raise _input_error("embed needs --target or --chimera")
    res = client.post("/embed", {"model": _read_json(args.model), "target": target, "seed": args.seed,
                                 "tries": args.tries, "negate": args.negate})
    return _dump(res["embedding"]), res["report"]


def cmd_solve(args, client):
    body = {
        "model": _read_json(args.model), "sampler": args.sampler, "embed": args.embed,
        "target": _hardware(args), "clone": args.clone, "seed": args.seed,
        "options": _options(args), "teff": args.teff, "negate": args.negate, "tries": args.tries,
    }
    if args.embedding is not None:
        body["embedding"] = _read_json(args.embedding)
    if args.chain_strength is not None:
        body["chain_strength"] = args.chain_strength
    if args.M is not None:
        body["M"] = args.M
    res = client.post("/solve", body)
    return res["samples"], res["summary"]


def cmd_sample(args, client):
    res = client.post("/sample", {"model": _read_json(args.model), "sampler": args.sampler, "seed": args.seed,
                                  "options": _options(args), "negate": args.negate})
    return res["samples"], res["summary"]


def cmd_stats(args, client):
    res = client.post("/stats", {"model": _read_json(args.model), "samples": _read_text(args.samples),
                                 "teff": not args.no_teff, "negate": args.negate})
    return _dump(res), None


def _sampler_flags(p):
    p.add_argument("--sampler", choices=["sa", "adiabatic", "brute"], default="sa")
    p.add_argument("--reads", type=int, default=100)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--beta-min", type=float, default=0.1)
    p.add_argument("--beta-max", type=float, default=10.0)
    p.add_argument("--beta-steps", type=int, default=64)
    p.add_argument("--total-time", type=float, default=100.0, help="adiabatic anneal length")
    p.add_argument("--dt", type=float, default=None, help="adiabatic time step")
    p.add_argument("--schedule", default=None, help="CSV file with s,F,G rows")


def _model_flags(p):
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--negate", action="store_true", help="flip the sign of every coefficient on load")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(json.dumps({"error": "usage_error", "message": f"{self.prog}: {message}", "exit_code": EXIT_INPUT}) + "\n")
        sys.exit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--server", default=None, help="service URL; in-process when omitted")
    common.add_argument("--out", default=None, help="primary output file (default stdout)")
    common.add_argument("--report", default=None, help="report file (default stderr)")

    parser = _Parser(prog="qcomp", description=__doc__.splitlines()[0], allow_abbrev=False)
    parser.add_argument("--version", action="store_true", help="print version and file-format schema versions")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("transpile", parents=[common], allow_abbrev=False, help="route a QASM circuit onto a coupling graph")
    p.add_argument("--input", required=True, help="QASM file")
    p.add_argument("--coupling", default=None, help="coupling graph JSON file")
    p.add_argument("--line", type=int, default=None, help="use a linear chain of N qubits")
    p.add_argument("--layout", choices=["trivial", "dense"], default="trivial")
    p.add_argument("--routing", choices=["cascade", "lookahead"], default="cascade")
    p.add_argument("--window", type=int, default=4)
    p.set_defaults(func=cmd_transpile)

    p = sub.add_parser("synth", parents=[common], allow_abbrev=False, help="synthesize a unitary")
    p.add_argument("--unitary", default=None, help="unitary JSON file")
    p.add_argument("--gate", action="append", help="gate spec such as rz:0.37 (repeatable, applied in order)")
    p.add_argument("--mode", choices=["exact", "sk"], default="exact")
    p.add_argument("--basis", default="h,t,tdg")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--l0", type=int, default=12)
    p.add_argument("--cache-dir", default=os.environ.get("QCOMP_CACHE_DIR"), help="directory for precompiled nets")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("reduce", parents=[common], allow_abbrev=False, help="quadratize a HUBO")
    _model_flags(p)
    p.add_argument("--M", type=float, default=None, help="penalty weight")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("embed", parents=[common], allow_abbrev=False, help="find a minor embedding")
    _model_flags(p)
    p.add_argument("--target", default=None, help="hardware graph JSON file")
    p.add_argument("--chimera", type=_triple, default=None, help="M[,N[,T]]")
    p.add_argument("--tries", type=int, default=10)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("solve", parents=[common], allow_abbrev=False, help="reduce, embed, sample and unembed")
    _model_flags(p)
    _sampler_flags(p)
    p.add_argument("--embed", action="store_true")
    p.add_argument("--target", default=None, help="hardware graph JSON file")
    p.add_argument("--chimera", type=_triple, default=None, help="M[,N[,T]]")
    p.add_argument("--embedding", default=None, help="use this embedding JSON instead of searching")
    p.add_argument("--clone", type=int, default=1)
    p.add_argument("--chain-strength", type=float, default=None)
    p.add_argument("--M", type=float, default=None)
    p.add_argument("--tries", type=int, default=10)
    p.add_argument("--teff", action="store_true", help="estimate effective temperature")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sample", parents=[common], allow_abbrev=False, help="sample an Ising or QUBO model")
    _model_flags(p)
    _sampler_flags(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("stats", parents=[common], allow_abbrev=False, help="summarize a sample file")
    _model_flags(p)
    p.add_argument("--samples", required=True, help="JSON-lines sample file")
    p.add_argument("--no-teff", action="store_true")
    p.set_defaults(func=cmd_stats)
    return parser


def _write(path: str | None, text: str, stream):
    if path is None:
        stream.write(text)
        stream.flush()
    else:
        Path(path).write_text(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error already written
        return int(exc.code or 0)
    if args.version:
        sys.stdout.write(_dump({"version": __version__, "schemas": SCHEMA_VERSIONS}))
        return 0
    if args.command is None:
        sys.stderr.write(json.dumps({"error": "usage_error", "message": "a subcommand is required", "exit_code": EXIT_INPUT}) + "\n")
        return EXIT_INPUT
    try:
        client = Client(args.server, getattr(args, "cache_dir", None))
        primary, report = args.func(args, client)
        _write(args.out, primary, sys.stdout)
        if report is not None:
            _write(args.report, _dump(report), sys.stderr)
    except CliError as exc:
        sys.stderr.write(json.dumps(exc.body) + "\n")
        return int(exc.body.get("exit_code", EXIT_INPUT))
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "input_error", "message": str(exc), "exit_code": EXIT_INPUT}) + "\n")
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
