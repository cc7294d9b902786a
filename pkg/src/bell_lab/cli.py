"""Thin command-line client for the bell-lab service.

Every subcommand builds a request, sends it to the HTTP service (in-process
by default, or a remote server via --url), and renders the JSON response.
All randomness flows from --seed, so identical invocations produce
byte-identical output.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 cap exceeded.
Errors print a single machine-taggable line ``ERR:<code>:<detail>`` on
standard error.
"""
from __future__ import annotations

import argparse
import asyncio
import csv
import io
import json
import sys

import httpx

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_CAP = 3

_TAG_TO_EXIT = {
    "usage": EXIT_USAGE,
    "numerical_failure": EXIT_NUMERICAL,
    "cap_exceeded": EXIT_CAP,
}

SWEEP_CSV_HEADER = ["v1", "v2", "product", "S_biloc", "chsh", "violatesBilocal", "violatesCHSH"]


class CliError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        self.message = message
        super().__init__(message)


class Parser(argparse.ArgumentParser):
    """argparse with the documented usage exit code (1, not argparse's 2)."""

    def error(self, message: str):
        print(f"ERR:{EXIT_USAGE}:{message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def post(args: argparse.Namespace, path: str, payload: dict) -> dict:
    """POST to the service; in-process unless --url points elsewhere."""

    async def run() -> httpx.Response:
        if args.url:
            async with httpx.AsyncClient(base_url=args.url, timeout=600.0) as client:
                return await client.post(path, json=payload)
        from .service import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://bell-lab", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    try:
        response = asyncio.run(run())
    except httpx.HTTPError as exc:
        raise CliError(EXIT_NUMERICAL, f"service unreachable: {exc}")
    if response.status_code >= 400:
        try:
            body = response.json()
        except json.JSONDecodeError:
            body = {}
        if response.status_code == 422:
            raise CliError(EXIT_USAGE, f"invalid request: {body.get('detail')}")
        tag = body.get("error", "usage")
        detail = body.get("detail", response.text)
        raise CliError(_TAG_TO_EXIT.get(tag, EXIT_USAGE), str(detail))
    return response.json()


def emit(args: argparse.Namespace, text: str) -> None:
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
    else:
        print(text)


def emit_json(args: argparse.Namespace, body: dict) -> None:
    emit(args, json.dumps(body, indent=2))


def load_json_file(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_USAGE, f"cannot read {path}: {exc}")


def parse_scenario(text: str) -> dict:
    parts = text.split(",")
    if len(parts) != 4:
        raise CliError(EXIT_USAGE, "scenario must be nX,nY,nA,nB")
    try:
        n_x, n_y, n_a, n_b = (int(p) for p in parts)
    except ValueError:
        raise CliError(EXIT_USAGE, "scenario entries must be integers")
    return {"nX": n_x, "nY": n_y, "nA": n_a, "nB": n_b}


def cmd_chsh(args) -> int:
    if args.visibility is None and not args.state:
        raise CliError(EXIT_USAGE, "provide --visibility or --state")
    payload: dict = {}
    if args.visibility is not None:
        payload["visibility"] = args.visibility
    if args.settings:
        payload["settings"] = load_json_file(args.settings)
    if args.state:
        payload["state"] = load_json_file(args.state)
    emit_json(args, post(args, "/chsh", payload))
    return EXIT_OK


def cmd_membership(args) -> int:
    payload = {
        "behavior": load_json_file(args.behavior),
        "tolerance": args.tol,
        "cap": args.cap,
    }
    emit_json(args, post(args, "/membership", payload))
    return EXIT_OK


def cmd_local_bound(args) -> int:
    payload = {"expression": load_json_file(args.expression), "cap": args.cap}
    emit_json(args, post(args, "/local-bound", payload))
    return EXIT_OK


def render_sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_CSV_HEADER)
    for row in rows:
        writer.writerow(
            [
                repr(float(row["v1"])),
                repr(float(row["v2"])),
                repr(float(row["product"])),
                repr(float(row["sBiloc"])),
                repr(float(row["chsh"])),
                "true" if row["violatesBilocal"] else "false",
                "true" if row["violatesCHSH"] else "false",
            ]
        )
    return buf.getvalue().rstrip("\n")


def cmd_bilocal(args) -> int:
    if args.sweep:
        payload = {"gridPoints": args.grid_points}
        body = post(args, "/bilocal/sweep", payload)
        if args.format == "csv":
            emit(args, render_sweep_csv(body["rows"]))
        else:
            emit_json(args, body)
        return EXIT_OK
    if args.v1 is None or args.v2 is None:
        raise CliError(EXIT_USAGE, "provide --v1 and --v2, or --sweep")
    body = post(args, "/bilocal/value", {"v1": args.v1, "v2": args.v2})
    if args.format == "csv":
        emit(args, render_sweep_csv([body]))
    else:
        emit_json(args, body)
    return EXIT_OK


def cmd_freewill_deficit(args) -> int:
    emit_json(args, post(args, "/freewill/deficit", {"n": args.n, "m": args.m}))
    return EXIT_OK


def cmd_freewill_detection(args) -> int:
    payload: dict = {"samples": args.samples, "seed": args.seed}
    if args.settings:
        payload["settings"] = load_json_file(args.settings)
    emit_json(args, post(args, "/freewill/detection", payload))
    return EXIT_OK


def cmd_freewill_simulate(args) -> int:
    payload: dict = {"samples": args.samples, "seed": args.seed}
    if args.settings:
        settings = load_json_file(args.settings)
        payload["aliceDirections"] = settings.get("alice")
        payload["bobDirections"] = settings.get("bob")
    emit_json(args, post(args, "/freewill/simulate", payload))
    return EXIT_OK


def cmd_covariance_check(args) -> int:
    payload = {"model": load_json_file(args.model)}
    emit_json(args, post(args, "/covariance/check", payload))
    return EXIT_OK


def cmd_covariance_forces(args) -> int:
    payload: dict = {
        "scenario": parse_scenario(args.scenario),
        "lambdaCount": args.lambda_count,
        "trials": args.trials,
        "seed": args.seed,
    }
    if args.exhaustive:
        payload["exhaustive"] = True
    elif args.sampled:
        payload["exhaustive"] = False
    emit_json(args, post(args, "/covariance/forces-locality", payload))
    return EXIT_OK


def cmd_expand_ledger(args) -> int:
    stages = load_json_file(args.stages)
    if not isinstance(stages, list):
        raise CliError(EXIT_USAGE, "stages file must hold a JSON list")
    payload = {"stages": stages, "seedBits": args.seed_bits}
    emit_json(args, post(args, "/expand/ledger", payload))
    return EXIT_OK


def cmd_expand_simulate(args) -> int:
    payload = {
        "rounds": args.rounds,
        "seed": args.seed,
        "visibility": args.visibility,
        "includeBitstream": bool(args.bits_out),
    }
    body = post(args, "/expand/simulate", payload)
    bitstream = body.pop("bitstream", None)
    if args.bits_out:
        if bitstream is None:
            raise CliError(EXIT_NUMERICAL, "service did not return a bitstream")
        if args.packed:
            import numpy as np

            bits = np.frombuffer(bitstream.encode(), dtype=np.uint8) - ord("0")
            with open(args.bits_out, "wb") as fh:
                fh.write(np.packbits(bits).tobytes())
        else:
            with open(args.bits_out, "w") as fh:
                fh.write(bitstream)
                fh.write("\n")
    emit_json(args, body)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> Parser:
    parser = Parser(prog="bell-lab", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--url", default=None, help="remote service URL (default: in-process)")
    common.add_argument(
        "--output", default=None, help="write the result to a file instead of stdout"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(owner, name, **kwargs):
        return owner.add_parser(name, parents=[common], **kwargs)

    p = add_parser(sub, "chsh", help="CHSH value and locality verdict of a state")
    p.add_argument("--visibility", type=float, default=None, help="Werner visibility")
    p.add_argument("--settings", help="measurement settings JSON file")
    p.add_argument("--state", help="two-qubit state JSON file (overrides --visibility)")
    p.set_defaults(func=cmd_chsh)

    p = add_parser(sub, "membership", help="local-polytope membership of a behavior file")
    p.add_argument("--behavior", required=True, help="behavior JSON file")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--cap", type=int, default=10**7)
    p.set_defaults(func=cmd_membership)

    p = add_parser(sub, "local-bound", help="local and algebraic bounds of an expression file")
    p.add_argument("--expression", required=True, help="Bell expression JSON file")
    p.add_argument("--cap", type=int, default=10**7)
    p.set_defaults(func=cmd_local_bound)

    p = add_parser(sub, "bilocal", help="bilocal test value or visibility sweep")
    p.add_argument("--v1", type=float)
    p.add_argument("--v2", type=float)
    p.add_argument("--sweep", action="store_true")
    p.add_argument("--grid-points", type=int, default=21)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_bilocal)

    p = sub.add_parser("freewill", help="deficit arithmetic and hidden-variable simulators")
    fw = p.add_subparsers(dest="freewill_command", required=True)

    q = add_parser(fw, "deficit", help="log2(N/M) choice deficit")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=int, required=True)
    q.set_defaults(func=cmd_freewill_deficit)

    q = add_parser(fw, "detection", help="detection-loophole model simulation")
    q.add_argument("--samples", type=int, default=10**6)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--settings", help="measurement settings JSON file")
    q.set_defaults(func=cmd_freewill_detection)

    q = add_parser(fw, "simulate", help="measurement-dependent model simulation")
    q.add_argument("--samples", type=int, default=10**6)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--settings", help="measurement settings JSON file")
    q.set_defaults(func=cmd_freewill_simulate)

    p = sub.add_parser("covariance", help="covariant-model checks")
    cov = p.add_subparsers(dest="covariance_command", required=True)

    q = add_parser(cov, "check", help="frame-independence check of a model file")
    q.add_argument("--model", required=True, help="covariant model JSON file")
    q.set_defaults(func=cmd_covariance_check)

    q = add_parser(cov, "forces-locality", help="scan covariant models for locality")
    q.add_argument("--scenario", default="2,2,2,2", help="nX,nY,nA,nB")
    q.add_argument("--lambda-count", type=int, default=2)
    q.add_argument("--trials", type=int, default=1000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--exhaustive", action="store_true")
    q.add_argument("--sampled", action="store_true")
    q.set_defaults(func=cmd_covariance_forces)

    p = sub.add_parser("expand", help="randomness-expansion ledger and QRNG rounds")
    ex = p.add_subparsers(dest="expand_command", required=True)

    q = add_parser(ex, "ledger", help="serial-composition ledger from a stages file")
    q.add_argument("--stages", required=True, help="JSON list of stages")
    q.add_argument("--seed-bits", type=float, required=True)
    q.set_defaults(func=cmd_expand_ledger)

    q = add_parser(ex, "simulate", help="simulate Bell rounds and certify min-entropy")
    q.add_argument("--rounds", type=int, default=10**5)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--visibility", type=float, default=1.0)
    q.add_argument("--bits-out", help="write the outcome bitstream to this file")
    q.add_argument("--packed", action="store_true", help="pack bits into binary")
    q.set_defaults(func=cmd_expand_simulate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"ERR:{exc.code}:{exc.message}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
