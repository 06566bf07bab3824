"""Batch experiment runner; a thin client over the lab service.

Each subcommand posts one request to the service and writes the response
body to --out.  By default the app is driven in-process (no server
needed); --server points the same client at a remote instance.

Exit codes: 0 pass, 1 statistical-gate failure, 2 config error,
3 numeric/resolution error, 4 blocking error, 5 degenerate sigma^2 = 0.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx

EXIT_OK = 0
EXIT_STATISTICAL = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_BLOCKING = 4
EXIT_DEGENERATE = 5

_ERROR_EXITS = {
    "config": EXIT_CONFIG,
    "numeric": EXIT_NUMERIC,
    "blocking": EXIT_BLOCKING,
    "degenerate": EXIT_DEGENERATE,
}

COMMANDS = ("fejer", "blocking", "variance", "clt", "cov", "tightness", "gen")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cltlab",
        description="Lattice-field limit-theorem experiments (CSV/JSON reports).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--reps", type=int, default=None, help="override replication count")
        p.add_argument(
            "--shape",
            default=None,
            help="override shape, e.g. 128x128 (shape commands) or the whole list",
        )
        p.add_argument("--threads", type=int, default=None, help="override worker threads")
        p.add_argument("--out", default="-", help="output path, '-' for stdout")
        p.add_argument("--server", default=None, help="base URL of a running service")
        if name in ("clt", "cov"):
            p.add_argument(
                "--ensemble-out",
                default=None,
                help="also write the per-replication normalized sums as CSV",
            )
    serve = sub.add_parser("serve", help="run the HTTP service with uvicorn")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _parse_shape(text: str) -> list[int]:
    try:
        dims = [int(v) for v in text.lower().split("x")]
    except ValueError as exc:
        raise ValueError(f"bad shape {text!r}; expected L1xL2x...") from exc
    if not dims:
        raise ValueError("empty shape")
    return dims


def _load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("config must be a JSON object")
    return doc


def _apply_overrides(command: str, config: dict, args: argparse.Namespace) -> dict:
    config = dict(config)
    if args.seed is not None:
        config["master_seed"] = args.seed
    if args.reps is not None:
        config["reps"] = args.reps
    if args.threads is not None:
        config["threads"] = args.threads
    if args.shape is not None:
        dims = _parse_shape(args.shape)
        if command in ("fejer", "variance", "tightness"):
            config["shapes"] = [dims]
            config.pop("shape_schedule", None)
        else:
            config["shape"] = dims
    if getattr(args, "ensemble_out", None):
        config["include_sums"] = True
    return config


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=payload)

    from .service import create_app

    async def go() -> httpx.Response:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://cltlab", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    import asyncio

    return asyncio.run(go())


def _write_out(path: str, payload: bytes) -> None:
    if path == "-":
        sys.stdout.write(payload.decode("utf-8"))
        sys.stdout.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(payload)


def _run_experiment(command: str, args: argparse.Namespace) -> int:
    try:
        config = _apply_overrides(command, _load_config(args.config), args)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        response = _post(args.server, f"/{command}", config)
    except httpx.HTTPError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if response.status_code == 422:
        print(f"config error: {response.text}", file=sys.stderr)
        return EXIT_CONFIG
    if response.status_code != 200:
        try:
            error = response.json()["error"]
        except Exception:
            print(f"service error: {response.text}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"{error['code']} error: {error['message']}", file=sys.stderr)
        return _ERROR_EXITS.get(error["code"], EXIT_CONFIG)

    content_type = response.headers.get("content-type", "")
    if content_type.startswith("application/json"):
        doc = response.json()
        payload = (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")
        passed = doc.get("passed", doc.get("report", {}).get("passed", True))
        ensemble_out = getattr(args, "ensemble_out", None)
        if ensemble_out and doc.get("sums") is not None:
            _write_out(ensemble_out, _sums_csv(doc["sums"]))
    else:
        payload = response.content
        passed = True
    _write_out(args.out, payload)
    return EXIT_OK if passed else EXIT_STATISTICAL


def _sums_csv(sums: list) -> bytes:
    vector = bool(sums) and isinstance(sums[0], list)
    width = len(sums[0]) if vector else 1
    header = "rep," + ",".join(f"s_{i + 1}" for i in range(width)) if vector else "rep,s"
    lines = [header]
    for r, row in enumerate(sums):
        values = row if vector else [row]
        lines.append(",".join([str(r)] + [repr(float(v)) for v in values]))
    return ("\n".join(lines) + "\n").encode("utf-8")


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK
    return _run_experiment(args.command, args)


if __name__ == "__main__":
    sys.exit(main())
