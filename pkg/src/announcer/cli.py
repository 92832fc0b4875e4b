"""Operator command line.

``serve`` and ``import`` work against the local installation (config
file / database); everything else is a thin client over the HTTP API,
authenticated by the ANNOUNCER_TOKEN env var.  ``--json`` switches any
subcommand's output to machine-readable JSON.
"""

from __future__ import annotations

import argparse
import json
import os
import signal
import sys

import httpx

from . import simsc
from .config import ConfigNotFound, load_config

ENV_TOKEN = "ANNOUNCER_TOKEN"
ENV_API = "ANNOUNCER_API"
DEFAULT_API = "http://127.0.0.1:8080"


class CliError(Exception):
    def __init__(self, code: str, message: str = ""):
        super().__init__(message or code)
        self.code = code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except ConfigNotFound as exc:
        print(f"CONFIG_NOT_FOUND: {exc}", file=sys.stderr)
        return 1
    except CliError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="announcer",
        description="Campus bulk SMS/email announcer",
    )
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command")
    parser.set_defaults(command=None)

    p = sub.add_parser("serve", help="run the API service, scheduler and gateway")
    p.add_argument("--config", default=None, help="path to announcer.conf")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("simsc", help="run the SMSC simulator standalone")
    p.add_argument("--port", type=int, default=2775)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drop-resp", type=float, default=0.0)
    p.set_defaults(func=cmd_simsc)

    p = sub.add_parser("import", help="import a CSV export into the registry")
    p.add_argument("--kind", required=True,
                   choices=["students", "staff", "timetable", "enrollments", "fees", "loans"])
    p.add_argument("--file", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("login", help="obtain an API token")
    p.add_argument("--staff-id", required=True)
    p.add_argument("--password", default=None,
                   help="prompted for when omitted")
    p.set_defaults(func=cmd_login)

    p = sub.add_parser("autorun", help="trigger one autorun tick via the API")
    p.add_argument("--kind", required=True, choices=["fees", "library"])
    p.add_argument("--as-of", default=None, help="scan date YYYY-MM-DD")
    p.set_defaults(func=cmd_autorun)

    p = sub.add_parser("batches", help="list batches")
    p.add_argument("--state", default=None)
    p.set_defaults(func=cmd_batches)

    p = sub.add_parser("approve", help="approve a pending batch")
    p.add_argument("batch_id", type=int)
    p.set_defaults(func=cmd_approve)

    p = sub.add_parser("reject", help="reject a pending batch")
    p.add_argument("batch_id", type=int)
    p.set_defaults(func=cmd_reject)

    p = sub.add_parser("report", help="show a batch's dispatch report")
    p.add_argument("batch_id", type=int)
    p.set_defaults(func=cmd_report)

    return parser


# -- local commands ------------------------------------------------------------


def cmd_serve(args) -> int:
    import uvicorn

    from .api.app import create_app
    from .runtime import Runtime

    cfg = load_config(args.config)
    runtime = Runtime(cfg)
    try:
        resumed = runtime.resume_incomplete()
        if resumed:
            print(f"resumed interrupted batches: {resumed}")
        runtime.start_scheduler()
        app = create_app(runtime)
        uvicorn.run(app, host=cfg.listen_host, port=cfg.listen_port, log_level="info")
    finally:
        runtime.close()
    return 0


def cmd_simsc(args) -> int:
    try:
        handle = simsc.run(
            simsc.SimConfig(
                port=args.port, rng_seed=args.seed, drop_resp_rate=args.drop_resp
            )
        )
    except simsc.PortInUse as exc:
        raise CliError("PORT_IN_USE", str(exc)) from None
    print(f"simsc listening on port {handle.port}", file=sys.stderr)
    stop = []
    signal.signal(signal.SIGTERM, lambda *a: stop.append(True))
    try:
        while not stop:
            signal.pause()
    except KeyboardInterrupt:
        pass
    finally:
        ledger = handle.ledger()
        handle.stop()
        output = simsc.ledger_json_lines(ledger)
        if output:
            print(output)
    return 0


def cmd_import(args) -> int:
    from .registry import Database, MissingHeader, Registry

    cfg = load_config(args.config)
    db = Database(cfg.db_path)
    try:
        registry = Registry(db, default_country=cfg.default_country)
        try:
            report = registry.import_csv(args.kind.upper(), args.file)
        except FileNotFoundError as exc:
            raise CliError("FILE_NOT_FOUND", str(exc)) from None
        except MissingHeader as exc:
            raise CliError("MISSING_HEADER", str(exc)) from None
    finally:
        db.close()
    if args.json:
        print(json.dumps({
            "accepted": report.accepted,
            "rejected": [{"line": line, "reason": reason}
                         for line, reason in report.rejected],
        }))
    else:
        print(f"accepted: {report.accepted}")
        for line, reason in report.rejected:
            print(f"rejected line {line}: {reason}")
    return 0 if not report.rejected else 1


# -- API client commands ----------------------------------------------------------


def _api_base() -> str:
    return os.environ.get(ENV_API, DEFAULT_API).rstrip("/")


def _api_request(method: str, path: str, token: str | None = None, body=None):
    headers = {}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    try:
        resp = httpx.request(
            method, f"{_api_base()}{path}", json=body, headers=headers, timeout=30.0
        )
    except httpx.HTTPError as exc:
        raise CliError("API_UNREACHABLE", f"{_api_base()}: {exc}") from None
    if resp.status_code >= 400:
        try:
            payload = resp.json()
            code = payload.get("code", f"HTTP_{resp.status_code}")
            message = payload.get("message", resp.text)
        except ValueError:
            code, message = f"HTTP_{resp.status_code}", resp.text
        raise CliError(code, message)
    return resp.json()


def _token() -> str:
    token = os.environ.get(ENV_TOKEN)
    if not token:
        raise CliError(ENV_TOKEN + "_NOT_SET", "log in and export ANNOUNCER_TOKEN")
    return token


def _print(args, payload, human: str) -> None:
    if args.json:
        print(json.dumps(payload))
    else:
        print(human)


def cmd_login(args) -> int:
    password = args.password
    if password is None:
        import getpass

        password = getpass.getpass("password: ")
    payload = _api_request(
        "POST", "/api/login", body={"staff_id": args.staff_id, "password": password}
    )
    _print(args, payload, payload["token"])
    return 0


def cmd_autorun(args) -> int:
    body = {"as_of": args.as_of} if args.as_of else {}
    payload = _api_request(
        "POST", f"/api/autorun/{args.kind}/trigger", token=_token(), body=body
    )
    if payload.get("suppressed") or payload.get("batch") is None:
        _print(args, payload, "nothing to send (suppressed)")
    else:
        batch = payload["batch"]
        _print(args, payload,
               f"batch {batch['batch_id']} {batch['state']} "
               f"({batch['sendable']}/{batch['total']} sendable)")
    return 0


def _format_batch(batch: dict) -> str:
    return (f"batch {batch['batch_id']} kind={batch['kind']} state={batch['state']} "
            f"by={batch['created_by']} total={batch['total']}")


def cmd_batches(args) -> int:
    path = "/api/batches"
    if args.state:
        path += f"?state={args.state}"
    payload = _api_request("GET", path, token=_token())
    _print(args, payload, "\n".join(_format_batch(b) for b in payload) or "no batches")
    return 0


def cmd_approve(args) -> int:
    payload = _api_request(
        "POST", f"/api/batches/{args.batch_id}/approve", token=_token()
    )
    _print(args, payload, _format_batch(payload))
    return 0


def cmd_reject(args) -> int:
    payload = _api_request(
        "POST", f"/api/batches/{args.batch_id}/reject", token=_token()
    )
    _print(args, payload, _format_batch(payload))
    return 0


def cmd_report(args) -> int:
    payload = _api_request(
        "GET", f"/api/batches/{args.batch_id}/report", token=_token()
    )
    human = (
        f"batch {payload['batch_id']} {payload['state']}: "
        f"sent={payload['sent']} delivered={payload['delivered']} "
        f"failed={payload['failed']} skipped={payload['skipped']} "
        f"pending={payload['pending']} total={payload['total']}"
    )
    _print(args, payload, human)
    return 0


if __name__ == "__main__":
    sys.exit(main())
