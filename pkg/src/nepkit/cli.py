"""Administrative command line interface.

The CLI is a thin client of the HTTP API: with ``--server`` it talks to a
running service, otherwise it mounts the app in-process over the chosen
data root and issues the same requests.  Either way the snapshot store
ends up identical.
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import date
from pathlib import Path
from typing import Any, Sequence

import httpx

from .config import ServiceConfig, load_config
from .errors import NepkitError

DEFAULT_DATA_ROOT = "./data"

METRIC_NAMES = ("pn", "ap", "rsl", "durations", "correlations")


class CliError(Exception):
    pass


def _parse_date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise CliError(f"bad date {text!r}, expected YYYY-MM-DD") from None


class ApiClient:
    """Minimal JSON-over-HTTP wrapper shared by remote and in-process modes."""

    def __init__(self, http: httpx.Client, token: str | None = None):
        self._http = http
        self._token = token

    def close(self) -> None:
        self._http.close()

    def call(
        self,
        method: str,
        path: str,
        json: Any | None = None,
        params: dict[str, Any] | None = None,
    ) -> Any:
        headers = {}
        if self._token:
            headers["X-Editor-Token"] = self._token
        try:
            resp = self._http.request(method, path, json=json, params=params, headers=headers)
        except httpx.HTTPError as exc:
            raise CliError(f"cannot reach service: {exc}") from None
        if resp.status_code >= 400:
            try:
                body = resp.json()
                raise CliError(f"{body['error']}: {body['message']}")
            except (ValueError, KeyError):
                raise CliError(f"HTTP {resp.status_code}: {resp.text}") from None
        return resp.json()


def make_client(args: argparse.Namespace) -> ApiClient:
    if args.server:
        return ApiClient(httpx.Client(base_url=args.server, timeout=60.0), args.token)
    if args.config:
        config = load_config(args.config)
    else:
        root = args.data_root or os.environ.get("NEPKIT_DATA_ROOT", DEFAULT_DATA_ROOT)
        config = ServiceConfig(data_root=Path(root))
    # Imported lazily: in-process mode needs the app, remote mode does not.
    from fastapi.testclient import TestClient

    from .engine import Engine
    from .service.app import create_app

    return ApiClient(TestClient(create_app(Engine(config))), args.token)


# -- output helpers


def _real(value: float | None) -> str:
    return "-" if value is None else f"{value:.4f}"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = ["\t".join(header)]
    lines.extend("\t".join(row) for row in rows)
    return "\n".join(lines) + "\n"


# -- subcommand handlers


def cmd_ingest(client: ApiClient, args: argparse.Namespace) -> int:
    if args.file == "-":
        text = sys.stdin.read()
    else:
        path = Path(args.file)
        if not path.exists():
            raise CliError(f"no such file: {args.file}")
        text = path.read_text(encoding="utf-8")
    body = client.call("POST", "/ingest", json={"text": text})
    print(f"registered {body['registered']} papers")
    return 0


def cmd_compose(client: ApiClient, args: argparse.Namespace) -> int:
    payload: dict[str, Any] = {
        "date": _parse_date(args.date).isoformat(),
        "include_undated": args.include_undated,
    }
    if args.cutoff:
        payload["cutoff"] = _parse_date(args.cutoff).isoformat()
    body = client.call("POST", "/compose", json=payload)
    print(f"nep-all {body['issue_date']}: {body['length']} papers")
    return 0


def cmd_report_add(client: ApiClient, args: argparse.Namespace) -> int:
    body = client.call(
        "POST",
        "/reports",
        json={
            "code": args.code,
            "subject": args.subject,
            "editor_name": args.editor,
            "editor_token": args.editor_token,
        },
    )
    print(f"created report {body['code']} ({body['subject']})")
    return 0


def cmd_report_list(client: ApiClient, args: argparse.Namespace) -> int:
    rows = [
        [r["code"], r["subject"], r["editor_name"], str(r["subscriber_count"])]
        for r in client.call("GET", "/reports")
    ]
    _emit(_table(["code", "subject", "editor", "subscribers"], rows), args.out)
    return 0


def cmd_train(client: ApiClient, args: argparse.Namespace) -> int:
    body = client.call("POST", f"/reports/{args.code}/train")
    print(
        f"trained {body['report_code']} on {body['trained_issue_count']} issues "
        f"({body['vocabulary_size']} vocabulary tokens)"
    )
    return 0


def cmd_pending(client: ApiClient, args: argparse.Namespace) -> int:
    rows = [
        [p["issue_date"], ",".join(p["actions"])]
        for p in client.call("GET", f"/reports/{args.code}/issues")
    ]
    _emit(_table(["issue", "actions"], rows), args.out)
    return 0


def _print_snapshot(body: dict) -> None:
    print(
        f"{body['stage']} v{body['version']} ({body['mode']}) "
        f"{body['report_code']}/{body['issue_date']}: {len(body['papers'])} papers"
    )
    for paper in body["papers"]:
        print(f"{paper['source_position']:>4} {paper['handle']} {paper['title']}")


def cmd_open(client: ApiClient, args: argparse.Namespace) -> int:
    body = client.call(
        "POST",
        f"/reports/{args.code}/issues/{_parse_date(args.date).isoformat()}/open",
        json={"mode": args.mode},
    )
    _print_snapshot(body)
    return 0


def cmd_select(client: ApiClient, args: argparse.Namespace) -> int:
    body = client.call(
        "POST",
        f"/reports/{args.code}/issues/{_parse_date(args.date).isoformat()}/selection",
        json={"handles": args.handles},
    )
    _print_snapshot(body)
    return 0


def cmd_order(client: ApiClient, args: argparse.Namespace) -> int:
    body = client.call(
        "POST",
        f"/reports/{args.code}/issues/{_parse_date(args.date).isoformat()}/ordering",
        json={"handles": args.handles},
    )
    _print_snapshot(body)
    return 0


def cmd_send(client: ApiClient, args: argparse.Namespace) -> int:
    body = client.call(
        "POST",
        f"/reports/{args.code}/issues/{_parse_date(args.date).isoformat()}/send",
    )
    snap = body["snapshot"]
    print(
        f"sent {snap['report_code']}/{snap['issue_date']} v{snap['version']}: "
        f"{len(snap['papers'])} papers, delivered to {body['delivered']} subscribers"
    )
    return 0


def cmd_delete(client: ApiClient, args: argparse.Namespace) -> int:
    client.call(
        "DELETE", f"/reports/{args.code}/issues/{_parse_date(args.date).isoformat()}"
    )
    print(f"deleted {args.code}/{args.date}")
    return 0


def cmd_subscribe(client: ApiClient, args: argparse.Namespace) -> int:
    body = client.call(
        "POST", f"/reports/{args.code}/subscriptions", json={"address": args.address}
    )
    print(f"subscribed; {args.code} now has {body['subscriber_count']} subscribers")
    return 0


def cmd_unsubscribe(client: ApiClient, args: argparse.Namespace) -> int:
    body = client.call("DELETE", f"/reports/{args.code}/subscriptions/{args.address}")
    print(f"unsubscribed; {args.code} now has {body['subscriber_count']} subscribers")
    return 0


def cmd_stats(client: ApiClient, args: argparse.Namespace) -> int:
    s = client.call("GET", "/stats")
    header = [
        "reports",
        "subscriptions",
        "avg_subscriptions",
        "avg_nepall_size",
        "avg_issue_size",
        "presorted_fraction",
    ]
    row = [
        str(s["report_count"]),
        str(s["subscription_total"]),
        _real(s["avg_subscriptions"]),
        _real(s["avg_nep_all_size"]),
        _real(s["avg_issue_size"]),
        _real(s["presorted_fraction"]),
    ]
    _emit(_table(header, [row]), args.out)
    return 0


def cmd_metrics(client: ApiClient, args: argparse.Namespace) -> int:
    if args.metric == "pn":
        body = client.call("GET", "/metrics/pn", params={"n": args.n})
        rows = [
            [r["report_code"], str(r["issues_evaluated"]), _real(r["value"])]
            for r in body["rows"]
        ]
        rows.append(["TOTAL", str(body["total_issues"]), _real(body["overall"])])
        text = _table(["report", "issues", f"p@{body['n']}"], rows)
    elif args.metric == "ap":
        params: dict[str, Any] = {"n": args.n}
        if args.min_presorted is not None:
            params["min_presorted"] = args.min_presorted
        body = client.call("GET", "/metrics/ap", params=params)
        rows = [
            [code, _real(value)] for code, value in sorted(body["per_report"].items())
        ]
        rows.append(["TOTAL", _real(body["overall"])])
        text = _table(["report", f"ap@{body['n']}"], rows)
    elif args.metric == "rsl":
        params = {}
        if args.min_presorted is not None:
            params["min_presorted"] = args.min_presorted
        body = client.call("GET", "/metrics/rsl", params=params)
        rows = [
            [code, _real(value)] for code, value in sorted(body["per_report"].items())
        ]
        rows.append(["TOTAL", _real(body["overall"])])
        text = _table(["report", "rsl"], rows)
    elif args.metric == "durations":
        params = {}
        if args.threshold is not None:
            params["threshold"] = args.threshold
        if args.chunk is not None:
            params["chunk"] = args.chunk
        body = client.call("GET", "/metrics/durations", params=params)

        def duration_row(r: dict) -> list[str]:
            return [
                r["report_code"],
                str(r["sessions"]),
                str(r["valid_sessions"]),
                _real(r["valid_fraction"]),
                _real(r["mean_valid_minutes"]),
            ]

        rows = [duration_row(r) for r in body["rows"]]
        if body["total"]:
            rows.append(duration_row(body["total"]))
        text = _table(
            ["report", "sessions", "valid", "valid_fraction", "mean_minutes"], rows
        )
        if args.histogram:
            hist = body["histogram"]
            hist_rows = [
                [str(index), _real(int(index) * hist["chunk_minutes"]), str(count)]
                for index, count in sorted(hist["bins"].items(), key=lambda kv: int(kv[0]))
            ]
            text += "\n" + _table(["bin", "start_minutes", "count"], hist_rows)
    else:  # correlations
        params = {}
        if args.threshold is not None:
            params["threshold"] = args.threshold
        body = client.call("GET", "/metrics/correlations", params=params)
        rows = [
            [c["label"], _real(c["coefficient"]), str(c["sample_size"])] for c in body
        ]
        text = _table(["label", "coefficient", "samples"], rows)
    _emit(text, args.out)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .service.app import serve

    config_path = args.serve_config or args.config
    if not config_path:
        raise CliError("serve requires --config")
    serve(load_config(config_path), ui_dir=args.ui_dir)
    return 0


# -- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nepkit",
        description="Current awareness service engine: ingestion, editorial workflow, dispatch, metrics.",
    )
    parser.add_argument("--server", help="base URL of a running service (default: in-process)")
    parser.add_argument("--data-root", help=f"data directory for in-process mode (default {DEFAULT_DATA_ROOT})")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--token", help="editor token for workflow commands")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="ingest an archive batch file ('-' for stdin)")
    p.add_argument("file")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("compose", help="compose the nep-all issue for a date")
    p.add_argument("--date", required=True)
    p.add_argument("--include-undated", action="store_true")
    p.add_argument("--cutoff", help="exclude papers created before this date")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("report", help="manage reports")
    report_sub = p.add_subparsers(dest="report_command", required=True)
    q = report_sub.add_parser("add", help="register a new report")
    q.add_argument("code")
    q.add_argument("--subject", required=True)
    q.add_argument("--editor", required=True)
    q.add_argument("--editor-token", default=None)
    q.set_defaults(func=cmd_report_add)
    q = report_sub.add_parser("list", help="list reports")
    q.add_argument("--out")
    q.set_defaults(func=cmd_report_list)

    p = sub.add_parser("train", help="train the presort model from sent issues")
    p.add_argument("code")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("pending", help="list issues waiting for the editor")
    p.add_argument("code")
    p.add_argument("--out")
    p.set_defaults(func=cmd_pending)

    p = sub.add_parser("open", help="open an issue at the source stage")
    p.add_argument("code")
    p.add_argument("date")
    p.add_argument("--mode", required=True, choices=["presorted", "unsorted"])
    p.set_defaults(func=cmd_open)

    p = sub.add_parser("select", help="submit the selection stage")
    p.add_argument("code")
    p.add_argument("date")
    p.add_argument("handles", nargs="+")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("order", help="submit the ordering stage")
    p.add_argument("code")
    p.add_argument("date")
    p.add_argument("handles", nargs="+")
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("send", help="send the issue to subscribers")
    p.add_argument("code")
    p.add_argument("date")
    p.set_defaults(func=cmd_send)

    p = sub.add_parser("delete", help="delete a pending issue")
    p.add_argument("code")
    p.add_argument("date")
    p.set_defaults(func=cmd_delete)

    p = sub.add_parser("subscribe", help="subscribe an address to a report")
    p.add_argument("code")
    p.add_argument("address")
    p.set_defaults(func=cmd_subscribe)

    p = sub.add_parser("unsubscribe", help="remove a subscription")
    p.add_argument("code")
    p.add_argument("address")
    p.set_defaults(func=cmd_unsubscribe)

    p = sub.add_parser("stats", help="whole-service statistics")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("metrics", help="editing-process measures")
    metric_sub = p.add_subparsers(dest="metric", required=True)
    for name in METRIC_NAMES:
        q = metric_sub.add_parser(name)
        if name in ("pn", "ap"):
            q.add_argument("--n", type=int, required=True)
        if name in ("ap", "rsl"):
            q.add_argument("--min-presorted", type=int, default=None)
        if name in ("durations", "correlations"):
            q.add_argument("--threshold", type=float, default=None)
        if name == "durations":
            q.add_argument("--chunk", type=float, default=None)
            q.add_argument("--histogram", action="store_true")
        q.add_argument("--out")
        q.set_defaults(func=cmd_metrics)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", dest="serve_config", default=None, help="JSON config file")
    p.add_argument("--ui-dir", default=None, help="serve a built editor UI from this directory")
    p.set_defaults(func=cmd_serve, serve=True)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "serve", False):
            return cmd_serve(args)
        client = make_client(args)
        try:
            return args.func(client, args)
        finally:
            client.close()
    except (CliError, NepkitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
