"""Command-line client for the scenario runner.

``voldist run CONFIG`` executes the task described by a JSON configuration
file, in-process by default or against a running server with ``--server``.
``voldist validate CONFIG`` forces the consistency suite on the configured
body. ``voldist serve`` starts the HTTP service.

Exit codes: 0 when the run succeeded and every check passed, 1 when the
computation failed or a check failed, 2 when the configuration was invalid.
"""

from __future__ import annotations

import argparse
import json
import sys

from pydantic import ValidationError

from .errors import ConfigInvalid
from .models import RunResponse, ScenarioConfig
from .scenarios import run_scenario

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def _load_config(path: str, args) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigInvalid("configuration must be a JSON object")
    if getattr(args, "circle_nodes", None) is not None:
        raw.setdefault("quadrature", {})["circle_nodes"] = args.circle_nodes
    if getattr(args, "depth_nodes", None) is not None:
        raw.setdefault("quadrature", {})["depth_nodes"] = args.depth_nodes
    return ScenarioConfig.model_validate(raw)


def _remote_run(server: str, config: ScenarioConfig, endpoint: str):
    import httpx

    url = server.rstrip("/") + endpoint
    resp = httpx.post(url, json=config.model_dump(), timeout=600.0)
    if resp.status_code == 422:
        detail = resp.json().get("detail", resp.text)
        raise ConfigInvalid(f"server rejected the configuration: {detail}")
    resp.raise_for_status()
    return RunResponse.model_validate(resp.json())


def _print_response(resp: RunResponse) -> None:
    head = f"task: {resp.task}   status: {resp.status}"
    if resp.label:
        head += f"   label: {resp.label}"
    print(head)
    if resp.status != "ok":
        print(f"error: {resp.error}")
        return
    report = resp.report
    if resp.task == "volume_distance":
        for entry in report.get("points", []):
            print("  p=%s  v=%.12g  b=%.12g  iterations=%d"
                  % (entry["point"], entry["volume_distance"],
                     entry["section_area"], entry["iterations"]))
    if resp.task == "asymptotics":
        fit = report.get("fit", {})
        print("  reach=%.6g  metric_err=%.3g  rate_err=%.3g"
              % (report.get("reach", float("nan")),
                 fit.get("metric_err", float("nan")),
                 fit.get("rate_err", float("nan"))))
    for check in resp.checks:
        flag = "PASS" if check.passed else "FAIL"
        value = "" if check.value is None else f"  value={check.value:.6g}"
        bound = "" if check.bound is None else f"  bound={check.bound:.6g}"
        note = f"  ({check.note})" if check.note else ""
        print(f"  [{flag}] {check.name}{value}{bound}{note}")
    passed = sum(1 for c in resp.checks if c.passed)
    print(f"checks: {passed}/{len(resp.checks)} passed")


def _write_outputs(resp: RunResponse, prefix: str) -> None:
    report_path = prefix + ".report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(resp.model_dump(exclude={"csv"}), fh, indent=2)
        fh.write("\n")
    written = [report_path]
    if resp.csv is not None:
        csv_path = prefix + ".csv"
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(resp.csv)
        written.append(csv_path)
    print("wrote " + ", ".join(written))


def _execute(args, force_validate: bool) -> int:
    try:
        config = _load_config(args.config, args)
        if force_validate:
            config = config.model_copy(update={"task": "validate"})
        if args.server:
            endpoint = "/validate" if force_validate else "/run"
            resp = _remote_run(args.server, config, endpoint)
        else:
            resp = run_scenario(config)
    except (ConfigInvalid, ValidationError, json.JSONDecodeError,
            OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # connection errors, server faults
        print(f"execution error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    _print_response(resp)
    if args.output:
        _write_outputs(resp, args.output)
    if resp.status != "ok":
        return EXIT_FAILED
    if not all(c.passed for c in resp.checks):
        return EXIT_FAILED
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="voldist",
        description="volume distance and affine normal-form measurements "
                    "on convex bodies")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute the task in a JSON config")
    run_p.add_argument("config", help="path to the scenario configuration")
    run_p.add_argument("--output", help="prefix for .csv/.report.json files")
    run_p.add_argument("--circle-nodes", type=int, dest="circle_nodes",
                       help="override the direction quadrature node count")
    run_p.add_argument("--depth-nodes", type=int, dest="depth_nodes",
                       help="override the depth quadrature node count")
    run_p.add_argument("--server", help="run against this server URL "
                                        "instead of in-process")

    val_p = sub.add_parser("validate",
                           help="run the consistency suite on the body")
    val_p.add_argument("config", help="path to the scenario configuration")
    val_p.add_argument("--output", help="prefix for the .report.json file")
    val_p.add_argument("--server", help="run against this server URL")

    serve_p = sub.add_parser("serve", help="start the HTTP service")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8000)

    args = parser.parse_args(argv)
    if args.command == "serve":
        import uvicorn

        uvicorn.run("voldist.service:app", host=args.host, port=args.port)
        return EXIT_OK
    if args.command == "validate":
        return _execute(args, force_validate=True)
    return _execute(args, force_validate=False)


if __name__ == "__main__":
    sys.exit(main())
