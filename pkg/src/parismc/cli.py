"""Command-line client for the smoothing service.

Subcommands map to the benchmark experiments; the actual computation always
runs behind the service API.  By default the app is driven in-process (no
socket needed); point ``--server`` or ``PARIS_SERVER_URL`` at a running
instance to execute remotely.  Results land in a CSV plus a ``summary.json``
next to it.

Exit codes: 0 all checks passed, 1 a statistical check failed, 2
configuration or transport error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from dataclasses import asdict
from typing import List, Sequence

import httpx

from .experiments import (
    ConfigError,
    ExperimentConfig,
    ResultRow,
    config_from_mapping,
    parse_config_file,
    write_csv,
    write_summary,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2

_SUBCOMMAND_EXPERIMENTS = {
    "figure-a": ["FigureA"],
    "figure-b": ["FigureB"],
    "oracle-check": ["OracleHmm", "OracleLgss"],
    "dg-check": ["DgCheck"],
}

_OVERRIDE_FIELDS = (
    "theta", "delta", "eps_grid", "n", "N", "M", "L",
    "replicates", "seed", "proposal", "backward", "mh_steps", "output_path",
)


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--theta", type=float, default=None)
    parser.add_argument("--delta", type=float, default=None)
    parser.add_argument("--eps_grid", type=str, default=None,
                        help="comma-separated skew grid, e.g. 0,0.1,0.2")
    parser.add_argument("--n", type=int, default=None, help="horizon (time steps)")
    parser.add_argument("--N", type=int, default=None, help="particle count")
    parser.add_argument("--M", type=int, default=None, help="backward samples per particle")
    parser.add_argument("--L", type=int, default=None, help="inner paths per density estimate")
    parser.add_argument("--replicates", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--proposal", choices=("optimal", "bootstrap"), default=None)
    parser.add_argument("--backward", choices=("rejection", "independent-mh"), default=None,
                        help="backward index sampler")
    parser.add_argument("--mh_steps", type=int, default=None,
                        help="MH transitions between retained backward samples")
    parser.add_argument("--output_path", type=str, default=None, help="CSV destination")
    parser.add_argument("--server", type=str, default=None,
                        help="base URL of a running service (default: in-process)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parismc",
        description="Benchmark client for the online particle smoothing service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment named in a config file")
    run.add_argument("config", help="flat 'key = value' configuration file")
    _add_override_flags(run)

    for name, help_text in (
        ("figure-a", "bias versus the skew parameter at a fixed horizon"),
        ("figure-b", "bias and replicate spread versus the horizon"),
        ("oracle-check", "oracle equivalence suites (finite-state and Kalman)"),
        ("dg-check", "transition-density estimator validation"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        _add_override_flags(cmd)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _flag_overrides(args: argparse.Namespace) -> dict:
    return {
        key: getattr(args, key)
        for key in _OVERRIDE_FIELDS
        if getattr(args, key, None) is not None
    }


def _make_client(server: str | None) -> httpx.Client:
    url = server or os.environ.get("PARIS_SERVER_URL")
    if url:
        return httpx.Client(base_url=url, timeout=None)
    # In-process ASGI client: same request path as a deployed service,
    # no socket required.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

        from .service import create_app

        return TestClient(create_app())


def _request_experiment(client: httpx.Client, cfg: ExperimentConfig) -> dict:
    payload = asdict(cfg)
    payload.pop("output_path")
    payload["eps_grid"] = list(payload["eps_grid"])
    response = client.post("/experiments/run", json=payload)
    if response.status_code == 400:
        raise ConfigError(response.json().get("detail", "bad experiment request"))
    response.raise_for_status()
    return response.json()


def _rows_from_payload(rows: List[dict]) -> List[ResultRow]:
    out = []
    for item in rows:
        ess = item.get("ess_min")
        out.append(
            ResultRow(
                experiment=item["experiment"],
                eps=float(item["eps"]),
                n=int(item["n"]),
                replicate=int(item["replicate"]),
                estimator=item["estimator"],
                estimate=float(item["estimate"]),
                oracle=float(item["oracle"]),
                error=float(item["error"]),
                ess_min=math.inf if ess is None else float(ess),
            )
        )
    return out


def _summary_path(output_path: str) -> str:
    directory = os.path.dirname(os.path.abspath(output_path))
    return os.path.join(directory, "summary.json")


def _run_experiments(args: argparse.Namespace, experiments: Sequence[str], base: dict) -> int:
    overrides = _flag_overrides(args)
    merged = dict(base)
    merged.update(overrides)
    output_path = merged.pop("output_path", None)

    rows: List[ResultRow] = []
    summaries = {}
    passed = True
    with _make_client(getattr(args, "server", None)) as client:
        for experiment in experiments:
            cfg = config_from_mapping({**merged, "experiment": experiment})
            if output_path is None:
                output_path = cfg.output_path
            payload = _request_experiment(client, cfg)
            rows.extend(_rows_from_payload(payload["rows"]))
            summaries[experiment] = payload["summary"]
            passed = passed and payload["passed"]
            for check in payload["summary"]["checks"]:
                status = "PASS" if check["passed"] else "FAIL"
                print(f"{experiment}: {status} {check['name']} (value={check['value']:g})")

    write_csv(rows, output_path)
    write_summary({"passed": passed, "experiments": summaries}, _summary_path(output_path))
    print(f"wrote {output_path} and {_summary_path(output_path)}")
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        uvicorn.run("parismc.service.app:app", host=args.host, port=args.port)
        return EXIT_OK
    try:
        if args.command == "run":
            base = parse_config_file(args.config)
            if "experiment" not in base:
                raise ConfigError(f"{args.config}: missing required key 'experiment'")
            experiments = [base.pop("experiment")]
            return _run_experiments(args, experiments, base)
        return _run_experiments(args, _SUBCOMMAND_EXPERIMENTS[args.command], {})
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (httpx.HTTPError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
