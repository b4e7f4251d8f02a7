"""Thin HTTP client for the simulation service.

Every subcommand speaks to the service over HTTP. By default the app is
mounted in-process (no server needed); point --server at a running
instance to use a remote one. Scenario files are read locally and the
drive cycle is inlined into the request, so the service never needs access
to the client's filesystem.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx
import yaml

from .errors import ConfigError

LOCAL = "local"


class ServiceClient:
    def __init__(self, server: str):
        if server == LOCAL:
            from .service.app import create_app

            transport = httpx.ASGITransport(app=create_app())
            self._client = httpx.Client(transport=transport,
                                        base_url="http://ecoacc.internal",
                                        timeout=None)
        else:
            self._client = httpx.Client(base_url=server, timeout=600.0)

    def post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._client.post(path, json=payload)
        except httpx.HTTPError as exc:
            click.echo(f"error: cannot reach service: {exc}", err=True)
            sys.exit(1)
        if resp.status_code == 200:
            return resp.json()
        try:
            detail = resp.json().get("detail", {})
        except ValueError:
            detail = {}
        if isinstance(detail, dict) and "exit_code" in detail:
            click.echo(f"error [{detail.get('code')}]: {detail.get('message')}",
                       err=True)
            sys.exit(int(detail["exit_code"]))
        click.echo(f"error: service returned {resp.status_code}: {resp.text}",
                   err=True)
        sys.exit(1)


def load_scenario_payload(path: str) -> dict:
    """Read a scenario file and inline its drive cycle for transport.

    The names 'default' and 'estimation' resolve to the scenarios shipped
    with the package.
    """
    p = Path(path)
    if not p.exists() and path in ("default", "estimation"):
        from .harness import packaged_scenario_path

        p = packaged_scenario_path(path)
    if not p.exists():
        click.echo(f"error [config-error]: scenario file not found: {p}", err=True)
        sys.exit(2)
    try:
        data = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        click.echo(f"error [config-error]: cannot parse scenario: {exc}", err=True)
        sys.exit(2)
    if not isinstance(data, dict):
        click.echo("error [config-error]: scenario file must contain a mapping",
                   err=True)
        sys.exit(2)
    cyc = data.get("cycle", {})
    if "path" in cyc:
        cpath = Path(cyc["path"])
        if not cpath.is_absolute():
            cpath = p.parent / cpath
        if not cpath.exists():
            click.echo(f"error [config-error]: drive cycle not found: {cpath}",
                       err=True)
            sys.exit(2)
        data["cycle"] = {"csv_text": cpath.read_text(), "name": cpath.stem,
                         "repeat": cyc.get("repeat", 1)}
    return data


def _write(path: Path, text: str, quiet: bool):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    if not quiet:
        click.echo(f"wrote {path}")


def _csv_to_json(csv_text: str) -> str:
    lines = [ln for ln in csv_text.splitlines() if ln]
    cols = lines[0].split(",")
    data: dict = {c: [] for c in cols}
    for ln in lines[1:]:
        for c, v in zip(cols, ln.split(",")):
            try:
                data[c].append(float(v))
            except ValueError:
                data[c].append(v)
    return json.dumps(data, separators=(",", ":"))


def _emit_table(csv_text: str, out: Path, fmt: str, quiet: bool):
    if fmt == "json":
        _write(out.with_suffix(".json"), _csv_to_json(csv_text), quiet)
    else:
        _write(out.with_suffix(".csv"), csv_text, quiet)


def _summary(metrics: dict) -> str:
    return (f"mode={metrics['mode']} cost=${metrics['energy_cost']:.4f} "
            f"fuel={metrics['fuel_used'] * 1e3:.1f}g dSOC={metrics['soc_delta']:+.4f} "
            f"ep_rms={metrics['ep_rms']:.3f}m violations={metrics['constraint_violations']} "
            f"solve_p95={metrics['solve_time_p95'] * 1e3:.2f}ms")


@click.group()
@click.option("--server", default=LOCAL, envvar="ECOACC_SERVER", show_default=True,
              help="Service base URL, or 'local' to run the app in-process.")
@click.pass_context
def main(ctx, server):
    """Ecological adaptive cruise control simulator client."""
    ctx.obj = ServiceClient(server)


@main.command()
@click.argument("scenario", type=click.Path())
@click.option("--mode", default=None, help="Override the controller mode.")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--out", default=None, help="Output prefix for trace/metrics files.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
@click.option("--quiet", is_flag=True, default=False)
@click.pass_obj
def run(client, scenario, mode, seed, out, fmt, quiet):
    """Run one closed-loop scenario and write traces and metrics."""
    payload = {"scenario": load_scenario_payload(scenario), "mode": mode,
               "seed": seed}
    resp = client.post("/run", payload)
    if out:
        prefix = Path(out)
        _emit_table(resp["trace_csv"], prefix.with_name(prefix.name + ".trace"),
                    fmt, quiet)
        _write(prefix.with_name(prefix.name + ".timing.csv"), resp["timing_csv"],
               quiet)
        _write(prefix.with_name(prefix.name + ".metrics.json"),
               json.dumps(resp["metrics"], indent=2, sort_keys=True) + "\n", quiet)
    if not quiet:
        click.echo(_summary(resp["metrics"]))


@main.command()
@click.argument("scenario", type=click.Path())
@click.option("--modes", default="tracking-nmpc,eco-nmpc,at-nmpc", show_default=True,
              help="Comma-separated controller modes.")
@click.option("--seed", type=int, default=None)
@click.option("--out", default=None, help="Output path for the comparison table.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
@click.option("--quiet", is_flag=True, default=False)
@click.pass_obj
def compare(client, scenario, modes, seed, out, fmt, quiet):
    """Run the same scenario once per mode and compare trip energy cost."""
    mode_list = [m.strip() for m in modes.split(",") if m.strip()]
    payload = {"scenario": load_scenario_payload(scenario), "modes": mode_list,
               "seed": seed}
    resp = client.post("/compare", payload)
    cols = ["mode", "energy_cost", "energy_cost_delta_pct", "fuel_used",
            "soc_delta", "ep_rms", "constraint_violations"]
    rows = [[r[c] for c in cols] for r in resp["rows"]]
    if not quiet:
        click.echo(f"scenario {resp['scenario']} (reference {resp['reference_mode']})")
        for r in resp["rows"]:
            click.echo("  " + _summary(r) + f" delta={r['energy_cost_delta_pct']:+.2f}%")
    if out:
        text = (json.dumps(resp, indent=2, sort_keys=True) + "\n" if fmt == "json"
                else _rows_csv(cols, rows))
        _write(Path(out), text, quiet)


def _rows_csv(cols, rows) -> str:
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(f"{v:.12g}" if isinstance(v, float) else str(v)
                              for v in row))
    return "\n".join(lines) + "\n"


@main.command()
@click.argument("scenario", type=click.Path())
@click.option("--out", default=None, help="Output path for the tube report.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
@click.option("--quiet", is_flag=True, default=False)
@click.pass_obj
def tube(client, scenario, out, fmt, quiet):
    """Print the disturbance-set and error-tube report for a scenario."""
    payload = {"scenario": load_scenario_payload(scenario)}
    resp = client.post("/tube", payload)
    if not quiet:
        click.echo(resp["text"], nl=False)
    if out:
        text = (json.dumps(resp["report"], indent=2, sort_keys=True) + "\n"
                if fmt == "json" else resp["text"])
        _write(Path(out), text, quiet)


@main.command()
@click.argument("scenario", type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--out", default=None, help="Output prefix for estimator traces.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
@click.option("--quiet", is_flag=True, default=False)
@click.pass_obj
def estimate(client, scenario, seed, out, fmt, quiet):
    """Run with adaptation on and emit online-estimator traces."""
    payload = {"scenario": load_scenario_payload(scenario), "seed": seed}
    resp = client.post("/estimate", payload)
    if out:
        _emit_table(resp["estimator_csv"],
                    Path(out).with_name(Path(out).name + ".estimators"), fmt, quiet)
    if not quiet:
        click.echo(_summary(resp["metrics"]))


@main.group()
def cycle():
    """Drive-cycle utilities."""


@cycle.command("validate")
@click.argument("path", type=click.Path())
@click.pass_obj
def cycle_validate(client, path):
    """Validate a drive-cycle CSV file."""
    p = Path(path)
    if not p.exists():
        click.echo(f"error [config-error]: file not found: {p}", err=True)
        sys.exit(2)
    resp = client.post("/cycle/validate", {"csv_text": p.read_text(),
                                           "name": p.stem})
    if resp["ok"]:
        click.echo(f"ok: {resp['rows']} rows, {resp['duration_s']:.1f}s, "
                   f"v_max={resp['v_max_mps']:.2f} m/s")
    else:
        click.echo(f"error [config-error]: {resp['message']}", err=True)
        sys.exit(2)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Launch the simulation service."""
    import uvicorn

    uvicorn.run("ecoacc.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
