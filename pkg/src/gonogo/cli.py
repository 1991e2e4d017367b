"""Command line entry point.

Subcommands: calibrate, table, decide, simulate, report.  Every command is
deterministic given its inputs and seed, writes complete files or nothing,
and exits nonzero on validation failures.
"""

import json
import sys
from pathlib import Path

import click
import yaml

from . import fileio
from .design import (
    CalibrationError,
    calibrate,
    decide,
    decision_table,
    exact_oc,
)
from .figures import cutoff_figure, oc_figure, save_figure, threshold_figure
from .simulate import operating_characteristics
from .state import EndpointDef


def _oc_summary(spec, params):
    t1, en0 = exact_oc(spec, params, spec.null_rates if spec.is_joint else spec.null_rates[0])
    power, en1 = exact_oc(spec, params, spec.alt_rates if spec.is_joint else spec.alt_rates[0])
    return {
        "type_i_error": round(t1, 6),
        "power": round(power, 6),
        "expected_n_null": round(en0, 4),
        "expected_n_alt": round(en1, 4),
    }


def _write_text(path, text):
    Path(path).write_text(text)


@click.group()
def main():
    """Design, tabulate, decide and simulate adaptive futility-monitored trials."""


@main.command("calibrate")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True), help="Design spec YAML.")
@click.option("--out", "out_path", type=click.Path(), help="Where to write the calibrated parameters (YAML).")
def cmd_calibrate(spec_path, out_path):
    """Grid-search the cutoff parameters for a design spec."""
    spec = fileio.load_design(spec_path)
    try:
        params = calibrate(spec)
    except CalibrationError as exc:
        raise click.ClickException(str(exc))
    summary = _oc_summary(spec, params)
    payload = fileio.params_to_mapping(params, summary)
    text = yaml.safe_dump(payload, sort_keys=False)
    if out_path:
        _write_text(out_path, text)
    click.echo(text.rstrip())


@main.command("table")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--params", "params_path", type=click.Path(exists=True),
              help="Calibrated parameters YAML; calibrates on the fly when omitted.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@click.option("--out", "out_path", type=click.Path(), help="Output file; stdout when omitted.")
def cmd_table(spec_path, params_path, fmt, out_path):
    """Generate the pre-trial decision table."""
    spec = fileio.load_design(spec_path)
    try:
        params = fileio.load_params(params_path) if params_path else calibrate(spec)
    except CalibrationError as exc:
        raise click.ClickException(str(exc))
    table = decision_table(spec, params)
    if fmt == "csv":
        text = fileio.table_to_csv(table)
    else:
        text = json.dumps(fileio.table_to_json(table), indent=2, sort_keys=True) + "\n"
    if out_path:
        _write_text(out_path, text)
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text, nl=False)


def _endpoints_from_table(table, windows):
    eps = []
    for ept in table.endpoints:
        if ept.endpoint not in windows:
            raise click.ClickException(
                f"interim data file gives no assessment window for endpoint {ept.endpoint!r}"
            )
        eps.append(
            EndpointDef(
                name=ept.endpoint,
                window_days=windows[ept.endpoint],
                phi=ept.phi,
                monitor=ept.monitor,
                event_scores=ept.event_scores,
            )
        )
    return eps


@main.command("decide")
@click.option("--table", "table_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
def cmd_decide(table_path, data_path, fmt):
    """Interim decision for raw follow-up rows against a decision table."""
    table = fileio.load_table(table_path)
    rows, windows = fileio.load_interim(data_path)
    endpoints = _endpoints_from_table(table, windows)
    snap, per_patient = fileio.snapshot_from_rows(rows, endpoints)
    try:
        decision = decide(snap, table)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    if fmt == "json":
        click.echo(json.dumps({
            "action": decision.action,
            "reason": decision.reason,
            "n_enrolled": snap.n_enrolled,
            "endpoints": [
                {
                    "endpoint": v.endpoint, "status": v.status, "x": v.x,
                    "n_pending": v.n_pending, "tess": v.tess,
                    "threshold": v.threshold, "detail": v.detail,
                }
                for v in decision.endpoints
            ],
        }, indent=2))
        return
    click.echo(f"decision: {decision.action} ({decision.reason})")
    for v in decision.endpoints:
        line = f"  {v.endpoint}: x={v.x} pending={v.n_pending} TESS={v.tess:.2f} -> {v.status}"
        if v.threshold is not None:
            line += f" ({v.detail})"
        click.echo(line)


@main.command("simulate")
@click.option("--scenario", "scenarios", multiple=True, required=True,
              help="Scenario YAML path or preset:K (repeatable).")
@click.option("--designs", default=None, help="Comma-separated subset of the scenario roster.")
@click.option("--replicates", default=1000, show_default=True, type=int)
@click.option("--seed", default=20240101, show_default=True, type=int)
@click.option("--format", "fmt", type=click.Choice(["csv", "json", "both"]), default="both")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Output directory.")
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Render the comparison figure next to the delimited output.")
def cmd_simulate(scenarios, designs, replicates, seed, fmt, out_dir, figures):
    """Monte Carlo operating characteristics for one or more scenarios."""
    out = Path(out_dir)
    design_list = tuple(d.strip() for d in designs.split(",")) if designs else None
    all_reports = {}
    for sc_ref in scenarios:
        sc = fileio.load_scenario(sc_ref)
        try:
            reports = operating_characteristics(sc, replicates, seed, designs=design_list)
        except ValueError as exc:
            raise click.ClickException(str(exc))
        all_reports[sc.name] = reports
    out.mkdir(parents=True, exist_ok=True)
    meta = {"replicates": replicates, "seed": seed}
    for name, reports in all_reports.items():
        ordered = [reports[d] for d in sorted(reports)]
        if fmt in ("csv", "both"):
            _write_text(out / f"{name}.csv", fileio.reports_to_csv(ordered, meta))
        if fmt in ("json", "both"):
            _write_text(out / f"{name}.json",
                        json.dumps(fileio.reports_to_json(ordered, meta), indent=2, sort_keys=True) + "\n")
    if figures:
        fig = oc_figure(all_reports)
        save_figure(fig, out / "operating_characteristics.png")
    click.echo(f"wrote {len(all_reports)} scenario report(s) to {out}")


@main.command("report")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--params", "params_path", type=click.Path(exists=True))
@click.option("--oc", "oc_path", type=click.Path(exists=True),
              help="Optional simulated OC report (CSV) to embed.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Protocol template markdown; figures land next to it.")
def cmd_report(spec_path, params_path, oc_path, out_path):
    """Render a protocol-ready design summary with the decision table."""
    spec = fileio.load_design(spec_path)
    try:
        params = fileio.load_params(params_path) if params_path else calibrate(spec)
    except CalibrationError as exc:
        raise click.ClickException(str(exc))
    table = decision_table(spec, params)
    summary = _oc_summary(spec, params)
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    stem = out.stem
    cutoff_png = out.parent / f"{stem}_cutoffs.png"
    thresh_png = out.parent / f"{stem}_thresholds.png"

    lines = []
    title = spec.name or "trial design"
    lines.append(f"# Design summary: {title}\n")
    lines.append("## Hypotheses\n")
    for i, ep in enumerate(spec.endpoints):
        lines.append(
            f"- **{ep.name}** ({ep.monitor}): threshold {ep.phi:g}, "
            f"null rate {spec.null_rates[i]:g}, alternative rate {spec.alt_rates[i]:g}, "
            f"prior Beta({spec.prior_for(i).a0:g}, {spec.prior_for(i).b0:g})"
        )
    lines.append("")
    lines.append("## Schedule and error control\n")
    lines.append(f"- maximum sample size: {spec.max_n}")
    lines.append(f"- analyses after {', '.join(str(n) for n in spec.looks)} patients")
    lines.append(f"- type I error target: {spec.alpha:g}")
    lines.append(f"- cutoff parameters: C = {params.C:g}, gamma = {params.gamma:g}")
    lines.append(f"- attained type I error {summary['type_i_error']:.4f}, power {summary['power']:.4f}")
    lines.append(
        f"- expected sample size {summary['expected_n_null']:.1f} (null) / "
        f"{summary['expected_n_alt']:.1f} (alternative)"
    )
    lines.append("")
    lines.append("## Decision rules\n")
    lines.append("The table applies unchanged for any assessment window and accrual rate.\n")
    lines.append("```")
    lines.append(fileio.table_to_csv(table).rstrip())
    lines.append("```\n")
    if oc_path:
        lines.append("## Simulated operating characteristics\n")
        lines.append("```")
        lines.append(Path(oc_path).read_text().rstrip())
        lines.append("```\n")
    lines.append("## Figures\n")
    lines.append(f"![stopping cutoffs]({cutoff_png.name})")
    lines.append(f"![TESS thresholds]({thresh_png.name})\n")
    save_figure(cutoff_figure(params, spec.max_n, spec.looks), cutoff_png)
    save_figure(threshold_figure(table), thresh_png)
    _write_text(out, "\n".join(lines))
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    sys.exit(main())
