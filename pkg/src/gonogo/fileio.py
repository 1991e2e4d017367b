"""File formats: design specs, scenarios, decision tables, interim data, reports.

Design specs and scenarios are YAML mappings.  Decision tables serialize to
a delimited file shaped like the printed protocol rules (one row per count
range per analysis, metadata in comment lines) and to a structured JSON
object that keeps full threshold precision.  Interim data is a delimited
file with one row per patient and per-endpoint status/follow-up columns;
assessment windows ride in its header since the decision table is
deliberately window-free.
"""

import csv
import io
import json

import yaml

from .design import (
    STRUCTURE_SINGLE,
    CutoffParams,
    DecisionTable,
    DesignSpec,
    EndpointTable,
    LookBlock,
)
from .simulate import EventTimeModel, OCReport, Scenario, scenario_presets
from .state import (
    MONITOR_FUTILITY,
    PENDING,
    RESOLVED_EVENT,
    RESOLVED_NO_EVENT,
    EndpointCounts,
    EndpointDef,
    InterimSnapshot,
    ess,
)
from .stats import BetaPrior

__all__ = [
    "load_design",
    "design_to_mapping",
    "design_from_mapping",
    "load_scenario",
    "scenario_from_mapping",
    "params_to_mapping",
    "load_params",
    "table_to_csv",
    "table_from_csv",
    "table_to_json",
    "table_from_json",
    "load_table",
    "interim_to_csv",
    "load_interim",
    "snapshot_from_rows",
    "reports_to_csv",
    "reports_to_json",
]


# ---------------------------------------------------------------------------
# Design specs and scenarios (YAML)
# ---------------------------------------------------------------------------


def design_from_mapping(m: dict) -> DesignSpec:
    endpoints = []
    nulls = []
    alts = []
    priors = []
    has_prior = False
    for e in m["endpoints"]:
        endpoints.append(
            EndpointDef(
                name=str(e["name"]),
                window_days=float(e.get("window_days", 0.0)),
                phi=float(e["phi"]),
                monitor=e.get("monitor", MONITOR_FUTILITY),
                event_scores=bool(e.get("event_scores", True)),
            )
        )
        nulls.append(float(e["null_rate"]))
        alts.append(float(e["alt_rate"]))
        if "prior" in e:
            has_prior = True
            a0, b0 = e["prior"]
            priors.append(BetaPrior(float(a0), float(b0)))
        else:
            priors.append(None)
    if has_prior and any(p is None for p in priors):
        raise ValueError("either give a prior for every endpoint or for none")
    return DesignSpec(
        structure=m["structure"],
        endpoints=tuple(endpoints),
        null_rates=tuple(nulls),
        alt_rates=tuple(alts),
        max_n=int(m["max_n"]),
        looks=tuple(int(n) for n in m["looks"]),
        alpha=float(m["alpha"]),
        priors=tuple(priors) if has_prior else None,
        association_log_odds=float(m.get("association_log_odds", 0.0)),
        null_cells=tuple(m["null_cells"]) if m.get("null_cells") else None,
        alt_cells=tuple(m["alt_cells"]) if m.get("alt_cells") else None,
        suspension_mode=m.get("suspension_mode", "table-consistent"),
        name=str(m.get("name", "")),
    )


def design_to_mapping(spec: DesignSpec) -> dict:
    endpoints = []
    for i, ep in enumerate(spec.endpoints):
        endpoints.append(
            {
                "name": ep.name,
                "window_days": ep.window_days,
                "phi": ep.phi,
                "monitor": ep.monitor,
                "event_scores": ep.event_scores,
                "null_rate": spec.null_rates[i],
                "alt_rate": spec.alt_rates[i],
                "prior": [spec.prior_for(i).a0, spec.prior_for(i).b0],
            }
        )
    m = {
        "name": spec.name,
        "structure": spec.structure,
        "alpha": spec.alpha,
        "max_n": spec.max_n,
        "looks": list(spec.looks),
        "suspension_mode": spec.suspension_mode,
        "association_log_odds": spec.association_log_odds,
        "endpoints": endpoints,
    }
    if spec.null_cells:
        m["null_cells"] = list(spec.null_cells)
    if spec.alt_cells:
        m["alt_cells"] = list(spec.alt_cells)
    return m


def load_design(path) -> DesignSpec:
    with open(path) as fh:
        return design_from_mapping(yaml.safe_load(fh))


def scenario_from_mapping(m: dict) -> Scenario:
    design = design_from_mapping(m["design"])
    rates = m["true_rates"]
    if isinstance(rates, dict):
        rates = tuple(float(rates[ep.name]) for ep in design.endpoints)
    else:
        rates = tuple(float(r) for r in rates)
    event = m.get("event_times", {})
    model = EventTimeModel(
        family=event.get("family", "weibull"), shape=float(event.get("shape", 2.0))
    )
    simon = m.get("simon")
    if simon is not None:
        simon = (float(simon["p0"]), float(simon["p1"]), float(simon["alpha"]), float(simon["beta"]))
    return Scenario(
        name=str(m.get("name", design.name or "scenario")),
        design=design,
        true_rates=rates,
        association_log_odds=float(m.get("association_log_odds", 0.0)),
        true_cells=tuple(m["true_cells"]) if m.get("true_cells") else None,
        accrual_per_month=float(m.get("accrual_per_month", 2.0)),
        accrual_model=m.get("accrual_model", "poisson"),
        event_model=model,
        designs=tuple(m.get("designs", ("tess", "bop2", "ts", "simon"))),
        simon_hypotheses=simon,
    )


def load_scenario(path) -> Scenario:
    """Load a scenario file, or a preset by the spelling ``preset:K``."""
    text = str(path)
    if text.startswith("preset:"):
        key = int(text.split(":", 1)[1])
        presets = scenario_presets()
        if key not in presets:
            raise ValueError(f"unknown preset {key}; choose from {sorted(presets)}")
        return presets[key]
    with open(path) as fh:
        return scenario_from_mapping(yaml.safe_load(fh))


def params_to_mapping(params: CutoffParams, summary: dict = None) -> dict:
    m = {"C": params.C, "gamma": params.gamma}
    if summary:
        m.update(summary)
    return m


def load_params(path) -> CutoffParams:
    with open(path) as fh:
        m = yaml.safe_load(fh)
    return CutoffParams(float(m["C"]), float(m["gamma"]))


# ---------------------------------------------------------------------------
# Decision tables
# ---------------------------------------------------------------------------

_TABLE_COLUMNS = ("endpoint", "n_patients", "n_responses", "n_pending", "action", "tess_threshold")

ACT_SUSPEND = "suspend"
ACT_NOGO = "no-go"
ACT_GO = "go"
ACT_TESS_GO = "go-if-tess-below"
ACT_TOX_STOP = "stop-toxicity"
ACT_TOX_OK = "continue"
ACT_TESS_TOX = "stop-if-tess-below"


def _block_rows(ept: EndpointTable, block: LookBlock, max_n: int):
    name, n = ept.endpoint, block.n
    rows = []
    if block.is_final:
        if n > 0:
            rows.append((name, n, f"<={n - 1}", ">=1", ACT_SUSPEND, ""))
        if ept.monitor == MONITOR_FUTILITY:
            g = block.go_bound
            if g > 0:
                rows.append((name, n, f"<={g - 1}", "0", ACT_NOGO, ""))
            if g <= n:
                rows.append((name, n, f">={g}", "0", ACT_GO, ""))
            else:
                rows.append((name, n, f"<={n}", "0", ACT_NOGO, ""))
        else:
            safe = block.go_bound
            if safe >= 0:
                rows.append((name, n, f"<={safe}", "0", ACT_TOX_OK, ""))
            if safe < n:
                rows.append((name, n, f">={safe + 1}", "0", ACT_TOX_STOP, ""))
        return rows
    s = block.suspend_min
    if ept.monitor == MONITOR_FUTILITY:
        g, b = block.go_bound, block.stop_bound
        if g > 0 and s <= n:
            rows.append((name, n, f"<={g - 1}", f">={s}", ACT_SUSPEND, ""))
        if b >= 0:
            rows.append((name, n, f"<={b}", f"<={min(s, n + 1) - 1}", ACT_NOGO, ""))
        for x in sorted(block.thresholds):
            rows.append((name, n, str(x), f"<={min(s, n + 1) - 1}",
                         ACT_TESS_GO, f"{block.thresholds[x]:.2f}"))
        if g <= n:
            rows.append((name, n, f">={g}", f"<={n - g}", ACT_GO, ""))
    else:
        safe, stop = block.go_bound, block.stop_bound
        if safe < n and s <= n:
            rows.append((name, n, f">={safe + 1}", f">={s}", ACT_SUSPEND, ""))
        if safe >= 0:
            rows.append((name, n, f"<={safe}", f"<={n - max(safe, 0)}", ACT_TOX_OK, ""))
        for x in sorted(block.thresholds):
            rows.append((name, n, str(x), f"<={min(s, n + 1) - 1}",
                         ACT_TESS_TOX, f"{block.thresholds[x]:.2f}"))
        if stop <= n:
            rows.append((name, n, f">={stop}", f"<={n - stop}", ACT_TOX_STOP, ""))
    return rows


def table_to_csv(table: DecisionTable) -> str:
    """Delimited rendering with rounded thresholds and a metadata header."""
    buf = io.StringIO()
    buf.write("# decision-table v1\n")
    if table.name:
        buf.write(f"# name: {table.name}\n")
    buf.write(f"# structure: {table.structure}\n")
    buf.write(f"# max_n: {table.max_n}\n")
    buf.write(f"# looks: {','.join(str(n) for n in table.looks)}\n")
    buf.write(f"# alpha: {table.alpha}\n")
    buf.write(f"# suspension: {table.suspension_mode}\n")
    if table.params is not None:
        buf.write(f"# C: {table.params.C}\n")
        buf.write(f"# gamma: {table.params.gamma}\n")
    for ept in table.endpoints:
        hyp = table.hypotheses.get(ept.endpoint, {})
        extra = ""
        if hyp:
            extra = f" null={hyp.get('null')} alt={hyp.get('alt')}"
        buf.write(
            f"# endpoint: {ept.endpoint} monitor={ept.monitor} phi={ept.phi}"
            f" prior={ept.prior[0]},{ept.prior[1]}"
            f" event_scores={str(ept.event_scores).lower()}{extra}\n"
        )
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_TABLE_COLUMNS)
    for ept in table.endpoints:
        for block in ept.blocks:
            for row in _block_rows(ept, block, table.max_n):
                writer.writerow(row)
    return buf.getvalue()


def _parse_bound(text: str):
    text = text.strip()
    if text.startswith("<="):
        return ("le", int(text[2:]))
    if text.startswith(">="):
        return ("ge", int(text[2:]))
    return ("eq", int(text))


def table_from_csv(text: str) -> DecisionTable:
    """Rebuild a table from the delimited form.

    Thresholds come back rounded to the printed two decimals, and decisions
    made from such a table use the rounded values, so a decision made against
    the file matches the file exactly.
    """
    meta = {}
    endpoint_meta = {}
    rows = []
    reader = csv.reader(io.StringIO(text))
    header_seen = False
    for row in reader:
        if not row:
            continue
        if row[0].startswith("#"):
            line = ",".join(row).lstrip("#").strip()
            if ":" not in line:
                continue
            key, value = line.split(":", 1)
            key, value = key.strip(), value.strip()
            if key == "endpoint":
                parts = value.split()
                name = parts[0]
                opts = dict(p.split("=", 1) for p in parts[1:] if "=" in p)
                endpoint_meta[name] = opts
            else:
                meta[key] = value
            continue
        if not header_seen:
            if tuple(row) != _TABLE_COLUMNS:
                raise ValueError(f"unexpected table columns {row}")
            header_seen = True
            continue
        rows.append(row)
    if "max_n" not in meta or "looks" not in meta:
        raise ValueError("table header must carry max_n and looks")
    max_n = int(meta["max_n"])
    looks = tuple(int(n) for n in meta["looks"].split(","))
    structure = meta.get("structure", STRUCTURE_SINGLE)
    alpha = float(meta.get("alpha", 0.1))
    suspension = meta.get("suspension", "table-consistent")
    params = None
    if "C" in meta and "gamma" in meta:
        params = CutoffParams(float(meta["C"]), float(meta["gamma"]))

    by_endpoint = {}
    order = []
    for name in endpoint_meta:
        order.append(name)
    for row in rows:
        name = row[0]
        if name not in by_endpoint:
            by_endpoint[name] = {}
            if name not in order:
                order.append(name)
        n = int(row[1])
        by_endpoint[name].setdefault(n, []).append(row)

    from .design import suspension_check  # local import to avoid a cycle at module load

    def suspend_min_for(n, is_final):
        if is_final:
            return 1
        for q in range(0, n + 1):
            if suspension_check(n, max_n, q, meets_go=False, is_final=False, mode=suspension):
                return q
        return n + 1

    tables = []
    hypotheses = {}
    for name in order:
        opts = endpoint_meta.get(name, {})
        monitor = opts.get("monitor", MONITOR_FUTILITY)
        phi = float(opts.get("phi", 0.5))
        prior = tuple(float(v) for v in opts.get("prior", "0.5,0.5").split(","))
        if "null" in opts and opts["null"] != "None":
            hypotheses[name] = {"phi": phi, "null": float(opts["null"]), "alt": float(opts.get("alt", 0.0))}
        blocks = []
        for n in looks:
            is_final = n == max_n
            got = by_endpoint.get(name, {}).get(n, [])
            thresholds = {}
            go_bound = None
            stop_bound = None
            for row in got:
                kind, bound = _parse_bound(row[2])
                action = row[4]
                if action == ACT_SUSPEND:
                    continue
                if action == ACT_GO:
                    go_bound = bound if kind in ("ge", "eq") else 0
                elif action == ACT_NOGO:
                    stop_bound = bound if kind in ("le", "eq") else max_n
                elif action == ACT_TOX_OK:
                    go_bound = bound if kind in ("le", "eq") else -1
                elif action == ACT_TOX_STOP:
                    stop_bound = bound if kind in ("ge", "eq") else 0
                elif action in (ACT_TESS_GO, ACT_TESS_TOX):
                    thresholds[bound] = float(row[5])
            if monitor == MONITOR_FUTILITY:
                if go_bound is None:
                    go_bound = n + 1
                if stop_bound is None:
                    stop_bound = go_bound - 1 if is_final else -1
            else:
                if go_bound is None:
                    go_bound = -1
                if stop_bound is None:
                    stop_bound = go_bound + 1 if is_final else n + 1
            blocks.append(
                LookBlock(
                    n=n,
                    cutoff=float("nan"),
                    suspend_min=suspend_min_for(n, is_final),
                    stop_bound=stop_bound,
                    go_bound=go_bound,
                    thresholds=thresholds,
                    is_final=is_final,
                )
            )
        tables.append(
            EndpointTable(
                endpoint=name, monitor=monitor, phi=phi, prior=prior, blocks=tuple(blocks),
                event_scores=opts.get("event_scores", "true") == "true",
            )
        )
    return DecisionTable(
        structure=structure,
        max_n=max_n,
        looks=looks,
        alpha=alpha,
        endpoints=tuple(tables),
        params=params,
        suspension_mode=suspension,
        hypotheses=hypotheses,
        rounded=True,
        name=meta.get("name", ""),
    )


def table_to_json(table: DecisionTable) -> dict:
    """Structured form with full-precision thresholds."""
    return {
        "version": 1,
        "kind": "decision-table",
        "name": table.name,
        "structure": table.structure,
        "max_n": table.max_n,
        "looks": list(table.looks),
        "alpha": table.alpha,
        "suspension_mode": table.suspension_mode,
        "params": None if table.params is None else {"C": table.params.C, "gamma": table.params.gamma},
        "hypotheses": table.hypotheses,
        "rounded": table.rounded,
        "endpoints": [
            {
                "endpoint": t.endpoint,
                "monitor": t.monitor,
                "phi": t.phi,
                "prior": list(t.prior),
                "event_scores": t.event_scores,
                "blocks": [
                    {
                        "n": b.n,
                        "cutoff": None if b.cutoff != b.cutoff else b.cutoff,
                        "suspend_min": b.suspend_min,
                        "stop_bound": b.stop_bound,
                        "go_bound": b.go_bound,
                        "thresholds": {str(k): v for k, v in sorted(b.thresholds.items())},
                        "is_final": b.is_final,
                    }
                    for b in t.blocks
                ],
            }
            for t in table.endpoints
        ],
    }


def table_from_json(m: dict) -> DecisionTable:
    tables = []
    for t in m["endpoints"]:
        blocks = tuple(
            LookBlock(
                n=int(b["n"]),
                cutoff=float("nan") if b.get("cutoff") is None else float(b["cutoff"]),
                suspend_min=int(b["suspend_min"]),
                stop_bound=int(b["stop_bound"]),
                go_bound=int(b["go_bound"]),
                thresholds={int(k): float(v) for k, v in b["thresholds"].items()},
                is_final=bool(b["is_final"]),
            )
            for b in t["blocks"]
        )
        tables.append(
            EndpointTable(
                endpoint=t["endpoint"], monitor=t["monitor"], phi=float(t["phi"]),
                prior=tuple(t["prior"]), blocks=blocks,
                event_scores=bool(t.get("event_scores", True)),
            )
        )
    params = m.get("params")
    return DecisionTable(
        structure=m["structure"],
        max_n=int(m["max_n"]),
        looks=tuple(int(n) for n in m["looks"]),
        alpha=float(m["alpha"]),
        endpoints=tuple(tables),
        params=None if params is None else CutoffParams(float(params["C"]), float(params["gamma"])),
        suspension_mode=m.get("suspension_mode", "table-consistent"),
        hypotheses=m.get("hypotheses", {}),
        rounded=bool(m.get("rounded", False)),
        name=m.get("name", ""),
    )


def load_table(path) -> DecisionTable:
    with open(path) as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return table_from_json(json.loads(text))
    return table_from_csv(text)


# ---------------------------------------------------------------------------
# Interim data
# ---------------------------------------------------------------------------

_STATUSES = (RESOLVED_EVENT, RESOLVED_NO_EVENT, PENDING)


def interim_to_csv(rows, windows: dict) -> str:
    """Render interim rows; ``rows`` maps per patient to per-endpoint data."""
    names = list(windows)
    buf = io.StringIO()
    buf.write("# interim-data v1\n")
    buf.write("# window_days: " + ",".join(f"{n}={windows[n]:g}" for n in names) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    header = ["id", "arrival_day"]
    for n in names:
        header += [f"{n}_status", f"{n}_follow_up_days"]
    writer.writerow(header)
    for r in rows:
        out = [r["id"], r.get("arrival_day", "")]
        for n in names:
            out += [r[n]["status"], r[n].get("follow_up_days", "")]
        writer.writerow(out)
    return buf.getvalue()


def load_interim(path):
    """Parse an interim data file; returns (rows, windows)."""
    with open(path) as fh:
        text = fh.read()
    windows = {}
    data_lines = []
    for line in text.splitlines():
        if line.startswith("#"):
            stripped = line.lstrip("#").strip()
            if stripped.startswith("window_days:"):
                for part in stripped.split(":", 1)[1].split(","):
                    name, value = part.strip().split("=")
                    windows[name.strip()] = float(value)
            continue
        if line.strip():
            data_lines.append(line)
    if not data_lines:
        raise ValueError("interim data file has no rows")
    reader = csv.DictReader(io.StringIO("\n".join(data_lines)))
    rows = []
    for rec in reader:
        row = {"id": rec["id"], "arrival_day": rec.get("arrival_day", "")}
        for name in windows:
            status = rec.get(f"{name}_status", "").strip()
            if status not in _STATUSES:
                raise ValueError(f"patient {rec['id']}: bad status {status!r} for {name}")
            fu = rec.get(f"{name}_follow_up_days", "").strip()
            if status == PENDING and not fu:
                raise ValueError(f"patient {rec['id']}: pending {name} needs a follow-up time")
            row[name] = {"status": status}
            if fu:
                row[name]["follow_up_days"] = float(fu)
        rows.append(row)
    return rows, windows


def snapshot_from_rows(rows, endpoints):
    """Interim counts plus the per-patient effective-sample-size breakdown."""
    counts = {}
    per_patient = {ep.name: [] for ep in endpoints}
    for ep in endpoints:
        n_obs = n_pending = events = 0
        total = 0.0
        for r in rows:
            cell = r[ep.name]
            status = cell["status"]
            if status == PENDING:
                n_pending += 1
                value = ess(cell["follow_up_days"], ep.window_days, False)
            else:
                n_obs += 1
                value = 1.0
                if status == RESOLVED_EVENT:
                    events += 1
            total += value
            per_patient[ep.name].append({"id": r["id"], "status": status, "ess": value})
        x = events if ep.event_scores else n_obs - events
        counts[ep.name] = EndpointCounts(x=x, n_obs=n_obs, n_pending=n_pending, tess=total)
    snap = InterimSnapshot(n_enrolled=len(rows), counts=counts)
    return snap, per_patient


# ---------------------------------------------------------------------------
# Operating characteristic reports
# ---------------------------------------------------------------------------

_REPORT_COLUMNS = (
    "scenario", "design", "replicates", "accept_rate", "accept_se",
    "expected_n", "n_se", "mean_duration_months", "duration_se",
)


def reports_to_csv(reports, meta: dict = None) -> str:
    """Delimited report; ``reports`` is an iterable of OCReport."""
    buf = io.StringIO()
    buf.write("# oc-report v1\n")
    for key, value in (meta or {}).items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_REPORT_COLUMNS)
    for r in reports:
        writer.writerow([
            r.scenario, r.design, r.replicates,
            f"{r.accept_rate:.6f}", f"{r.accept_se:.6f}",
            f"{r.expected_n:.4f}", f"{r.n_se:.4f}",
            f"{r.mean_duration_months:.4f}", f"{r.duration_se:.4f}",
        ])
    return buf.getvalue()


def report_to_mapping(r: OCReport) -> dict:
    return {
        "scenario": r.scenario,
        "design": r.design,
        "replicates": r.replicates,
        "accept_rate": r.accept_rate,
        "accept_se": r.accept_se,
        "expected_n": r.expected_n,
        "n_se": r.n_se,
        "mean_duration_months": r.mean_duration_months,
        "duration_se": r.duration_se,
        "stop_reasons": r.stop_reasons,
    }


def reports_to_json(reports, meta: dict = None) -> dict:
    return {
        "version": 1,
        "kind": "oc-report",
        "meta": meta or {},
        "reports": [report_to_mapping(r) for r in reports],
    }
