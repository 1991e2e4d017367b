"""Stateless request/response service for the companion UI and other clients.

Every endpoint is a pure function of its payload (plus the declared seed),
and the JSON/CSV renderings are produced by the same serializers the CLI
uses, so responses match CLI outputs byte for byte.  Simulation requests may
run asynchronously as cancellable jobs polled by id; the job registry is the
only mutable state.
"""

import os
import threading
import uuid

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import fileio
from .design import CalibrationError, calibrate, decide, decision_table, exact_oc
from .state import EndpointDef

SCHEMA_VERSION = 1

REPLICATE_CAP = int(os.environ.get("GONOGO_REPLICATE_CAP", "20000"))

app = FastAPI(title="gonogo", version="0.1.0")
app.add_middleware(
    CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
)


@app.exception_handler(RequestValidationError)
async def _validation_handler(request: Request, exc: RequestValidationError):
    # malformed JSON gets 400; structurally valid JSON failing validation gets 422
    if any(e.get("type") == "json_invalid" for e in exc.errors()):
        return JSONResponse(status_code=400, content={"detail": "malformed request body"})
    return JSONResponse(status_code=422, content={"detail": exc.errors()})


def _load_spec(mapping):
    try:
        return fileio.design_from_mapping(mapping)
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=f"invalid design spec: {exc}")


def _oc_summary(spec, params):
    t1, en0 = exact_oc(spec, params, spec.null_rates if spec.is_joint else spec.null_rates[0])
    power, en1 = exact_oc(spec, params, spec.alt_rates if spec.is_joint else spec.alt_rates[0])
    return {
        "type_i_error": t1,
        "power": power,
        "expected_n_null": en0,
        "expected_n_alt": en1,
    }


class CalibrateRequest(BaseModel):
    spec: dict
    schema_version: int = SCHEMA_VERSION


class TableRequest(BaseModel):
    spec: dict
    params: dict = None
    schema_version: int = SCHEMA_VERSION


class DecideRequest(BaseModel):
    table: dict
    rows: list
    windows: dict
    schema_version: int = SCHEMA_VERSION


class SimulateRequest(BaseModel):
    scenario: dict = None
    preset: int = None
    designs: list = None
    replicates: int = Field(default=1000, ge=1)
    seed: int = 20240101
    background: bool = False
    schema_version: int = SCHEMA_VERSION


@app.post("/v1/calibrate")
def post_calibrate(req: CalibrateRequest):
    spec = _load_spec(req.spec)
    try:
        params = calibrate(spec)
    except CalibrationError as exc:
        raise HTTPException(status_code=409, detail=str(exc))
    return {
        "schema_version": SCHEMA_VERSION,
        "params": {"C": params.C, "gamma": params.gamma},
        "summary": _oc_summary(spec, params),
    }


def _params_from(req_params, spec):
    if req_params is None:
        try:
            return calibrate(spec)
        except CalibrationError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
    from .design import CutoffParams

    try:
        return CutoffParams(float(req_params["C"]), float(req_params["gamma"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=f"invalid params: {exc}")


@app.post("/v1/table")
def post_table(req: TableRequest):
    spec = _load_spec(req.spec)
    params = _params_from(req.params, spec)
    table = decision_table(spec, params)
    return {
        "schema_version": SCHEMA_VERSION,
        "table": fileio.table_to_json(table),
        "csv": fileio.table_to_csv(table),
    }


@app.post("/v1/decide")
def post_decide(req: DecideRequest):
    try:
        table = fileio.table_from_json(req.table)
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=f"invalid table: {exc}")
    if not req.rows:
        raise HTTPException(status_code=422, detail="no interim rows supplied")
    endpoints = []
    for ept in table.endpoints:
        if ept.endpoint not in req.windows:
            raise HTTPException(status_code=422, detail=f"missing window for endpoint {ept.endpoint!r}")
        endpoints.append(
            EndpointDef(
                name=ept.endpoint,
                window_days=float(req.windows[ept.endpoint]),
                phi=ept.phi,
                monitor=ept.monitor,
                event_scores=ept.event_scores,
            )
        )
    try:
        snap, per_patient = fileio.snapshot_from_rows(req.rows, endpoints)
        decision = decide(snap, table)
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return {
        "schema_version": SCHEMA_VERSION,
        "action": decision.action,
        "reason": decision.reason,
        "n_enrolled": snap.n_enrolled,
        "endpoints": [
            {
                "endpoint": v.endpoint,
                "status": v.status,
                "x": v.x,
                "n_pending": v.n_pending,
                "tess": v.tess,
                "threshold": v.threshold,
                "detail": v.detail,
            }
            for v in decision.endpoints
        ],
        "per_patient_ess": per_patient,
    }


class _Job:
    def __init__(self):
        self.id = uuid.uuid4().hex
        self.status = "running"
        self.progress = 0.0
        self.result = None
        self.error = None
        self.cancelled = threading.Event()


class _JobCancelled(Exception):
    pass


_jobs: dict = {}
_jobs_lock = threading.Lock()


def _load_scenario_req(req: SimulateRequest):
    if (req.scenario is None) == (req.preset is None):
        raise HTTPException(status_code=422, detail="give exactly one of scenario or preset")
    try:
        if req.preset is not None:
            return fileio.load_scenario(f"preset:{req.preset}")
        return fileio.scenario_from_mapping(req.scenario)
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=f"invalid scenario: {exc}")


def _run_simulation(scenario, req: SimulateRequest, job: _Job = None):
    from .simulate import operating_characteristics

    def progress(done, total):
        if job is not None:
            if job.cancelled.is_set():
                raise _JobCancelled()
            job.progress = done / total

    designs = tuple(req.designs) if req.designs else None
    reports = operating_characteristics(
        scenario, req.replicates, req.seed, designs=designs, progress=progress
    )
    ordered = [reports[d] for d in sorted(reports)]
    meta = {"replicates": req.replicates, "seed": req.seed}
    return {
        "schema_version": SCHEMA_VERSION,
        "report": fileio.reports_to_json(ordered, meta),
        "csv": fileio.reports_to_csv(ordered, meta),
    }


@app.post("/v1/simulate")
def post_simulate(req: SimulateRequest):
    if req.replicates > REPLICATE_CAP:
        raise HTTPException(status_code=429, detail=f"replicate count exceeds the cap of {REPLICATE_CAP}")
    scenario = _load_scenario_req(req)
    try:
        _ = scenario.designs if not req.designs else None
        if req.designs:
            missing = set(req.designs) - set(scenario.designs)
            if missing:
                raise HTTPException(status_code=422, detail=f"designs not in roster: {sorted(missing)}")
    except AttributeError:
        raise HTTPException(status_code=422, detail="invalid scenario")
    if not req.background:
        return _run_simulation(scenario, req)
    job = _Job()
    with _jobs_lock:
        _jobs[job.id] = job

    def work():
        try:
            job.result = _run_simulation(scenario, req, job)
            job.status = "done"
            job.progress = 1.0
        except _JobCancelled:
            job.status = "cancelled"
        except Exception as exc:  # surface failures to the poller
            job.status = "failed"
            job.error = str(exc)

    threading.Thread(target=work, daemon=True).start()
    return {"schema_version": SCHEMA_VERSION, "job_id": job.id, "status": job.status}


@app.get("/v1/jobs/{job_id}")
def get_job(job_id: str):
    job = _jobs.get(job_id)
    if job is None:
        raise HTTPException(status_code=404, detail="unknown job")
    body = {
        "schema_version": SCHEMA_VERSION,
        "job_id": job.id,
        "status": job.status,
        "progress": job.progress,
    }
    if job.status == "done":
        body["result"] = job.result
    if job.status == "failed":
        body["error"] = job.error
    return body


@app.delete("/v1/jobs/{job_id}")
def cancel_job(job_id: str):
    job = _jobs.get(job_id)
    if job is None:
        raise HTTPException(status_code=404, detail="unknown job")
    job.cancelled.set()
    return {"schema_version": SCHEMA_VERSION, "job_id": job.id, "status": "cancelling"}
