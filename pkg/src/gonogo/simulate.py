"""Monte Carlo trial simulation with delayed outcomes.

Each replicate draws one latent patient stream (arrival gaps, joint outcome
categories, event times) and then conducts every benchmarked design on that
same stream, so comparisons are paired.  Conduct semantics differ by design:
the adaptive design decides in real time from the live table (suspending
accrual only when its suspension rows fire), the complete-data Bayesian
comparators suspend accrual at every analysis until all outcomes resolve,
and the two-stage design keeps accruing while its stage-one analysis waits
for data (over-run).
"""

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .baselines import (
    SimonDesign,
    ThallSimonRule,
    bop2_boundaries,
    calibrate_thall_simon,
    simon_search,
    ts_boundaries,
)
from .design import (
    NOGO,
    STRUCTURE_CO_PRIMARY,
    STRUCTURE_EFF_TOX,
    STRUCTURE_SINGLE,
    SUSPEND,
    CutoffParams,
    DecisionTable,
    DesignSpec,
    calibrate,
    decide,
    decision_table,
    joint_cells,
)
from .state import EndpointCounts, EndpointDef, InterimSnapshot, MONITOR_FUTILITY

__all__ = [
    "DAYS_PER_MONTH",
    "EventTimeModel",
    "Scenario",
    "TrialData",
    "TrialResult",
    "OCReport",
    "truncated_weibull_scale",
    "gen_accrual",
    "gen_outcomes",
    "run_trial",
    "operating_characteristics",
    "scenario_presets",
    "single_design_46",
    "co_primary_design_40",
    "eff_tox_design_46",
]

DAYS_PER_MONTH = 30.0

PROMISING = "promising"
NOT_PROMISING = "not-promising"


@dataclass(frozen=True)
class EventTimeModel:
    """Distribution of the latent event time inside the assessment window.

    The default Weibull is truncated to the window with its scale solved so
    that half the events land in the second half of the window.
    """

    family: str = "weibull"
    shape: float = 2.0

    def __post_init__(self):
        if self.family not in ("weibull", "uniform"):
            raise ValueError(f"unknown event time family {self.family!r}")
        if self.family == "weibull" and self.shape <= 1.0:
            raise ValueError("weibull shape must exceed 1 to put half the events in the late window half")


@dataclass(frozen=True)
class Scenario:
    """One simulation configuration: truth, accrual, and the design roster."""

    name: str
    design: DesignSpec
    true_rates: tuple
    association_log_odds: float = 0.0
    true_cells: tuple = None
    accrual_per_month: float = 2.0
    accrual_model: str = "poisson"
    event_model: EventTimeModel = field(default_factory=EventTimeModel)
    designs: tuple = ("tess", "bop2", "ts", "simon")
    simon_hypotheses: tuple = None  # (p0, p1, alpha, beta)

    def __post_init__(self):
        object.__setattr__(self, "true_rates", tuple(float(r) for r in self.true_rates))
        object.__setattr__(self, "designs", tuple(self.designs))
        if self.accrual_per_month <= 0:
            raise ValueError("accrual rate must be positive")
        if self.accrual_model not in ("poisson", "deterministic"):
            raise ValueError(f"unknown accrual model {self.accrual_model!r}")
        want = 1 if self.design.structure == STRUCTURE_SINGLE else 2
        if len(self.true_rates) != want:
            raise ValueError(f"scenario needs {want} true rate(s)")
        if not all(0.0 < r < 1.0 for r in self.true_rates):
            raise ValueError("true rates must lie in (0, 1)")
        unknown = set(self.designs) - {"tess", "bop2", "ts", "simon"}
        if unknown:
            raise ValueError(f"unknown designs in roster: {sorted(unknown)}")
        if "simon" in self.designs and self.simon_hypotheses is None:
            hyp = (self.design.null_rates[0], self.design.alt_rates[0], self.design.alpha, self.design.alpha)
            object.__setattr__(self, "simon_hypotheses", hyp)

    def cells(self) -> tuple:
        if self.true_cells is not None:
            return self.true_cells
        return joint_cells(self.true_rates[0], self.true_rates[1], self.association_log_odds)

    def with_windows(self, windows) -> "Scenario":
        """Copy of the scenario with replaced per-endpoint assessment windows."""
        if not isinstance(windows, dict):
            windows = {ep.name: float(windows) for ep in self.design.endpoints}
        eps = tuple(
            replace(ep, window_days=windows.get(ep.name, ep.window_days))
            for ep in self.design.endpoints
        )
        return replace(self, design=replace(self.design, endpoints=eps))


@dataclass(frozen=True)
class TrialData:
    """Latent per-replicate patient stream shared by every design."""

    gaps: np.ndarray  # inter-arrival gaps, days
    arrivals: np.ndarray  # cumulative arrival days with uninterrupted accrual
    success: dict  # endpoint name -> bool array, monitored success/event indicator
    event_flag: dict  # endpoint name -> bool array, timed event occurs in window
    event_time: dict  # endpoint name -> float array, days from arrival (nan if none)


@dataclass(frozen=True)
class TrialResult:
    verdict: str
    reason: str
    n_used: int
    duration_days: float

    @property
    def accepted(self) -> bool:
        return self.verdict == PROMISING

    @property
    def duration_months(self) -> float:
        return self.duration_days / DAYS_PER_MONTH


@dataclass(frozen=True)
class OCReport:
    """Operating characteristics of one design under one scenario."""

    design: str
    scenario: str
    replicates: int
    accept_rate: float
    accept_se: float
    expected_n: float
    n_se: float
    mean_duration_months: float
    duration_se: float
    stop_reasons: dict


def truncated_weibull_scale(window: float, shape: float) -> float:
    """Scale putting the truncated median at half the window.

    Solves F(A/2) = F(A)/2 for the Weibull scale, where F is the untruncated
    CDF; under truncation to [0, A] this makes exactly half the events land
    in the second half of the window.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    if shape <= 1.0:
        raise ValueError("shape must exceed 1")

    def f(scale):
        fa = -math.expm1(-((window / scale) ** shape))
        fh = -math.expm1(-((window / 2.0 / scale) ** shape))
        return fh - 0.5 * fa

    return brentq(f, window * 1e-3, window * 1e3, xtol=1e-12 * window)


def _draw_event_times(rng, n: int, window: float, model: EventTimeModel) -> np.ndarray:
    u = rng.random(n)
    if window == 0:
        return np.zeros(n)
    if model.family == "uniform":
        return u * window
    scale = truncated_weibull_scale(window, model.shape)
    f_window = -math.expm1(-((window / scale) ** model.shape))
    return scale * (-np.log1p(-u * f_window)) ** (1.0 / model.shape)


def gen_accrual(rate_per_month: float, n: int, rng, model: str = "poisson") -> np.ndarray:
    """Arrival times in days for n patients.

    Default is a Poisson process (exponential inter-arrival gaps with mean
    1/rate); the deterministic mode spaces arrivals evenly at 1/rate.
    """
    if rate_per_month <= 0:
        raise ValueError("accrual rate must be positive")
    if n == 0:
        return np.empty(0)
    mean_gap = DAYS_PER_MONTH / rate_per_month
    if model == "deterministic":
        gaps = np.full(n, mean_gap)
    elif model == "poisson":
        gaps = rng.exponential(mean_gap, n)
    else:
        raise ValueError(f"unknown accrual model {model!r}")
    return np.cumsum(gaps)


def gen_outcomes(scenario: Scenario, rng, n: int = None) -> TrialData:
    """Draw one latent patient stream for a scenario.

    Outcome categories come from the per-patient joint cell table (built from
    the marginals and the association log-odds-ratio); for each endpoint the
    timed event, when present, gets an event time from the scenario's
    truncated time-to-event model.  The draw order is fixed, so the stream is
    fully determined by the generator state.
    """
    spec = scenario.design
    if n is None:
        n = _latent_size(scenario)
    mean_gap = DAYS_PER_MONTH / scenario.accrual_per_month
    if scenario.accrual_model == "deterministic":
        gaps = np.full(n, mean_gap)
    else:
        gaps = rng.exponential(mean_gap, n)
    arrivals = np.cumsum(gaps)
    success = {}
    if spec.structure == STRUCTURE_SINGLE:
        success[spec.endpoints[0].name] = rng.random(n) < scenario.true_rates[0]
    else:
        p11, p10, p01, p00 = scenario.cells()
        u = rng.random(n)
        cat = np.searchsorted(np.cumsum([p11, p10, p01]), u)
        success[spec.endpoints[0].name] = cat <= 1
        success[spec.endpoints[1].name] = (cat == 0) | (cat == 2)
    event_flag = {}
    event_time = {}
    for ep in spec.endpoints:
        flag = success[ep.name] if ep.event_scores else ~success[ep.name]
        times = _draw_event_times(rng, n, ep.window_days, scenario.event_model)
        event_flag[ep.name] = flag
        event_time[ep.name] = np.where(flag, times, np.nan)
    return TrialData(gaps=gaps, arrivals=arrivals, success=success,
                     event_flag=event_flag, event_time=event_time)


def _latent_size(scenario: Scenario) -> int:
    n = scenario.design.max_n
    if "simon" in scenario.designs:
        n = max(n, _simon_design(scenario.simon_hypotheses).n)
    return n


def _resolve_times(data: TrialData, ep: EndpointDef, arrivals: np.ndarray, upto: int) -> np.ndarray:
    flag = data.event_flag[ep.name][:upto]
    times = np.where(flag, data.event_time[ep.name][:upto], ep.window_days)
    return arrivals[:upto] + times


# ---------------------------------------------------------------------------
# Conduct semantics
# ---------------------------------------------------------------------------


def _snapshot_at(spec: DesignSpec, data: TrialData, arrivals: np.ndarray, n: int, t: float) -> InterimSnapshot:
    counts = {}
    for ep in spec.endpoints:
        res_t = _resolve_times(data, ep, arrivals, n)
        resolved = res_t <= t
        pending = ~resolved
        x = int(np.count_nonzero(data.success[ep.name][:n] & resolved))
        n_obs = int(np.count_nonzero(resolved))
        tess = float(n_obs)
        if pending.any():
            tess += float(((t - arrivals[:n][pending]) / ep.window_days).sum())
        counts[ep.name] = EndpointCounts(x=x, n_obs=n_obs, n_pending=n - n_obs, tess=tess)
    return InterimSnapshot(n_enrolled=n, counts=counts)


def _run_top(scenario: Scenario, data: TrialData, table: DecisionTable) -> TrialResult:
    spec = scenario.design
    arrivals = data.arrivals.copy()
    shift = 0.0
    prev = 0
    for n in spec.looks:
        arrivals[prev:n] = data.arrivals[prev:n] + shift
        t_analysis = arrivals[n - 1]
        t = t_analysis
        while True:
            snap = _snapshot_at(spec, data, arrivals, n, t)
            d = decide(snap, table)
            if d.action != SUSPEND:
                break
            t = _next_resolution(spec, data, arrivals, n, t)
        shift += t - t_analysis
        if d.action == NOGO:
            return TrialResult(NOT_PROMISING, d.reason, n_used=n, duration_days=t - arrivals[0])
        if n == spec.max_n:
            return TrialResult(PROMISING, "final-go", n_used=n, duration_days=t - arrivals[0])
        prev = n
    raise AssertionError("unreachable")


def _next_resolution(spec: DesignSpec, data: TrialData, arrivals: np.ndarray, n: int, t: float) -> float:
    nxt = math.inf
    for ep in spec.endpoints:
        res_t = _resolve_times(data, ep, arrivals, n)
        later = res_t[res_t > t]
        if later.size:
            nxt = min(nxt, float(later.min()))
    if not math.isfinite(nxt):
        raise RuntimeError("no further resolutions while suspended")
    return nxt


def _complete_stop(entry, counts, structure) -> tuple:
    flags = {}
    for name, b in entry["endpoints"].items():
        x = counts[name]
        if b["monitor"] == MONITOR_FUTILITY:
            flags[name] = x <= b["stop_max"]
        else:
            flags[name] = x >= b["stop_min"]
    values = list(flags.values())
    names = list(flags.keys())
    if structure == STRUCTURE_SINGLE:
        return values[0], "futility"
    if structure == STRUCTURE_CO_PRIMARY:
        return all(values), "futility"
    if values[1]:
        return True, "toxicity"
    return values[0], "futility"


def _run_complete_data(scenario: Scenario, data: TrialData, bounds, final_test: bool = True,
                       looks=None) -> TrialResult:
    """Suspend-at-every-look conduct shared by the complete-data comparators."""
    spec = scenario.design
    arrivals = data.arrivals.copy()
    shift = 0.0
    prev = 0
    by_n = {entry["n"]: entry for entry in bounds}
    looks = spec.looks if looks is None else looks
    for n in looks:
        arrivals[prev:n] = data.arrivals[prev:n] + shift
        t_analysis = arrivals[n - 1]
        t_done = t_analysis
        for ep in spec.endpoints:
            t_done = max(t_done, float(_resolve_times(data, ep, arrivals, n).max()))
        counts = {ep.name: int(data.success[ep.name][:n].sum()) for ep in spec.endpoints}
        is_final = n == spec.max_n
        if n in by_n and (final_test or not is_final):
            stop, reason = _complete_stop(by_n[n], counts, spec.structure)
            if stop:
                verdict = NOT_PROMISING
                reason = reason if not is_final else f"final-{reason}"
                return TrialResult(verdict, reason, n_used=n, duration_days=t_done - arrivals[0])
        if is_final:
            return TrialResult(PROMISING, "final-go", n_used=n, duration_days=t_done - arrivals[0])
        shift += t_done - t_analysis
        prev = n
    raise AssertionError("unreachable")


def _run_ts(scenario: Scenario, data: TrialData, rule: ThallSimonRule) -> TrialResult:
    """Monitoring-only conduct: complete-data interim looks, promising on completion."""
    spec = scenario.design
    ep = spec.endpoints[0]
    bounds = ts_boundaries(rule)
    entries = [
        {"n": n, "final": False, "endpoints": {ep.name: {"monitor": MONITOR_FUTILITY, "stop_max": b}}}
        for n, b in zip(rule.looks, bounds)
    ]
    arrivals = data.arrivals.copy()
    shift = 0.0
    prev = 0
    for n in list(rule.looks) + [rule.max_n]:
        arrivals[prev:n] = data.arrivals[prev:n] + shift
        t_analysis = arrivals[n - 1]
        t_done = max(t_analysis, float(_resolve_times(data, ep, arrivals, n).max()))
        if n != rule.max_n:
            entry = entries[list(rule.looks).index(n)]
            x = int(data.success[ep.name][:n].sum())
            if x <= entry["endpoints"][ep.name]["stop_max"]:
                return TrialResult(NOT_PROMISING, "futility", n_used=n, duration_days=t_done - arrivals[0])
            shift += t_done - t_analysis
            prev = n
        else:
            return TrialResult(PROMISING, "completed", n_used=n, duration_days=t_done - arrivals[0])
    raise AssertionError("unreachable")


def _run_simon(scenario: Scenario, data: TrialData, simon: SimonDesign) -> TrialResult:
    """Over-run conduct: accrual never pauses, analyses wait for resolution."""
    ep = scenario.design.endpoints[0]
    arrivals = data.arrivals
    succ = data.success[ep.name]
    t1 = float(_resolve_times(data, ep, arrivals, simon.n1).max())
    x1 = int(succ[: simon.n1].sum())
    if x1 <= simon.r1:
        enrolled = int(np.searchsorted(arrivals, t1, side="right"))
        n_used = min(enrolled, simon.n)
        return TrialResult(NOT_PROMISING, "stage1-stop", n_used=n_used, duration_days=t1 - arrivals[0])
    t2 = float(_resolve_times(data, ep, arrivals, simon.n).max())
    x = int(succ[: simon.n].sum())
    if x > simon.r:
        return TrialResult(PROMISING, "final-go", n_used=simon.n, duration_days=t2 - arrivals[0])
    return TrialResult(NOT_PROMISING, "final-nogo", n_used=simon.n, duration_days=t2 - arrivals[0])


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def calibrated_params(spec: DesignSpec) -> CutoffParams:
    return calibrate(spec)


@lru_cache(maxsize=64)
def _simon_design(hypotheses: tuple) -> SimonDesign:
    p0, p1, alpha, beta = hypotheses
    optimal, _ = simon_search(p0, p1, alpha, beta)
    return optimal


@dataclass(frozen=True)
class _CompiledDesigns:
    table: DecisionTable
    bop2: tuple
    ts_rule: ThallSimonRule
    simon: SimonDesign


def _compile(scenario: Scenario, params: CutoffParams = None) -> _CompiledDesigns:
    spec = scenario.design
    params = calibrated_params(spec) if params is None else params
    table = decision_table(spec, params)
    bop2 = tuple(bop2_boundaries(spec, params)) if "bop2" in scenario.designs else None
    ts_rule = None
    if "ts" in scenario.designs:
        ts_rule = calibrate_thall_simon(
            phi=spec.endpoints[0].phi,
            max_n=spec.max_n,
            interim_looks=spec.looks[:-1],
            alpha=spec.alpha,
            prior=spec.prior_for(0),
        )
    simon = _simon_design(scenario.simon_hypotheses) if "simon" in scenario.designs else None
    return _CompiledDesigns(table=table, bop2=bop2, ts_rule=ts_rule, simon=simon)


def run_trial(design: str, scenario: Scenario, rng, compiled: _CompiledDesigns = None) -> TrialResult:
    """Simulate one trial for one design under the scenario's conduct rules."""
    compiled = _compile(scenario) if compiled is None else compiled
    data = gen_outcomes(scenario, rng)
    return _conduct(design, scenario, data, compiled)


def _conduct(design: str, scenario: Scenario, data: TrialData, compiled: _CompiledDesigns) -> TrialResult:
    if design == "tess":
        return _run_top(scenario, data, compiled.table)
    if design == "bop2":
        return _run_complete_data(scenario, data, compiled.bop2)
    if design == "ts":
        return _run_ts(scenario, data, compiled.ts_rule)
    if design == "simon":
        return _run_simon(scenario, data, compiled.simon)
    raise ValueError(f"unknown design {design!r}")


def _se_mean(values: np.ndarray) -> float:
    if values.size < 2:
        return math.nan
    return float(values.std(ddof=1) / math.sqrt(values.size))


def operating_characteristics(scenario: Scenario, replicates: int, seed: int,
                              designs=None, params: CutoffParams = None,
                              progress=None) -> dict:
    """Aggregate Monte Carlo operating characteristics per design.

    Per-replicate generators are derived deterministically from
    (seed, replicate index), and all designs consume the same latent stream
    within a replicate, so reports are reproducible bit for bit and the
    between-design comparisons are paired.
    """
    if replicates < 1:
        raise ValueError("need at least one replicate")
    designs = tuple(designs) if designs is not None else scenario.designs
    missing = set(designs) - set(scenario.designs)
    if missing:
        raise ValueError(f"designs {sorted(missing)} are not in the scenario roster")
    compiled = _compile(scenario, params)
    results = {d: [] for d in designs}
    for rep in range(replicates):
        rng = np.random.default_rng(np.random.SeedSequence((seed, rep)))
        data = gen_outcomes(scenario, rng)
        for d in designs:
            results[d].append(_conduct(d, scenario, data, compiled))
        if progress is not None and (rep + 1) % 500 == 0:
            progress(rep + 1, replicates)
    reports = {}
    for d in designs:
        res = results[d]
        accepts = np.array([r.accepted for r in res], dtype=float)
        ns = np.array([r.n_used for r in res], dtype=float)
        durs = np.array([r.duration_months for r in res], dtype=float)
        rate = float(accepts.mean())
        reasons = {}
        for r in res:
            reasons[r.reason] = reasons.get(r.reason, 0) + 1
        reports[d] = OCReport(
            design=d,
            scenario=scenario.name,
            replicates=replicates,
            accept_rate=rate,
            accept_se=math.sqrt(rate * (1.0 - rate) / replicates) if replicates > 1 else math.nan,
            expected_n=float(ns.mean()),
            n_se=_se_mean(ns),
            mean_duration_months=float(durs.mean()),
            duration_se=_se_mean(durs),
            stop_reasons=reasons,
        )
    return reports


# ---------------------------------------------------------------------------
# Scenario presets
# ---------------------------------------------------------------------------


def single_design_46() -> DesignSpec:
    """Single-endpoint reference design: null 0.3 vs alt 0.5, N=46, looks every 12."""
    ep = EndpointDef("ORR", window_days=120, phi=0.3)
    return DesignSpec(
        structure=STRUCTURE_SINGLE, endpoints=(ep,), null_rates=(0.3,), alt_rates=(0.5,),
        max_n=46, looks=(12, 24, 36, 46), alpha=0.1, name="single-46",
    )


def co_primary_design_40() -> DesignSpec:
    """Co-primary reference design: nulls (0.45, 0.30), alts (0.65, 0.45), N=40."""
    eps = (
        EndpointDef("ORR", window_days=60, phi=0.45),
        EndpointDef("PFS4", window_days=120, phi=0.30, event_scores=False),
    )
    return DesignSpec(
        structure=STRUCTURE_CO_PRIMARY, endpoints=eps, null_rates=(0.45, 0.30),
        alt_rates=(0.65, 0.45), max_n=40, looks=(10, 20, 30, 40), alpha=0.1,
        name="co-primary-40",
    )


def eff_tox_design_46() -> DesignSpec:
    """Efficacy-toxicity reference design: ORR null 0.3 / DLT ceiling 0.3, N=46."""
    eps = (
        EndpointDef("ORR", window_days=120, phi=0.3),
        EndpointDef("DLT", window_days=60, phi=0.3, monitor="toxicity"),
    )
    return DesignSpec(
        structure=STRUCTURE_EFF_TOX, endpoints=eps, null_rates=(0.3, 0.3),
        alt_rates=(0.5, 0.18), max_n=46, looks=(12, 24, 36, 46), alpha=0.1,
        name="eff-tox-46",
    )


def scenario_presets() -> dict:
    """The nine benchmark scenarios keyed 1..9.

    1-3: single 4-month endpoint at true rates 0.2 / 0.3 / 0.5 against a 0.3
    null.  4-6: co-primary 2-month response and 4-month progression-free
    endpoints.  7-9: response plus a 2-month toxicity monitor.  Accrual is 2
    patients/month everywhere; outcome categories are independent across
    endpoints by default.
    """
    single = single_design_46()
    cp = co_primary_design_40()
    et = eff_tox_design_46()
    simon_single = (0.3, 0.5, 0.1, 0.1)
    simon_cp = (0.45, 0.65, 0.1, 0.15)
    presets = {
        1: Scenario("scenario-1", single, (0.2,), simon_hypotheses=simon_single),
        2: Scenario("scenario-2", single, (0.3,), simon_hypotheses=simon_single),
        3: Scenario("scenario-3", single, (0.5,), simon_hypotheses=simon_single),
        4: Scenario("scenario-4", cp, (0.30, 0.30), simon_hypotheses=simon_cp),
        5: Scenario("scenario-5", cp, (0.40, 0.55), simon_hypotheses=simon_cp),
        6: Scenario("scenario-6", cp, (0.65, 0.45), simon_hypotheses=simon_cp),
        7: Scenario("scenario-7", et, (0.30, 0.30), simon_hypotheses=simon_single),
        8: Scenario("scenario-8", et, (0.45, 0.40), simon_hypotheses=simon_single),
        9: Scenario("scenario-9", et, (0.50, 0.18), simon_hypotheses=simon_single),
    }
    return presets
