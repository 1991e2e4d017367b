"""Adaptive cutoffs, exact operating characteristics, calibration and tables.

The stopping rule compares a posterior tail probability against an adaptive
cutoff C_n = 1 - C * (n/N)**gamma that is lenient at early looks and strict at
the final one.  (C, gamma) are calibrated by exact grid search so the
complete-data type I error stays below a target while power is maximized.
Because the posterior at an interim depends on the data only through the
monitored count and the total effective sample size, every interim decision
can be tabulated in advance as count boundaries plus per-count TESS
thresholds; the resulting table is independent of assessment windows and
accrual rate.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from .state import (
    MONITOR_FUTILITY,
    MONITOR_TOXICITY,
    EndpointDef,
    InterimSnapshot,
)
from .stats import BetaPrior, default_prior, excess_prob, futility_prob

__all__ = [
    "STRUCTURE_SINGLE",
    "STRUCTURE_CO_PRIMARY",
    "STRUCTURE_EFF_TOX",
    "ALWAYS_GO",
    "ALWAYS_STOP",
    "CutoffParams",
    "DesignSpec",
    "CalibrationError",
    "cutoff",
    "stop_rule",
    "exact_oc",
    "calibrate",
    "tess_threshold",
    "suspension_check",
    "decision_table",
    "decide",
    "DecisionTable",
    "EndpointTable",
    "LookBlock",
    "Decision",
    "joint_cells",
    "complete_data_boundaries",
]

STRUCTURE_SINGLE = "single"
STRUCTURE_CO_PRIMARY = "co-primary"
STRUCTURE_EFF_TOX = "efficacy-toxicity"
_STRUCTURES = (STRUCTURE_SINGLE, STRUCTURE_CO_PRIMARY, STRUCTURE_EFF_TOX)

ALWAYS_GO = "always-go"
ALWAYS_STOP = "always-stop"

SUSPENSION_TABLE = "table-consistent"
SUSPENSION_PROSE = "prose-literal"

CONTINUE = "continue"
STOP_FUTILITY = "stop-futility"
STOP_TOXICITY = "stop-toxicity"

_BISECT_TOL = 1e-9

C_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))
GAMMA_GRID = tuple(round(0.25 * i, 2) for i in range(0, 13))


class CalibrationError(RuntimeError):
    """No (C, gamma) grid point satisfies the type I error constraint."""


@dataclass(frozen=True)
class CutoffParams:
    """Tuning parameters of the adaptive cutoff family."""

    C: float
    gamma: float

    def __post_init__(self):
        if not 0.0 <= self.C <= 1.0:
            raise ValueError(f"C must lie in [0, 1], got {self.C}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")


def cutoff(n: int, N: int, params: CutoffParams) -> float:
    """Interim posterior-probability cutoff C_n = 1 - C * (n/N)**gamma."""
    if not 1 <= n <= N:
        raise ValueError(f"interim size n={n} outside [1, N={N}]")
    return 1.0 - params.C * (n / N) ** params.gamma


@dataclass(frozen=True)
class DesignSpec:
    """Everything needed to calibrate and tabulate one design.

    ``looks`` lists the analysis sample sizes, strictly increasing and ending
    at ``max_n``.  ``null_rates``/``alt_rates`` hold the per-endpoint
    monitored rates under the two hypotheses.  For joint structures the
    per-patient 2x2 outcome table is built from the marginal rates plus a
    log-odds-ratio association (independence by default); explicit cell
    probabilities can be supplied instead.
    """

    structure: str
    endpoints: tuple
    null_rates: tuple
    alt_rates: tuple
    max_n: int
    looks: tuple
    alpha: float
    priors: tuple = None
    association_log_odds: float = 0.0
    null_cells: tuple = None
    alt_cells: tuple = None
    suspension_mode: str = SUSPENSION_TABLE
    toxicity_params: CutoffParams = None
    name: str = ""

    def __post_init__(self):
        if self.structure not in _STRUCTURES:
            raise ValueError(f"unknown endpoint structure {self.structure!r}")
        endpoints = tuple(self.endpoints)
        object.__setattr__(self, "endpoints", endpoints)
        object.__setattr__(self, "null_rates", tuple(float(r) for r in self.null_rates))
        object.__setattr__(self, "alt_rates", tuple(float(r) for r in self.alt_rates))
        object.__setattr__(self, "looks", tuple(int(n) for n in self.looks))
        want = 1 if self.structure == STRUCTURE_SINGLE else 2
        if len(endpoints) != want:
            raise ValueError(f"{self.structure} design needs {want} endpoint(s), got {len(endpoints)}")
        if len(self.null_rates) != want or len(self.alt_rates) != want:
            raise ValueError("null/alt rates must match the endpoint count")
        if self.structure == STRUCTURE_EFF_TOX:
            if endpoints[0].monitor != MONITOR_FUTILITY or endpoints[1].monitor != MONITOR_TOXICITY:
                raise ValueError("efficacy-toxicity design needs a futility endpoint then a toxicity endpoint")
        elif any(ep.monitor != MONITOR_FUTILITY for ep in endpoints):
            raise ValueError(f"{self.structure} design monitors futility only")
        if not all(0.0 < r < 1.0 for r in self.null_rates + self.alt_rates):
            raise ValueError("rates must lie in (0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if list(self.looks) != sorted(set(self.looks)) or not self.looks:
            raise ValueError(f"looks must be strictly increasing, got {self.looks}")
        if self.looks[-1] != self.max_n or self.looks[0] < 1:
            raise ValueError(f"looks must end at max_n={self.max_n}, got {self.looks}")
        if self.suspension_mode not in (SUSPENSION_TABLE, SUSPENSION_PROSE):
            raise ValueError(f"unknown suspension mode {self.suspension_mode!r}")
        if self.priors is None:
            priors = tuple(default_prior(ep.phi) for ep in endpoints)
        else:
            priors = tuple(self.priors)
            if len(priors) != want:
                raise ValueError("priors must match the endpoint count")
        object.__setattr__(self, "priors", priors)
        for cells, label in ((self.null_cells, "null_cells"), (self.alt_cells, "alt_cells")):
            if cells is not None:
                cells = tuple(float(c) for c in cells)
                if len(cells) != 4 or any(c < 0 for c in cells) or abs(sum(cells) - 1.0) > 1e-9:
                    raise ValueError(f"{label} must be four nonnegative probabilities summing to 1")
                object.__setattr__(self, label, cells)

    @property
    def is_joint(self) -> bool:
        return self.structure != STRUCTURE_SINGLE

    def prior_for(self, index: int) -> BetaPrior:
        return self.priors[index]

    def cutoff_params_for(self, endpoint: EndpointDef, params: CutoffParams) -> CutoffParams:
        if endpoint.monitor == MONITOR_TOXICITY and self.toxicity_params is not None:
            return self.toxicity_params
        return params

    def cells(self, rates, log_odds: float = None) -> tuple:
        """Per-patient joint cell probabilities (x1=1&x2=1, 1&0, 0&1, 0&0)."""
        if log_odds is None:
            log_odds = self.association_log_odds
        return joint_cells(rates[0], rates[1], log_odds)


def joint_cells(p1: float, p2: float, log_odds: float = 0.0) -> tuple:
    """2x2 cell probabilities from two marginals and a log-odds-ratio.

    Returns (p11, p10, p01, p00).  The odds ratio exp(log_odds) pins the
    association; 0 gives independence.  Uses the standard quadratic solution
    for the (1,1) cell.
    """
    if not (0.0 < p1 < 1.0 and 0.0 < p2 < 1.0):
        raise ValueError(f"marginals must lie in (0, 1), got ({p1}, {p2})")
    theta = math.exp(log_odds)
    if abs(theta - 1.0) < 1e-12:
        p11 = p1 * p2
    else:
        s = 1.0 + (p1 + p2) * (theta - 1.0)
        disc = s * s - 4.0 * theta * (theta - 1.0) * p1 * p2
        if disc < 0:
            raise ValueError(f"infeasible association log_odds={log_odds} for marginals ({p1}, {p2})")
        p11 = (s - math.sqrt(disc)) / (2.0 * (theta - 1.0))
    cells = (p11, p1 - p11, p2 - p11, 1.0 - p1 - p2 + p11)
    if any(c < -1e-12 for c in cells):
        raise ValueError(f"infeasible association log_odds={log_odds} for marginals ({p1}, {p2})")
    return tuple(max(c, 0.0) for c in cells)


# ---------------------------------------------------------------------------
# Stopping rule and TESS thresholds
# ---------------------------------------------------------------------------


def _monitor_stat(spec: DesignSpec, index: int, x: float, m: float) -> float:
    ep = spec.endpoints[index]
    prior = spec.prior_for(index)
    if ep.monitor == MONITOR_TOXICITY:
        return excess_prob(x, m, ep.phi, prior)
    return futility_prob(x, m, ep.phi, prior)


def stop_rule(snapshot: InterimSnapshot, spec: DesignSpec, params: CutoffParams) -> str:
    """Direct posterior evaluation of the interim stopping criterion.

    Single endpoint: stop when the futility tail exceeds C_n.  Co-primary:
    stop only when both endpoints cross.  Efficacy-toxicity: stop when either
    the futility tail or the toxicity excess tail crosses its cutoff.
    """
    n = snapshot.n_enrolled
    if n not in spec.looks:
        raise ValueError(f"snapshot size {n} is not an analysis point {spec.looks}")
    stats = []
    for i, ep in enumerate(spec.endpoints):
        c = snapshot.endpoint(ep.name)
        cn = cutoff(n, spec.max_n, spec.cutoff_params_for(ep, params))
        stats.append(_monitor_stat(spec, i, c.x, c.tess) > cn)
    if spec.structure == STRUCTURE_SINGLE:
        return STOP_FUTILITY if stats[0] else CONTINUE
    if spec.structure == STRUCTURE_CO_PRIMARY:
        return STOP_FUTILITY if all(stats) else CONTINUE
    if stats[1]:
        return STOP_TOXICITY
    if stats[0]:
        return STOP_FUTILITY
    return CONTINUE


def tess_threshold(x: int, n: int, spec: DesignSpec, params: CutoffParams, endpoint: int = 0):
    """TESS boundary for x monitored counts at an interim with n enrolled.

    For a futility monitor the posterior tail rises with TESS, so the rule is
    "go while TESS < m*" where m* solves futility_prob(x, m*) = C_n on
    [x, n].  For a toxicity monitor the excess tail falls with TESS, the root
    solves excess_prob(x, m*) = C_n and the rule reverses: stop while
    TESS < m* (not enough clean follow-up).  Returns ALWAYS_GO when no root
    lies at or below n and ALWAYS_STOP when the root lies at or below x.
    """
    if not 0 <= x <= n:
        raise ValueError(f"x={x} outside [0, n={n}]")
    ep = spec.endpoints[endpoint]
    cn = cutoff(n, spec.max_n, spec.cutoff_params_for(ep, params))

    def f(m):
        return _monitor_stat(spec, endpoint, x, m) - cn

    lo, hi = float(x), float(n)
    f_lo, f_hi = f(lo), f(hi)
    if ep.monitor == MONITOR_FUTILITY:
        # f increasing in m
        if f_hi <= 0:
            return ALWAYS_GO
        if f_lo > 0:
            return ALWAYS_STOP
    else:
        # f decreasing in m
        if f_lo <= 0:
            return ALWAYS_GO
        if f_hi > 0:
            return ALWAYS_STOP
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        v = f(mid)
        crosses_low = v <= 0 if ep.monitor == MONITOR_FUTILITY else v > 0
        if crosses_low:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def suspension_check(
    n: int,
    N: int,
    n_pending: int,
    meets_go: bool,
    is_final: bool,
    mode: str = SUSPENSION_TABLE,
) -> bool:
    """Accrual suspension rule.

    The final analysis demands complete data: suspend whenever anything is
    pending.  At an interim, suspend only when the monitored count has not
    reached the unconditional go boundary and too many outcomes are pending.
    The default mode uses pending >= floor(n^2/N); the prose-literal mode
    uses pending > n^2/N ("more than 100n/N percent of n patients").
    """
    if not 0 <= n_pending <= n:
        raise ValueError(f"pending count {n_pending} outside [0, {n}]")
    if is_final:
        return n_pending >= 1
    if meets_go:
        return False
    frac = n * n / N
    if mode == SUSPENSION_TABLE:
        limit = max(1, math.floor(frac))
    elif mode == SUSPENSION_PROSE:
        limit = math.floor(frac) + 1
    else:
        raise ValueError(f"unknown suspension mode {mode!r}")
    return n_pending >= limit


def _suspend_limit(n: int, N: int, mode: str) -> int:
    for q in range(0, n + 1):
        if suspension_check(n, N, q, meets_go=False, is_final=False, mode=mode):
            return q
    return n + 1


# ---------------------------------------------------------------------------
# Count boundaries (complete data) and the decision table
# ---------------------------------------------------------------------------


def _futility_bounds(spec, params, n, endpoint):
    """(nogo_max, go_min) for a futility monitor at a look with n enrolled.

    nogo_max: largest x that stops even at the minimum attainable TESS (= x).
    go_min: smallest x that continues even at the maximum TESS (= n).
    """
    nogo_max = -1
    for x in range(n + 1):
        if _monitor_stat(spec, endpoint, x, x) > cutoff(
            n, spec.max_n, spec.cutoff_params_for(spec.endpoints[endpoint], params)
        ):
            nogo_max = x
        else:
            break
    go_min = n + 1
    cn = cutoff(n, spec.max_n, spec.cutoff_params_for(spec.endpoints[endpoint], params))
    for x in range(n + 1):
        if _monitor_stat(spec, endpoint, x, n) <= cn:
            go_min = x
            break
    return nogo_max, go_min


def _toxicity_bounds(spec, params, n, endpoint):
    """(safe_max, stop_min) for a toxicity monitor at a look with n enrolled.

    safe_max: largest event count that continues even at the minimum TESS.
    stop_min: smallest event count that stops even at full TESS (= n).
    """
    cn = cutoff(n, spec.max_n, spec.cutoff_params_for(spec.endpoints[endpoint], params))
    safe_max = -1
    for x in range(n + 1):
        if _monitor_stat(spec, endpoint, x, x) <= cn:
            safe_max = x
        else:
            break
    stop_min = n + 1
    for x in range(n + 1):
        if _monitor_stat(spec, endpoint, x, n) > cn:
            stop_min = x
            break
    return safe_max, stop_min


def _final_go_min(spec, params, endpoint):
    """Smallest passing count at the complete-data final analysis (futility)."""
    N = spec.max_n
    cn = cutoff(N, N, spec.cutoff_params_for(spec.endpoints[endpoint], params))
    for x in range(N + 1):
        if futility_prob(x, N, spec.endpoints[endpoint].phi, spec.prior_for(endpoint)) <= cn:
            return x
    return N + 1


def _final_safe_max(spec, params, endpoint):
    """Largest passing event count at the complete-data final analysis (toxicity)."""
    N = spec.max_n
    cn = cutoff(N, N, spec.cutoff_params_for(spec.endpoints[endpoint], params))
    safe = -1
    for x in range(N + 1):
        if excess_prob(x, N, spec.endpoints[endpoint].phi, spec.prior_for(endpoint)) <= cn:
            safe = x
        else:
            break
    return safe


def complete_data_boundaries(spec: DesignSpec, params: CutoffParams):
    """Per-look complete-data stop rules, as used when nothing is pending.

    Returns a list over looks; each entry maps endpoint name to a dict with
    the monitor kind and the stop region for fully observed counts
    (``stop_max`` for futility monitors, ``stop_min`` for toxicity monitors).
    The final entry carries the passing boundary instead.
    """
    out = []
    for n in spec.looks:
        is_final = n == spec.max_n
        entry = {}
        for i, ep in enumerate(spec.endpoints):
            cn = cutoff(n, spec.max_n, spec.cutoff_params_for(ep, params))
            if ep.monitor == MONITOR_FUTILITY:
                stop_max = -1
                for x in range(n + 1):
                    if futility_prob(x, n, ep.phi, spec.prior_for(i)) > cn:
                        stop_max = x
                    else:
                        break
                entry[ep.name] = {"monitor": ep.monitor, "stop_max": stop_max}
            else:
                stop_min = n + 1
                for x in range(n + 1):
                    if excess_prob(x, n, ep.phi, spec.prior_for(i)) > cn:
                        stop_min = x
                        break
                entry[ep.name] = {"monitor": ep.monitor, "stop_min": stop_min}
        out.append({"n": n, "final": is_final, "endpoints": entry})
    return out


@dataclass(frozen=True)
class LookBlock:
    """Decision rows of one endpoint at one analysis point.

    For a futility monitor: stop when x <= nogo_max, continue when
    x >= go_min, and in between continue while TESS < thresholds[x].  For a
    toxicity monitor the bounds read: continue when x <= safe_max
    (``go_bound``), stop when x >= stop_min (``stop_bound``), and in between
    continue while TESS >= thresholds[x].
    """

    n: int
    cutoff: float
    suspend_min: int
    stop_bound: int
    go_bound: int
    thresholds: dict
    is_final: bool = False


@dataclass(frozen=True)
class EndpointTable:
    endpoint: str
    monitor: str
    phi: float
    prior: tuple
    blocks: tuple
    event_scores: bool = True

    def block(self, n: int) -> LookBlock:
        for b in self.blocks:
            if b.n == n:
                return b
        raise KeyError(f"no analysis row for n={n}")


@dataclass(frozen=True)
class DecisionTable:
    """Pre-tabulated go/no-go/suspend rules for every analysis point."""

    structure: str
    max_n: int
    looks: tuple
    alpha: float
    endpoints: tuple  # EndpointTable per endpoint
    params: CutoffParams = None
    suspension_mode: str = SUSPENSION_TABLE
    hypotheses: dict = field(default_factory=dict)
    rounded: bool = False
    name: str = ""

    def endpoint_table(self, name: str) -> EndpointTable:
        for t in self.endpoints:
            if t.endpoint == name:
                return t
        raise KeyError(f"no endpoint {name!r} in table")


def decision_table(spec: DesignSpec, params: CutoffParams) -> DecisionTable:
    """Tabulate the full interim rule set.

    The table depends only on the hypotheses, priors, look schedule, alpha
    and (C, gamma); assessment windows and accrual rate never enter, so the
    same table serves any follow-up timing.
    """
    if params is None:
        raise ValueError("calibrated cutoff parameters are required to tabulate the rules")
    tables = []
    for i, ep in enumerate(spec.endpoints):
        blocks = []
        for n in spec.looks:
            is_final = n == spec.max_n
            cn = cutoff(n, spec.max_n, spec.cutoff_params_for(ep, params))
            if is_final:
                if ep.monitor == MONITOR_FUTILITY:
                    go_min = _final_go_min(spec, params, i)
                    block = LookBlock(
                        n=n, cutoff=cn, suspend_min=1,
                        stop_bound=go_min - 1, go_bound=go_min,
                        thresholds={}, is_final=True,
                    )
                else:
                    safe_max = _final_safe_max(spec, params, i)
                    block = LookBlock(
                        n=n, cutoff=cn, suspend_min=1,
                        stop_bound=safe_max + 1, go_bound=safe_max,
                        thresholds={}, is_final=True,
                    )
                blocks.append(block)
                continue
            s_n = _suspend_limit(n, spec.max_n, spec.suspension_mode)
            thresholds = {}
            if ep.monitor == MONITOR_FUTILITY:
                nogo_max, go_min = _futility_bounds(spec, params, n, i)
                for x in range(nogo_max + 1, go_min):
                    t = tess_threshold(x, n, spec, params, endpoint=i)
                    assert isinstance(t, float)
                    thresholds[x] = t
                block = LookBlock(
                    n=n, cutoff=cn, suspend_min=s_n,
                    stop_bound=nogo_max, go_bound=go_min,
                    thresholds=thresholds,
                )
            else:
                safe_max, stop_min = _toxicity_bounds(spec, params, n, i)
                for x in range(safe_max + 1, stop_min):
                    t = tess_threshold(x, n, spec, params, endpoint=i)
                    assert isinstance(t, float)
                    thresholds[x] = t
                block = LookBlock(
                    n=n, cutoff=cn, suspend_min=s_n,
                    stop_bound=stop_min, go_bound=safe_max,
                    thresholds=thresholds,
                )
            blocks.append(block)
        tables.append(
            EndpointTable(
                endpoint=ep.name,
                monitor=ep.monitor,
                phi=ep.phi,
                prior=(spec.prior_for(i).a0, spec.prior_for(i).b0),
                blocks=tuple(blocks),
                event_scores=ep.event_scores,
            )
        )
    hypotheses = {
        ep.name: {"phi": ep.phi, "null": spec.null_rates[i], "alt": spec.alt_rates[i]}
        for i, ep in enumerate(spec.endpoints)
    }
    return DecisionTable(
        structure=spec.structure,
        max_n=spec.max_n,
        looks=spec.looks,
        alpha=spec.alpha,
        endpoints=tuple(tables),
        params=params,
        suspension_mode=spec.suspension_mode,
        hypotheses=hypotheses,
        name=spec.name,
    )


# ---------------------------------------------------------------------------
# Table lookup
# ---------------------------------------------------------------------------

GO = "Go"
NOGO = "NoGo"
SUSPEND = "Suspend"

_EP_GO = "go"
_EP_STOP = "stop"
_EP_SUSPEND = "suspend"


@dataclass(frozen=True)
class EndpointVerdict:
    endpoint: str
    status: str  # go | stop | suspend
    x: int
    n_pending: int
    tess: float
    threshold: float = None
    detail: str = ""


@dataclass(frozen=True)
class Decision:
    action: str  # Go | NoGo | Suspend
    reason: str
    endpoints: tuple  # EndpointVerdict per endpoint


def _endpoint_verdict(counts, table: EndpointTable, block: LookBlock) -> EndpointVerdict:
    x, pend, m = counts.x, counts.n_pending, counts.tess
    common = dict(endpoint=table.endpoint, x=x, n_pending=pend, tess=m)
    if block.is_final:
        if pend >= block.suspend_min:
            return EndpointVerdict(status=_EP_SUSPEND, detail="complete data required", **common)
        if table.monitor == MONITOR_FUTILITY:
            ok = x >= block.go_bound
            detail = f"x={x} {'>=' if ok else '<'} {block.go_bound}"
        else:
            ok = x <= block.go_bound
            detail = f"x={x} {'<=' if ok else '>'} {block.go_bound}"
        return EndpointVerdict(status=_EP_GO if ok else _EP_STOP, detail=detail, **common)
    if table.monitor == MONITOR_FUTILITY:
        if x >= block.go_bound:
            return EndpointVerdict(status=_EP_GO, detail=f"x={x} >= {block.go_bound}", **common)
        if pend >= block.suspend_min:
            return EndpointVerdict(
                status=_EP_SUSPEND, detail=f"pending {pend} >= {block.suspend_min}", **common
            )
        if x <= block.stop_bound:
            return EndpointVerdict(status=_EP_STOP, detail=f"x={x} <= {block.stop_bound}", **common)
        t = block.thresholds[x]
        ok = m < t
        return EndpointVerdict(
            status=_EP_GO if ok else _EP_STOP,
            threshold=t,
            detail=f"TESS {m:.2f} {'<' if ok else '>='} {t:.2f}",
            **common,
        )
    # toxicity monitor: a determined excess stops regardless of pending data,
    # since more events or more follow-up can only confirm it
    if x >= block.stop_bound:
        return EndpointVerdict(status=_EP_STOP, detail=f"x={x} >= {block.stop_bound}", **common)
    if x <= block.go_bound:
        return EndpointVerdict(status=_EP_GO, detail=f"x={x} <= {block.go_bound}", **common)
    if pend >= block.suspend_min:
        return EndpointVerdict(
            status=_EP_SUSPEND, detail=f"pending {pend} >= {block.suspend_min}", **common
        )
    t = block.thresholds[x]
    ok = m >= t
    return EndpointVerdict(
        status=_EP_GO if ok else _EP_STOP,
        threshold=t,
        detail=f"TESS {m:.2f} {'>=' if ok else '<'} {t:.2f}",
        **common,
    )


def decide(snapshot: InterimSnapshot, table: DecisionTable) -> Decision:
    """Look up the tabulated rule for an interim snapshot.

    Suspension rows are applied first, then the per-endpoint futility or
    toxicity classification, combined according to the endpoint structure.
    """
    n = snapshot.n_enrolled
    if n not in table.looks:
        raise ValueError(f"snapshot size {n} matches no analysis row {table.looks}")
    verdicts = []
    for ept in table.endpoints:
        block = ept.block(n)
        verdicts.append(_endpoint_verdict(snapshot.endpoint(ept.endpoint), ept, block))
    verdicts = tuple(verdicts)
    statuses = [v.status for v in verdicts]
    if table.structure == STRUCTURE_SINGLE:
        v = verdicts[0]
        if v.status == _EP_SUSPEND:
            return Decision(SUSPEND, v.detail, verdicts)
        if v.status == _EP_STOP:
            return Decision(NOGO, "futility", verdicts)
        return Decision(GO, v.detail, verdicts)
    if table.structure == STRUCTURE_CO_PRIMARY:
        if _EP_GO in statuses:
            which = verdicts[statuses.index(_EP_GO)].endpoint
            return Decision(GO, f"{which} not futile", verdicts)
        if _EP_SUSPEND in statuses:
            return Decision(SUSPEND, "pending outcomes", verdicts)
        return Decision(NOGO, "futile on all endpoints", verdicts)
    # efficacy-toxicity: either confirmed signal stops the trial
    if statuses[1] == _EP_STOP:
        return Decision(NOGO, "toxicity", verdicts)
    if statuses[0] == _EP_STOP:
        return Decision(NOGO, "futility", verdicts)
    if _EP_SUSPEND in statuses:
        return Decision(SUSPEND, "pending outcomes", verdicts)
    return Decision(GO, "within boundaries", verdicts)


# ---------------------------------------------------------------------------
# Exact complete-data operating characteristics
# ---------------------------------------------------------------------------


def _single_oc(spec: DesignSpec, params: CutoffParams, p: float):
    probs = None
    expected_n = 0.0
    prev = 0
    prior = spec.prior_for(0)
    phi = spec.endpoints[0].phi
    for n in spec.looks:
        step = binom.pmf(np.arange(0, n - prev + 1), n - prev, p)
        probs = step if probs is None else np.convolve(probs, step)
        if n == spec.max_n:
            break
        cn = cutoff(n, spec.max_n, params)
        stop_max = -1
        for x in range(n + 1):
            if futility_prob(x, n, phi, prior) > cn:
                stop_max = x
            else:
                break
        if stop_max >= 0:
            stopped = probs[: stop_max + 1].sum()
            expected_n += n * stopped
            probs = probs.copy()
            probs[: stop_max + 1] = 0.0
        prev = n
    go_min = _final_go_min(spec, params, 0)
    accept = probs[go_min:].sum() if go_min <= spec.max_n else 0.0
    expected_n += spec.max_n * probs.sum()
    return float(accept), float(expected_n)


def _conv_patients(P: np.ndarray, cells, steps: int, size: int) -> np.ndarray:
    p11, p10, p01, p00 = cells
    for _ in range(steps):
        nxt = np.zeros((size, size))
        nxt += p00 * P
        nxt[1:, :] += p10 * P[:-1, :]
        nxt[:, 1:] += p01 * P[:, :-1]
        nxt[1:, 1:] += p11 * P[:-1, :-1]
        P = nxt
    return P


def _joint_oc(spec: DesignSpec, params: CutoffParams, cells):
    size = spec.max_n + 1
    P = np.zeros((size, size))
    P[0, 0] = 1.0
    expected_n = 0.0
    prev = 0
    for n in spec.looks:
        P = _conv_patients(P, cells, n - prev, size)
        is_final = n == spec.max_n
        bounds = []
        for i, ep in enumerate(spec.endpoints):
            cn = cutoff(n, spec.max_n, spec.cutoff_params_for(ep, params))
            if ep.monitor == MONITOR_FUTILITY:
                stop_max = -1
                for x in range(n + 1):
                    if futility_prob(x, n, ep.phi, spec.prior_for(i)) > cn:
                        stop_max = x
                    else:
                        break
                bounds.append(("futility", stop_max))
            else:
                stop_min = n + 1
                for x in range(n + 1):
                    if excess_prob(x, n, ep.phi, spec.prior_for(i)) > cn:
                        stop_min = x
                        break
                bounds.append(("toxicity", stop_min))
        if is_final:
            mask = np.ones((size, size), dtype=bool)
            if spec.structure == STRUCTURE_CO_PRIMARY:
                # pass unless futile on both endpoints
                lim1 = max(bounds[0][1] + 1, 0)
                lim2 = max(bounds[1][1] + 1, 0)
                mask[:lim1, :lim2] = False
            else:
                if bounds[0][1] >= 0:
                    mask[: bounds[0][1] + 1, :] = False
                if bounds[1][1] <= spec.max_n:
                    mask[:, bounds[1][1]:] = False
            accept = P[mask].sum()
            expected_n += spec.max_n * P.sum()
            return float(accept), float(expected_n)
        stop = np.zeros((size, size), dtype=bool)
        if spec.structure == STRUCTURE_CO_PRIMARY:
            if bounds[0][1] >= 0 and bounds[1][1] >= 0:
                stop[: bounds[0][1] + 1, : bounds[1][1] + 1] = True
        else:
            if bounds[0][1] >= 0:
                stop[: bounds[0][1] + 1, :] = True
            if bounds[1][1] <= n:
                stop[:, bounds[1][1]:] = True
        stopped = P[stop].sum()
        if stopped > 0:
            expected_n += n * stopped
            P = P.copy()
            P[stop] = 0.0
        prev = n
    raise AssertionError("unreachable")


def exact_oc(spec: DesignSpec, params: CutoffParams, true_rates) -> tuple:
    """Exact (accept probability, expected sample size) with complete data.

    Dynamic programming over reachable monitored-count states at successive
    looks, assuming every enrolled patient is fully observed at each
    analysis.  ``true_rates`` is a scalar rate for a single endpoint, or the
    pair of marginal monitored rates for joint structures (combined with the
    design's association parameter unless explicit cells are given).
    """
    if spec.structure == STRUCTURE_SINGLE:
        p = true_rates[0] if isinstance(true_rates, (tuple, list)) else float(true_rates)
        return _single_oc(spec, params, p)
    if isinstance(true_rates, (tuple, list)) and len(true_rates) == 4:
        cells = tuple(float(c) for c in true_rates)
    else:
        cells = spec.cells(tuple(true_rates))
    return _joint_oc(spec, params, cells)


def _oc_under(spec: DesignSpec, params: CutoffParams, which: str):
    if spec.structure == STRUCTURE_SINGLE:
        rate = spec.null_rates[0] if which == "null" else spec.alt_rates[0]
        return exact_oc(spec, params, rate)
    cells = spec.null_cells if which == "null" else spec.alt_cells
    if cells is None:
        rates = spec.null_rates if which == "null" else spec.alt_rates
        cells = spec.cells(rates)
    return exact_oc(spec, params, cells)


def calibrate(spec: DesignSpec, c_grid=C_GRID, gamma_grid=GAMMA_GRID) -> CutoffParams:
    """Grid-search (C, gamma) for max power subject to the type I constraint.

    Keeps grid points whose exact null accept probability is at most alpha,
    maximizes the accept probability under the alternative, and breaks ties
    by smaller expected sample size under the null, then smaller C.  Raises
    CalibrationError when nothing on the grid is feasible.
    """
    best = None
    best_key = None
    for C in c_grid:
        for gamma in gamma_grid:
            params = CutoffParams(C, gamma)
            t1, en0 = _oc_under(spec, params, "null")
            if t1 > spec.alpha + 1e-12:
                continue
            power, _ = _oc_under(spec, params, "alt")
            key = (-power, en0, C, gamma)
            if best_key is None or key < best_key:
                best_key = key
                best = params
    if best is None:
        raise CalibrationError(
            f"no (C, gamma) on the grid attains type I error <= {spec.alpha}"
        )
    return best
