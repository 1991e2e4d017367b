"""Patient-level bookkeeping: follow-up clocks, resolution status and TESS.

A patient is scored on each endpoint after a fixed assessment window.  At an
interim the cohort splits into resolved patients (event observed, or window
completed without one) and pending patients still inside their window.  A
pending patient earns a fractional effective sample size equal to the
completed fraction of the window; resolved patients earn full credit.
"""

from dataclasses import dataclass, field

__all__ = [
    "EndpointDef",
    "PatientRecord",
    "EndpointCounts",
    "InterimSnapshot",
    "RESOLVED_EVENT",
    "RESOLVED_NO_EVENT",
    "PENDING",
    "ess",
    "tess",
    "snapshot",
]

RESOLVED_EVENT = "event"
RESOLVED_NO_EVENT = "no_event"
PENDING = "pending"

MONITOR_FUTILITY = "futility"
MONITOR_TOXICITY = "toxicity"


@dataclass(frozen=True)
class EndpointDef:
    """One monitored endpoint.

    window_days is the assessment window A; phi the rate threshold the
    monitor compares against.  ``monitor`` selects the stopping direction:
    ``futility`` stops when the rate is credibly low, ``toxicity`` stops when
    it is credibly high.  ``event_scores`` states whether the timed
    within-window event increments the monitored count (tumor response,
    toxicity) or whether the count tallies patients who finish the window
    event-free (progression-free survival, where the event is progression).
    """

    name: str
    window_days: float
    phi: float
    monitor: str = MONITOR_FUTILITY
    event_scores: bool = True

    def __post_init__(self):
        # window 0 is the instantly-scored idealization: no patient is ever pending
        if self.window_days < 0:
            raise ValueError(f"assessment window must be nonnegative, got {self.window_days}")
        if not 0.0 < self.phi < 1.0:
            raise ValueError(f"phi must lie in (0, 1), got {self.phi}")
        if self.monitor not in (MONITOR_FUTILITY, MONITOR_TOXICITY):
            raise ValueError(f"unknown monitor kind {self.monitor!r}")

    @property
    def direction(self) -> str:
        """'success-is-good' when the timed event is the favourable outcome."""
        if self.event_scores and self.monitor == MONITOR_FUTILITY:
            return "success-is-good"
        return "event-is-bad"


@dataclass
class PatientRecord:
    """One enrolled patient.

    ``event_times`` maps endpoint name to the latent time (days from arrival)
    at which the endpoint's timed event occurs, or None when no event happens
    within the window.  An event resolves the patient immediately with full
    credit; otherwise the patient resolves at the window end.
    """

    id: int
    arrival: float
    event_times: dict = field(default_factory=dict)

    def resolve_time(self, endpoint: EndpointDef) -> float:
        t = self.event_times.get(endpoint.name)
        if t is not None and t <= endpoint.window_days:
            return self.arrival + t
        return self.arrival + endpoint.window_days

    def status(self, endpoint: EndpointDef, at: float) -> str:
        if at < self.arrival:
            raise ValueError(f"patient {self.id} arrives after the snapshot time")
        t = self.event_times.get(endpoint.name)
        has_event = t is not None and t <= endpoint.window_days
        if has_event and self.arrival + t <= at:
            return RESOLVED_EVENT
        if at - self.arrival >= endpoint.window_days:
            return RESOLVED_NO_EVENT
        return PENDING

    def follow_up(self, endpoint: EndpointDef, at: float) -> float:
        return min(at - self.arrival, endpoint.window_days)


def ess(follow_up_t: float, window_A: float, resolved: bool) -> float:
    """Effective sample size of one patient.

    Resolved patients provide full information and get credit 1; a pending
    patient gets the completed window fraction t/A, capped at 1.
    """
    if follow_up_t < 0:
        raise ValueError(f"follow-up must be nonnegative, got {follow_up_t}")
    if resolved:
        return 1.0
    if window_A <= 0:
        raise ValueError(f"assessment window must be positive, got {window_A}")
    return min(follow_up_t / window_A, 1.0)


def tess(records, endpoint: EndpointDef, at: float) -> float:
    """Total effective sample size for one endpoint at a calendar time.

    Equals n_obs + (sum of pending follow-up times) / A.
    """
    total = 0.0
    for rec in records:
        status = rec.status(endpoint, at)
        total += ess(rec.follow_up(endpoint, at), endpoint.window_days, status != PENDING)
    return total


@dataclass(frozen=True)
class EndpointCounts:
    """Per-endpoint interim counts.

    ``x`` is the monitored count among resolved patients: timed events when
    the endpoint scores on events, otherwise patients who completed the
    window event-free.
    """

    x: int
    n_obs: int
    n_pending: int
    tess: float

    def __post_init__(self):
        if not 0 <= self.x <= self.n_obs:
            raise ValueError(f"monitored count {self.x} outside [0, {self.n_obs}]")
        if self.n_pending < 0:
            raise ValueError("pending count must be nonnegative")
        if self.tess < self.n_obs - 1e-9 or self.tess > self.n_obs + self.n_pending + 1e-9:
            raise ValueError(
                f"TESS {self.tess} inconsistent with n_obs={self.n_obs}, n_pending={self.n_pending}"
            )


@dataclass(frozen=True)
class InterimSnapshot:
    """Interim data for the decision engine: per-endpoint effective counts."""

    n_enrolled: int
    counts: dict  # endpoint name -> EndpointCounts

    def __post_init__(self):
        for name, c in self.counts.items():
            if c.n_obs + c.n_pending != self.n_enrolled:
                raise ValueError(
                    f"endpoint {name}: n_obs + n_pending = {c.n_obs + c.n_pending} "
                    f"differs from n_enrolled = {self.n_enrolled}"
                )

    def endpoint(self, name: str) -> EndpointCounts:
        return self.counts[name]


def snapshot(records, endpoints, at: float) -> InterimSnapshot:
    """Assemble the per-endpoint interim counts at a calendar time."""
    records = list(records)
    counts = {}
    for ep in endpoints:
        n_obs = n_pending = events = 0
        total = 0.0
        for rec in records:
            status = rec.status(ep, at)
            if status == PENDING:
                n_pending += 1
                total += ess(rec.follow_up(ep, at), ep.window_days, False)
            else:
                n_obs += 1
                total += 1.0
                if status == RESOLVED_EVENT:
                    events += 1
        x = events if ep.event_scores else n_obs - events
        counts[ep.name] = EndpointCounts(x=x, n_obs=n_obs, n_pending=n_pending, tess=total)
    return InterimSnapshot(n_enrolled=len(records), counts=counts)
