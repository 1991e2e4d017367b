"""Comparator designs: Simon's two-stage, Thall-Simon monitoring, BOP2.

Simon's two-stage design is found by exhaustive enumeration with exact
binomial error computation.  The Thall-Simon rule monitors the posterior
probability of exceeding the target rate at each interim and declares a
completed trial promising.  BOP2 shares the adaptive-cutoff boundaries of
the main design but demands complete data at every analysis; its conduct
(suspend accrual until outcomes resolve) lives in the simulator.
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .design import CutoffParams, DesignSpec, complete_data_boundaries
from .state import InterimSnapshot
from .stats import BetaPrior, futility_prob

__all__ = [
    "SimonDesign",
    "simon_search",
    "simon_accept_null_prob",
    "ThallSimonRule",
    "ts_superiority_prob",
    "ts_stop",
    "ts_boundaries",
    "ts_accept_prob",
    "calibrate_thall_simon",
    "bop2_boundaries",
]


@dataclass(frozen=True)
class SimonDesign:
    """Two-stage design: stop after n1 patients if responses <= r1; the
    treatment is promising iff the final response count exceeds r."""

    n1: int
    r1: int
    n: int
    r: int
    flavor: str
    type_i: float
    power: float
    expected_n_null: float
    pet_null: float

    def __post_init__(self):
        if not (0 < self.n1 < self.n and 0 <= self.r1 < self.r <= self.n):
            raise ValueError(f"inconsistent two-stage design ({self.n1}, {self.r1}, {self.n}, {self.r})")


def simon_accept_null_prob(n1: int, r1: int, n: int, r: int, p: float) -> float:
    """Probability the two-stage rule declares the treatment not promising."""
    n2 = n - n1
    pet = binom.cdf(r1, n1, p)
    xs = np.arange(r1 + 1, min(n1, r) + 1)
    if xs.size == 0:
        return float(pet)
    tail = binom.pmf(xs, n1, p) * binom.cdf(r - xs, n2, p)
    return float(pet + tail.sum())


def _accept_matrix(n1: int, n: int, p: float):
    """accept[r1, r] = P(not promising) for all 0 <= r1 <= n1, 0 <= r <= n."""
    n2 = n - n1
    xs = np.arange(0, n1 + 1)
    rs = np.arange(0, n + 1)
    cdf1 = binom.cdf(xs, n1, p)
    pmf1 = binom.pmf(xs, n1, p)
    idx = rs[None, :] - xs[:, None]
    cdf2 = np.where(idx >= 0, binom.cdf(np.clip(idx, 0, n2), n2, p), 0.0)
    terms = pmf1[:, None] * cdf2
    suffix = np.zeros((n1 + 2, n + 1))
    suffix[:-1] = np.cumsum(terms[::-1], axis=0)[::-1]
    # accept[r1, r] = cdf1[r1] + sum_{x > r1} pmf1[x] * cdf2[r - x]
    return cdf1[:, None] + suffix[1:, :]


def simon_search(p0: float, p1: float, alpha: float, beta: float, n_max: int = 70):
    """Exhaustive search for Simon's optimal and minimax two-stage designs.

    Enumerates (n1, r1, n, r) with exact binomial two-stage error rates;
    the optimal design minimizes the expected sample size under p0 and the
    minimax design minimizes the maximum sample size n.
    """
    if not 0 < p0 < p1 < 1:
        raise ValueError(f"need 0 < p0 < p1 < 1, got p0={p0}, p1={p1}")
    best_opt = None
    best_minimax = None
    for n in range(2, n_max + 1):
        for n1 in range(1, n):
            acc0 = _accept_matrix(n1, n, p0)
            acc1 = _accept_matrix(n1, n, p1)
            pet0 = binom.cdf(np.arange(0, n1 + 1), n1, p0)
            en0 = n1 + (1.0 - pet0) * (n - n1)
            r1s, rs = np.meshgrid(np.arange(0, n1 + 1), np.arange(0, n + 1), indexing="ij")
            feasible = (1.0 - acc0 <= alpha + 1e-12) & (acc1 <= beta + 1e-12) & (rs > r1s)
            if not feasible.any():
                continue
            en_grid = np.where(feasible, en0[:, None], np.inf)
            flat = np.argmin(en_grid)
            r1, r = np.unravel_index(flat, en_grid.shape)
            cand = SimonDesign(
                n1=n1, r1=int(r1), n=n, r=int(r), flavor="optimal",
                type_i=float(1.0 - acc0[r1, r]), power=float(1.0 - acc1[r1, r]),
                expected_n_null=float(en0[r1]), pet_null=float(pet0[r1]),
            )
            if best_opt is None or cand.expected_n_null < best_opt.expected_n_null - 1e-9:
                best_opt = cand
            if best_minimax is None or n < best_minimax.n or (
                n == best_minimax.n and cand.expected_n_null < best_minimax.expected_n_null - 1e-9
            ):
                best_minimax = SimonDesign(
                    n1=n1, r1=int(r1), n=n, r=int(r), flavor="minimax",
                    type_i=cand.type_i, power=cand.power,
                    expected_n_null=cand.expected_n_null, pet_null=cand.pet_null,
                )
    if best_opt is None:
        raise ValueError(f"no two-stage design with n <= {n_max} meets alpha={alpha}, beta={beta}")
    return best_opt, best_minimax


@dataclass(frozen=True)
class ThallSimonRule:
    """Posterior superiority monitoring: stop when Pr(p > phi + delta) < pi_L.

    Monitoring is applied at the interim looks; a trial that completes its
    maximum sample size without stopping counts as promising.
    """

    delta: float
    pi_L: float
    prior: BetaPrior
    looks: tuple  # interim analysis sample sizes (final size excluded)
    max_n: int
    phi: float

    def __post_init__(self):
        if not 0.0 < self.pi_L < 1.0:
            raise ValueError(f"pi_L must lie in (0, 1), got {self.pi_L}")
        object.__setattr__(self, "looks", tuple(int(n) for n in self.looks))


def ts_superiority_prob(x: int, n: int, phi: float, delta: float, prior: BetaPrior) -> float:
    """Posterior probability that the rate exceeds phi + delta."""
    return 1.0 - futility_prob(x, n, phi + delta, prior)


def ts_stop(snap: InterimSnapshot, rule: ThallSimonRule, phi: float = None) -> str:
    """Apply the monitoring rule to fully observed interim data."""
    phi = rule.phi if phi is None else phi
    name = next(iter(snap.counts))
    c = snap.endpoint(name)
    if c.n_pending > 0:
        raise ValueError("the monitoring rule needs complete data; suspend accrual first")
    sup = ts_superiority_prob(c.x, c.n_obs, phi, rule.delta, rule.prior)
    return "stop" if sup < rule.pi_L else "continue"


def ts_boundaries(rule: ThallSimonRule):
    """Per-interim stop boundaries: stop when the response count <= bound."""
    bounds = []
    for n in rule.looks:
        stop_max = -1
        for x in range(n + 1):
            if ts_superiority_prob(x, n, rule.phi, rule.delta, rule.prior) < rule.pi_L:
                stop_max = x
            else:
                break
        bounds.append(stop_max)
    return bounds


def ts_accept_prob(rule: ThallSimonRule, p: float):
    """Exact probability of completing the trial (and expected sample size)."""
    bounds = ts_boundaries(rule)
    probs = None
    prev = 0
    expected_n = 0.0
    for n, stop_max in zip(rule.looks, bounds):
        step = binom.pmf(np.arange(0, n - prev + 1), n - prev, p)
        probs = step if probs is None else np.convolve(probs, step)
        if stop_max >= 0:
            expected_n += n * probs[: stop_max + 1].sum()
            probs = probs.copy()
            probs[: stop_max + 1] = 0.0
        prev = n
    accept = probs.sum()
    expected_n += rule.max_n * accept
    return float(accept), float(expected_n)


def calibrate_thall_simon(
    phi: float,
    max_n: int,
    interim_looks,
    alpha: float,
    prior: BetaPrior = None,
    delta: float = 0.0,
    grid=None,
) -> ThallSimonRule:
    """Smallest pi_L whose exact null completion probability is <= alpha.

    Smaller pi_L stops less and keeps more power, so the least aggressive
    feasible rule is the fairest comparator.
    """
    prior = BetaPrior(phi, 1.0 - phi) if prior is None else prior
    grid = [round(0.01 * i, 2) for i in range(1, 100)] if grid is None else grid
    for pi_L in sorted(grid):
        rule = ThallSimonRule(
            delta=delta, pi_L=pi_L, prior=prior,
            looks=tuple(interim_looks), max_n=max_n, phi=phi,
        )
        accept, _ = ts_accept_prob(rule, phi)
        if accept <= alpha + 1e-12:
            return rule
    raise ValueError(f"no pi_L on the grid controls the null completion rate at {alpha}")


def bop2_boundaries(spec: DesignSpec, params: CutoffParams):
    """Complete-data count boundaries shared with the adaptive design.

    BOP2 applies exactly the zero-pending rows of the decision table: at each
    analysis it waits for all outcomes, then stops when the fully observed
    counts fall in the stop region.
    """
    return complete_data_boundaries(spec, params)
