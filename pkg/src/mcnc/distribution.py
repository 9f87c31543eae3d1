"""Sender-side packet distribution over the two radio paths.

Each NALU's generations are dispatched on the path chosen from the latest
link feedback: mmWave whenever it is confirmed usable, LTE as fallback.
Switching up to mmWave requires the reported SNR to clear the outage
threshold by a hysteresis margin; switching down happens at the threshold
itself, and feedback older than the staleness bound means the mmWave state
is unknown, which is treated as unavailable. With multi-connectivity
disabled everything rides mmWave.

When network-coded FEC is enabled the initial burst carries fixed
redundancy (20% on mmWave, 10% on LTE, rounded up) and rank reports from
the receiver trigger top-up bursts sized to the missing degrees of freedom,
at most MAX_FEC_ATTEMPTS rounds per generation. Without FEC the burst is
exactly k packets and a shortfall is final.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Tuple

from .channel import LTE, MMWAVE
from .rlnc import Encoder, Generation

#: Initial-burst redundancy per path, as an exact ratio (numerator, denominator)
#: so that ceil(k * redundancy) never suffers float round-off (1.1 * 100 is not 110.0).
REDUNDANCY = {MMWAVE: (6, 5), LTE: (11, 10)}

#: Feedback-triggered repair rounds allowed per generation.
MAX_FEC_ATTEMPTS = 5


@dataclass(frozen=True)
class PathFeedback:
    """One receiver report: link observation plus decoder rank snapshots."""

    ue_id: int
    sent_at: float
    mmwave_available: bool
    mmwave_snr_db: float
    generation_reports: Tuple[Tuple[int, int, int], ...] = ()  # (gen_id, rank, k)


@dataclass
class GenerationPlan:
    gen_id: int
    k: int
    path: str
    n_initial: int
    deadline: float
    attempts_used: int = 0
    delivered: bool = False
    failed: bool = False


class RetxAction(NamedTuple):
    kind: str  # "delivered" | "retransmit" | "failed" | "wait"
    count: int = 0


class PathSelector:
    """Hysteresis path chooser fed by receiver reports."""

    __slots__ = ("multi_connectivity", "outage_threshold_db", "hysteresis_db",
                 "staleness_s", "_current", "_feedback")

    def __init__(
        self,
        multi_connectivity: bool = True,
        outage_threshold_db: float = -5.0,
        hysteresis_db: float = 3.0,
        staleness_s: float = 0.020,
    ):
        self.multi_connectivity = multi_connectivity
        self.outage_threshold_db = outage_threshold_db
        self.hysteresis_db = hysteresis_db
        self.staleness_s = staleness_s
        self._current = MMWAVE
        self._feedback: Optional[PathFeedback] = None

    def update(self, fb: PathFeedback) -> None:
        if self._feedback is None or fb.sent_at >= self._feedback.sent_at:
            self._feedback = fb

    @property
    def last_feedback(self) -> Optional[PathFeedback]:
        return self._feedback

    def select_path(self, now: float) -> str:
        if not self.multi_connectivity:
            return MMWAVE
        fb = self._feedback
        stale = fb is None or now - fb.sent_at > self.staleness_s
        if stale or not fb.mmwave_available:
            self._current = LTE
            return LTE
        snr = fb.mmwave_snr_db
        if self._current == MMWAVE:
            if snr < self.outage_threshold_db:
                self._current = LTE
        else:
            if snr >= self.outage_threshold_db + self.hysteresis_db:
                self._current = MMWAVE
        return self._current


def initial_burst_size(k: int, path: str, nc_fec: bool) -> int:
    """Packets in the first burst: k alone, or k plus path redundancy."""
    if not nc_fec:
        return k
    num, den = REDUNDANCY[path]
    return -(-k * num // den)


def dispatch_generation(
    gen: Generation,
    path: str,
    deadline: float,
    encoder: Encoder,
    nc_fec: bool = True,
) -> Tuple[GenerationPlan, list]:
    """Plan a generation and emit its initial burst (attempt 0)."""
    n = initial_burst_size(gen.k, path, nc_fec)
    plan = GenerationPlan(gen.gen_id, gen.k, path, n, deadline)
    return plan, encoder.burst(n, attempt=0)


def handle_feedback(
    plan: GenerationPlan,
    report_rank: int,
    now: float,
    nc_fec: bool = True,
    overshoot: float = 1.0,
) -> RetxAction:
    """Advance a plan given the freshest known decoder rank.

    Returns the action the sender should take; "retransmit" carries the
    top-up packet count (missing degrees of freedom times overshoot, at
    least one) and has already charged the attempt to the plan.
    """
    if plan.delivered or plan.failed:
        return RetxAction("delivered" if plan.delivered else "failed")
    if report_rank >= plan.k:
        plan.delivered = True
        return RetxAction("delivered")
    if not nc_fec or plan.attempts_used >= MAX_FEC_ATTEMPTS or now >= plan.deadline:
        plan.failed = True
        return RetxAction("failed")
    count = math.ceil(max(plan.k - report_rank, 1) * overshoot)
    plan.attempts_used += 1
    return RetxAction("retransmit", count)
