"""Abstract per-UE radio links.

A link alternates between line-of-sight and non-line-of-sight according to
a two-state Markov chain with exponential sojourn times; each state change
redraws a Gaussian shadowing term around the mode's mean SNR. Between
changes the shadowing evolves as a first-order autoregression with
correlation time ``shadow_corr_s``, so deep fades persist for hundreds of
milliseconds instead of decorrelating at the stepping interval; the
stationary distribution stays Gaussian around the mode mean. The link is
in OUTAGE whenever the instantaneous SNR falls below the outage threshold:
its rate is then zero and packets handed to it are dropped on the spot,
modeling an air interface that cannot even complete link-layer signaling.

Otherwise the spectral-efficiency model is a fraction of Shannon capacity,
``rate = efficiency * bandwidth * log2(1 + snr_linear)``, and packets leave
through a FIFO: serialization at the current rate, a fixed stack delay, and
an optional retransmission ladder (per-attempt Bernoulli loss, a fixed
extra delay per repeat) standing in for HARQ and RLC recovery.

The LTE link reuses the same machinery in degenerate form: transition
rates zero, no shadowing, a fixed SNR, and a small constant loss
probability, so it never sees outage.
"""

from __future__ import annotations

import math
import random
from typing import NamedTuple

MMWAVE = "mmwave"
LTE = "lte"

LOS = 0
NLOS = 1

_STATE_NAMES = ("LOS", "NLOS")


class TxOutcome(NamedTuple):
    delivered: bool
    deliver_at: float  # meaningless when not delivered
    attempts: int
    send_start: float


class LinkModel:
    """One directed radio link with its own fading state and FIFO."""

    __slots__ = (
        "kind", "bandwidth_hz", "efficiency", "base_delay_s",
        "sojourn_s", "snr_mean_db", "snr_sigma_db", "shadow_corr_s",
        "loss_prob", "outage_threshold_db", "ran_retx", "max_attempts",
        "retx_delay_s", "mode", "snr_db", "busy_until", "rng",
    )

    def __init__(
        self,
        kind: str = MMWAVE,
        bandwidth_hz: float = 1e9,
        efficiency: float = 0.6,
        base_delay_s: float = 0.0005,
        sojourn_s=(2.0, 1.0),
        snr_mean_db=(20.0, -2.0),
        snr_sigma_db: float = 4.0,
        shadow_corr_s: float = 0.25,
        loss_prob=(0.01, 0.5),
        outage_threshold_db: float = -5.0,
        ran_retx: bool = True,
        max_attempts: int = 3,
        retx_delay_s: float = 0.004,
        initial_mode: int = LOS,
        rng: random.Random | None = None,
    ):
        if sojourn_s[0] <= 0 or sojourn_s[1] <= 0:
            raise ValueError("sojourn times must be positive")
        if max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")
        self.kind = kind
        self.bandwidth_hz = bandwidth_hz
        self.efficiency = efficiency
        self.base_delay_s = base_delay_s
        self.sojourn_s = tuple(sojourn_s)
        self.snr_mean_db = tuple(snr_mean_db)
        self.snr_sigma_db = snr_sigma_db
        self.shadow_corr_s = shadow_corr_s
        self.loss_prob = tuple(loss_prob)
        self.outage_threshold_db = outage_threshold_db
        self.ran_retx = ran_retx
        self.max_attempts = max_attempts
        self.retx_delay_s = retx_delay_s
        self.mode = initial_mode
        self.rng = rng if rng is not None else random.Random()
        self.snr_db = self._draw_snr()
        self.busy_until = 0.0

    @classmethod
    def lte(
        cls,
        bandwidth_hz: float = 20e6,
        snr_db: float = -3.0,
        loss_prob: float = 1e-3,
        base_delay_s: float = 0.0015,
        ran_retx: bool = True,
        max_attempts: int = 3,
        retx_delay_s: float = 0.004,
        rng: random.Random | None = None,
    ) -> "LinkModel":
        """Always-on cellular fallback; the degenerate LOS-like state."""
        return cls(
            kind=LTE,
            bandwidth_hz=bandwidth_hz,
            base_delay_s=base_delay_s,
            sojourn_s=(math.inf, math.inf),
            snr_mean_db=(snr_db, snr_db),
            snr_sigma_db=0.0,
            loss_prob=(loss_prob, loss_prob),
            ran_retx=ran_retx,
            max_attempts=max_attempts,
            retx_delay_s=retx_delay_s,
            initial_mode=LOS,
            rng=rng,
        )

    def _draw_snr(self) -> float:
        if self.snr_sigma_db == 0.0:
            return self.snr_mean_db[self.mode]
        return self.rng.gauss(self.snr_mean_db[self.mode], self.snr_sigma_db)

    # -- state ---------------------------------------------------------

    @property
    def outage(self) -> bool:
        return self.snr_db < self.outage_threshold_db

    @property
    def state(self) -> str:
        if self.outage:
            return "OUTAGE"
        return _STATE_NAMES[self.mode]

    def rate_matrix(self):
        """Generator matrix of the mode chain; rows sum to zero."""
        a = 0.0 if math.isinf(self.sojourn_s[LOS]) else 1.0 / self.sojourn_s[LOS]
        b = 0.0 if math.isinf(self.sojourn_s[NLOS]) else 1.0 / self.sojourn_s[NLOS]
        return ((-a, a), (b, -b))

    def step_state(self, dt: float) -> None:
        """Advance the fading process by dt.

        dt is expected to be small against the sojourn times; at most one
        mode flip is sampled per step. A flip redraws shadowing fresh;
        otherwise the shadowing term makes one AR(1) move, which keeps the
        N(mean, sigma^2) marginal while correlating successive steps over
        shadow_corr_s. A non-positive correlation time degenerates to an
        independent redraw every step.
        """
        if dt < 0:
            raise ValueError("dt must be non-negative")
        sojourn = self.sojourn_s[self.mode]
        if not math.isinf(sojourn):
            if self.rng.random() < 1.0 - math.exp(-dt / sojourn):
                self.mode ^= 1
                self.snr_db = self._draw_snr()
                return
        if self.snr_sigma_db == 0.0:
            self.snr_db = self.snr_mean_db[self.mode]
            return
        rho = math.exp(-dt / self.shadow_corr_s) if self.shadow_corr_s > 0 else 0.0
        mean = self.snr_mean_db[self.mode]
        innov = self.snr_sigma_db * math.sqrt(1.0 - rho * rho)
        self.snr_db = mean + rho * (self.snr_db - mean) + self.rng.gauss(0.0, innov)

    # -- data path -----------------------------------------------------

    def current_rate(self) -> float:
        """Instantaneous PHY rate in bit/s; zero in outage."""
        if self.outage:
            return 0.0
        return self.efficiency * self.bandwidth_hz * math.log2(
            1.0 + 10.0 ** (self.snr_db / 10.0)
        )

    def transmit(self, size_bytes: int, now: float) -> TxOutcome:
        """Push one packet through the FIFO.

        Loss is sampled per attempt; with RAN retransmissions off a single
        attempt is made. Each repeat adds retx_delay_s to the delivery time
        but does not re-occupy the FIFO (the recovery round trip is
        abstracted, not re-serialized). In outage the packet is dropped
        without consuming airtime.
        """
        if self.outage:
            return TxOutcome(False, 0.0, 0, now)
        rate = self.current_rate()
        send_start = now if now > self.busy_until else self.busy_until
        serialization = size_bytes * 8.0 / rate
        self.busy_until = send_start + serialization
        attempts_allowed = self.max_attempts if self.ran_retx else 1
        p = self.loss_prob[self.mode]
        attempts = 0
        rng = self.rng
        while attempts < attempts_allowed:
            attempts += 1
            if p == 0.0 or rng.random() >= p:
                deliver_at = (
                    send_start
                    + serialization
                    + self.base_delay_s
                    + (attempts - 1) * self.retx_delay_s
                )
                return TxOutcome(True, deliver_at, attempts, send_start)
        return TxOutcome(False, 0.0, attempts, send_start)
