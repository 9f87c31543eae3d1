"""Receiver-side playout with a bounded frame buffer and hard deadlines.

Playout is paced by the display clock: frame i must be on hand at
``start_time + i / fps``. A frame that is complete, decodable and in order
is admitted to the buffer when the receiver consumes it; at its deadline it
is either played (if admitted in time) or skipped for good. Skipped frames
are losses, there is no rebuffering. The buffer never holds more than
``capacity`` admitted-but-undisplayed frames; the admission clock sits one
buffer depth behind the display clock, so a well-behaved feed rides just
under the cap.
"""

from __future__ import annotations

from typing import List, Tuple


class PlayoutBuffer:
    __slots__ = ("start_time", "fps", "capacity", "_pending", "_next_display",
                 "_last_admitted", "played", "skipped", "max_occupancy")

    def __init__(self, start_time: float, fps: float = 50.0, capacity: int = 25):
        self.start_time = start_time
        self.fps = fps
        self.capacity = capacity
        self._pending = {}
        self._next_display = 0
        self._last_admitted = -1
        self.played = 0
        self.skipped = 0
        self.max_occupancy = 0

    def deadline(self, frame_idx: int) -> float:
        return self.start_time + frame_idx / self.fps

    @property
    def occupancy(self) -> int:
        return len(self._pending)

    def admit(self, frame_idx: int, t: float) -> None:
        """Hand a consumed frame to the buffer. Display order, pre-deadline."""
        if frame_idx <= self._last_admitted or frame_idx < self._next_display:
            raise ValueError(f"admission out of display order: frame {frame_idx}")
        if t > self.deadline(frame_idx):
            raise ValueError(f"frame {frame_idx} admitted past its deadline")
        if len(self._pending) >= self.capacity:
            raise OverflowError(f"playout buffer full ({self.capacity} frames)")
        self._pending[frame_idx] = t
        self._last_admitted = frame_idx
        if len(self._pending) > self.max_occupancy:
            self.max_occupancy = len(self._pending)

    def step(self, now: float) -> List[Tuple[str, int]]:
        """Advance the display clock, returning played/skipped events."""
        events = []
        while self.deadline(self._next_display) <= now:
            idx = self._next_display
            if idx in self._pending:
                del self._pending[idx]
                self.played += 1
                events.append(("played", idx))
            else:
                self.skipped += 1
                events.append(("skipped", idx))
            self._next_display += 1
        return events
