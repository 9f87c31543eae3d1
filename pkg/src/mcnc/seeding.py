"""Deterministic seed derivation.

Every random stream in the simulator (channel fading, packet loss, coding
coefficients, trace synthesis, Monte-Carlo replications) is seeded through
:func:`derive_seed` so that a run is a pure function of the master seed and
a label path, independent of scheduling, worker count, or call order.
"""

from __future__ import annotations

import hashlib


def derive_seed(*parts) -> int:
    """Map a tuple of labels to a 64-bit seed via SHA-256.

    Parts are joined by their ``str()`` form with a separator that cannot
    appear in decimal integers or the short labels used internally, so
    distinct tuples cannot collide by concatenation.
    """
    h = hashlib.sha256()
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "big")
