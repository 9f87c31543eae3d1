"""Random linear coding over generations of packets.

A generation holds k equal-size packet payloads. Coded packets carry a
coefficient vector drawn uniformly over the field plus the matching linear
combination of the payloads; any k packets with linearly independent
coefficients reconstruct the generation. Decoding is incremental Gaussian
elimination: each arrival is reduced against the pivot rows already held
(one pass, at most rank+1 row operations) and either yields a new pivot or
is discarded as redundant.

Coefficient draw modes
    guarded       redraw until the vector is innovative versus everything
                  this encoder already emitted, while rank allows; the
                  first k emissions are then linearly independent, so a
                  loss-free delivery of a redundancy-free burst always
                  decodes. Emissions past rank k fall back to nonzero
                  draws. This is the transmit-side default.
    nonzero       uniform draws with all-zero vectors redrawn, so the first
                  packet of a generation is always innovative.
    unrestricted  raw uniform draws, zero vector included. Matches the
                  closed form in :func:`full_rank_probability`; used by the
                  statistical tests.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .gf import (
    FieldSpec,
    LengthMismatchError,
    SymbolVector,
    _PER_BYTE,
    gf_inv,
    packed_size,
)
from .seeding import derive_seed

WIRE_HEADER = struct.Struct(">IHHB")  # gen_id, k, seq, attempt


class EmptyGenerationError(ValueError):
    """Raised when building a generation with no payload data."""


class GenerationMismatchError(ValueError):
    """Raised when a packet is fed to a decoder for a different generation."""


class RankDeficientError(RuntimeError):
    """Raised when extracting from a decoder that has not reached full rank."""

    def __init__(self, rank: int, k: int):
        super().__init__(f"rank {rank} of {k}")
        self.rank = rank
        self.k = k


def symbols_per_packet(field: FieldSpec, packet_bytes: int) -> int:
    return packet_bytes * _PER_BYTE[field.m]


class Generation:
    """k source payloads plus the metadata needed to undo padding.

    ``payloads`` may be None for rate-and-rank bookkeeping without payload
    arithmetic; the simulator runs in that mode, the codec tests carry real
    bytes.
    """

    __slots__ = (
        "gen_id",
        "field",
        "k",
        "symbol_size",
        "payloads",
        "payload_bytes",
        "origin_nalu",
    )

    def __init__(
        self,
        gen_id: int,
        field: FieldSpec,
        k: int,
        symbol_size: int,
        payloads: Optional[List[SymbolVector]] = None,
        payload_bytes: Optional[int] = None,
        origin_nalu=None,
    ):
        if k < 1:
            raise EmptyGenerationError("generation needs at least one packet")
        if symbol_size < 1:
            raise ValueError("symbol_size must be positive")
        if payloads is not None:
            if len(payloads) != k:
                raise ValueError(f"expected {k} payloads, got {len(payloads)}")
            for p in payloads:
                if p.field != field:
                    raise ValueError("payload field does not match generation")
                if len(p) != symbol_size:
                    raise ValueError("payloads must all have symbol_size symbols")
        full = packed_size(field, symbol_size)
        if payload_bytes is None:
            payload_bytes = k * full
        if not (k - 1) * full < payload_bytes <= k * full:
            raise ValueError("payload_bytes inconsistent with k packets")
        self.gen_id = gen_id
        self.field = field
        self.k = k
        self.symbol_size = symbol_size
        self.payloads = payloads
        self.payload_bytes = payload_bytes
        self.origin_nalu = origin_nalu

    @classmethod
    def from_block(
        cls,
        gen_id: int,
        field: FieldSpec,
        data: bytes,
        packet_bytes: int,
        origin_nalu=None,
    ) -> "Generation":
        """Split a byte block into one generation, zero-padding the tail."""
        if not data:
            raise EmptyGenerationError("no payload data")
        k = -(-len(data) // packet_bytes)
        size = symbols_per_packet(field, packet_bytes)
        payloads = []
        for i in range(k):
            chunk = data[i * packet_bytes : (i + 1) * packet_bytes]
            chunk = chunk.ljust(packet_bytes, b"\x00")
            payloads.append(SymbolVector.unpack(field, chunk, size))
        return cls(gen_id, field, k, size, payloads, len(data), origin_nalu)


def split_counts(n_packets: int, k_max: int) -> List[int]:
    """Packet counts per generation for a block of n_packets, capped at k_max."""
    if n_packets < 1:
        raise EmptyGenerationError("no packets to split")
    counts = [k_max] * (n_packets // k_max)
    if n_packets % k_max:
        counts.append(n_packets % k_max)
    return counts


def split_block(
    first_gen_id: int,
    field: FieldSpec,
    data: bytes,
    packet_bytes: int,
    k_max: int,
    origin_nalu=None,
) -> List[Generation]:
    """Split a byte block into as many generations as the k cap requires."""
    if not data:
        raise EmptyGenerationError("no payload data")
    n_packets = -(-len(data) // packet_bytes)
    gens = []
    offset = 0
    for i, k in enumerate(split_counts(n_packets, k_max)):
        chunk = data[offset : offset + k * packet_bytes]
        gens.append(
            Generation.from_block(first_gen_id + i, field, chunk, packet_bytes, origin_nalu)
        )
        offset += k * packet_bytes
    return gens


@dataclass(frozen=True)
class CodedPacket:
    gen_id: int
    coeffs: Tuple[int, ...]
    payload: Optional[SymbolVector]
    seq: int
    attempt: int = 0


def _draw_coeffs(rng: random.Random, k: int, m: int, mode: str, emitted=None) -> Tuple[int, ...]:
    while True:
        coeffs = tuple(rng.getrandbits(m) for _ in range(k))
        if mode == "unrestricted":
            return coeffs
        if not any(coeffs):
            continue
        if emitted is None or emitted.rank >= k:
            return coeffs
        if emitted.consume_coeffs(coeffs):
            return coeffs


class Encoder:
    """Rateless packet source for one generation.

    Deterministic: the emission sequence is a pure function of
    (seed, gen_id, mode), so two encoders built alike emit identical
    packets regardless of when or in what bursts they are asked.
    """

    def __init__(self, gen: Generation, seed: int, mode: str = "guarded"):
        if mode not in ("guarded", "nonzero", "unrestricted"):
            raise ValueError(f"unknown draw mode {mode!r}")
        self.gen = gen
        self.seed = seed
        self.mode = mode
        self.seq = 0
        self._rng = random.Random(derive_seed(seed, "enc", gen.gen_id))
        self._emitted = DecoderState(gen, track_payloads=False) if mode == "guarded" else None
        if gen.payloads is not None:
            self._matrix = np.stack([p.symbols for p in gen.payloads])
        else:
            self._matrix = None

    def next_coeffs(self) -> Tuple[int, ...]:
        """Coefficient vector of the next emission; advances the sequence."""
        coeffs = _draw_coeffs(
            self._rng, self.gen.k, self.gen.field.m, self.mode, self._emitted
        )
        self.seq += 1
        return coeffs

    def coeff_burst(self, n: int) -> List[Tuple[int, ...]]:
        """n coefficient vectors without packet objects (bookkeeping path)."""
        return [self.next_coeffs() for _ in range(n)]

    def next_packet(self, attempt: int = 0) -> CodedPacket:
        seq = self.seq
        coeffs = self.next_coeffs()
        payload = None
        if self._matrix is not None:
            field = self.gen.field
            out = np.zeros(self.gen.symbol_size, dtype=np.uint8)
            mul = field.mul_table
            for c, row in zip(coeffs, self._matrix):
                if c:
                    np.bitwise_xor(out, mul[c].take(row), out=out)
            payload = SymbolVector(field, out)
        return CodedPacket(self.gen.gen_id, coeffs, payload, seq, attempt)

    def burst(self, n: int, attempt: int = 0) -> List[CodedPacket]:
        return [self.next_packet(attempt) for _ in range(n)]


def encode(gen: Generation, seed: int, seq: int, mode: str = "nonzero") -> CodedPacket:
    """One-shot emission with a per-call stream keyed by (seed, gen_id, seq).

    Stateless convenience for tests and tooling; guarded mode is stateful
    and needs an Encoder instance. The per-call derivation means this does
    not replay an Encoder's internal sequence.
    """
    if mode == "guarded":
        raise ValueError("guarded draws are stateful; use Encoder")
    rng = random.Random(derive_seed(seed, "pkt", gen.gen_id, seq))
    coeffs = _draw_coeffs(rng, gen.k, gen.field.m, mode)
    payload = None
    if gen.payloads is not None:
        field = gen.field
        out = np.zeros(gen.symbol_size, dtype=np.uint8)
        mul = field.mul_table
        for c, row in zip(coeffs, (p.symbols for p in gen.payloads)):
            if c:
                np.bitwise_xor(out, mul[c].take(row), out=out)
        payload = SymbolVector(field, out)
    return CodedPacket(gen.gen_id, coeffs, payload, seq, 0)


class DecoderState:
    """Incremental Gaussian elimination for one generation.

    Pivot rows are kept normalized (leading coefficient 1). Payload symbols,
    when tracked, are fused onto the coefficient rows so each elimination is
    a single table-lookup-and-xor pass. ``row_ops`` counts row operations
    for the cost assertion: each consume performs at most rank+1 of them.
    """

    __slots__ = ("gen", "k", "field", "rank", "row_ops", "last_consume_row_ops",
                 "_rows", "_numpy", "_width")

    def __init__(self, gen: Generation, track_payloads: Optional[bool] = None):
        if track_payloads is None:
            track_payloads = gen.payloads is not None
        if track_payloads and gen.payloads is None:
            raise ValueError("generation carries no payloads to track")
        self.gen = gen
        self.k = gen.k
        self.field = gen.field
        self.rank = 0
        self.row_ops = 0
        self.last_consume_row_ops = 0
        self._rows = {}
        self._numpy = track_payloads
        self._width = gen.k + (gen.symbol_size if track_payloads else 0)

    @property
    def delivered(self) -> bool:
        return self.rank == self.k

    def consume(self, packet: CodedPacket) -> int:
        if packet.gen_id != self.gen.gen_id:
            raise GenerationMismatchError(
                f"packet for generation {packet.gen_id}, decoder holds {self.gen.gen_id}"
            )
        if len(packet.coeffs) != self.k:
            raise LengthMismatchError(
                f"{len(packet.coeffs)} coefficients for k={self.k}"
            )
        if self._numpy:
            if packet.payload is None:
                raise LengthMismatchError("decoder tracks payloads, packet has none")
            if packet.payload.field != self.field:
                raise GenerationMismatchError("payload field mismatch")
            if len(packet.payload) != self.gen.symbol_size:
                raise LengthMismatchError(
                    f"payload of {len(packet.payload)} symbols, expected {self.gen.symbol_size}"
                )
            row = np.empty(self._width, dtype=np.uint8)
            row[: self.k] = packet.coeffs
            row[self.k :] = packet.payload.symbols
            return self._consume_numpy(row)
        return self.consume_coeffs(packet.coeffs)

    def consume_coeffs(self, coeffs: Sequence[int]) -> int:
        """Coefficient-only fast path (list rows, no numpy round trips)."""
        if len(coeffs) != self.k:
            raise LengthMismatchError(f"{len(coeffs)} coefficients for k={self.k}")
        if self._numpy:
            raise ValueError("decoder tracks payloads; feed full packets")
        ops = 0
        mul = self.field.mul_table
        v = list(coeffs)
        rows = self._rows
        for col in range(self.k):
            c = v[col]
            if not c:
                continue
            pivot = rows.get(col)
            if pivot is None:
                if c != 1:
                    inv_row = mul[gf_inv(self.field, c)]
                    v = [int(inv_row[x]) for x in v]
                    ops += 1
                rows[col] = v
                self.rank += 1
                self.row_ops += ops
                self.last_consume_row_ops = ops
                return 1
            crow = mul[c]
            v = [x ^ int(crow[y]) for x, y in zip(v, pivot)]
            ops += 1
        self.row_ops += ops
        self.last_consume_row_ops = ops
        return 0

    def _consume_numpy(self, row: np.ndarray) -> int:
        ops = 0
        mul = self.field.mul_table
        rows = self._rows
        k = self.k
        for col in range(k):
            c = int(row[col])
            if not c:
                continue
            pivot = rows.get(col)
            if pivot is None:
                if c != 1:
                    np.take(mul[gf_inv(self.field, c)], row, out=row)
                    ops += 1
                rows[col] = row
                self.rank += 1
                self.row_ops += ops
                self.last_consume_row_ops = ops
                return 1
            np.bitwise_xor(row, mul[c].take(pivot), out=row)
            ops += 1
        self.row_ops += ops
        self.last_consume_row_ops = ops
        return 0

    def extract(self) -> List[bytes]:
        """Back-substitute and return the k source payloads, padding removed."""
        if self.rank < self.k:
            raise RankDeficientError(self.rank, self.k)
        if not self._numpy:
            raise ValueError("decoder holds no payload symbols")
        mul = self.field.mul_table
        k = self.k
        rows = self._rows
        for col in range(k - 1, 0, -1):
            upper = rows[col]
            for target_col in range(col):
                row = rows[target_col]
                c = int(row[col])
                if c:
                    np.bitwise_xor(row, mul[c].take(upper), out=row)
                    row[col] = 0
        field = self.field
        full = packed_size(field, self.gen.symbol_size)
        out = []
        for i in range(k):
            sym = SymbolVector(field, rows[i][k:])
            out.append(sym.pack())
        tail = self.gen.payload_bytes - (k - 1) * full
        out[-1] = out[-1][:tail]
        return out


def serialize(packet: CodedPacket, field: FieldSpec) -> bytes:
    """Wire form: gen_id(4) | k(2) | seq(2) | attempt(1) | coeffs | payload."""
    if packet.payload is None:
        raise ValueError("cannot serialize a packet without payload symbols")
    coeffs = SymbolVector(field, packet.coeffs)
    return b"".join(
        (
            WIRE_HEADER.pack(packet.gen_id, len(packet.coeffs), packet.seq, packet.attempt),
            coeffs.pack(),
            packet.payload.pack(),
        )
    )


def deserialize(
    data: bytes, field: FieldSpec, symbol_size: Optional[int] = None
) -> CodedPacket:
    """Inverse of :func:`serialize`.

    symbol_size may be omitted when every byte of the payload section is
    fully occupied (always true for byte-aligned packet sizes); pass it
    explicitly for odd symbol counts in sub-byte fields.
    """
    if len(data) < WIRE_HEADER.size:
        raise LengthMismatchError("short packet header")
    gen_id, k, seq, attempt = WIRE_HEADER.unpack_from(data)
    coeff_bytes = packed_size(field, k)
    body = data[WIRE_HEADER.size :]
    if len(body) < coeff_bytes:
        raise LengthMismatchError("truncated coefficient block")
    coeffs = SymbolVector.unpack(field, body[:coeff_bytes], k)
    payload_raw = body[coeff_bytes:]
    if symbol_size is None:
        symbol_size = len(payload_raw) * _PER_BYTE[field.m]
    payload = SymbolVector.unpack(field, payload_raw, symbol_size)
    return CodedPacket(gen_id, tuple(int(c) for c in coeffs.symbols), payload, seq, attempt)


def wire_size(field: FieldSpec, k: int, payload_bytes: int) -> int:
    """Serialized size of a coded packet carrying payload_bytes of data."""
    return WIRE_HEADER.size + packed_size(field, k) + payload_bytes


def full_rank_probability(k: int, q: int, n: int) -> float:
    """Probability that n i.i.d. uniform coefficient vectors span GF(q)^k.

    Models unrestricted draws (the all-zero vector included), matching the
    encoder's "unrestricted" mode:  prod_{i=0..k-1} (1 - q^-(n-i)).
    """
    if k < 1:
        raise ValueError("k must be positive")
    if q < 2:
        raise ValueError("q must be at least 2")
    if n < k:
        raise ValueError(f"n={n} cannot reach rank k={k}")
    p = 1.0
    for i in range(k):
        p *= 1.0 - float(q) ** -(n - i)
    return p
