"""Codec behaviour: generations, draw modes, incremental decoding, wire form."""

from __future__ import annotations

import random

import pytest

from mcnc.gf import FieldSpec, LengthMismatchError
from mcnc.rlnc import (
    CodedPacket,
    DecoderState,
    EmptyGenerationError,
    Encoder,
    Generation,
    GenerationMismatchError,
    RankDeficientError,
    WIRE_HEADER,
    deserialize,
    encode,
    full_rank_probability,
    serialize,
    split_block,
    split_counts,
    symbols_per_packet,
    wire_size,
)

GF16 = FieldSpec(4)
GF256 = FieldSpec(8)


def _random_generation(rng, field, k, packet_bytes=32, gen_id=0):
    data = rng.randbytes(k * packet_bytes - rng.randrange(packet_bytes))
    return Generation.from_block(gen_id, field, data, packet_bytes), data


# -- generation construction -------------------------------------------


def test_from_block_pads_and_remembers_length():
    gen = Generation.from_block(3, GF256, b"\x01" * 70, 32)
    assert gen.k == 3
    assert gen.payload_bytes == 70
    assert len(gen.payloads[2]) == 32
    assert bytes(gen.payloads[2].symbols[6:]) == b"\x00" * 26


def test_empty_generation_rejected():
    with pytest.raises(EmptyGenerationError):
        Generation.from_block(0, GF256, b"", 32)
    with pytest.raises(EmptyGenerationError):
        split_counts(0, 40)


def test_split_counts():
    assert split_counts(103, 40) == [40, 40, 23]
    assert split_counts(40, 40) == [40]
    assert split_counts(1, 40) == [1]
    assert split_counts(80, 40) == [40, 40]


def test_split_block_covers_data_exactly():
    rng = random.Random(5)
    data = rng.randbytes(103 * 10 - 4)
    gens = split_block(100, GF256, data, 10, 40)
    assert [g.k for g in gens] == [40, 40, 23]
    assert [g.gen_id for g in gens] == [100, 101, 102]
    assert sum(g.payload_bytes for g in gens) == len(data)


def test_symbols_per_packet():
    assert symbols_per_packet(GF256, 1000) == 1000
    assert symbols_per_packet(GF16, 1000) == 2000
    assert symbols_per_packet(FieldSpec(1), 125) == 1000


# -- encoding ----------------------------------------------------------


def test_encoder_is_deterministic():
    rng = random.Random(11)
    gen, _ = _random_generation(rng, GF16, 5)
    a = Encoder(gen, seed=42, mode="guarded")
    b = Encoder(gen, seed=42, mode="guarded")
    pk_a = a.burst(12)
    # asking in different burst sizes must not change the emission sequence
    pk_b = b.burst(5) + b.burst(7)
    assert [p.coeffs for p in pk_a] == [p.coeffs for p in pk_b]
    c = Encoder(gen, seed=43, mode="guarded")
    assert [p.coeffs for p in c.burst(12)] != [p.coeffs for p in pk_a]


def test_guarded_prefix_is_linearly_independent():
    rng = random.Random(3)
    for m, k in ((4, 1), (4, 5), (4, 8), (8, 6), (1, 8)):
        field = FieldSpec(m)
        gen, _ = _random_generation(rng, field, k)
        enc = Encoder(gen, seed=rng.randrange(2**32), mode="guarded")
        dec = DecoderState(gen, track_payloads=False)
        for coeffs in enc.coeff_burst(k):
            assert dec.consume_coeffs(coeffs) == 1
        assert dec.delivered


def test_nonzero_mode_never_emits_zero_vector():
    rng = random.Random(9)
    gen, _ = _random_generation(rng, GF16, 2)
    enc = Encoder(gen, seed=1, mode="nonzero")
    for coeffs in enc.coeff_burst(500):
        assert any(coeffs)


def test_unknown_mode_rejected():
    rng = random.Random(1)
    gen, _ = _random_generation(rng, GF16, 2)
    with pytest.raises(ValueError):
        Encoder(gen, seed=0, mode="systematic")


def test_one_shot_encode_keyed_by_seq():
    rng = random.Random(13)
    gen, _ = _random_generation(rng, GF256, 4)
    a = encode(gen, seed=5, seq=0)
    b = encode(gen, seed=5, seq=0)
    c = encode(gen, seed=5, seq=1)
    assert a.coeffs == b.coeffs and a.payload == b.payload
    assert c.coeffs != a.coeffs or c.payload != a.payload
    with pytest.raises(ValueError):
        encode(gen, seed=5, seq=0, mode="guarded")


# -- decoding ----------------------------------------------------------


def test_round_trip_with_losses():
    rng = random.Random(21)
    for m, k in ((4, 7), (8, 5), (1, 6)):
        field = FieldSpec(m)
        gen, data = _random_generation(rng, field, k)
        enc = Encoder(gen, seed=17, mode="guarded")
        dec = DecoderState(gen)
        while not dec.delivered:
            pkt = enc.next_packet()
            if rng.random() < 0.3:
                continue  # lost in transit
            dec.consume(pkt)
        assert b"".join(dec.extract()) == data


def test_duplicate_packet_is_not_innovative():
    rng = random.Random(31)
    gen, _ = _random_generation(rng, GF16, 4)
    enc = Encoder(gen, seed=2)
    dec = DecoderState(gen)
    pkt = enc.next_packet()
    assert dec.consume(pkt) == 1
    assert dec.consume(pkt) == 0
    assert dec.rank == 1


def test_scaled_copy_is_not_innovative():
    gen = Generation(0, GF16, 2, 4)
    dec = DecoderState(gen, track_payloads=False)
    assert dec.consume_coeffs((1, 2)) == 1
    # 3 * (1, 2) = (3, 6) over GF(16)
    assert dec.consume_coeffs((3, 6)) == 0
    assert dec.consume_coeffs((0, 1)) == 1
    assert dec.delivered


def test_generation_mismatch_rejected():
    rng = random.Random(41)
    gen_a, _ = _random_generation(rng, GF16, 3, gen_id=1)
    gen_b, _ = _random_generation(rng, GF16, 3, gen_id=2)
    dec = DecoderState(gen_a)
    with pytest.raises(GenerationMismatchError):
        dec.consume(Encoder(gen_b, seed=1).next_packet())


def test_extract_requires_full_rank():
    rng = random.Random(43)
    gen, _ = _random_generation(rng, GF16, 4)
    dec = DecoderState(gen)
    dec.consume(Encoder(gen, seed=1).next_packet())
    with pytest.raises(RankDeficientError) as err:
        dec.extract()
    assert err.value.rank == 1 and err.value.k == 4


def test_consume_cost_bounded_by_rank():
    # each consume performs at most rank+1 row operations
    rng = random.Random(47)
    for _ in range(20):
        k = rng.randrange(2, 12)
        gen = Generation(0, GF16, k, 8)
        enc = Encoder(gen, seed=rng.randrange(2**32), mode="unrestricted")
        dec = DecoderState(gen, track_payloads=False)
        while not dec.delivered:
            rank_before = dec.rank
            dec.consume_coeffs(enc.next_coeffs())
            assert dec.last_consume_row_ops <= rank_before + 1


def test_coeff_only_decoder_refuses_payload_work():
    gen = Generation(0, GF16, 2, 4)
    dec = DecoderState(gen, track_payloads=False)
    dec.consume_coeffs((1, 0))
    dec.consume_coeffs((0, 1))
    assert dec.delivered
    with pytest.raises(ValueError):
        dec.extract()  # full rank, but no payload symbols held
    with pytest.raises(ValueError):
        DecoderState(gen, track_payloads=True)  # no payloads to track


# -- dependence statistics ---------------------------------------------


def test_tail_dependence_matches_span_ratio():
    # after the guarded prefix the encoder falls back to nonzero draws; a
    # draw is dependent on an r-dimensional receive span with probability
    # (q^r - 1) / (q^k - 1). The simulator's rank shortcut assumes this.
    rng = random.Random(53)
    k, q, r = 2, 16, 1
    expected = (q**r - 1) / (q**k - 1)
    trials = 20_000
    dependent = 0
    gen = Generation(0, GF16, k, 4)
    for i in range(trials):
        enc = Encoder(gen, seed=i, mode="guarded")
        prefix = enc.coeff_burst(k)  # consume the guarded prefix
        dec = DecoderState(gen, track_payloads=False)
        dec.consume_coeffs(prefix[0])  # receiver holds rank r = 1
        if dec.consume_coeffs(enc.next_coeffs()) == 0:
            dependent += 1
    se = (expected * (1 - expected) / trials) ** 0.5
    assert abs(dependent / trials - expected) < 4 * se + 1e-12


# -- wire format -------------------------------------------------------


def test_serialize_round_trip():
    rng = random.Random(61)
    for m, k, packet_bytes in ((8, 5, 40), (4, 5, 40), (4, 8, 33), (1, 8, 16)):
        field = FieldSpec(m)
        gen, _ = _random_generation(rng, field, k, packet_bytes, gen_id=77)
        pkt = Encoder(gen, seed=3).next_packet(attempt=2)
        raw = serialize(pkt, field)
        assert len(raw) == wire_size(field, k, packet_bytes)
        back = deserialize(raw, field, symbol_size=gen.symbol_size)
        assert back.gen_id == 77 and back.seq == pkt.seq and back.attempt == 2
        assert back.coeffs == pkt.coeffs
        assert back.payload == pkt.payload


def test_wire_header_layout():
    assert WIRE_HEADER.size == 9
    gen = Generation.from_block(0x01020304, GF256, b"\xaa" * 8, 8)
    raw = serialize(Encoder(gen, seed=0).next_packet(), GF256)
    assert raw[:4] == b"\x01\x02\x03\x04"  # gen_id, big endian
    assert raw[4:6] == b"\x00\x01"  # k
    assert raw[6:8] == b"\x00\x00"  # seq


def test_deserialize_rejects_truncation():
    gen = Generation.from_block(1, GF256, b"\xbb" * 16, 8)
    raw = serialize(Encoder(gen, seed=0).next_packet(), GF256)
    with pytest.raises(LengthMismatchError):
        deserialize(raw[:4], GF256)
    with pytest.raises(LengthMismatchError):
        deserialize(raw[: WIRE_HEADER.size], GF256)


def test_serialize_needs_payload():
    with pytest.raises(ValueError):
        serialize(CodedPacket(0, (1, 0), None, 0), GF16)


# -- full rank probability ----------------------------------------------


def test_full_rank_probability_values():
    assert full_rank_probability(1, 2, 1) == 0.5
    assert full_rank_probability(2, 2, 2) == pytest.approx(0.375)
    # large n drives the probability to one
    assert full_rank_probability(4, 16, 40) == pytest.approx(1.0, abs=1e-9)


def test_full_rank_probability_rejects_bad_arguments():
    with pytest.raises(ValueError):
        full_rank_probability(0, 2, 2)
    with pytest.raises(ValueError):
        full_rank_probability(2, 1, 2)
    with pytest.raises(ValueError):
        full_rank_probability(4, 2, 3)
