"""Link model: fading process, outage gating, FIFO timing, retry ladder."""

from __future__ import annotations

import math
import random

import pytest

from mcnc.channel import LOS, LTE, MMWAVE, NLOS, LinkModel


def _los_link(**kw):
    defaults = dict(
        sojourn_s=(math.inf, math.inf),
        snr_mean_db=(20.0, -2.0),
        snr_sigma_db=0.0,
        loss_prob=(0.0, 0.0),
        rng=random.Random(1),
    )
    defaults.update(kw)
    return LinkModel(**defaults)


# -- fading and outage ---------------------------------------------------


def test_los_without_shadowing_never_sees_outage():
    link = _los_link()
    for _ in range(5000):
        link.step_state(0.01)
        assert not link.outage
        assert link.state == "LOS"
        assert link.snr_db == 20.0


def test_deep_nlos_is_permanent_outage():
    link = _los_link(initial_mode=NLOS, snr_mean_db=(20.0, -10.0))
    for _ in range(1000):
        link.step_state(0.01)
        assert link.outage
        assert link.state == "OUTAGE"
        assert link.current_rate() == 0.0


def test_outage_threshold_is_a_strict_boundary():
    link = _los_link(outage_threshold_db=-5.0)
    link.snr_db = -5.0
    assert not link.outage
    link.snr_db = -5.0000001
    assert link.outage


def test_shannon_rate_value():
    link = _los_link(bandwidth_hz=1e9, efficiency=0.6)
    expected = 0.6 * 1e9 * math.log2(1.0 + 10.0 ** (20.0 / 10.0))
    assert link.current_rate() == pytest.approx(expected)
    assert link.current_rate() == pytest.approx(3.995e9, rel=1e-3)


def test_mode_flips_follow_sojourn_times():
    rng = random.Random(5)
    link = LinkModel(
        sojourn_s=(2.0, 1.0),
        snr_sigma_db=0.0,
        loss_prob=(0.0, 0.0),
        rng=rng,
    )
    dt = 0.01
    time_in = [0.0, 0.0]
    flips = 0
    mode = link.mode
    for _ in range(400_000):
        time_in[link.mode] += dt
        link.step_state(dt)
        if link.mode != mode:
            flips += 1
            mode = link.mode
    # long-run occupancy 2:1 and mean sojourns near the configured values
    assert time_in[LOS] / time_in[NLOS] == pytest.approx(2.0, rel=0.1)
    mean_sojourn = (time_in[LOS] + time_in[NLOS]) / flips
    assert mean_sojourn == pytest.approx(1.5, rel=0.1)


def test_shadowing_marginal_and_correlation():
    link = _los_link(snr_sigma_db=4.0, shadow_corr_s=0.05)
    dt = 0.01
    xs = []
    for _ in range(40_000):
        link.step_state(dt)
        xs.append(link.snr_db)
    n = len(xs)
    mean = sum(xs) / n
    var = sum((x - mean) ** 2 for x in xs) / n
    assert mean == pytest.approx(20.0, abs=0.3)
    assert math.sqrt(var) == pytest.approx(4.0, abs=0.3)
    lag1 = sum((xs[i] - mean) * (xs[i + 1] - mean) for i in range(n - 1)) / (n * var)
    assert lag1 == pytest.approx(math.exp(-dt / 0.05), abs=0.03)


def test_zero_correlation_time_redraws_independently():
    link = _los_link(snr_sigma_db=4.0, shadow_corr_s=0.0)
    xs = []
    for _ in range(20_000):
        link.step_state(0.01)
        xs.append(link.snr_db)
    n = len(xs)
    mean = sum(xs) / n
    var = sum((x - mean) ** 2 for x in xs) / n
    lag1 = sum((xs[i] - mean) * (xs[i + 1] - mean) for i in range(n - 1)) / (n * var)
    assert abs(lag1) < 0.03


def test_mode_flip_redraws_shadowing_fresh():
    # with a huge correlation time the AR step barely moves, so any jump
    # bigger than the innovation scale must come from a mode transition
    rng = random.Random(11)
    link = LinkModel(
        sojourn_s=(0.05, 0.05),
        snr_mean_db=(50.0, -50.0),
        snr_sigma_db=1.0,
        shadow_corr_s=1e9,
        loss_prob=(0.0, 0.0),
        rng=rng,
    )
    mode = link.mode
    saw_flip = False
    for _ in range(2000):
        before = link.snr_db
        link.step_state(0.01)
        if link.mode != mode:
            saw_flip = True
            assert abs(link.snr_db - before) > 50.0
            mode = link.mode
        else:
            assert abs(link.snr_db - before) < 1.0
    assert saw_flip


def test_step_state_rejects_negative_dt():
    with pytest.raises(ValueError):
        _los_link().step_state(-0.01)


def test_rate_matrix_rows_sum_to_zero():
    link = LinkModel(sojourn_s=(2.0, 1.0), rng=random.Random(0))
    (a, b), (c, d) = link.rate_matrix()
    assert a + b == 0.0 and c + d == 0.0
    assert b == pytest.approx(0.5) and c == pytest.approx(1.0)
    lte = LinkModel.lte(rng=random.Random(0))
    assert lte.rate_matrix() == ((0.0, 0.0), (0.0, 0.0))


# -- transmission --------------------------------------------------------


def test_transmit_serializes_through_a_fifo():
    link = _los_link(bandwidth_hz=1e9, base_delay_s=0.0005)
    rate = link.current_rate()
    first = link.transmit(1000, now=0.0)
    second = link.transmit(1000, now=0.0)
    tx = 8000.0 / rate
    assert first.delivered and second.delivered
    assert first.send_start == 0.0
    assert second.send_start == pytest.approx(tx)
    assert first.deliver_at == pytest.approx(tx + 0.0005)
    assert second.deliver_at == pytest.approx(2 * tx + 0.0005)
    # after the queue drains, a later packet starts immediately
    third = link.transmit(1000, now=1.0)
    assert third.send_start == 1.0


def test_transmit_in_outage_drops_without_airtime():
    link = _los_link(initial_mode=NLOS, snr_mean_db=(20.0, -10.0))
    out = link.transmit(1000, now=0.5)
    assert not out.delivered
    assert out.attempts == 0
    assert link.busy_until == 0.0


def test_retry_ladder_and_attempt_cap():
    rng = random.Random(23)
    link = _los_link(loss_prob=(0.5, 0.5), ran_retx=True, max_attempts=3,
                     retx_delay_s=0.004, rng=rng)
    outcomes = [link.transmit(1000, now=i * 1.0) for i in range(4000)]
    delivered = [o for o in outcomes if o.delivered]
    failed = [o for o in outcomes if not o.delivered]
    assert all(1 <= o.attempts <= 3 for o in delivered)
    assert all(o.attempts == 3 for o in failed)
    # three coin flips at 1/2: failure rate near 1/8
    assert len(failed) / len(outcomes) == pytest.approx(0.125, abs=0.02)
    for o in delivered:
        base = o.send_start + 8000.0 / link.current_rate() + link.base_delay_s
        assert o.deliver_at == pytest.approx(base + (o.attempts - 1) * 0.004)


def test_single_attempt_when_retx_disabled():
    rng = random.Random(29)
    link = _los_link(loss_prob=(0.5, 0.5), ran_retx=False, rng=rng)
    outcomes = [link.transmit(100, now=i * 1.0) for i in range(2000)]
    assert all(o.attempts == 1 for o in outcomes)
    rate = sum(o.delivered for o in outcomes) / len(outcomes)
    assert rate == pytest.approx(0.5, abs=0.03)


def test_loss_probability_tracks_mode():
    rng = random.Random(31)
    link = _los_link(loss_prob=(0.0, 1.0), ran_retx=False, rng=rng)
    assert link.transmit(100, now=0.0).delivered
    link.mode = NLOS
    link.snr_db = 20.0  # stay out of outage; only the loss regime changes
    assert not link.transmit(100, now=1.0).delivered


def test_lte_factory_is_static():
    lte = LinkModel.lte(bandwidth_hz=20e6, snr_db=18.0, loss_prob=1e-3,
                        rng=random.Random(3))
    assert lte.kind == LTE
    for _ in range(200):
        lte.step_state(0.01)
        assert lte.snr_db == 18.0
        assert not lte.outage
    assert lte.current_rate() == pytest.approx(
        0.6 * 20e6 * math.log2(1.0 + 10.0 ** 1.8)
    )


def test_lte_rate_at_20db_is_80mbps():
    # 0.6 * 20e6 * log2(1 + 100) = 79.90 Mb/s
    lte = LinkModel.lte(bandwidth_hz=20e6, snr_db=20.0, loss_prob=0.0,
                        rng=random.Random(0))
    assert lte.current_rate() == pytest.approx(0.6 * 20e6 * math.log2(101.0))
    assert abs(lte.current_rate() - 79.9e6) < 0.1e6


def test_mmwave_kind_default():
    assert _los_link().kind == MMWAVE


def test_constructor_validation():
    with pytest.raises(ValueError):
        LinkModel(sojourn_s=(0.0, 1.0))
    with pytest.raises(ValueError):
        LinkModel(max_attempts=0)
