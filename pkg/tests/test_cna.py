import pytest
from hypothesis import given
from hypothesis import strategies as st

from tscmac.cna import CnaConfigError, CnaController, aaa_adjust, idle_from_busy, record_idle


def ctl(cna, **kw):
    kw = {"cna_min": 0.010, "cna_max": 0.050, "step": 0.010, "threshold_adj": 0.005, **kw}
    return CnaController(cna=cna, **kw)


def test_increase_branch():
    c = ctl(0.020)
    c.acc_idle = {1: 0.001, 2: 0.010}
    assert aaa_adjust(c) == pytest.approx(0.030)


def test_increase_clamped_at_max():
    c = ctl(0.045)
    c.acc_idle = {1: 0.0}
    assert aaa_adjust(c) == 0.050


def test_decrease_branch_literal_guard():
    c = ctl(0.020)
    c.acc_idle = {1: 0.035}  # exceeds cna + step = 30 ms
    assert aaa_adjust(c) == pytest.approx(0.010)


def test_literal_guard_unreachable_through_measurement():
    c = ctl(0.020)
    c.reset_idle([1, 2])
    for ch in (1, 2):
        record_idle(c, ch, 0.020)  # completely idle window
    assert aaa_adjust(c) == pytest.approx(0.020)


def test_amended_guard_shrinks():
    c = ctl(0.030, guard="amended", margin=0.002)
    c.reset_idle([1])
    record_idle(c, 1, 0.025)
    assert aaa_adjust(c) == pytest.approx(0.020)


def test_starts_at_min_and_validates():
    assert CnaController().cna == 0.010
    for kw in ({"step": 0}, {"cna_min": 0.06}, {"guard": "loose"}, {"cna": 0.2}, {"threshold_adj": -1}):
        with pytest.raises(CnaConfigError):
            CnaController(**kw)


def test_record_idle_examples():
    c = ctl(0.020)
    c.reset_idle([1, 2])
    record_idle(c, 1, 0.003)
    record_idle(c, 1, 0.004)
    assert c.acc_idle[1] == pytest.approx(0.007) and c.acc_idle[2] == 0.0
    with pytest.raises(ValueError):
        record_idle(c, 1, -1e-3)


def test_idle_from_busy():
    assert idle_from_busy((0.0, 0.02), []) == 0.02
    assert idle_from_busy((0.0, 0.02), [(-1, 1)]) == 0.0
    assert idle_from_busy((0.0, 0.02), [(0.001, 0.003), (0.002, 0.005), (0.010, 0.011)]) == pytest.approx(0.015)


@given(
    st.floats(0.001, 0.05),
    st.floats(0.001, 0.2),
    st.floats(0.0005, 0.02),
    st.floats(0, 0.01),
    st.sampled_from(["literal", "amended"]),
    st.lists(st.lists(st.floats(0, 0.2), min_size=1, max_size=4), min_size=1, max_size=30),
)
def test_step_bound_and_clamp(lo, span, step, thr, guard, idles):
    c = CnaController(cna_min=lo, cna_max=lo + span, step=step, threshold_adj=thr, guard=guard)
    for per_channel in idles:
        before = c.cna
        c.reset_idle(range(len(per_channel)))
        for ch, v in enumerate(per_channel):
            record_idle(c, ch, v)
            assert 0 <= c.acc_idle[ch] <= c.cna
        after = aaa_adjust(c)
        assert abs(after - before) <= step + 1e-15
        assert c.cna_min <= after <= c.cna_max


@given(st.floats(0.01, 0.05), st.floats(0.0021, 1.0))
def test_fixed_point_in_dead_band(cna, frac):
    c = CnaController(cna=cna, threshold_adj=0.002)
    idle = 0.002 + frac * (cna - 0.002)  # inside (threshold, cna]  <= cna + step
    for _ in range(5):
        c.acc_idle = {1: idle}
        aaa_adjust(c)
    assert c.cna == cna


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), max_size=10))
def test_idle_bounds(spans):
    busy = [(min(a, b), max(a, b)) for a, b in spans]
    v = idle_from_busy((0.2, 0.7), busy)
    assert 0.0 <= v <= 0.5 + 1e-12
