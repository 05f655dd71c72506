import pytest
from hypothesis import given
from hypothesis import strategies as st

from tscmac.metrics import AccountingError, e2e_delay, jain_fairness, loss_rate, mean_ci, record_from_trace, summarize


def test_jain_examples():
    assert jain_fairness([5, 5, 5]) == 1.0
    assert jain_fairness([1, 0, 0]) == pytest.approx(1 / 3)
    assert jain_fairness([0, 0]) is None
    with pytest.raises(ValueError):
        jain_fairness([])
    with pytest.raises(ValueError):
        jain_fairness([1, -1])


pos = st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=20)


@given(pos, st.floats(1e-3, 1e3))
def test_jain_identities(xs, c):
    f = jain_fairness(xs)
    if f is None:
        assert all(x == 0 for x in xs)
        return
    n = len(xs)
    assert 1 / n - 1e-12 <= f <= 1 + 1e-12
    scaled = [c * x for x in xs]
    if any(scaled):  # c * x can underflow to all zeros
        assert jain_fairness(scaled) == pytest.approx(f, rel=1e-9)
    if len(set(xs)) == 1:
        assert f == pytest.approx(1.0)


@given(st.floats(1e-6, 1e6), st.integers(1, 30))
def test_jain_constant_vector(x, n):
    assert jain_fairness([x] * n) == pytest.approx(1.0, rel=1e-12)


def test_loss_examples():
    assert loss_rate(100, 100) == 0.0
    assert loss_rate(100, 60) == 0.4
    assert loss_rate(0, 0) == 0.0
    with pytest.raises(AccountingError):
        loss_rate(10, 11)


def test_delay_examples():
    assert e2e_delay([(0.1, 0.35)]) == pytest.approx(0.25)
    assert e2e_delay([]) is None
    one = e2e_delay([(0.0, 0.002)])
    two = e2e_delay([(0.0, 0.002 + 0.002)])
    assert two > one


def test_mean_ci():
    m, h = mean_ci([1.0, 2.0, 3.0])
    assert m == 2.0 and h == pytest.approx(1.96 * 1.0 / 3 ** 0.5)
    assert mean_ci([4.0]) == (4.0, 0.0)


def test_summarize_conservation_and_throughput():
    dels = [(0, 0, 0.0, 0.1, 1, 100), (0, 1, 0.0, 0.2, 2, 100)]
    r = summarize(2.0, 2, 3, dels, 1, 0, 5.0)
    assert r.aggregated_throughput * 2.0 == 1600
    assert r.per_channel_throughput == [400.0, 400.0] and r.fairness_index == 1.0
    assert r.packet_loss_rate == pytest.approx(1 / 3)
    with pytest.raises(AccountingError):
        summarize(2.0, 2, 5, dels, 1, 0, 5.0)


def test_zero_traffic_record():
    r = summarize(1.0, 3, 0, [], 0, 0, 0.0)
    assert r.aggregated_throughput == 0 and r.packet_loss_rate == 0 and r.mean_end_to_end_delay is None
    assert r.fairness_index is None and r.cna_final == 0.0


def test_record_from_trace_minimal():
    lines = [
        "t=0.0 node=0 radio=1 ev=gen ch=0 detail=flow=0,seq=0,bytes=100",
        "t=0.5 node=1 radio=1 ev=deliver ch=1 detail=flow=0,seq=0,gen=0.0,bytes=100",
        "t=1.0 node=-1 radio=0 ev=cna ch=0 detail=epoch=0,len=0.02",
        "t=1.0 node=-1 radio=0 ev=energy ch=0 detail=joules=2.5",
        "t=1.0 node=-1 radio=0 ev=end ch=0 detail=duration=1.0,channels=1,in_flight=0,drops=0",
    ]
    r = record_from_trace(lines)
    assert r.aggregated_throughput == 800 and r.mean_end_to_end_delay == 0.5
    assert r.total_energy == 2.5 and r.cna_final == 0.02
    with pytest.raises(ValueError):
        record_from_trace(lines[:-1])
