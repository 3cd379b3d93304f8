import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from snn_dbscan.network import BORDER, HIDDEN, INPUT, OUTPUT, I
from snn_dbscan.simulator import (ScheduleError, SpikeSchedule, available_backends, simulate)

from helpers import random_network, tiny

OUT = (1, OUTPUT, BORDER)


def fires(net, entries, horizon, backend, record="outputs"):
    return simulate(net, SpikeSchedule.from_entries(entries), horizon, record=record,
                    backend=backend).entries


def test_forced_output(backend):
    net = tiny([(1, INPUT, I)], [])
    net_out = tiny([(1, INPUT, I), OUT], [])
    assert fires(net, [(0, 0)], 1, backend, "all") == [(0, 0)]
    assert fires(net_out, [(0, 0)], 1, backend) == []


def test_delay(backend):
    net = tiny([(1, INPUT, I), OUT], [(0, 1, 1, 3)])
    assert fires(net, [(0, 0)], 5, backend) == [(3, 1)]


def test_full_leak_erases_carryover(backend):
    net = tiny([(1, INPUT, I), (2, OUTPUT, BORDER)], [(0, 1, 1, 1), (0, 1, 1, 2)])
    # charges land at t=1 and t=2 from a single fire
    assert fires(net, [(0, 0)], 6, backend) == []


def test_same_step_summation(backend):
    net = tiny([(1, INPUT, I), (1, INPUT, I), (1, INPUT, I), (2, OUTPUT, BORDER)],
               [(0, 3, 1, 1), (1, 3, 1, 1), (2, 3, -1, 1)])
    assert fires(net, [(0, 0), (0, 1), (0, 2)], 3, backend) == []
    assert fires(net, [(0, 0), (0, 1)], 3, backend) == [(1, 3)]


def test_forced_fire_resets_and_fires_once(backend):
    # an input forced while also above threshold fires once and emits once
    net = tiny([(1, INPUT, I), (1, INPUT, I), (2, OUTPUT, BORDER)],
               [(0, 1, 1, 1), (1, 2, 1, 1), (0, 2, 1, 2)])
    raster = simulate(net, SpikeSchedule.from_entries([(0, 0), (1, 1)]), 4, record="all",
                      backend=backend)
    assert raster.entries == [(0, 0), (1, 1), (2, 2)]
    assert raster.delivered == 3


def test_negative_potential_does_not_carry(backend):
    net = tiny([(1, INPUT, I), (1, INPUT, I), (1, OUTPUT, BORDER)], [(0, 2, -1, 1), (1, 2, 1, 2)])
    assert fires(net, [(0, 0), (0, 1)], 4, backend) == [(2, 2)]


def test_fires_after_horizon_are_dropped(backend):
    net = tiny([(1, INPUT, I), OUT], [(0, 1, 1, 4)])
    assert fires(net, [(0, 0)], 4, backend) == []
    assert fires(net, [(0, 0)], 5, backend) == [(4, 1)]


class TestScheduleErrors:
    net = tiny([(1, INPUT, I), (1, HIDDEN, BORDER)], [])

    def test_entry_beyond_horizon(self):
        with pytest.raises(ScheduleError):
            simulate(self.net, SpikeSchedule.from_entries([(3, 0)]), 3)

    def test_horizon_zero_non_empty(self):
        with pytest.raises(ScheduleError):
            simulate(self.net, SpikeSchedule.from_entries([(0, 0)]), 0)

    def test_horizon_zero_empty(self):
        assert len(simulate(self.net, SpikeSchedule.empty(), 0)) == 0

    def test_negative_time(self):
        with pytest.raises(ScheduleError):
            simulate(self.net, SpikeSchedule.from_entries([(-1, 0)]), 3)

    def test_forcing_non_input(self):
        with pytest.raises(ScheduleError, match="non-input"):
            simulate(self.net, SpikeSchedule.from_entries([(0, 1)]), 3)

    def test_unknown_neuron(self):
        with pytest.raises(ScheduleError):
            simulate(self.net, SpikeSchedule.from_entries([(0, 5)]), 3)


def test_schedule_is_sorted_and_comparable():
    a = SpikeSchedule.from_entries([(2, 1), (0, 3), (0, 1)])
    assert a.entries == [(0, 1), (0, 3), (2, 1)]
    assert a == SpikeSchedule.concat([SpikeSchedule.from_entries([(0, 3)]),
                                      SpikeSchedule.from_entries([(2, 1), (0, 1)])])


@st.composite
def net_and_schedule(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    net = random_network(rng, n=int(rng.integers(3, 30)), m=int(rng.integers(0, 120)))
    horizon = draw(st.integers(1, 20))
    entries = [(int(rng.integers(horizon)), int(rng.integers(3)))
               for _ in range(int(rng.integers(0, 15)))]
    return net, SpikeSchedule.from_entries(entries), horizon


@given(net_and_schedule())
@settings(max_examples=200, deadline=None)
def test_determinism(case):
    net, schedule, horizon = case
    a = simulate(net, schedule, horizon, record="all")
    b = simulate(net, schedule, horizon, record="all")
    assert a == b and a.delivered == b.delivered


@pytest.mark.skipif(len(available_backends()) < 2, reason="compiled kernel not built")
@given(net_and_schedule())
@settings(max_examples=300, deadline=None)
def test_backends_agree(case):
    net, schedule, horizon = case
    results = [simulate(net, schedule, horizon, record="all", backend=b)
               for b in available_backends()]
    assert all(r == results[0] for r in results)
    assert len({(r.delivered, r.fires) for r in results}) == 1


def _reference(net, schedule, horizon):
    """Textbook step-by-step simulation with an explicit pending-charge map."""
    pending = {}
    forced = {}
    for t, i in schedule.entries:
        forced.setdefault(t, set()).add(i)
    out = []
    for t in range(horizon):
        pot = pending.pop(t, {})
        fired = set(forced.get(t, ())) | {i for i, v in pot.items() if v >= net.threshold[i]}
        for i in sorted(fired):
            out.append((t, i))
            for s in net.synapses():
                if s.src == i:
                    slot = pending.setdefault(t + s.delay, {})
                    slot[s.dst] = slot.get(s.dst, 0) + s.weight
    return out


@given(net_and_schedule())
@settings(max_examples=200, deadline=None)
def test_matches_reference(case):
    net, schedule, horizon = case
    for b in available_backends():
        assert simulate(net, schedule, horizon, record="all", backend=b).entries == \
            _reference(net, schedule, horizon)


def test_env_var_forces_fallback():
    import os
    import subprocess
    import sys
    env = dict(os.environ, SNN_DBSCAN_BACKEND="python")
    proc = subprocess.run([sys.executable, "-c",
                           "from snn_dbscan.simulator import BACKEND; print(BACKEND)"],
                          capture_output=True, text=True, env=env)
    assert proc.stdout.strip() == "python"
