import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from snn_dbscan import DbscanParams, build_flat, build_systolic, deserialize, serialize, validate
from snn_dbscan.grid import FormatError
from snn_dbscan.network import read_network, write_network
from snn_dbscan.partition import build_partial, plan_partitions

from helpers import tiny


@pytest.fixture(scope="module")
def flat10():
    return build_flat(DbscanParams(10, 10, 2, 4))


def test_flat_10x10_valid_with_fan_out_26(flat10):
    rep = validate(flat10)
    assert rep.ok, rep.errors
    assert rep.max_fan_out == 26
    assert rep.max_delay == 4 and rep.max_threshold == 3


def test_systolic_valid():
    rep = validate(build_systolic(10, 2, 4))
    assert rep.ok, rep.errors
    assert rep.max_delay == 4


def _with(net, **arrays):
    fields = dict(threshold=net.threshold, kind=net.kind, collection=net.collection, row=net.row,
                  pos=net.pos, src=net.src, dst=net.dst, weight=net.weight, delay=net.delay)
    fields.update(arrays)
    return type(net)(net.meta, **fields)


def test_delay_5_invalid(flat10):
    delay = flat10.delay.copy()
    delay[0] = 5
    assert not validate(_with(flat10, delay=delay)).ok


def test_weight_0_invalid(flat10):
    weight = flat10.weight.copy()
    weight[7] = 0
    rep = validate(_with(flat10, weight=weight))
    assert not rep.ok
    assert any("weight" in e for e in rep.errors)


def test_threshold_above_bound_invalid(flat10):
    thr = flat10.threshold.copy()
    thr[0] = 4
    assert not validate(_with(flat10, threshold=thr)).ok


def test_input_flag_on_hidden_collection_invalid(flat10):
    kind = flat10.kind.copy()
    kind[flat10.find("Core", 0, 0)] = 1
    assert not validate(_with(flat10, kind=kind)).ok


def test_find_roles(flat10):
    i = flat10.find("Border", 3, 4)
    n = flat10.neuron(i)
    assert n.role.collection == "Border" and (n.role.r, n.role.pos) == (3, 4)
    assert n.is_output and n.leak_mode == "full"
    with pytest.raises(KeyError):
        flat10.find("Border", 10, 0)


class TestSerialization:
    def test_round_trip_10x10(self, flat10):
        back = deserialize(serialize(flat10))
        assert back == flat10
        assert (back.n_neurons, back.n_synapses) == (500, 4172)

    def test_round_trip_is_textual_identity(self, flat10):
        text = serialize(flat10)
        assert serialize(deserialize(text)) == text

    def test_stream_io(self):
        net = build_systolic(7, 2, 3, "rows")
        buf = io.StringIO()
        write_network(net, buf)
        buf.seek(0)
        assert read_network(buf) == net

    def test_partial_round_trip_keeps_region(self):
        spec = plan_partitions(DbscanParams(20, 9, 2, 4), 6, policy="retain")[1]
        net = build_partial(spec, 4)
        back = deserialize(serialize(net))
        assert back == net and back.meta.region == net.meta.region

    @given(rows=st.integers(1, 6), cols=st.integers(1, 6), eps=st.integers(1, 2),
           min_pts=st.integers(1, 9), systolic=st.booleans())
    @settings(max_examples=40, deadline=None)
    def test_round_trip_property(self, rows, cols, eps, min_pts, systolic):
        if systolic:
            net = build_systolic(rows, eps, min_pts)
        else:
            net = build_flat(DbscanParams(rows, cols, eps, min_pts))
        assert deserialize(serialize(net)) == net

    def test_undefined_endpoint(self):
        text = serialize(tiny([(1, 1, 0), (1, 2, 2)], [(0, 1, 1, 1)]))
        bad = text.replace("S 0 1 1 1", "S 0 9 1 1")
        with pytest.raises(FormatError, match="undefined"):
            deserialize(bad)

    def test_errors_carry_line_numbers(self):
        text = serialize(tiny([(1, 1, 0), (1, 2, 2)], [(0, 1, 1, 1)]))
        lines = text.splitlines()
        k = next(i for i, line in enumerate(lines) if line.startswith("S "))
        lines[k] = "S 0 1 one 1"
        with pytest.raises(FormatError, match=f"line {k + 1}"):
            deserialize("\n".join(lines))

    def test_bad_header(self):
        with pytest.raises(FormatError):
            deserialize("not a network\n")

    def test_comments_ignored(self):
        net = tiny([(1, 1, 0), (1, 2, 2)], [(0, 1, 1, 1)])
        text = serialize(net).replace("\nS", "\n# a comment\nS", 1)
        assert deserialize(text) == net
