from fractions import Fraction

import numpy as np
import pytest

from snn_dbscan import (DbscanParams, EventFrame, Label, build_flat, build_systolic,
                        dbscan_classify, decode_flat, decode_systolic, encode_flat,
                        encode_systolic, run_pipelined_flat, run_systolic_stream, verify)
from snn_dbscan.grid import random_frame
from snn_dbscan.harness import (ContractViolation, DeploymentModel, estimate_deployment,
                                format_hz, format_seconds, parse_quantity, reuse_steps, run_flat,
                                run_systolic, solution_steps)
from snn_dbscan.simulator import SpikeRaster

P6 = DbscanParams(6, 6, 1, 4)


def raster(entries, horizon=5):
    t, i = zip(*entries) if entries else ((), ())
    return SpikeRaster(np.array(t, dtype=np.int64), np.array(i, dtype=np.int32), horizon)


class TestFlatCodec:
    net = build_flat(P6)

    def test_empty(self):
        assert len(encode_flat(EventFrame.empty(6, 6), self.net)) == 0
        labels = decode_flat(raster([]), self.net, EventFrame.empty(6, 6))
        assert (labels.codes == Label.NO_EVENT).all()

    def test_three_events_at_t0(self):
        frame = EventFrame.from_events(6, 6, [(0, 0), (2, 3), (5, 5)])
        s = encode_flat(frame, self.net, t0=7)
        assert s.entries == [(7, 0), (7, 15), (7, 35)]

    def test_schedule_size_equals_events(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            f = random_frame(6, 6, rng, float(rng.uniform()))
            assert len(encode_flat(f, self.net)) == f.count()

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            encode_flat(EventFrame.empty(5, 6), self.net)

    def test_off_contract_spike_is_violation(self):
        frame = EventFrame.from_events(6, 6, [(1, 1)])
        core = self.net.find("Core", 1, 1)
        with pytest.raises(ContractViolation):
            decode_flat(raster([(3, core)]), self.net, frame)

    def test_spike_on_no_event_cell_is_violation(self):
        frame = EventFrame.from_events(6, 6, [(1, 1)])
        with pytest.raises(ContractViolation):
            decode_flat(raster([(2, self.net.find("Core", 4, 4))]), self.net, frame)

    def test_core_and_border_is_violation(self):
        frame = EventFrame.from_events(6, 6, [(1, 1)])
        both = [(2, self.net.find("Core", 1, 1)), (4, self.net.find("Border", 1, 1))]
        with pytest.raises(ContractViolation):
            decode_flat(raster(both), self.net, frame)

    def test_random_end_to_end(self, backend):
        rng = np.random.default_rng(1)
        for _ in range(50):
            f = random_frame(6, 6, rng, 0.5)
            assert run_flat(self.net, f, backend=backend)[0] == dbscan_classify(f, P6)


class TestSystolicCodec:
    net = build_systolic(6, 1, 4)

    def test_empty(self):
        labels, r = run_systolic(self.net, EventFrame.empty(6, 6))
        assert len(r) == 0 and (labels.codes == Label.NO_EVENT).all()

    def test_transpose_then_encode(self):
        f = random_frame(6, 6, np.random.default_rng(2))
        assert encode_systolic(f, self.net, "rows") == encode_systolic(f.transpose(), self.net)

    def test_column_out_of_range_is_violation(self):
        frame = EventFrame.from_events(6, 6, [(1, 1)])
        core = self.net.find("Core", 1, 1)
        with pytest.raises(ContractViolation):
            decode_systolic(raster([(1, core)], 10), self.net, frame)

    def test_random_end_to_end(self, backend):
        rng = np.random.default_rng(3)
        for _ in range(50):
            f = random_frame(6, 6, rng, 0.5)
            assert run_systolic(self.net, f, backend=backend)[0] == dbscan_classify(f, P6)


def test_flat_equals_systolic():
    params = DbscanParams(7, 9, 2, 6)
    flat, syst = build_flat(params), build_systolic(7, 2, 6)
    rng = np.random.default_rng(4)
    for _ in range(30):
        f = random_frame(7, 9, rng, 0.45)
        assert run_flat(flat, f)[0] == run_systolic(syst, f)[0]


def test_orientation_invariance():
    params = DbscanParams(5, 8, 2, 5)
    cols_net = build_systolic(5, 2, 5)
    rows_net = build_systolic(8, 2, 5, "rows")
    rng = np.random.default_rng(5)
    for _ in range(30):
        f = random_frame(5, 8, rng, 0.4)
        by_cols = run_systolic(cols_net, f)[0]
        by_rows = run_systolic(rows_net, f.transpose(), "columns")[0]
        assert by_cols == by_rows.transpose()
        assert run_systolic(rows_net, f)[0] == by_cols == dbscan_classify(f, params)


def test_step_counts():
    assert solution_steps("flat", 346, 4) == 5 and reuse_steps("flat", 346, 4) == 1
    assert solution_steps("systolic", 10, 2) == 18 and solution_steps("systolic", 346, 4) == 358
    assert reuse_steps("systolic", 346, 4) == 354


class TestPipelining:
    params = DbscanParams(7, 7, 2, 5)

    def test_identical_frames(self):
        f = random_frame(7, 7, np.random.default_rng(6), 0.4)
        out = run_pipelined_flat([f] * 6, self.params)
        assert all(o == out[0] for o in out) and out[0] == dbscan_classify(f, self.params)

    def test_random_frames(self, backend):
        rng = np.random.default_rng(7)
        frames = [random_frame(7, 7, rng, float(rng.uniform(0.1, 0.8))) for _ in range(8)]
        out = run_pipelined_flat(frames, self.params, backend=backend)
        assert out == [dbscan_classify(f, self.params) for f in frames]

    def test_order_does_not_matter(self):
        rng = np.random.default_rng(8)
        frames = [random_frame(7, 7, rng, 0.5) for _ in range(6)]
        out = run_pipelined_flat(frames, self.params)
        perm = rng.permutation(6)
        shuffled = run_pipelined_flat([frames[k] for k in perm], self.params)
        assert [shuffled[list(perm).index(k)] for k in range(6)] == out

    def test_empty_sequence(self):
        assert run_pipelined_flat([], self.params) == []


class TestStreaming:
    params = DbscanParams(6, 9, 2, 4)

    def test_identical_frames(self):
        f = random_frame(6, 9, np.random.default_rng(9), 0.4)
        out = run_systolic_stream([f] * 4, self.params)
        assert all(o == dbscan_classify(f, self.params) for o in out)

    def test_random_frames_at_reuse_interval(self, backend):
        rng = np.random.default_rng(10)
        frames = [random_frame(6, 9, rng, float(rng.uniform(0.2, 0.8))) for _ in range(10)]
        out = run_systolic_stream(frames, self.params, backend=backend)
        assert out == [dbscan_classify(f, self.params) for f in frames]

    def test_order_does_not_matter(self):
        rng = np.random.default_rng(11)
        frames = [random_frame(6, 9, rng, 0.5) for _ in range(5)]
        out = run_systolic_stream(frames, self.params)
        rev = run_systolic_stream(frames[::-1], self.params)
        assert rev[::-1] == out

    def test_rows_orientation(self):
        rng = np.random.default_rng(12)
        frames = [random_frame(6, 9, rng, 0.5) for _ in range(4)]
        out = run_systolic_stream(frames, self.params, orientation="rows")
        assert out == [dbscan_classify(f, self.params) for f in frames]

    @pytest.mark.parametrize("eps", [1, 2, 3])
    def test_gap_below_two_eps_is_outside_contract(self, eps):
        # 2*eps - 1 idle steps: run and decode, but correctness is not asserted
        params = DbscanParams(6, 9, eps, 3)
        rng = np.random.default_rng(eps)
        frames = [random_frame(6, 9, rng, 0.5) for _ in range(4)]
        out = run_systolic_stream(frames, params, gap=2 * eps - 1)
        assert len(out) == 4

    @pytest.mark.parametrize("eps", [1, 2, 3])
    def test_gap_below_eps_mixes_frames(self, eps):
        # last column of one frame and first column of the next end up eps apart
        params = DbscanParams(3, 5, eps, 2)
        a = EventFrame.from_events(3, 5, [(1, 4)])
        b = EventFrame.from_events(3, 5, [(1, 0)])
        out = run_systolic_stream([a, b], params, gap=eps - 1)
        assert out[0][1, 4] is Label.CORE and out[1][1, 0] is Label.CORE
        assert dbscan_classify(a, params)[1, 4] is Label.NOISE
        ok = run_systolic_stream([a, b], params)
        assert ok == [dbscan_classify(a, params), dbscan_classify(b, params)]


class TestVerify:
    def test_pass(self):
        rep = verify("systolic", DbscanParams(5, 5, 1, 4), "random", n=30, seed=1)
        assert rep.passed and rep.frames == 30
        assert rep.summary_line() == "PASS systolic 5 5 1 4 30 0"

    def test_fault_is_detected(self):
        rep = verify("flat", DbscanParams(3, 3, 1, 2), "exhaustive", fault=True)
        assert not rep.passed and rep.mismatches
        assert rep.summary_line().startswith("FAIL")

    def test_exhaustive_too_large(self):
        with pytest.raises(ValueError):
            list(verify("flat", DbscanParams(5, 5, 1, 2), "exhaustive").mismatches)


class TestDeployment:
    model = DeploymentModel(parse_quantity("100MHz"), parse_quantity("2.5us"), 10)

    def test_flat_small(self):
        est = estimate_deployment("flat", DbscanParams(10, 10, 2, 4), self.model)
        assert est.compute_time == Fraction(50, 10**9)
        assert est.input_time == Fraction(25, 10**6)
        assert est.rate == 40_000
        assert est.bottleneck == "io"

    def test_systolic_large(self):
        est = estimate_deployment("systolic", DbscanParams(260, 346, 4, 4), self.model)
        assert est.compute_time == Fraction(358, 10**8)
        assert format_seconds(est.compute_time) == "3.58us"

    def test_zero_events_compute_bound(self):
        model = DeploymentModel(10**8, Fraction(1, 10**6), 0)
        est = estimate_deployment("systolic", DbscanParams(20, 30, 2, 4), model, parts=3)
        assert est.bottleneck == "compute"
        assert est.rate == Fraction(10**8, 3 * 34)

    def test_bad_model(self):
        with pytest.raises(ValueError):
            DeploymentModel(0, 1, 1)
        with pytest.raises(ValueError):
            DeploymentModel(1, 1, -1)

    @pytest.mark.parametrize("text,value", [("100MHz", 10**8), ("2.5us", Fraction(1, 400000)),
                                            ("1e3", 1000), ("40kHz", 40000), ("3ns", Fraction(3, 10**9))])
    def test_parse_quantity(self, text, value):
        assert parse_quantity(text) == value

    def test_parse_quantity_bad(self):
        with pytest.raises(ValueError):
            parse_quantity("fast")

    def test_format(self):
        assert format_hz(Fraction(40000)) == "40kHz"
        assert format_seconds(Fraction(5, 10**8)) == "50ns"
