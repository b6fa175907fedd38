import json

import numpy as np
import pytest

from cellid.errors import DatasetError
from cellid.protocols import (
    CSV_HEADER,
    DatasetSuite,
    ProtocolConfig,
    build_suite,
    cc_name,
    dst_cycle,
    make_cc_discharge,
    make_dst,
    read_suite,
    read_trace,
    write_suite,
    write_trace,
)
from cellid.traces import CurrentProfile, Termination, Trace


class TestProfiles:
    def test_cc_current(self, cell):
        prof = make_cc_discharge(0.5, cell, 1.0)
        assert cell.fixed.nominal_capacity == 2.0
        assert np.all(prof.samples == -1.0)
        assert prof.c_rate == 0.5 and prof.name == "cc_0.5C"

    def test_cc_length(self, cell):
        assert len(make_cc_discharge(1.0, cell, 1.0, dt=1.0)) == 3600
        assert len(make_cc_discharge(1.0, cell, 1.0, dt=0.5)) == 7200

    @pytest.mark.parametrize("rate", [0.0, -0.5])
    def test_cc_rejects_nonpositive(self, cell, rate):
        with pytest.raises(ValueError, match="positive"):
            make_cc_discharge(rate, cell, 1.0)

    def test_dst_template_length_and_mean(self, cell):
        one = make_dst(cell, 1)
        assert len(one) == 360
        assert one.samples.mean() < 0
        assert np.max(np.abs(one.samples)) == pytest.approx(cell.fixed.nominal_capacity)
        assert len(make_dst(cell, 3)) == 1080
        np.testing.assert_array_equal(make_dst(cell, 2).samples[360:], one.samples)

    def test_dst_has_regen_pulses(self, cell):
        assert np.any(dst_cycle(cell) > 0)

    def test_dst_rejects_fractional_steps(self, cell):
        with pytest.raises(ValueError):
            dst_cycle(cell, {"steps": [{"duration_s": 1.5, "fraction": 0.1}]}, dt=1.0)
        with pytest.raises(ValueError):
            make_dst(cell, 0)

    def test_cc_name(self):
        assert cc_name(0.1) == "cc_0.1C" and cc_name(1.0) == "cc_1C"


class TestSuite:
    def test_composition(self, suite):
        assert suite.fitting.profile_name == "cc_0.5C"
        assert len(suite.validation) == 10
        names = [t.profile_name for t in suite.validation]
        assert "dst" in names and "cc_0.5C" not in names

    def test_terminations(self, suite):
        for tr in suite.traces:
            assert tr.termination in (Termination.V_MIN, Termination.PROFILE_END)

    def test_fitting_length_regression(self, suite):
        assert len(suite.fitting) == 7039

    def test_lower_rate_lasts_longer(self, suite):
        cc = sorted((t for t in suite.traces if t.c_rate is not None), key=lambda t: t.c_rate)
        lengths = [len(t) for t in cc]
        assert lengths == sorted(lengths, reverse=True)

    def test_dst_in_window(self, suite, cell):
        dst = next(t for t in suite.validation if t.profile_name == "dst")
        assert cell.fixed.v_min <= dst.voltage.min() and dst.voltage.max() <= cell.fixed.v_max

    def test_deterministic(self, suite, cell):
        again = build_suite(cell)
        for a, b in zip(suite.traces, again.traces):
            assert a.same_as(b)

    def test_fitting_rate_must_be_listed(self, cell):
        with pytest.raises(ValueError):
            build_suite(cell, ProtocolConfig(fitting_c_rate=0.55))


class TestTraceIO:
    def test_roundtrip(self, suite, tmp_path):
        path = tmp_path / "fit.csv"
        write_trace(suite.fitting, path)
        back = read_trace(path)
        assert back.same_as(suite.fitting, rtol=1e-12)
        meta = json.loads((tmp_path / "fit.json").read_text())
        assert meta == {"profile_name": "cc_0.5C", "dt_s": 1.0, "termination": "v_min", "c_rate": 0.5}

    def test_empty(self, tmp_path):
        empty = Trace("x", 1.0, np.array([]), np.array([]), np.array([]))
        with pytest.raises(DatasetError, match="empty dataset"):
            write_trace(empty, tmp_path / "e.csv")

    def _write_raw(self, tmp_path, header, rows):
        path = tmp_path / "t.csv"
        path.write_text(header + "\n" + "\n".join(rows) + "\n")
        (tmp_path / "t.json").write_text(json.dumps({"profile_name": "x", "dt_s": 1.0, "termination": "profile_end"}))
        return path

    def test_shuffled_time(self, tmp_path):
        path = self._write_raw(tmp_path, CSV_HEADER, ["1,0,3.9", "3,0,3.9", "2,0,3.9"])
        with pytest.raises(DatasetError, match="non-uniform"):
            read_trace(path)

    def test_bad_header(self, tmp_path):
        path = self._write_raw(tmp_path, "time,i,v", ["1,0,3.9"])
        with pytest.raises(DatasetError, match="header"):
            read_trace(path)

    def test_unparseable(self, tmp_path):
        path = self._write_raw(tmp_path, CSV_HEADER, ["1,0,3.9", "2,abc,3.9"])
        with pytest.raises(DatasetError, match="unparseable"):
            read_trace(path)

    def test_empty_body(self, tmp_path):
        path = self._write_raw(tmp_path, CSV_HEADER, [])
        with pytest.raises(DatasetError, match="empty dataset"):
            read_trace(path)

    def test_missing_sidecar(self, tmp_path, suite):
        path = tmp_path / "a.csv"
        write_trace(suite.fitting, path)
        (tmp_path / "a.json").unlink()
        with pytest.raises(DatasetError, match="sidecar"):
            read_trace(path)


class TestSuiteIO:
    def test_roundtrip_and_manifest(self, suite, tmp_path):
        manifest = write_suite(suite, tmp_path)
        data = json.loads(manifest.read_text())
        assert len(data["traces"]) == 11
        assert sum(e["role"] == "fitting" for e in data["traces"]) == 1
        assert len(list(tmp_path.glob("*.csv"))) == 11
        back = read_suite(tmp_path)
        assert isinstance(back, DatasetSuite)
        for a, b in zip(suite.traces, back.traces):
            assert a.same_as(b, rtol=1e-12)

    def test_byte_identical_rewrite(self, suite, cell, tmp_path):
        write_suite(suite, tmp_path / "a")
        write_suite(build_suite(cell), tmp_path / "b")
        for f in sorted((tmp_path / "a").iterdir()):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(DatasetError):
            read_suite(tmp_path)


def test_profile_validation():
    with pytest.raises(ValueError):
        CurrentProfile("x", 0.0, np.zeros(3))
    with pytest.raises(ValueError):
        CurrentProfile("x", 1.0, np.array([]))
    with pytest.raises(ValueError):
        CurrentProfile("x", 1.0, np.array([np.nan]))


def test_trace_rejects_nonfinite_voltage():
    with pytest.raises(DatasetError):
        Trace("x", 1.0, np.array([1.0]), np.array([0.0]), np.array([np.inf]))
