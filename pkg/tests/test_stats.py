import math

import numpy as np
import pytest

from casdlab.device import MosfetParams, Polarity, default_deck
from casdlab.stats import (HIST_BINS, McError, VariationSpec, run_monte_carlo, sample_one, sample_variations,
                           summarize)


def vth_gap(d):
    return d.nmos.vth - d.pmos.vth


class TestSampling:
    def test_reproducible(self):
        spec = VariationSpec(seed=5)
        assert sample_variations(spec, default_deck(), 20) == sample_variations(spec, default_deck(), 20)

    def test_random_access_matches_stream(self):
        spec = VariationSpec(seed=5)
        assert sample_one(spec, default_deck(), 17) == sample_variations(spec, default_deck(), 18)[17]

    def test_seeds_differ(self):
        a = sample_one(VariationSpec(seed=1), default_deck(), 0)
        b = sample_one(VariationSpec(seed=2), default_deck(), 0)
        assert a != b

    def test_process_mode_shares_shift(self):
        d = default_deck()
        s = sample_one(VariationSpec(mode="process", seed=3), d, 0)
        assert s.nmos.vth - d.nmos.vth == pytest.approx(s.pmos.vth - d.pmos.vth, abs=1e-15)

    def test_mismatch_mode_independent(self):
        d = default_deck()
        s = sample_one(VariationSpec(seed=3), d, 0)
        assert s.nmos.vth - d.nmos.vth != pytest.approx(s.pmos.vth - d.pmos.vth, abs=1e-9)

    def test_per_device_mapping(self):
        base = {f"M{k}": MosfetParams(Polarity.N) for k in range(4)}
        s = sample_one(VariationSpec(seed=0), base, 0)
        assert set(s) == set(base) and len({p.vth for p in s.values()}) == 4

    def test_zero_sigma_is_nominal(self):
        d = default_deck()
        assert sample_one(VariationSpec(0.0, 0.0), d, 3) == d

    def test_floor_keeps_params_positive(self):
        d = default_deck()
        for s in sample_variations(VariationSpec(vth_sigma=1.0, kp_rel_sigma=5.0), d, 200):
            assert s.nmos.vth > 0 and s.nmos.kp > 0

    def test_sample_statistics(self):
        vs = [s.nmos.vth for s in sample_variations(VariationSpec(seed=0), default_deck(), 4000)]
        assert np.std(vs, ddof=1) == pytest.approx(0.02, rel=0.05)
        assert np.mean(vs) == pytest.approx(0.35, abs=3 * 0.02 / math.sqrt(4000))

    @pytest.mark.parametrize("kw", [dict(vth_sigma=-1.0), dict(mode="global"), dict(seed=-1)])
    def test_invalid_spec(self, kw):
        with pytest.raises(ValueError):
            VariationSpec(**kw)


class TestSummarize:
    def test_hand_values(self):
        s = summarize([1.0, 2.0, 3.0, 4.0])
        assert s.mean == 2.5
        assert s.std == pytest.approx(math.sqrt(5 / 3), rel=1e-12)
        assert s.within_3sigma == 1.0

    def test_histogram_sums_to_n(self):
        v = np.r_[np.zeros(99), 1e6]
        s = summarize(v)
        assert len(s.hist_counts) == HIST_BINS and s.hist_counts.sum() == 100

    def test_single_value(self):
        s = summarize([3.0])
        assert math.isnan(s.std) and s.hist_counts.sum() == 1

    def test_empty(self):
        with pytest.raises(McError) as e:
            summarize([])
        assert e.value.code == "empty-input"


class TestRunMonteCarlo:
    def test_failures_recorded(self):
        def measure(d):
            if d.nmos.vth > 0.37:
                raise RuntimeError("too slow")
            return d.nmos.vth

        res = run_monte_carlo(lambda d: d, measure, VariationSpec(seed=0), 200)
        assert 0 < res.failed < 200
        assert np.isnan(res.values).sum() == res.failed
        assert "RuntimeError" in res.status

    def test_nominal_failure(self):
        with pytest.raises(McError) as e:
            run_monte_carlo(lambda d: d, lambda d: 1 / 0, VariationSpec(), 5)
        assert e.value.code == "nominal-failure"

    def test_all_failed(self):
        nominal = default_deck()

        def measure(d):
            if d != nominal:
                raise RuntimeError("x")
            return 1.0

        with pytest.raises(McError) as e:
            run_monte_carlo(lambda d: d, measure, VariationSpec(), 5)
        assert e.value.code == "all-failed"

    def test_outputs(self):
        res = run_monte_carlo(lambda d: d, vth_gap, VariationSpec(seed=0), 50)
        lines = res.to_csv().splitlines()
        assert lines[0] == "sample_idx,metric,status" and len(lines) == 51
        assert '"failed": 0' in res.to_json()

    def test_gap_sigma(self):
        # difference of two independent draws: sigma * sqrt(2)
        res = run_monte_carlo(lambda d: d, vth_gap, VariationSpec(seed=0), 4000)
        assert res.std == pytest.approx(0.02 * math.sqrt(2), rel=0.05)
