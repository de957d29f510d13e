import numpy as np
import pytest

from resd.esd import EsdConfig, critical_value, run_esd
from resd.exceptions import InvalidConfigError, InvalidInputError
from resd.shesd import ShesdConfig, shesd_detect, shesd_windows


def robust_esd_oracle(r, k, alpha):
    """Median/MAD ESD over one window with no seasonal part, Rosner accumulation."""
    r = np.asarray(r, dtype=float)
    alive = list(range(r.size))
    cands, last = [], 0
    for i in range(k):
        v = r[alive]
        med = np.median(v)
        mad = 1.4826 * np.median(np.abs(v - med))
        pos = int(np.argmax(np.abs(v - med)))
        if abs(v[pos] - med) / mad > critical_value(r.size, i, alpha):
            last = i + 1
        cands.append(alive.pop(pos))
    return sorted(cands[:last])


class TestConfig:
    def test_k_from_max_anoms(self):
        assert ShesdConfig(window=961, max_anoms=0.0004).k == 1
        assert ShesdConfig(window=2880, max_anoms=0.02).k == 58

    @pytest.mark.parametrize("kw", [
        {"direction": "up"},
        {"max_anoms": 0.0},
        {"max_anoms": 0.5},
        {"alpha": 0.0},
        {"period": 100},
        {"period": 26},
        {"window": 3},
    ])
    def test_invalid(self, kw):
        base = dict(window=50)
        base.update(kw)
        with pytest.raises(InvalidConfigError):
            ShesdConfig(**base)


class TestDetect:
    def test_flat_window_with_one_spike(self):
        (rec,) = shesd_detect([0.0, 0.0, 0.0, 0.0, 10.0], ShesdConfig(window=5))
        assert rec.ts == 4
        assert rec.window_end == 4

    def test_matches_oracle_without_season(self):
        rng = np.random.default_rng(2)
        x = rng.normal(0, 1, 200)
        x[[13, 77, 150]] += [6, -7, 5]
        cfg = ShesdConfig(window=100, max_anoms=0.05)
        got = [r.ts for r in shesd_detect(x, cfg)]
        want = robust_esd_oracle(x[:100] - np.median(x[:100]), cfg.k, 0.05)
        want += [100 + j for j in robust_esd_oracle(x[100:] - np.median(x[100:]), cfg.k, 0.05)]
        assert got == want
        assert {13, 77, 150} <= set(got)

    def test_partial_window_dropped(self):
        x = np.r_[np.random.default_rng(0).normal(size=100), 50.0]
        wins = list(shesd_windows(x, ShesdConfig(window=50)))
        assert [w.start for w in wins] == [0, 50]
        assert all(r.ts < 100 for w in wins for r in w.records)

    def test_seasonal_spike(self):
        t = np.arange(480)
        x = 30 * np.sin(2 * np.pi * t / 24) + np.random.default_rng(5).normal(0, 1, 480)
        x[300] += 8
        recs = shesd_detect(x, ShesdConfig(window=240, period=24, max_anoms=0.01))
        assert [r.ts for r in recs] == [300]
        assert recs[0].forecast == pytest.approx(x[300] - recs[0].residual)

    def test_agrees_with_resd_on_symmetric_spike(self):
        # symmetric noise-free window: median and mean coincide, so both
        # detectors single out the same spike
        base = np.tile([-1.0, 1.0], 25)
        base[17] += 20.0
        sh = [r.ts for r in shesd_detect(base, ShesdConfig(window=50, max_anoms=0.02))]
        ours = run_esd(base, None, EsdConfig(k_max=1)).indices
        assert sh == ours == [17]

    def test_direction(self):
        x = np.random.default_rng(3).normal(0, 1, 100)
        x[10] += 9
        x[60] -= 9
        both = {r.ts for r in shesd_detect(x, ShesdConfig(window=100, max_anoms=0.03))}
        pos = {r.ts for r in shesd_detect(x, ShesdConfig(window=100, max_anoms=0.03, direction="pos"))}
        neg = {r.ts for r in shesd_detect(x, ShesdConfig(window=100, max_anoms=0.03, direction="neg"))}
        assert {10, 60} <= both
        assert 10 in pos and 60 not in pos
        assert 60 in neg and 10 not in neg

    def test_constant_window(self):
        (win,) = shesd_windows(np.ones(20), ShesdConfig(window=20))
        assert win.records == [] and win.zero_variance

    def test_custom_timestamps(self):
        ts = [f"t{i}" for i in range(5)]
        (rec,) = shesd_detect([0.0, 0.0, 9.0, 0.0, 0.0], ShesdConfig(window=5), ts)
        assert (rec.ts, rec.window_end) == ("t2", "t4")

    def test_input_errors(self):
        with pytest.raises(InvalidInputError):
            shesd_detect(np.zeros(10), ShesdConfig(window=20))
        with pytest.raises(InvalidInputError):
            shesd_detect(np.r_[np.zeros(30), np.nan], ShesdConfig(window=20))

    def test_deterministic(self):
        x = np.random.default_rng(8).normal(size=1000)
        cfg = ShesdConfig(window=200, period=20, max_anoms=0.05)
        assert shesd_detect(x, cfg) == shesd_detect(x.copy(), cfg)
