"""Metrics: hand values, identities, and brute-force aggregation checks."""

import numpy as np
import pytest

from vesselcast.geodesy import GeoPoint, haversine_m
from vesselcast.metrics import ade_fde, evaluate_windows, mae_mse


def track(coords):
    return [GeoPoint(lat, lon) for lat, lon in coords]


class TestMaeMse:
    def test_perfect_prediction(self):
        pts = np.random.default_rng(0).uniform(size=(10, 2))
        assert mae_mse(pts, pts) == (0.0, 0.0, 0.0, 0.0)

    def test_constant_lon_error(self):
        truth = np.zeros((20, 2))
        pred = truth.copy()
        pred[:, 1] += 0.001
        mae_lat, mae_lon, mse_lat, mse_lon = mae_mse(pred, truth)
        assert (mae_lat, mse_lat) == (0.0, 0.0)
        assert mae_lon == pytest.approx(0.001, rel=1e-12)
        assert mse_lon == pytest.approx(1e-6, rel=1e-12)

    def test_outlier_hits_mse_harder_than_mae(self):
        truth = np.zeros((2, 2))
        outlier = np.array([[0.0, 0.0], [0.01, 0.0]])
        spread = np.array([[0.005, 0.0], [0.005, 0.0]])
        mae_o, _, mse_o, _ = mae_mse(outlier, truth)[0], None, mae_mse(outlier, truth)[2], None
        mae_s, mse_s = mae_mse(spread, truth)[0], mae_mse(spread, truth)[2]
        assert mae_o == pytest.approx(mae_s, rel=1e-12)  # same total absolute error
        assert mse_o > mse_s  # squared error punishes the outlier

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            mae_mse(np.zeros((0, 2)), np.zeros((0, 2)))


class TestAdeFde:
    def test_perfect_track(self):
        t = track([(0, 0), (0, 0.01), (0, 0.02)])
        assert ade_fde(t, t) == (0.0, 0.0)

    def test_single_step_ade_equals_fde(self):
        ade, fde = ade_fde(track([(0, 0.001)]), track([(0, 0)]))
        assert ade == fde

    def test_equatorial_lon_offset_hand_value(self):
        truth = track([(0.0, 0.01 * i) for i in range(5)])
        pred = track([(0.0, 0.01 * i + 0.001) for i in range(5)])
        ade, fde = ade_fde(pred, truth)
        assert ade == pytest.approx(111.19493076987928, abs=0.01)
        assert fde == pytest.approx(111.19493076987928, abs=0.01)

    def test_symmetric_in_pred_truth(self):
        a = track([(0, 0), (0.01, 0.01), (0.02, 0.01)])
        b = track([(0.001, 0), (0.012, 0.01), (0.021, 0.013)])
        assert ade_fde(a, b) == ade_fde(b, a)

    def test_ade_bounded_by_step_distances(self):
        a = track([(0, 0), (0.01, 0.01), (0.02, 0.01)])
        b = track([(0.001, 0), (0.012, 0.01), (0.021, 0.013)])
        dists = [haversine_m(p, t) for p, t in zip(a, b)]
        ade, _ = ade_fde(a, b)
        assert min(dists) <= ade <= max(dists)


class TestEvaluateWindows:
    def test_matches_brute_force_aggregation(self):
        rng = np.random.default_rng(3)
        truth = rng.uniform(0.0, 0.5, size=(12, 6, 2))
        pred = truth + rng.normal(0.0, 0.001, size=truth.shape)
        report = evaluate_windows(pred, truth)

        ades, fdes = [], []
        for i in range(truth.shape[0]):
            p = track(pred[i])
            t = track(truth[i])
            d = [haversine_m(a, b) for a, b in zip(p, t)]
            ades.append(np.mean(d))
            fdes.append(d[-1])
        assert report.ade_m == pytest.approx(np.mean(ades), rel=1e-12)
        assert report.ade_std_m == pytest.approx(np.std(ades), rel=1e-12)
        assert report.fde_m == pytest.approx(np.mean(fdes), rel=1e-12)
        assert report.fde_std_m == pytest.approx(np.std(fdes), rel=1e-12)
        assert report.n_windows == 12

    def test_schema_fields_present(self):
        truth = np.zeros((2, 3, 2))
        report = evaluate_windows(truth, truth).to_dict()
        for key in ("mae_lat", "mae_lon", "mse_lat", "mse_lon", "ade_m", "ade_std_m", "fde_m", "fde_std_m", "n_windows"):
            assert key in report
