import math

import numpy as np
import pytest

from kslab.harness import studies
from kslab.harness.config import SimConfig
from kslab.harness.schedule import epsilon_schedule

SMALL = SimConfig(N=16, T=0.1, dt=0.01, eps=0.04, M=256, sample_every=5, lam_cut=0.2)


def test_sweep_n():
    report = studies.sweep_N(SMALL, [32, 16])
    assert report.axis == "N"
    assert report.statistic == "eps_leg"
    np.testing.assert_array_equal(report.points, [16, 32])
    assert report.metadata["config_hash"] == SMALL.config_hash()
    assert report.metadata["eps"] == 0.04
    assert np.all(report.means >= 0)


def test_sweep_eps():
    report = studies.sweep_eps(SMALL, [0.04, 0.08])
    assert report.statistic == "limit_leg"
    np.testing.assert_allclose(report.points, [0.04, 0.08])


def test_chaos_runs_follow_the_schedule():
    runs = studies.planned_chaos_runs(SMALL, [16, 64])
    assert runs[0][1] == pytest.approx(epsilon_schedule(16, 0.2, 1))
    assert runs[0][2] == pytest.approx(0.1)
    assert runs[1][2] == pytest.approx(0.08)

    report = studies.chaos_study(SMALL, [16, 64])
    assert report.statistic == "chaos"
    np.testing.assert_allclose(report.columns["eps"], [0.1, 0.08])
    assert isinstance(report.metadata["monotone"], bool)


def test_limit_distance_study():
    report = studies.limit_distance_study(SMALL, [0.04, 0.08])
    assert report.statistic == "c_l2_sup"
    assert report.means[0] < report.means[1]
    assert "rho_l2_sup" in report.columns


def test_gaussian_drift_functional_points_inwards():
    x = np.array([[-1.0], [0.0], [1.0]])
    values = studies.gaussian_drift_functional(x, [0.0], 0.3, 0.05, 1.0, 0.1)
    assert values[0, 0] > 0 > values[2, 0]
    assert values[1, 0] == 0.0
    np.testing.assert_array_equal(
        studies.gaussian_drift_functional(x, [0.0], 0.3, 0.5, 0.5, 0.1), np.zeros((3, 1))
    )


def test_contraction_ratio_is_finite():
    points = np.linspace(0.0, 2.0, 21)[:, None]
    ratio = studies.contraction_ratio(points, 0.1, 0.01, 0.05, 1.0, 0.1)
    assert math.isfinite(ratio) and ratio > 0
    assert studies.contraction_ratio(points, 0.1, 0.01, 1.0, 1.0, 0.1) == 0.0


def test_frozen_history():
    cluster = np.zeros((3, 2))
    ens = studies.frozen_history(cluster, 0.01, 0.1)
    assert ens.step == 10
    assert ens.history_length() == 11


def test_drift_scaling_study():
    report = studies.drift_scaling_study(SMALL.with_updates(N=8), [0.04, 0.08])
    assert report.statistic == "sup_drift"
    assert set(report.columns) == {"lipschitz", "contraction_ratio"}
    assert report.metadata["targets"]["lipschitz"] == -0.5
    assert report.metadata["lipschitz_slope"] is not None


def test_equal_laws_have_zero_numerator():
    points = np.linspace(0.0, 2.0, 21)[:, None]
    assert studies.contraction_ratio(points, 0.1, 0.0, 0.05, 1.0, 0.1) == 0.0


def test_single_point_study_has_no_slope():
    report = studies.sweep_eps(SMALL, [0.04])
    assert report.fit is None
    assert report.slope is None


@pytest.mark.slow
def test_interaction_error_decays_in_n():
    cfg = SimConfig(N=64, T=0.5, dt=0.01, eps=0.2, n_seeds=8)
    report = studies.sweep_N(cfg, [64, 256, 1024, 4096])
    assert report.is_decreasing()
    assert -0.65 <= report.slope <= -0.35


@pytest.mark.slow
def test_intermediate_error_is_linear_in_eps():
    cfg = SimConfig(N=256, T=0.5, dt=0.0125, eps=0.05, n_seeds=8)
    report = studies.sweep_eps(cfg, [0.05, 0.1, 0.2])
    assert 0.7 <= report.slope <= 1.3


@pytest.mark.slow
def test_chaos_statistic_decays():
    cfg = SimConfig(T=0.5, dt=0.005, n_seeds=20)
    report = studies.chaos_study(cfg, [128, 512, 2048])
    assert report.metadata["monotone"]


@pytest.mark.slow
def test_limit_distance_is_near_linear_in_eps():
    cfg = SimConfig(T=0.5, dt=0.0125, eps=0.05)
    report = studies.limit_distance_study(cfg, [0.2, 0.1, 0.05])
    assert np.all(np.diff(report.means) > 0)
    assert 0.7 <= report.slope <= 1.3


@pytest.mark.slow
def test_drift_sup_scaling_in_two_dimensions():
    cfg = SimConfig(d=2, N=64, T=0.5, dt=0.005, eps=0.04)
    report = studies.drift_scaling_study(cfg, [0.04, 0.08, 0.16, 0.32])
    assert -0.7 <= report.slope <= -0.3


@pytest.mark.slow
def test_pure_diffusion_follows_the_empirical_rate():
    cfg = SimConfig(T=0.5, dt=0.005, n_seeds=20, interaction=False, chem="zero")
    report = studies.chaos_study(cfg, [128, 512, 2048])
    assert -0.65 <= report.slope <= -0.35
