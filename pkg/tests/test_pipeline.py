import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import IDENTITY_STANDARDIZATION, decaying_profile_set, oracle_model, psd_tensors, random_psd
from mlepm.data import Standardizer, make_windows, normalize_k
from mlepm.epm import ALL_TARGETS, Target
from mlepm.errors import DegenerateTke
from mlepm.pipeline import (
    DEFAULT_ANISOTROPY,
    REPORT_COLUMNS,
    CorrectionModel,
    aggregate,
    correct_point,
    correct_reynolds_stress,
    evaluate_station,
    maximal_envelope,
    modulated_envelope,
    modulated_members,
    modulation_magnitude,
    read_station_csv,
    report,
    stress_from_anisotropy,
)
from mlepm.tensor import SymTensor3, anisotropy, is_realizable, tke

ISO = SymTensor3.diag(2 / 3, 2 / 3, 2 / 3)


class CentreModel:
    """Returns the centre of each window: k_hat == k_rans."""

    def predict(self, windows):
        return np.asarray(windows)[:, 4]


class TableModel:
    """Returns fixed values in order, standing in for a perfect predictor."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def predict(self, windows):
        assert len(windows) == len(self.values)
        return self.values


def test_isotropic_rescale():
    out = correct_reynolds_stress(ISO, 2.0)
    assert np.allclose(out.matrix(), np.eye(3) * 4 / 3, atol=1e-15)


def test_one_component_rescale():
    out = correct_reynolds_stress(SymTensor3.diag(2, 0, 0), 0.5)
    assert np.allclose(out.matrix(), np.diag([1.0, 0.0, 0.0]), atol=1e-15)
    assert stress_from_anisotropy(0.5, SymTensor3.diag(2 / 3, -1 / 3, -1 / 3)).max_abs_diff(out) < 1e-15


def test_identity_correction(rng):
    r = random_psd(rng)
    assert correct_reynolds_stress(r, tke(r)).max_abs_diff(r) <= 1e-10


def test_correction_rejects_degenerate_and_negative():
    with pytest.raises(DegenerateTke):
        correct_reynolds_stress(SymTensor3.diag(0, 0, 0), 1.0)
    with pytest.raises(ValueError):
        correct_reynolds_stress(ISO, -1.0)


@given(psd_tensors(), st.floats(1e-3, 100.0))
def test_anisotropy_and_trace_contract(r, k_hat):
    out = correct_reynolds_stress(r, k_hat)
    assert anisotropy(out).max_abs_diff(anisotropy(r)) <= 1e-10
    assert abs(tke(out) - k_hat) <= 1e-10 * max(1.0, k_hat)
    assert is_realizable(out)


@given(psd_tensors(), st.floats(0.0, 10.0))
def test_modulated_members_realizable(r, ratio):
    for m in modulated_members(r, ratio * tke(r)):
        assert is_realizable(m, tol=1e-10 * max(1.0, tke(m)))


def test_zero_discrepancy_collapse(rng):
    r = random_psd(rng)
    env = modulated_envelope(r, tke(r))
    assert np.all(env.width() == 0.0)
    assert modulation_magnitude(1.0, 1.0) == 0.0


def test_doubled_energy_isotropic():
    env = modulated_envelope(ISO, 2.0)
    assert modulation_magnitude(1.0, 2.0) == 1.0
    diag_lo = min(env.lower.xx, env.lower.yy, env.lower.zz)
    diag_hi = max(env.upper.xx, env.upper.yy, env.upper.zz)
    assert (diag_lo, diag_hi) == pytest.approx((0.0, 4.0), abs=1e-14)
    # members: R (2/3), R_corr (4/3), 1C diag(4,0,0), 2C diag(2,2,0), 3C 4/3
    assert (env.lower.xx, env.upper.xx) == pytest.approx((2 / 3, 4.0), abs=1e-14)


@pytest.mark.parametrize("ratio", [0.0, 0.3, 1.0, 1.7, 5.0])
def test_modulation_magnitude_clipped(ratio):
    assert modulation_magnitude(2.0, 2.0 * ratio) == pytest.approx(min(1.0, abs(ratio - 1.0)))


def _k_band(r, k_hat):
    energies = [tke(m) for m in modulated_members(r, k_hat)]
    return max(energies) - min(energies)


@given(psd_tensors(), st.sampled_from([1.0, -1.0]))
def test_width_monotone_in_discrepancy(r, sign):
    k = tke(r)
    levels = [0.0, 0.1, 0.3, 0.6, 0.9] if sign < 0 else [0.0, 0.25, 0.5, 1.0, 2.0]
    totals = [modulated_envelope(r, k * (1 + sign * d)).width().sum() for d in levels]
    bands = [_k_band(r, k * (1 + sign * d)) for d in levels]
    assert np.all(np.diff(totals) >= -1e-12)
    assert np.all(np.diff(bands) >= -1e-12)


@given(psd_tensors(), st.floats(0.0, 5.0))
def test_modulated_inside_maximal(r, ratio):
    k_hat = ratio * tke(r)
    inner = modulated_envelope(r, k_hat)
    outer = maximal_envelope(r, k_hat)
    assert np.all(outer.lower.as_array() <= inner.lower.as_array() + 1e-12)
    assert np.all(outer.upper.as_array() >= inner.upper.as_array() - 1e-12)


def test_correct_point_band_contains_both_estimates():
    res = correct_point(0.4, 0.7)
    assert res.k_band[0] <= 0.4 and res.k_band[1] >= 0.7
    assert tke(res.r_corr) == pytest.approx(0.7)
    assert anisotropy(res.r_corr).max_abs_diff(DEFAULT_ANISOTROPY) < 1e-12


def test_correct_point_zero_rans_energy():
    res = correct_point(0.0, 0.3)
    assert res.k_band == pytest.approx((0.0, 0.3))


def test_default_anisotropy_is_realizable():
    assert abs(DEFAULT_ANISOTROPY.trace()) < 1e-15
    assert is_realizable(stress_from_anisotropy(1.0, DEFAULT_ANISOTROPY))


def test_perfect_model_station():
    ps = decaying_profile_set(n_profiles=3, u_inf=2.0)
    profile = ps.profiles[0]
    dns = normalize_k(profile.k_dns * 1.3, 2.0)
    profile.k_dns = profile.k_dns * 1.3
    rep = evaluate_station(profile, TableModel(dns), 2.0)
    assert rep.mae_corrected == 0.0
    assert rep.coverage == 1.0
    assert rep.mae_baseline > 0.0
    assert rep.improvement_factor == float("inf")
    assert rep.summary()["improvement_factor"] is None


def test_oracle_network_station():
    ps = decaying_profile_set(n_profiles=3)
    model = CorrectionModel(oracle_model(), Standardizer.from_dict(IDENTITY_STANDARDIZATION))
    rep = evaluate_station(ps.profiles[1], model, 1.0)
    assert rep.mae_corrected <= 1e-14
    assert rep.coverage == 1.0


def test_identity_model_station():
    ps = decaying_profile_set(n_profiles=3)
    profile = ps.profiles[0]
    profile.k_dns = profile.k_dns * 1.5
    rep = evaluate_station(profile, CentreModel(), 1.0)
    assert rep.mae_corrected == rep.mae_baseline
    assert rep.improvement_factor == 1.0
    assert rep.mean_band_width == pytest.approx(0.0, abs=1e-15)


def test_predictions_are_clamped():
    ps = decaying_profile_set(n_profiles=3)
    rep = evaluate_station(ps.profiles[0], TableModel(np.full(30, -1.0)), 1.0)
    assert np.all(rep.points["k_plus_hat"] == 0.0)


def test_correction_model_destandardizes():
    std = Standardizer(1.0, 2.0, 0.5, 0.25)

    class Echo:
        def predict(self, z):
            return z[:, 4]

    windows = make_windows(np.array([1.0, 3.0, 5.0]))
    out = CorrectionModel(Echo(), std).predict(windows)
    assert np.allclose(out, 0.5 + 0.25 * (np.array([1.0, 3.0, 5.0]) - 1.0) / 2.0)


def test_empty_report(tmp_path):
    summary = report([], tmp_path)
    assert summary["aggregate"]["n_stations"] == 0
    assert summary["stations"] == []
    assert json.loads((tmp_path / "summary.json").read_text()) == summary


def test_report_fidelity(tmp_path):
    ps = decaying_profile_set(n_profiles=3)
    reports = []
    for i, p in enumerate(ps.profiles):
        p.k_dns = p.k_dns * (1.2 + 0.1 * i)
        reports.append(evaluate_station(p, TableModel(p.k_dns * 0.95), 1.0))
    summary = report(reports, tmp_path / "out")
    assert aggregate(reports) == summary["aggregate"]
    for entry, p in zip(summary["stations"], ps.profiles):
        cols = read_station_csv(tmp_path / "out" / entry["csv"])
        assert tuple(cols) == REPORT_COLUMNS
        assert len(cols["y"]) == len(p)
        base = np.mean(np.abs(cols["k_plus_rans"] - cols["k_plus_dns"]))
        corr = np.mean(np.abs(cols["k_plus_hat"] - cols["k_plus_dns"]))
        assert abs(base - entry["mae_baseline"]) <= 1e-9
        assert abs(corr - entry["mae_corrected"]) <= 1e-9
        assert abs(base / corr - entry["improvement_factor"]) <= 1e-9 * entry["improvement_factor"]
        inside = (cols["k_plus_dns"] >= cols["band_lo"] - 1e-9) & (cols["k_plus_dns"] <= cols["band_hi"] + 1e-9)
        assert abs(inside.mean() - entry["coverage"]) <= 1e-9
    assert summary["aggregate"]["n_points"] == 90


def test_corner_subset_narrows_band():
    full = correct_point(0.5, 0.8, corners=ALL_TARGETS)
    only = correct_point(0.5, 0.8, corners=[Target.THREE_COMPONENT])
    assert full.k_band == only.k_band  # energy band does not depend on the shape target
    assert np.all(only.envelope.width() <= full.envelope.width() + 1e-15)
