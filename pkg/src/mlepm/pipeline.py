"""Coupling of the learned kinetic-energy correction with eigenspace perturbation.

The corrected stress keeps the RANS anisotropy and replaces the kinetic
energy by the network estimate. The same estimate sets how far the
perturbation moves toward the limiting states: the relative discrepancy
``|k_hat - k| / k`` (clipped to 1) is used as ``delta_b``, so a perfect
RANS prediction gives a zero-width band and a large discrepancy recovers
the full physical bound.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Profile, Standardizer, normalize_k, profile_windows
from .epm import ALL_TARGETS, EigenvectorMode, Envelope, bounds_of, perturb
from .errors import DegenerateTke
from .tensor import K_FLOOR, SymTensor3, anisotropy, tke

# Log-layer-like anisotropy of a wall-bounded shear flow; used when the
# dataset carries kinetic energy only.
DEFAULT_ANISOTROPY = SymTensor3(0.197, -0.143, -0.054, -0.15, 0.0, 0.0)

COVERAGE_RTOL = 1e-9
REPORT_COLUMNS = ("y", "k_plus_rans", "k_plus_hat", "k_plus_dns", "band_lo", "band_hi")


def correct_reynolds_stress(r_rans: SymTensor3, k_hat: float) -> SymTensor3:
    """Stress with kinetic energy ``k_hat`` and the anisotropy of ``r_rans``.

    ``2 k_hat (b + I/3)`` equals ``(k_hat / k) R`` exactly in real arithmetic;
    the scaled form is used because it keeps the anisotropy to round-off and
    returns ``r_rans`` unchanged when ``k_hat == k``.
    """
    if k_hat < 0.0:
        raise ValueError(f"corrected kinetic energy must be non-negative, got {k_hat!r}")
    anisotropy(r_rans)
    k = tke(r_rans)
    return r_rans if k_hat == k else r_rans.scaled(k_hat / k)


def stress_from_anisotropy(k, b: SymTensor3) -> SymTensor3:
    """2k (b + I/3)."""
    third = 1.0 / 3.0
    return SymTensor3(
        2.0 * k * (b.xx + third),
        2.0 * k * (b.yy + third),
        2.0 * k * (b.zz + third),
        2.0 * k * b.xy,
        2.0 * k * b.xz,
        2.0 * k * b.yz,
    )


def modulation_magnitude(k, k_hat):
    return min(1.0, abs(k_hat - k) / max(k, K_FLOOR))


def modulated_members(r_rans: SymTensor3, k_hat: float, corners=ALL_TARGETS):
    corners = list(corners)
    if not corners:
        raise ValueError("at least one limiting-state corner is required")
    r_corr = correct_reynolds_stress(r_rans, k_hat)
    k = tke(r_rans)
    delta = modulation_magnitude(k, k_hat)
    factor = k_hat / k
    return [r_rans, r_corr] + [perturb(r_rans, c, delta, factor, EigenvectorMode.KEEP) for c in corners]


def modulated_envelope(r_rans: SymTensor3, k_hat: float, corners=ALL_TARGETS) -> Envelope:
    """Envelope whose perturbation magnitude follows the learned correction."""
    return bounds_of(modulated_members(r_rans, k_hat, corners))


def maximal_envelope(r_rans: SymTensor3, k_hat: float, corners=ALL_TARGETS) -> Envelope:
    """Full-magnitude perturbations at both the RANS and the corrected energy."""
    k = tke(r_rans)
    if not k > K_FLOOR:
        raise DegenerateTke(f"turbulent kinetic energy {k!r} is below the floor {K_FLOOR}")
    members = [r_rans, correct_reynolds_stress(r_rans, k_hat)]
    for factor in (1.0, k_hat / k):
        members += [perturb(r_rans, c, 1.0, factor) for c in corners]
    return bounds_of(members)


@dataclass
class CorrectionResult:
    k_rans: float
    k_hat: float
    r_rans: SymTensor3
    r_corr: SymTensor3
    envelope: Envelope
    k_band: tuple


class CorrectionModel:
    """Trained network plus the standardization it was trained with.

    ``predict`` maps windows of k+_rans to clamped k+_hat.
    """

    def __init__(self, network, standardizer: Standardizer):
        self.network = network
        self.standardizer = standardizer

    def predict(self, windows):
        z = self.network.predict(self.standardizer.apply_inputs(windows))
        return np.maximum(self.standardizer.invert_targets(z), 0.0)


@dataclass
class StationReport:
    id: str
    case_id: str
    station: float
    mae_baseline: float
    mae_corrected: float
    improvement_factor: float
    coverage: float
    mean_band_width: float
    points: dict = field(default_factory=dict, repr=False)

    def summary(self):
        return {
            "id": self.id,
            "case": self.case_id,
            "station": self.station,
            "n_points": len(self.points.get("y", ())),
            "mae_baseline": self.mae_baseline,
            "mae_corrected": self.mae_corrected,
            "improvement_factor": _finite_or_none(self.improvement_factor),
            "coverage": self.coverage,
            "mean_band_width": self.mean_band_width,
        }


def _finite_or_none(x):
    return float(x) if np.isfinite(x) else None


def _ratio(num, den):
    return num / den if den > 0.0 else float("inf")


def inside_band(values, lo, hi):
    values = np.asarray(values, dtype=float)
    tol = COVERAGE_RTOL * np.maximum(1.0, np.abs(values))
    return (values >= np.asarray(lo) - tol) & (values <= np.asarray(hi) + tol)


def correct_point(k_rans, k_hat, b=DEFAULT_ANISOTROPY, corners=ALL_TARGETS) -> CorrectionResult:
    r_rans = stress_from_anisotropy(k_rans, b)
    r_corr = stress_from_anisotropy(k_hat, b)
    if k_rans > K_FLOOR:
        members = modulated_members(r_rans, k_hat, corners)
    else:
        # no energy to normalize: the band reduces to the two estimates
        members = [r_rans, r_corr]
    energies = [tke(m) for m in members]
    return CorrectionResult(k_rans, k_hat, r_rans, r_corr, bounds_of(members), (min(energies), max(energies)))


def evaluate_station(profile: Profile, model, u_inf, b=DEFAULT_ANISOTROPY, corners=ALL_TARGETS) -> StationReport:
    """Per-station errors (in k+) and calibration of the modulated band.

    ``model`` is anything with ``predict(windows) -> k+_hat``.
    """
    windows, k_plus_dns, _ = profile_windows(profile, u_inf)
    k_plus_rans = normalize_k(profile.k_rans, u_inf)
    k_plus_hat = np.maximum(np.asarray(model.predict(windows), dtype=float), 0.0)
    u2 = u_inf * u_inf
    lo = np.empty(len(profile))
    hi = np.empty(len(profile))
    for i, (kr, kh) in enumerate(zip(profile.k_rans, k_plus_hat * u2)):
        band = correct_point(float(kr), float(kh), b, corners).k_band
        lo[i] = band[0] / u2
        hi[i] = band[1] / u2
    mae_base = float(np.mean(np.abs(k_plus_rans - k_plus_dns)))
    mae_corr = float(np.mean(np.abs(k_plus_hat - k_plus_dns)))
    points = {
        "y": np.asarray(profile.y, dtype=float),
        "k_plus_rans": k_plus_rans,
        "k_plus_hat": k_plus_hat,
        "k_plus_dns": k_plus_dns,
        "band_lo": lo,
        "band_hi": hi,
    }
    return StationReport(
        id=f"{profile.case_id}@{profile.station!r}",
        case_id=profile.case_id,
        station=float(profile.station),
        mae_baseline=mae_base,
        mae_corrected=mae_corr,
        improvement_factor=_ratio(mae_base, mae_corr),
        coverage=float(np.mean(inside_band(k_plus_dns, lo, hi))),
        mean_band_width=float(np.mean(hi - lo)),
        points=points,
    )


def aggregate(reports):
    """Pooled statistics over all points of all stations."""
    if not reports:
        return {
            "n_stations": 0,
            "n_points": 0,
            "mae_baseline": None,
            "mae_corrected": None,
            "improvement_factor": None,
            "coverage": None,
            "mean_band_width": None,
        }
    cols = {c: np.concatenate([r.points[c] for r in reports]) for c in REPORT_COLUMNS}
    mae_base = float(np.mean(np.abs(cols["k_plus_rans"] - cols["k_plus_dns"])))
    mae_corr = float(np.mean(np.abs(cols["k_plus_hat"] - cols["k_plus_dns"])))
    return {
        "n_stations": len(reports),
        "n_points": int(cols["y"].size),
        "mae_baseline": mae_base,
        "mae_corrected": mae_corr,
        "improvement_factor": _finite_or_none(_ratio(mae_base, mae_corr)),
        "coverage": float(np.mean(inside_band(cols["k_plus_dns"], cols["band_lo"], cols["band_hi"]))),
        "mean_band_width": float(np.mean(cols["band_hi"] - cols["band_lo"])),
    }


def _csv_name(report_id):
    return "station_" + re.sub(r"[^A-Za-z0-9_.-]+", "_", report_id) + ".csv"


def report(reports, out_dir):
    """Write one CSV per station plus ``summary.json``; returns the summary dict."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stations = []
    for r in reports:
        name = _csv_name(r.id)
        with (out_dir / name).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(REPORT_COLUMNS)
            for row in zip(*(r.points[c] for c in REPORT_COLUMNS)):
                writer.writerow([repr(float(v)) for v in row])
        entry = r.summary()
        entry["csv"] = name
        stations.append(entry)
    summary = {"stations": stations, "aggregate": aggregate(reports)}
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return summary


def read_station_csv(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}
