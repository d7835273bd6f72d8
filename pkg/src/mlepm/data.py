"""Paired RANS/DNS kinetic-energy profiles: file format, windowing, splits.

A dataset is a CSV with header ``case,station,x,y,k_rans,k_dns``; rows
sharing ``(case, station)`` form one wall-normal profile. Freestream
velocities live in a sidecar JSON ``{case_id: U_inf}`` next to the CSV
(``data.csv`` -> ``data.uinf.json``).
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import (
    DegenerateSpread,
    InvalidConfig,
    MissingFreestream,
    NegativeTke,
    NonMonotoneProfile,
    NonPositiveFreestream,
    ParseError,
    TooFewProfiles,
)

log = logging.getLogger(__name__)

HEADER = ("case", "station", "x", "y", "k_rans", "k_dns")
WINDOW = 9
MIN_PROFILE_POINTS = 3
STD_FLOOR = 1e-12
PARTITIONS = ("train", "val", "test")


@dataclass(frozen=True)
class SampleRecord:
    case_id: str
    station: float
    x: float
    y: float
    k_rans: float
    k_dns: float


@dataclass
class Profile:
    """One wall-normal profile, sorted by strictly increasing ``y``."""

    case_id: str
    station: float
    x: np.ndarray
    y: np.ndarray
    k_rans: np.ndarray
    k_dns: np.ndarray

    @property
    def id(self):
        return (self.case_id, self.station)

    def __len__(self):
        return len(self.y)

    def records(self):
        for x, y, kr, kd in zip(self.x, self.y, self.k_rans, self.k_dns):
            yield SampleRecord(self.case_id, self.station, float(x), float(y), float(kr), float(kd))


@dataclass
class ProfileSet:
    profiles: list
    u_inf: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.profiles)

    def __iter__(self):
        return iter(self.profiles)

    def ids(self):
        return [p.id for p in self.profiles]

    def get(self, profile_id):
        for p in self.profiles:
            if p.id == profile_id:
                return p
        raise KeyError(profile_id)

    def records(self):
        for p in self.profiles:
            yield from p.records()

    def subset(self, ids):
        wanted = set(ids)
        return ProfileSet([p for p in self.profiles if p.id in wanted], dict(self.u_inf))


def freestream_path(path):
    return Path(path).with_suffix(".uinf.json")


def profiles_from_records(records):
    """Group records into sorted profiles; short profiles are dropped with a warning."""
    groups = defaultdict(list)
    for r in records:
        groups[(r.case_id, r.station)].append(r)
    profiles = []
    for (case, station), rows in sorted(groups.items()):
        rows.sort(key=lambda r: r.y)
        y = np.array([r.y for r in rows])
        if np.any(np.diff(y) <= 0.0):
            raise NonMonotoneProfile(f"profile ({case}, {station}) has repeated wall-normal coordinates")
        if len(rows) < MIN_PROFILE_POINTS:
            log.warning(
                "dropping profile (%s, %s): %d points, need at least %d",
                case, station, len(rows), MIN_PROFILE_POINTS,
            )
            continue
        profiles.append(
            Profile(
                case,
                station,
                np.array([r.x for r in rows]),
                y,
                np.array([r.k_rans for r in rows]),
                np.array([r.k_dns for r in rows]),
            )
        )
    return profiles


def _parse_row(row, line):
    if len(row) != len(HEADER):
        raise ParseError(f"expected {len(HEADER)} fields, got {len(row)}", line)
    case = row[0].strip()
    if not case:
        raise ParseError("empty case id", line)
    try:
        values = [float(v) for v in row[1:]]
    except ValueError as exc:
        raise ParseError(str(exc), line) from None
    if not all(math.isfinite(v) for v in values):
        raise ParseError("non-finite value", line)
    station, x, y, k_rans, k_dns = values
    if k_rans < 0.0 or k_dns < 0.0:
        raise NegativeTke(f"negative kinetic energy (k_rans={k_rans}, k_dns={k_dns})", line)
    return SampleRecord(case, station, x, y, k_rans, k_dns)


def load_dataset(path, u_inf=None) -> ProfileSet:
    """Read a paired dataset.

    ``u_inf`` overrides the sidecar file and applies to every case.
    """
    path = Path(path)
    records = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HEADER:
            raise ParseError(f"header must be {','.join(HEADER)}", 1)
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            records.append(_parse_row(row, reader.line_num))

    profiles = profiles_from_records(records)
    cases = sorted({p.case_id for p in profiles})
    if u_inf is not None:
        freestream = {c: float(u_inf) for c in cases}
    else:
        side = freestream_path(path)
        if not side.exists():
            raise MissingFreestream(f"no freestream file {side} and no U_inf override given")
        try:
            freestream = {str(k): float(v) for k, v in json.loads(side.read_text(encoding="utf-8")).items()}
        except (ValueError, AttributeError) as exc:
            raise MissingFreestream(f"cannot read freestream file {side}: {exc}") from None
    for c in cases:
        if c not in freestream:
            raise MissingFreestream(f"no freestream velocity for case {c!r}")
        if not freestream[c] > 0.0:
            raise NonPositiveFreestream(f"freestream velocity for case {c!r} must be positive")
    return ProfileSet(profiles, {c: freestream[c] for c in cases})


def write_dataset(ps: ProfileSet, path, write_freestream=True):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        for r in ps.records():
            writer.writerow([r.case_id, repr(r.station), repr(r.x), repr(r.y), repr(r.k_rans), repr(r.k_dns)])
    if write_freestream:
        freestream_path(path).write_text(json.dumps(ps.u_inf, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def normalize_k(k, u_inf):
    """k+ = k / U_inf**2."""
    if not u_inf > 0.0:
        raise NonPositiveFreestream(f"freestream velocity must be positive, got {u_inf!r}")
    return np.asarray(k, dtype=float) / (u_inf * u_inf) if np.ndim(k) else float(k) / (u_inf * u_inf)


def make_windows(values, width=WINDOW):
    """One centred window per point, padding by repeating the end values."""
    values = np.asarray(values, dtype=float)
    if values.size < MIN_PROFILE_POINTS:
        raise ValueError(f"need at least {MIN_PROFILE_POINTS} points to window, got {values.size}")
    half = width // 2
    padded = np.concatenate([np.full(half, values[0]), values, np.full(half, values[-1])])
    return np.lib.stride_tricks.sliding_window_view(padded, width).copy()


def profile_windows(profile: Profile, u_inf, width=WINDOW):
    """(windows of k+_rans, centre targets k+_dns, point indices)."""
    k_rans = normalize_k(profile.k_rans, u_inf)
    k_dns = normalize_k(profile.k_dns, u_inf)
    return make_windows(k_rans, width), k_dns.copy(), np.arange(len(profile))


def windowed(ps: ProfileSet, ids=None, width=WINDOW):
    """Stack windows and targets over the listed profiles (all by default)."""
    profiles = ps.profiles if ids is None else [ps.get(i) for i in ids]
    xs, ys = [], []
    for p in profiles:
        w, t, _ = profile_windows(p, ps.u_inf[p.case_id], width)
        xs.append(w)
        ys.append(t)
    if not xs:
        return np.zeros((0, width)), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ys)


@dataclass
class SplitAssignment:
    assignment: dict
    fractions: tuple
    seed: int

    def ids(self, partition):
        return [pid for pid, part in self.assignment.items() if part == partition]

    def counts(self):
        return {part: len(self.ids(part)) for part in PARTITIONS}


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def split_profiles(ps, fractions=(0.75, 0.05, 0.20), seed=0) -> SplitAssignment:
    """Assign whole profiles to train/val/test.

    Validation and test counts are the rounded targets; train takes the rest.
    """
    ids = sorted(ps.ids() if isinstance(ps, ProfileSet) else ps)
    n = len(ids)
    if n < 3:
        raise TooFewProfiles(f"need at least 3 profiles to split, got {n}")
    f_train, f_val, f_test = (float(f) for f in fractions)
    if min(f_train, f_val, f_test) < 0.0 or abs(f_train + f_val + f_test - 1.0) > 1e-9:
        raise InvalidConfig(f"split fractions {fractions} must be non-negative and sum to 1")
    n_val = _round_half_up(f_val * n)
    n_test = _round_half_up(f_test * n)
    if n_val + n_test > n:
        raise InvalidConfig(f"fractions {fractions} leave no room for {n} profiles")
    order = np.random.default_rng(seed).permutation(n)
    assignment = {}
    for rank, i in enumerate(order):
        if rank < n_test:
            part = "test"
        elif rank < n_test + n_val:
            part = "val"
        else:
            part = "train"
        assignment[ids[i]] = part
    assignment = {pid: assignment[pid] for pid in ids}
    return SplitAssignment(assignment, (f_train, f_val, f_test), int(seed))


@dataclass(frozen=True)
class Standardizer:
    in_mean: float
    in_std: float
    out_mean: float
    out_std: float

    @classmethod
    def fit(cls, windows, targets):
        """Statistics of the input windows and the targets; pass the train partition only."""
        windows = np.asarray(windows, dtype=float)
        targets = np.asarray(targets, dtype=float)
        in_mean, in_std = _stream_stats(windows, "input")
        out_mean, out_std = _stream_stats(targets, "target")
        return cls(in_mean, in_std, out_mean, out_std)

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["in_mean"]), float(d["in_std"]), float(d["out_mean"]), float(d["out_std"]))

    def to_dict(self):
        return {"in_mean": self.in_mean, "in_std": self.in_std, "out_mean": self.out_mean, "out_std": self.out_std}

    def apply_inputs(self, windows):
        return (np.asarray(windows, dtype=float) - self.in_mean) / self.in_std

    def apply_targets(self, targets):
        return (np.asarray(targets, dtype=float) - self.out_mean) / self.out_std

    def invert_inputs(self, z):
        return np.asarray(z, dtype=float) * self.in_std + self.in_mean

    def invert_targets(self, z):
        return np.asarray(z, dtype=float) * self.out_std + self.out_mean


def _stream_stats(values, name):
    if values.size == 0:
        raise DegenerateSpread(f"{name} stream is empty")
    mean = float(values.mean())
    std = float(values.std())
    if std < STD_FLOOR:
        raise DegenerateSpread(f"{name} stream is constant (std {std:g})")
    return mean, std


def standardize_fit(windows, targets):
    return Standardizer.fit(windows, targets)


# -- synthetic paired data -------------------------------------------------

def default_law(k):
    return 1.8 * np.power(k, 0.9)


def identity_law(k):
    return np.array(k, dtype=float, copy=True)


LAWS = {"default": default_law, "identity": identity_law}


def boundary_layer_k(y, amplitude, thickness):
    """k(y) = A (y/delta) exp(1 - y/delta); peaks at y = delta with value A."""
    s = np.asarray(y, dtype=float) / thickness
    return amplitude * s * np.exp(1.0 - s)


@dataclass
class SynthConfig:
    """Synthetic profile family.

    ``noise`` is the Gaussian noise standard deviation on k_dns as a fraction
    of each profile's noiseless k_dns peak.
    """

    profiles: int = 12
    points: int = 64
    law: object = "default"
    noise: float = 0.01
    seed: int = 0
    cases: int = 1
    u_inf: float = 1.0
    amplitude_range: tuple = (0.5, 1.5)
    thickness_range: tuple = (0.1, 0.3)
    span_range: tuple = (4.0, 4.0)

    def law_fn(self) -> Callable:
        if callable(self.law):
            return self.law
        try:
            return LAWS[self.law]
        except KeyError:
            raise InvalidConfig(f"unknown discrepancy law {self.law!r}; expected one of {sorted(LAWS)}") from None

    def validate(self):
        if self.profiles < 3:
            raise InvalidConfig(f"need at least 3 profiles, got {self.profiles}")
        if self.points < WINDOW:
            raise InvalidConfig(f"need at least {WINDOW} points per profile, got {self.points}")
        if not self.noise >= 0.0:
            raise InvalidConfig("noise must be non-negative")
        if self.cases < 1 or self.cases > self.profiles:
            raise InvalidConfig("cases must lie between 1 and the number of profiles")
        if not self.u_inf > 0.0:
            raise InvalidConfig("u_inf must be positive")
        lo, hi = self.amplitude_range
        if not 0.0 < lo <= hi:
            raise InvalidConfig("amplitude range must be positive and ordered")
        for name in ("thickness_range", "span_range"):
            lo, hi = getattr(self, name)
            if not 0.0 < lo <= hi:
                raise InvalidConfig(f"{name} must be positive and ordered")
        self.law_fn()


def _stratified(rng, bounds, n):
    """One uniform draw per equal-width stratum of ``bounds``, in shuffled order."""
    lo, hi = bounds
    draws = lo + (hi - lo) * (np.arange(n) + rng.uniform(size=n)) / n
    return draws[rng.permutation(n)]


def synthesize(config: SynthConfig) -> ProfileSet:
    """Deterministic paired profiles from the boundary-layer family.

    Profiles are dealt round-robin to ``config.cases`` cases; stations are
    evenly spaced in (0, 1) within each case. Noisy k_dns is clipped at 0.
    """
    config.validate()
    law = config.law_fn()
    rng = np.random.default_rng(config.seed)
    amplitudes = _stratified(rng, config.amplitude_range, config.profiles)
    thicknesses = _stratified(rng, config.thickness_range, config.profiles)
    spans = _stratified(rng, config.span_range, config.profiles)
    per_case = [list(range(c, config.profiles, config.cases)) for c in range(config.cases)]
    profiles = []
    u2 = config.u_inf**2
    for c, members in enumerate(per_case):
        case_id = f"synth{c}" if config.cases > 1 else "synth"
        for j, i in enumerate(members):
            station = round((j + 1) / (len(members) + 1), 12)
            amplitude = amplitudes[i] * u2
            thickness = thicknesses[i]
            y = np.linspace(0.0, spans[i] * thickness, config.points)
            k_rans = boundary_layer_k(y, amplitude, thickness)
            k_dns = np.asarray(law(k_rans), dtype=float)
            if config.noise > 0.0:
                sigma = config.noise * float(np.max(k_dns))
                k_dns = np.maximum(k_dns + rng.normal(0.0, sigma, size=k_dns.shape), 0.0)
            profiles.append(Profile(case_id, station, np.full_like(y, station), y.copy(), k_rans, k_dns))
    profiles.sort(key=lambda p: p.id)
    cases = sorted({p.case_id for p in profiles})
    return ProfileSet(profiles, {c: float(config.u_inf) for c in cases})
