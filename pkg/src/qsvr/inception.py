"""Binomial disability-inception data: records, targets, weights, ingestion, synthesis."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import IngestionError
from .feature_map import Covariate

CSV_COLUMNS = ("group_id", "gender", "age_years", "exposure", "inceptions")
GENDER_CODES = {"F": 0, "M": 1}
MAX_AGE_YEARS = 120.0


@dataclass(frozen=True)
class CohortRecord:
    group_id: str
    gender: int
    age_years: float
    exposure: int
    inceptions: int

    def __post_init__(self):
        if self.gender not in (0, 1):
            raise ValueError(f"{self.group_id}: gender must be 0 or 1, got {self.gender!r}")
        if not (math.isfinite(self.age_years) and 0.0 <= self.age_years <= MAX_AGE_YEARS):
            raise ValueError(f"{self.group_id}: age_years must lie in [0, 120], got {self.age_years}")
        if self.exposure < 0 or self.inceptions < 0:
            raise ValueError(f"{self.group_id}: counts must be non-negative")
        if self.inceptions > self.exposure:
            raise ValueError(
                f"{self.group_id}: inceptions ({self.inceptions}) exceed exposure ({self.exposure})"
            )

    @property
    def observed_rate(self) -> float:
        """Continuity-corrected rate (D + 1/2) / (E + 1)."""
        if self.exposure < 1:
            raise ValueError(f"{self.group_id}: exposure must be >= 1")
        return (self.inceptions + 0.5) / (self.exposure + 1.0)


@dataclass(frozen=True)
class Dataset:
    records: tuple[CohortRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        ids = [r.group_id for r in self.records]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate group_id(s): {', '.join(dupes)}")

    @property
    def n(self) -> int:
        return len(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, idx):
        return self.records[idx]

    def covariates(self) -> list[Covariate]:
        return [to_covariate(r) for r in self.records]

    def targets(self) -> np.ndarray:
        return np.array([logit_target(r) for r in self.records])

    def observed_rates(self) -> np.ndarray:
        return np.array([r.observed_rate for r in self.records])

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(tuple(self.records[i] for i in indices))


def to_covariate(record: CohortRecord) -> Covariate:
    # the only place years become centuries
    return Covariate(float(record.gender), record.age_years / 100.0)


def logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def inverse_logit(v):
    """Numerically stable logistic function; accepts scalars or arrays."""
    v = np.asarray(v, dtype=float)
    e = np.exp(-np.abs(v))
    out = np.where(v >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(out) if out.ndim == 0 else out


def logit_target(record: CohortRecord) -> float:
    if record.exposure < 1:
        raise ValueError(f"{record.group_id}: exposure must be >= 1 to form a target")
    return logit(record.observed_rate)


def sample_weights(data: Dataset | Sequence[CohortRecord]) -> np.ndarray:
    """Exposure-proportional weights normalised to mean one."""
    E = np.array([r.exposure for r in data], dtype=float)
    if E.size == 0:
        raise ValueError("no records")
    total = E.sum()
    if total <= 0:
        raise ValueError("all exposures are zero")
    if np.any(E <= 0):
        raise ValueError("every record needs positive exposure to receive a weight")
    return E.size * E / total


# --- ingestion --------------------------------------------------------------


def _parse_row(row: dict, line: int) -> CohortRecord:
    gid = row["group_id"]
    where = f"row {line} (group_id={gid!r})"
    g = row["gender"].strip()
    if g not in GENDER_CODES:
        raise IngestionError(f"{where}: gender must be F or M, got {g!r}")
    try:
        age = float(row["age_years"])
        exposure = int(row["exposure"])
        inceptions = int(row["inceptions"])
    except ValueError as exc:
        raise IngestionError(f"{where}: {exc}") from exc
    if exposure < 1:
        raise IngestionError(f"{where}: exposure must be a positive integer, got {exposure}")
    if inceptions > exposure:
        raise IngestionError(f"{where}: inceptions ({inceptions}) exceed exposure ({exposure})")
    try:
        return CohortRecord(gid, GENDER_CODES[g], age, exposure, inceptions)
    except ValueError as exc:
        raise IngestionError(f"{where}: {exc}") from exc


def read_dataset(path) -> Dataset:
    """Load a cohort CSV with header group_id,gender,age_years,exposure,inceptions."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = tuple(reader.fieldnames or ())
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise IngestionError(f"{path}: missing column(s): {', '.join(missing)}")
        if header != CSV_COLUMNS:
            raise IngestionError(
                f"{path}: header must be exactly {','.join(CSV_COLUMNS)}, got {','.join(header)}"
            )
        records = []
        for line, row in enumerate(reader, start=2):
            if None in row or any(v is None for v in row.values()):
                raise IngestionError(f"row {line}: expected {len(CSV_COLUMNS)} fields")
            records.append(_parse_row(row, line))
    if len(records) < 2:
        raise IngestionError(f"{path}: need at least 2 groups, got {len(records)}")
    try:
        return Dataset(tuple(records))
    except ValueError as exc:
        raise IngestionError(f"{path}: {exc}") from exc


def write_dataset(data: Dataset, path) -> None:
    codes = {v: k for k, v in GENDER_CODES.items()}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in data:
            w.writerow([r.group_id, codes[r.gender], repr(float(r.age_years)), r.exposure, r.inceptions])


# --- synthetic cohorts ------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """Ground truth for synthetic data; artifact configuration, not fitted values.

    ``logit p = intercept + age_slope * age_centuries + male_shift * gender``
    unless ``fixed_probability`` pins p for every group. Exposure follows a
    Gaussian bump between ``exposure_min`` and ``exposure_max`` centred at
    ``peak_age``.
    """

    intercept: float = -5.0
    age_slope: float = 3.0
    male_shift: float = 0.5
    fixed_probability: float | None = None
    age_min: float = 20.0
    age_max: float = 60.0
    peak_age: float = 40.0
    peak_width: float = 12.0
    exposure_min: int = 10_000
    exposure_max: int = 100_000

    def __post_init__(self):
        if self.fixed_probability is not None and not 0.0 <= self.fixed_probability <= 1.0:
            raise ValueError(f"fixed_probability must lie in [0, 1], got {self.fixed_probability}")
        if not 0.0 <= self.age_min <= self.age_max <= MAX_AGE_YEARS:
            raise ValueError("need 0 <= age_min <= age_max <= 120")
        if not 1 <= self.exposure_min <= self.exposure_max:
            raise ValueError("need 1 <= exposure_min <= exposure_max")
        if not self.peak_width > 0:
            raise ValueError("peak_width must be positive")
        for name in ("intercept", "age_slope", "male_shift", "peak_age"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def probability(self, gender: float, age_years: float) -> float:
        if self.fixed_probability is not None:
            return self.fixed_probability
        v = self.intercept + self.age_slope * age_years / 100.0 + self.male_shift * gender
        return inverse_logit(v)

    def exposure(self, age_years: float) -> int:
        bump = math.exp(-(((age_years - self.peak_age) / self.peak_width) ** 2))
        return int(round(self.exposure_min + (self.exposure_max - self.exposure_min) * bump))


def synth_dataset(n_groups: int, seed: int, scenario: Scenario | None = None) -> Dataset:
    """Synthetic cohorts: the first n//2 groups female, the rest male.

    Within each gender, ages are evenly spaced over [age_min, age_max].
    Inception counts are binomial draws from the scenario's ground truth.
    """
    if n_groups < 2:
        raise ValueError(f"n_groups must be >= 2, got {n_groups}")
    scenario = Scenario() if scenario is None else scenario
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    n_female = n_groups // 2
    records = []
    for gender, count in ((0, n_female), (1, n_groups - n_female)):
        ages = np.linspace(scenario.age_min, scenario.age_max, count)
        for age in ages:
            age = round(float(age), 6)
            E = scenario.exposure(age)
            p = scenario.probability(gender, age)
            D = int(rng.binomial(E, p))
            gid = f"{'FM'[gender]}{len(records):03d}"
            records.append(CohortRecord(gid, gender, age, E, D))
    return Dataset(tuple(records))


def read_covariate_rows(path) -> list[tuple[str, int, float]]:
    """Read (group_id, gender, age_years) from a CSV holding at least those columns.

    Accepts both the full cohort schema and a bare three-column file of new
    covariates to score.
    """
    needed = ("group_id", "gender", "age_years")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = tuple(reader.fieldnames or ())
        missing = [c for c in needed if c not in header]
        if missing:
            raise IngestionError(f"{path}: missing column(s): {', '.join(missing)}")
        rows = []
        for line, row in enumerate(reader, start=2):
            g = (row["gender"] or "").strip()
            if g not in GENDER_CODES:
                raise IngestionError(f"row {line}: gender must be F or M, got {g!r}")
            try:
                age = float(row["age_years"])
            except (TypeError, ValueError) as exc:
                raise IngestionError(f"row {line}: {exc}") from exc
            if not (math.isfinite(age) and 0.0 <= age <= MAX_AGE_YEARS):
                raise IngestionError(f"row {line}: age_years must lie in [0, 120], got {age}")
            rows.append((row["group_id"], GENDER_CODES[g], age))
    return rows
