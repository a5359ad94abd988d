"""Leave-one-out cross-validation and weighted out-of-sample R^2."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, UndefinedStatisticError
from .inception import Dataset, inverse_logit, sample_weights
from .kernels import KernelMatrix, KernelSpec, kernel_matrix
from .svr import SvrConfig, decision_values, kkt_report, solve_dual

RESULT_COLUMNS = ("group_id", "gender", "age_years", "weight", "observed_rate", "predicted_rate")


def weighted_r2(observed, predicted, weights) -> float:
    o = np.asarray(observed, dtype=float)
    p = np.asarray(predicted, dtype=float)
    w = np.asarray(weights, dtype=float)
    if not (o.shape == p.shape == w.shape) or o.ndim != 1:
        raise ValueError("observed, predicted and weights must be equal-length vectors")
    if o.size < 2:
        raise ValueError("weighted R^2 needs at least two observations")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    mean = np.sum(w * o) / np.sum(w)
    total = np.sum(w * (o - mean) ** 2)
    # relative test: tiny spreads left by rounding count as zero variance
    if total <= 1e-28 * max(np.sum(w * o**2), 1e-300):
        raise UndefinedStatisticError("observed rates have zero weighted variance")
    return float(1.0 - np.sum(w * (o - p) ** 2) / total)


@dataclass(frozen=True)
class FoldResult:
    group_id: str
    gender: int
    age_years: float
    observed_rate: float
    predicted_rate: float
    predicted_logit: float
    weight: float
    iterations: int
    kkt_violation: float


@dataclass(frozen=True)
class LoocvResult:
    per_group: tuple[FoldResult, ...]
    weighted_r2: float | None
    r2_note: str
    kernel_spec: KernelSpec
    config: SvrConfig

    @property
    def r2_defined(self) -> bool:
        return self.weighted_r2 is not None

    def to_json(self) -> str:
        doc = {
            "weighted_r2": self.weighted_r2,
            "r2_defined": self.r2_defined,
            "r2_note": self.r2_note,
            "kernel_spec": self.kernel_spec.to_dict(),
            "config": self.config.to_dict(),
            "per_group": [
                {
                    "group_id": f.group_id,
                    "observed_rate": f.observed_rate,
                    "predicted_rate": f.predicted_rate,
                    "predicted_logit": f.predicted_logit,
                    "weight": f.weight,
                    "iterations": f.iterations,
                    "kkt_violation": f.kkt_violation,
                }
                for f in self.per_group
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RESULT_COLUMNS)
            for f in self.per_group:
                w.writerow([
                    f.group_id,
                    "FM"[f.gender],
                    repr(float(f.age_years)),
                    format(f.weight, ".17g"),
                    format(f.observed_rate, ".17g"),
                    format(f.predicted_rate, ".17g"),
                ])


def _fit_fold(i, data, K, y, config):
    n = len(data)
    train = np.array([k for k in range(n) if k != i])
    sub = data.subset(train)
    w = sample_weights(sub)
    try:
        model = solve_dual(K.submatrix(train), y[train], w, config, kernel_spec=K.spec)
    except ConvergenceError as exc:
        raise ConvergenceError(
            f"fold {i} (group {data[i].group_id}): {exc}", exc.model, exc.max_violation
        ) from exc
    logit_hat = float(decision_values(model, K.submatrix([i], train))[0])
    report = kkt_report(model, K.submatrix(train), y[train])
    return logit_hat, model.iterations, report.max_violation


def loocv(
    data: Dataset,
    kernel_spec: KernelSpec | None = None,
    config: SvrConfig | None = None,
    kernel: KernelMatrix | None = None,
    threads: int = 1,
) -> LoocvResult:
    """Fit on n-1 groups, predict the held-out one, for every group.

    The n x n kernel is computed once (or taken from ``kernel``) and sliced
    per fold, so a shot-sampled matrix is shared by all folds.
    """
    n = len(data)
    if n < 3:
        raise ValueError(f"loocv needs at least 3 groups, got {n}")
    config = SvrConfig() if config is None else config
    if kernel is None:
        kernel = kernel_matrix(data.covariates(), kernel_spec or KernelSpec(), threads=threads)
    elif kernel.n != n:
        raise ValueError(f"kernel matrix is {kernel.n}x{kernel.n} but data has {n} groups")
    y = data.targets()

    def fold(i):
        return _fit_fold(i, data, kernel, y, config)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fits = list(pool.map(fold, range(n)))
    else:
        fits = [fold(i) for i in range(n)]

    observed = data.observed_rates()
    weights = sample_weights(data)
    per_group = []
    for i, (logit_hat, iters, viol) in enumerate(fits):
        r = data[i]
        per_group.append(FoldResult(
            group_id=r.group_id,
            gender=r.gender,
            age_years=r.age_years,
            observed_rate=float(observed[i]),
            predicted_rate=inverse_logit(logit_hat),
            predicted_logit=logit_hat,
            weight=float(weights[i]),
            iterations=iters,
            kkt_violation=viol,
        ))
    predicted = np.array([f.predicted_rate for f in per_group])
    try:
        r2, note = weighted_r2(observed, predicted, weights), ""
    except UndefinedStatisticError as exc:
        r2, note = None, f"undefined: {exc}"
    return LoocvResult(tuple(per_group), r2, note, kernel.spec, config)
