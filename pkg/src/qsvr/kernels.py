"""Kernel evaluation: exact and shot-sampled quantum kernels plus classical baselines."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .feature_map import Covariate, kernel_circuit
from .statevector import apply_circuit, derive_seed, ground_state, outcome_probability, sample_outcomes

QUANTUM_METHODS = ("statevector", "shots")
CLASSICAL_METHODS = ("linear", "polynomial", "rbf", "sigmoid")
METHODS = QUANTUM_METHODS + CLASSICAL_METHODS + ("precomputed",)
DEFAULT_SHOTS = 8192


@dataclass(frozen=True)
class KernelSpec:
    """Which kernel to evaluate and its hyperparameters.

    ``gamma=None`` means "derive from the data" (1 / (d * variance of all
    covariate values)); :func:`resolve_spec` fills it in.
    """

    method: str = "statevector"
    shots: int = DEFAULT_SHOTS
    seed: int = 0
    gamma: float | None = None
    coef0: float = 0.0
    degree: int = 3
    lenient_gender: bool = False
    clip_negative_eigenvalues: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown kernel method {self.method!r}; expected one of {METHODS}")
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")

    @property
    def is_quantum(self) -> bool:
        return self.method in QUANTUM_METHODS

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(**d)


def covariate_digest(data: Sequence[Covariate]) -> str:
    payload = json.dumps([[repr(x.gender), repr(x.age_centuries)] for x in data])
    return hashlib.sha256(payload.encode()).hexdigest()


def _as_matrix(data: Sequence[Covariate]) -> np.ndarray:
    return np.array([x.as_tuple() for x in data], dtype=float).reshape(len(data), 2)


def default_gamma(data: Sequence[Covariate]) -> float:
    X = _as_matrix(data)
    var = X.var() if X.size else 0.0
    if var <= 0:
        return 1.0
    return 1.0 / (X.shape[1] * var)


def resolve_spec(spec: KernelSpec, data: Sequence[Covariate]) -> KernelSpec:
    if spec.method in ("polynomial", "rbf", "sigmoid") and spec.gamma is None:
        return replace(spec, gamma=default_gamma(data))
    return spec


# --- single entries -------------------------------------------------------


def exact_quantum_kernel(x: Covariate, z: Covariate, lenient: bool = False) -> float:
    """|<phi(z)|phi(x)>|^2 read off as the probability of |00>."""
    psi = apply_circuit(ground_state(2), kernel_circuit(x, z, lenient))
    return outcome_probability(psi, 0)


def sampled_quantum_kernel(
    x: Covariate, z: Covariate, shots: int, seed: int, lenient: bool = False
) -> float:
    """Frequency of |00> over ``shots`` measurements of the kernel circuit."""
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    psi = apply_circuit(ground_state(2), kernel_circuit(x, z, lenient))
    counts = sample_outcomes(psi, shots, seed)
    return counts[0] / shots


def classical_kernel(x, z, spec: KernelSpec) -> float:
    x = np.asarray(x, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    if x.shape != z.shape:
        raise ValueError(f"dimension mismatch: {x.size} vs {z.size}")
    method = spec.method
    if method == "linear":
        return float(x @ z)
    if spec.gamma is None:
        raise ValueError(f"{method} kernel needs a resolved gamma")
    if method == "polynomial":
        return float((spec.gamma * (x @ z) + spec.coef0) ** spec.degree)
    if method == "rbf":
        d = x - z
        return float(math.exp(-spec.gamma * (d @ d)))
    if method == "sigmoid":
        return float(math.tanh(spec.gamma * (x @ z) + spec.coef0))
    raise ValueError(f"{method!r} is not a classical kernel")


def _entry(x: Covariate, z: Covariate, spec: KernelSpec, i: int, j: int) -> float:
    if spec.method == "statevector":
        return exact_quantum_kernel(x, z, spec.lenient_gender)
    if spec.method == "shots":
        # seed keyed on the unordered pair so (i, j) and (j, i) share one draw
        seed = derive_seed(spec.seed, min(i, j), max(i, j))
        return sampled_quantum_kernel(x, z, spec.shots, seed, spec.lenient_gender)
    if spec.method == "precomputed":
        raise ValueError("a precomputed kernel cannot be evaluated on new data")
    return classical_kernel(x.as_tuple(), z.as_tuple(), spec)


# --- matrices -------------------------------------------------------------


@dataclass(frozen=True)
class KernelMatrix:
    values: np.ndarray
    spec: KernelSpec
    data_hash: str

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"kernel matrix must be square, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def submatrix(self, rows, cols=None) -> np.ndarray:
        cols = rows if cols is None else cols
        return self.values[np.ix_(rows, cols)]

    def to_csv(self, path) -> None:
        write_kernel_csv(self.values, path)
        sidecar = {"spec": self.spec.to_dict(), "data_hash": self.data_hash, "n": self.n}
        Path(sidecar_path(path)).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_csv(cls, path) -> "KernelMatrix":
        values = read_kernel_csv(path)
        side = Path(sidecar_path(path))
        if side.exists():
            meta = json.loads(side.read_text())
            return cls(values, KernelSpec.from_dict(meta["spec"]), meta["data_hash"])
        return cls(values, KernelSpec(method="precomputed"), "")


def sidecar_path(path) -> str:
    return str(path) + ".json"


def write_kernel_csv(values: np.ndarray, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for row in np.asarray(values):
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")


def read_kernel_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ValueError(f"{path}: kernel CSV is not a square matrix")
    return np.array(rows, dtype=float)


def clip_to_psd(values: np.ndarray) -> np.ndarray:
    """Zero out negative eigenvalues of the symmetric part and rebuild."""
    sym = 0.5 * (values + values.T)
    w, V = np.linalg.eigh(sym)
    out = (V * np.clip(w, 0.0, None)) @ V.T
    return 0.5 * (out + out.T)


def kernel_matrix(data: Sequence[Covariate], spec: KernelSpec, threads: int = 1) -> KernelMatrix:
    """Full n x n kernel matrix.

    Only the upper triangle is evaluated and mirrored. For quantum methods
    the diagonal is set to exactly 1.
    """
    n = len(data)
    if n < 1:
        raise ValueError("kernel_matrix needs at least one data point")
    spec = resolve_spec(spec, data)

    def row(i: int) -> list[float]:
        return [_entry(data[i], data[j], spec, i, j) for j in range(i, n)]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, range(n)))
    else:
        rows = [row(i) for i in range(n)]

    K = np.empty((n, n))
    for i, r in enumerate(rows):
        K[i, i:] = r
        K[i:, i] = r
    if spec.is_quantum:
        np.fill_diagonal(K, 1.0)
    if spec.clip_negative_eigenvalues:
        K = clip_to_psd(K)
    return KernelMatrix(K, spec, covariate_digest(data))


def kernel_vector(
    x_new: Covariate, data: Sequence[Covariate], spec: KernelSpec, row: int | None = None
) -> np.ndarray:
    """Kernel values K(x_new, data[j]) for every j.

    ``row`` is the index used to derive per-entry seeds for the shots method;
    passing ``k`` reproduces row ``k`` of :func:`kernel_matrix` off the
    diagonal. Defaults to ``len(data)``, i.e. a point outside the training set.
    """
    n = len(data)
    if n == 0:
        return np.zeros(0)
    if spec.method in ("polynomial", "rbf", "sigmoid") and spec.gamma is None:
        raise ValueError("kernel_vector needs a spec with resolved gamma (see resolve_spec)")
    i = n if row is None else row
    return np.array([_entry(x_new, data[j], spec, i, j) for j in range(n)])


@dataclass(frozen=True)
class PsdDiagnostics:
    min_eigenvalue: float
    symmetry_defect: float


def psd_diagnostics(K) -> PsdDiagnostics:
    values = K.values if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {values.shape}")
    if values.size == 0:
        return PsdDiagnostics(float("nan"), 0.0)
    defect = float(np.max(np.abs(values - values.T)))
    eig = np.linalg.eigvalsh(0.5 * (values + values.T))
    return PsdDiagnostics(float(eig[0]), defect)
