"""Weighted epsilon-SVR solved in the dual by sequential minimal optimization.

The dual is solved over the split variables ``lam`` and ``lam_star`` (both in
``[0, C_i]``) with ``alpha = lam - lam_star`` and ``sum(alpha) = 0``::

    max  -1/2 alpha' K alpha - eps * sum(lam + lam_star) + y' alpha

Per-sample boxes ``C_i = C * w_i`` carry the sample weights. Each iteration
picks the maximal KKT-violating pair (first-order selection, lowest index on
ties), moves ``alpha_a += t``, ``alpha_b -= t`` and clips to the box.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConvergenceError
from .feature_map import Covariate
from .kernels import KernelMatrix, KernelSpec, covariate_digest, kernel_vector

_CURVATURE_FLOOR = 1e-12


@dataclass(frozen=True)
class SvrConfig:
    epsilon: float = 0.05
    C: float = 1.0
    tolerance: float = 1e-6
    max_iterations: int = 100_000

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.C > 0:
            raise ValueError(f"C must be > 0, got {self.C}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "C": self.C,
            "tolerance": self.tolerance,
            "max_iterations": self.max_iterations,
        }


@dataclass(frozen=True)
class SvrModel:
    alpha: np.ndarray
    beta: float
    training_inputs: tuple[Covariate, ...]
    kernel_spec: KernelSpec
    sample_weights: np.ndarray
    config: SvrConfig = field(default_factory=SvrConfig)
    iterations: int = 0

    @property
    def box(self) -> np.ndarray:
        return self.config.C * self.sample_weights

    @property
    def data_hash(self) -> str:
        return covariate_digest(self.training_inputs)

    def to_json(self) -> str:
        doc = {
            "alpha": [float(a) for a in self.alpha],
            "beta": float(self.beta),
            "kernel_spec": self.kernel_spec.to_dict(),
            "training_inputs": [list(x.as_tuple()) for x in self.training_inputs],
            "sample_weights": [float(w) for w in self.sample_weights],
            "config": self.config.to_dict(),
            "iterations": self.iterations,
            "data_hash": self.data_hash,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SvrModel":
        doc = json.loads(text)
        try:
            inputs = tuple(Covariate(g, a) for g, a in doc["training_inputs"])
            model = cls(
                alpha=np.array(doc["alpha"], dtype=float),
                beta=float(doc["beta"]),
                training_inputs=inputs,
                kernel_spec=KernelSpec.from_dict(doc["kernel_spec"]),
                sample_weights=np.array(doc["sample_weights"], dtype=float),
                config=SvrConfig(**doc["config"]),
                iterations=int(doc.get("iterations", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed model document: {exc}") from exc
        n = len(inputs)
        if model.alpha.shape != (n,) or model.sample_weights.shape != (n,):
            raise ValueError("malformed model document: array lengths disagree")
        if "data_hash" in doc and doc["data_hash"] != model.data_hash:
            raise ValueError("malformed model document: data_hash does not match inputs")
        return model


def _as_array(K) -> np.ndarray:
    return K.values if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)


def dual_objective(alpha, K, y, epsilon: float) -> float:
    """Dual objective at ``alpha`` assuming complementary split variables."""
    alpha = np.asarray(alpha, dtype=float)
    K = _as_array(K)
    return float(-0.5 * alpha @ K @ alpha - epsilon * np.abs(alpha).sum() + np.asarray(y) @ alpha)


def _bias(u: np.ndarray, alpha: np.ndarray, box: np.ndarray, epsilon: float) -> float:
    """Bias from free support vectors, else midpoint of the feasible interval.

    ``u = y - K alpha``, so the residual of sample i is ``beta - u_i``.
    """
    at_upper = alpha >= box
    at_lower = alpha <= -box
    zero = alpha == 0
    free = ~(at_upper | at_lower | zero)
    if free.any():
        return float(np.mean(u[free] - epsilon * np.sign(alpha[free])))
    lower = np.concatenate([u[zero] - epsilon, u[at_lower] + epsilon])
    upper = np.concatenate([u[zero] + epsilon, u[at_upper] - epsilon])
    lb = lower.max() if lower.size else -np.inf
    ub = upper.min() if upper.size else np.inf
    if np.isfinite(lb) and np.isfinite(ub):
        return float(0.5 * (lb + ub))
    # one-sided: every sample sits at the same bound
    return float(lb if np.isfinite(lb) else ub)


def kkt_residuals(alpha, beta: float, K, y, box, epsilon: float) -> np.ndarray:
    """Per-sample violation of the optimality conditions (0 when satisfied)."""
    alpha = np.asarray(alpha, dtype=float)
    box = np.asarray(box, dtype=float)
    r = _as_array(K) @ alpha + beta - np.asarray(y, dtype=float)
    viol = np.empty_like(r)
    zero = alpha == 0
    up = alpha >= box
    lo = alpha <= -box
    pos = (alpha > 0) & ~up
    neg = (alpha < 0) & ~lo
    viol[zero] = np.maximum(0.0, np.abs(r[zero]) - epsilon)
    viol[pos] = np.abs(r[pos] + epsilon)
    viol[neg] = np.abs(r[neg] - epsilon)
    viol[up] = np.maximum(0.0, r[up] + epsilon)
    viol[lo] = np.maximum(0.0, epsilon - r[lo])
    return viol


@dataclass(frozen=True)
class KktReport:
    max_violation: float
    n_support: int
    n_bounded: int


def kkt_report(model: SvrModel, K, y, config: SvrConfig | None = None) -> KktReport:
    config = model.config if config is None else config
    K = _as_array(K)
    y = np.asarray(y, dtype=float)
    n = model.alpha.size
    if K.shape != (n, n) or y.shape != (n,):
        raise ValueError(f"dimension mismatch: alpha {n}, K {K.shape}, y {y.shape}")
    box = config.C * model.sample_weights
    viol = kkt_residuals(model.alpha, model.beta, K, y, box, config.epsilon)
    return KktReport(
        max_violation=float(viol.max()) if n else 0.0,
        n_support=int(np.count_nonzero(model.alpha)),
        n_bounded=int(np.count_nonzero(np.abs(model.alpha) >= box)),
    )


def solve_dual(
    K,
    y,
    weights,
    config: SvrConfig | None = None,
    training_inputs: Sequence[Covariate] = (),
    kernel_spec: KernelSpec | None = None,
) -> SvrModel:
    """Fit the weighted epsilon-SVR dual on a precomputed kernel matrix.

    Raises ``ConvergenceError`` (carrying the last iterate) if the KKT gap is
    still above ``config.tolerance`` after ``config.max_iterations`` steps.
    """
    config = SvrConfig() if config is None else config
    if isinstance(K, KernelMatrix) and kernel_spec is None:
        kernel_spec = K.spec
    K = _as_array(K)
    y = np.asarray(y, dtype=float)
    w = np.asarray(weights, dtype=float)
    n = y.size
    if K.shape != (n, n):
        raise ValueError(f"kernel shape {K.shape} does not match {n} targets")
    if w.shape != (n,):
        raise ValueError(f"{w.size} weights for {n} targets")
    if not np.all(w > 0):
        raise ValueError("sample weights must be positive")
    if training_inputs and len(training_inputs) != n:
        raise ValueError(f"{len(training_inputs)} training inputs for {n} targets")
    kernel_spec = KernelSpec(method="precomputed") if kernel_spec is None else kernel_spec

    eps, tol = config.epsilon, config.tolerance
    box = config.C * w
    lam = np.zeros(n)
    lam_star = np.zeros(n)
    Kalpha = np.zeros(n)
    diag = np.diag(K).copy()

    converged = False
    gap = np.inf
    it = 0
    while True:
        u = y - Kalpha
        # I_up / I_low in the split-variable formulation, scored as -z*grad
        up = np.concatenate([np.where(lam < box, u - eps, -np.inf),
                             np.where(lam_star > 0, u + eps, -np.inf)])
        low = np.concatenate([np.where(lam > 0, u - eps, np.inf),
                              np.where(lam_star < box, u + eps, np.inf)])
        i = int(np.argmax(up))
        j = int(np.argmin(low))
        gap = up[i] - low[j]
        if gap <= tol:
            # refresh against drift in the incrementally maintained K @ alpha
            fresh = K @ (lam - lam_star)
            if np.allclose(fresh, Kalpha, rtol=0.0, atol=0.1 * tol):
                converged = True
                break
            Kalpha = fresh
            continue
        if it >= config.max_iterations:
            break
        it += 1

        a, b = i % n, j % n
        # i raises alpha_a (lam_a up or lam_star_a down); j lowers alpha_b
        t_max_i = box[a] - lam[a] if i < n else lam_star[a]
        t_max_j = lam[b] if j < n else box[b] - lam_star[b]
        t_max = min(t_max_i, t_max_j)
        eta = diag[a] + diag[b] - 2.0 * K[a, b]
        if eta > _CURVATURE_FLOOR:
            t = min(gap / eta, t_max)
        else:
            # flat or concave direction: go to the far end of the feasible segment
            t = t_max

        if i < n:
            lam[a] = box[a] if t == t_max_i else lam[a] + t
        else:
            lam_star[a] = 0.0 if t == t_max_i else lam_star[a] - t
        if j < n:
            lam[b] = 0.0 if t == t_max_j else lam[b] - t
        else:
            lam_star[b] = box[b] if t == t_max_j else lam_star[b] + t

        if a == b:
            # both split variables of one sample moved; alpha_a is unchanged
            continue
        Kalpha += t * (K[:, a] - K[:, b])

    alpha = lam - lam_star
    u = y - Kalpha
    beta = _bias(u, alpha, box, eps)
    model = SvrModel(
        alpha=alpha,
        beta=beta,
        training_inputs=tuple(training_inputs),
        kernel_spec=kernel_spec,
        sample_weights=w.copy(),
        config=config,
        iterations=it,
    )
    if not converged:
        viol = kkt_residuals(alpha, beta, K, y, box, eps)
        raise ConvergenceError(
            f"SMO did not converge in {config.max_iterations} iterations "
            f"(KKT gap {gap:.3g}, max violation {viol.max():.3g})",
            model=model,
            max_violation=float(viol.max()),
        )
    return model


def decision_values(model: SvrModel, kernel_rows) -> np.ndarray:
    """f = K_rows @ alpha + beta for precomputed kernel rows (m x n)."""
    rows = np.atleast_2d(np.asarray(kernel_rows, dtype=float))
    return rows @ model.alpha + model.beta


def predict(model: SvrModel, x_new: Covariate, row: int | None = None) -> float:
    if not model.training_inputs:
        raise ValueError("model has no stored training inputs; use decision_values")
    kv = kernel_vector(x_new, model.training_inputs, model.kernel_spec, row=row)
    return float(kv @ model.alpha + model.beta)
