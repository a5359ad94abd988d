"""Two-qubit feature map for (gender, age) covariates.

Circuit layout, left to right::

    q0: RY(pi*gender) --o-------- RY(pi*age)
                        |
    q1: RY(pi*age) ---- RZ(pi*age) ----------
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .statevector import CRZ, RY, Circuit, adjoint

ROTATION_SCALE = math.pi
MAX_AGE_CENTURIES = 1.2
NUM_QUBITS = 2


@dataclass(frozen=True)
class Covariate:
    """A population subgroup encoded as (gender dummy, age in centuries)."""

    gender: float
    age_centuries: float

    def __post_init__(self):
        g, a = float(self.gender), float(self.age_centuries)
        object.__setattr__(self, "gender", g)
        object.__setattr__(self, "age_centuries", a)
        if not (math.isfinite(g) and 0.0 <= g <= 1.0):
            raise ValueError(f"gender must lie in [0, 1], got {g}")
        if not (math.isfinite(a) and 0.0 <= a <= MAX_AGE_CENTURIES):
            raise ValueError(f"age_centuries must lie in [0, {MAX_AGE_CENTURIES}], got {a}")

    def as_tuple(self) -> tuple[float, float]:
        return (self.gender, self.age_centuries)


def check_covariate(x: Covariate, lenient: bool = False) -> None:
    """Strict mode only admits the dummy values 0 and 1 for gender."""
    if not lenient and x.gender not in (0.0, 1.0):
        raise ValueError(f"gender must be exactly 0 or 1 in strict mode, got {x.gender}")


def embedding_circuit(x: Covariate, lenient: bool = False) -> Circuit:
    check_covariate(x, lenient)
    g = ROTATION_SCALE * x.gender
    a = ROTATION_SCALE * x.age_centuries
    return Circuit(
        NUM_QUBITS,
        (
            RY(g, 0),
            RY(a, 1),
            CRZ(a, control=0, target=1),
            RY(a, 0),
        ),
    )


def kernel_circuit(x: Covariate, z: Covariate, lenient: bool = False) -> Circuit:
    """Embed ``x``, then undo the embedding of ``z``.

    Measuring |00> on the output state has probability |<phi(z)|phi(x)>|^2.
    """
    return embedding_circuit(x, lenient) + adjoint(embedding_circuit(z, lenient))
