import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import embedding_unitary
from qsvr.feature_map import Covariate, embedding_circuit, kernel_circuit
from qsvr.statevector import GateKind, apply_circuit, ground_state, outcome_probability

ages = st.floats(0.0, 1.2)
covariates = st.builds(Covariate, st.sampled_from([0.0, 1.0]), ages)


def test_zero_covariate_is_identity():
    c = embedding_circuit(Covariate(0, 0))
    assert [g.angle for g in c.gates] == [0.0] * 4
    out = apply_circuit(ground_state(2), c)
    np.testing.assert_array_equal(out.amplitudes, ground_state(2).amplitudes)


def test_male_age_zero_maps_to_index_two():
    c = embedding_circuit(Covariate(1, 0))
    assert [(g.kind, g.angle, g.target, g.control) for g in c.gates] == [
        (GateKind.RY, np.pi, 0, None),
        (GateKind.RY, 0.0, 1, None),
        (GateKind.CRZ, 0.0, 1, 0),
        (GateKind.RY, 0.0, 0, None),
    ]
    out = apply_circuit(ground_state(2), c)
    np.testing.assert_allclose(out.amplitudes, [0, 0, 1, 0], atol=1e-15)


def test_gate_layout_for_female_age_thirty():
    c = embedding_circuit(Covariate(0, 0.30))
    assert [g.angle for g in c.gates] == pytest.approx([0, 0.3 * np.pi, 0.3 * np.pi, 0.3 * np.pi])
    assert [(g.kind, g.target, g.control) for g in c.gates] == [
        (GateKind.RY, 0, None),
        (GateKind.RY, 1, None),
        (GateKind.CRZ, 1, 0),
        (GateKind.RY, 0, None),
    ]


@given(covariates)
def test_embedding_matches_dense_unitary(x):
    out = apply_circuit(ground_state(2), embedding_circuit(x))
    np.testing.assert_allclose(out.amplitudes, embedding_unitary(*x.as_tuple())[:, 0], atol=1e-12)


def test_kernel_circuit_structure():
    x, z = Covariate(1, 0.4), Covariate(0, 0.7)
    kc = kernel_circuit(x, z)
    ez = embedding_circuit(z).gates
    assert len(kc) == 8
    assert kc.gates[:4] == embedding_circuit(x).gates
    for got, src in zip(kc.gates[4:], reversed(ez)):
        assert (got.kind, got.target, got.control) == (src.kind, src.target, src.control)
        assert got.angle == -src.angle


@given(covariates)
def test_self_kernel_is_one(x):
    psi = apply_circuit(ground_state(2), kernel_circuit(x, x))
    assert outcome_probability(psi, 0) == pytest.approx(1.0, abs=1e-12)


def test_genders_orthogonal_at_age_zero():
    psi = apply_circuit(ground_state(2), kernel_circuit(Covariate(0, 0), Covariate(1, 0)))
    assert abs(psi.amplitudes[0]) < 1e-15
    a = apply_circuit(ground_state(2), embedding_circuit(Covariate(0, 0))).amplitudes
    b = apply_circuit(ground_state(2), embedding_circuit(Covariate(1, 0))).amplitudes
    assert abs(np.vdot(a, b)) < 1e-15


@pytest.mark.parametrize("gender", [0.0, 1.0])
@pytest.mark.parametrize("ref", [0.0, 0.3, 0.55, 0.9, 1.2])
def test_kernel_continuity_in_age(gender, ref):
    # three rotation angles of pi*age, each |dK/dtheta| <= 1, so |dK/dage| <= 3*pi
    lipschitz = 3 * np.pi
    h = 1e-3
    grid = np.arange(0.0, 1.2 + 1e-12, h)
    x = Covariate(gender, ref)
    k = np.array([
        outcome_probability(apply_circuit(ground_state(2), kernel_circuit(x, Covariate(gender, b))), 0)
        for b in grid
    ])
    assert np.max(np.abs(np.diff(k))) <= lipschitz * h


def test_strict_and_lenient_gender():
    x = Covariate(0.5, 0.3)
    with pytest.raises(ValueError):
        embedding_circuit(x)
    c = embedding_circuit(x, lenient=True)
    assert c.gates[0].angle == pytest.approx(0.5 * np.pi)


@pytest.mark.parametrize("g,a", [(-0.1, 0.2), (1.5, 0.2), (0, -0.01), (1, 1.21), (0, float("nan"))])
def test_covariate_validation(g, a):
    with pytest.raises(ValueError):
        Covariate(g, a)
