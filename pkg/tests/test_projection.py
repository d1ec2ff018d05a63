import numpy as np
import pytest

from radbergman.projection import (
    HarmonicPolynomial, PolarFunctionSample, PolarMesh, default_z_grid, project,
    szego_agreement_check, szego_project,
)
from radbergman.weights import Exponential, Standard


def test_szego_projection_drops_negative_modes():
    f = HarmonicPolynomial({-2: 1.0, 0: 2.0, 3: 1j})
    assert szego_project(f).coeffs == {0: 2.0, 3: 1j}


def test_harmonic_polynomial_evaluation():
    f = HarmonicPolynomial({-1: 1.0, 2: 3.0})
    z = 0.3 + 0.4j
    assert f(z) == pytest.approx(np.conj(z) + 3 * z ** 2)
    assert (f + f.scale(-1)).coeffs == {}
    assert f.degree == 2


def test_mesh_validation():
    with pytest.raises(ValueError):
        PolarMesh(n_theta=48)


def test_mesh_weights_integrate_area():
    s = PolarFunctionSample.from_function(lambda z: np.ones_like(z))
    R = s.mesh.radius
    assert s.integrate().real == pytest.approx(R ** 2, rel=1e-13)


@pytest.mark.parametrize("spec", [Standard(a=0.0), Standard(a=1.0), Exponential(alpha=1.0, beta=1.0)])
def test_radial_projection_is_szego(spec):
    assert szego_agreement_check(spec, M=8).max_deviation < 1e-8


def test_sampled_projection_agrees():
    chk = szego_agreement_check(Standard(a=1.0), M=4, method="sampled")
    assert chk.max_deviation < 1e-8


def test_projection_commutes_with_rotation():
    w = Standard(a=0.5)
    f = HarmonicPolynomial({-3: 1.0, 1: 0.5, 2: -1j})
    z = default_z_grid()
    phi = 0.7
    lhs = project(w, f.rotate(phi), z)
    rhs = project(w, f, z * np.exp(-1j * phi))
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_projection_is_linear():
    w = Standard(a=2.0)
    f = HarmonicPolynomial({0: 1.0, 2: 1.0})
    g = HarmonicPolynomial({-1: 2.0, 1: 1j})
    z = default_z_grid()
    both = project(w, f + g.scale(3.0), z)
    assert np.allclose(both, project(w, f, z) + 3.0 * project(w, g, z), atol=1e-13)


def test_argument_checks():
    w = Standard(a=0.0)
    with pytest.raises(ValueError):
        project(w, HarmonicPolynomial({0: 1.0}), np.array([1.0 + 0j]))
    with pytest.raises(TypeError):
        project(w, lambda z: z, np.array([0.1 + 0j]))
    with pytest.raises(ValueError):
        szego_agreement_check(w, M=40, mesh=PolarMesh(n_theta=64))
