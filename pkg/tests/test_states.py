import numpy as np
import pytest

from transferkit import DensityMatrix, DomainError, kron, project_to_density

from conftest import random_density


class TestDensityMatrix:
    def test_validates_trace(self):
        with pytest.raises(DomainError):
            DensityMatrix(np.eye(4, dtype=complex), 2, 2)

    def test_validates_psd(self):
        m = np.diag([1.5, -0.5, 0.0, 0.0]).astype(complex)
        with pytest.raises(DomainError):
            DensityMatrix(m, 2, 2)

    def test_validates_shape(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.eye(4, dtype=complex) / 4, 3, 2)

    def test_traced_and_keep(self):
        rng = np.random.default_rng(81)
        a = random_density(rng, 2)
        b = random_density(rng, 2)
        rho = DensityMatrix(kron(a, b), 2, 2)
        assert np.allclose(rho.traced([2]).matrix, a)
        assert np.allclose(rho.keep([2]).matrix, b)

    def test_eigenvalues_sorted(self):
        rng = np.random.default_rng(82)
        rho = DensityMatrix(random_density(rng, 8), 3, 2)
        w = rho.eigenvalues()
        assert np.all(np.diff(w) >= 0)
        assert np.isclose(w.sum(), 1.0)


class TestProjection:
    def test_projects_small_negatives(self):
        m = np.diag([0.7, 0.4, -0.1, 0.0]).astype(complex)
        rho, dist = project_to_density(m, 2, 2)
        w = rho.eigenvalues()
        assert w[0] >= 0 and np.isclose(w.sum(), 1.0)
        assert dist > 0

    def test_noop_on_valid_state(self):
        rng = np.random.default_rng(83)
        m = random_density(rng, 4)
        rho, dist = project_to_density(m, 2, 2)
        assert np.allclose(rho.matrix, m, atol=1e-12)
        assert dist < 1e-12

    def test_rejects_negative_definite(self):
        with pytest.raises(DomainError):
            project_to_density(-np.eye(2, dtype=complex), 1, 2)
