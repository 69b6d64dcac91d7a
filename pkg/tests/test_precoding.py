import numpy as np
import pytest

from mimo_d2d import SingularMatrixError, zf_precoder


def test_orthonormal_rows_give_hermitian_transpose():
    h = np.zeros((2, 4), dtype=complex)
    h[0, 0] = 1.0
    h[1, 1] = 1.0
    p = zf_precoder(h)
    assert np.allclose(p.matrix, h.conj().T)


def test_random_instance_residual(rng):
    h = rng.standard_normal((4, 16)) + 1j * rng.standard_normal((4, 16))
    p = zf_precoder(h, cell_index=2)
    assert p.cell_index == 2
    assert np.linalg.norm(h @ p.matrix - np.eye(4), "fro") < 1e-10


def test_rank_deficient_raises():
    h = np.ones((3, 8), dtype=complex)  # duplicated rows
    with pytest.raises(SingularMatrixError) as err:
        zf_precoder(h)
    assert err.value.condition_estimate is None or err.value.condition_estimate > 1e12


def test_wide_matrix_required():
    h = np.random.default_rng(0).standard_normal((8, 4)) + 0j
    with pytest.raises(SingularMatrixError):
        zf_precoder(h)


def test_scale_covariance(rng):
    h = rng.standard_normal((3, 12)) + 1j * rng.standard_normal((3, 12))
    p1 = zf_precoder(h).matrix
    p2 = zf_precoder(2.5 * h).matrix
    assert np.allclose(p2, p1 / 2.5, rtol=1e-10, atol=0)


def test_residual_at_production_shape(rng):
    h = rng.standard_normal((10, 250)) + 1j * rng.standard_normal((10, 250))
    p = zf_precoder(h)
    assert np.linalg.norm(h @ p.matrix - np.eye(10), "fro") < 1e-8
