import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ghrcalc import linalg as la
from ghrcalc.linalg import QMatrix, QVector, SingularMatrixError
from ghrcalc.quaternion import I, J, K, ONE, Quaternion

from conftest import qvectors, random_qmatrix


def qm(rows):
    return QMatrix(np.array([[q.as_array() for q in row] for row in rows]))


def test_hermitian_examples(rng):
    assert la.hermitian(qm([[I]])) == qm([[-I]])
    real = QMatrix.from_real(rng.standard_normal((3, 2)))
    assert la.hermitian(real) == QMatrix.from_real(real.data[:, :, 0].T)
    A, B = random_qmatrix(rng, 2, 2), random_qmatrix(rng, 2, 2)
    lhs = la.hermitian(la.matmul(A, B))
    rhs = la.matmul(la.hermitian(B), la.hermitian(A))
    assert lhs.isclose(rhs, atol=1e-13)


def test_matmul_examples(rng):
    A = random_qmatrix(rng, 3, 3)
    assert la.matmul(QMatrix.identity(3), A).isclose(A)
    assert la.matmul(qm([[I]]), qm([[J]])) == qm([[K]])
    B = random_qmatrix(rng, 2, 2)
    C = random_qmatrix(rng, 2, 2)
    assert la.max_abs_diff(la.matmul(B, C), la.matmul(C, B)) > 1e-3


def test_matmul_shape_mismatch(rng):
    with pytest.raises(ValueError):
        la.matmul(random_qmatrix(rng, 2, 3), random_qmatrix(rng, 2, 3))


def test_j_matrix_pattern():
    jm = la.j_matrix(1)
    expected = [
        [ONE, I, J, K],
        [ONE, I, -J, -K],
        [ONE, -I, J, -K],
        [ONE, -I, -J, K],
    ]
    assert jm == qm(expected)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_j_matrix_products(n):
    jm = la.j_matrix(n)
    assert la.matmul(jm, la.hermitian(jm)).isclose(QMatrix.identity(4 * n) * 4.0, atol=1e-12)
    assert (la.matmul(la.hermitian(jm), jm) * 0.25).isclose(QMatrix.identity(4 * n), atol=1e-12)


def test_augment_examples():
    h = la.augment(QVector([[1, 0, 0, 0]]))
    assert h.h == QVector([[1, 0, 0, 0]] * 4)
    assert np.array_equal(h.r, [1, 0, 0, 0])
    h = la.augment(QVector([[0, 1, 0, 0]]))
    assert h.h.isclose(QVector([[0, 1, 0, 0], [0, 1, 0, 0], [0, -1, 0, 0], [0, -1, 0, 0]]))
    assert np.array_equal(h.r, [0, 1, 0, 0])


@given(st.integers(1, 4).flatmap(qvectors))
def test_augmented_equals_j_times_real(q):
    aug = la.augment(q)
    r_as_quaternions = QVector.from_reals(aug.r)
    assert aug.h.isclose(la.matvec(la.j_matrix(len(q)), r_as_quaternions), atol=1e-12)
    assert np.allclose(la.from_augmented(aug.h), aug.r, atol=1e-12)


@given(st.integers(1, 5).flatmap(qvectors))
def test_real_round_trip(q):
    assert la.from_real(la.to_real(q)).isclose(q, atol=1e-14)


def test_real_adjoint_examples(rng):
    assert np.array_equal(la.real_adjoint(qm([[ONE]])), np.eye(4))
    prod = la.real_adjoint(qm([[I]])) @ la.real_adjoint(qm([[J]]))
    assert np.allclose(prod, la.real_adjoint(qm([[K]])))
    q = Quaternion(0.3, -1.2, 0.5, 2.0)
    chi = la.real_adjoint(qm([[q]]))
    assert np.allclose(chi[:, 0], q.as_array())
    assert np.allclose(chi.T @ chi, q.norm2() * np.eye(4))


def test_real_adjoint_homomorphism(rng):
    for _ in range(100):
        A, B = random_qmatrix(rng, 2, 3), random_qmatrix(rng, 3, 2)
        assert np.allclose(la.real_adjoint(la.matmul(A, B)), la.real_adjoint(A) @ la.real_adjoint(B), atol=1e-12)
    A = random_qmatrix(rng, 3, 2)
    assert np.allclose(la.real_adjoint(la.hermitian(A)), la.real_adjoint(A).T)
    assert la.from_real_adjoint(la.real_adjoint(A), 3, 2).isclose(A, atol=0)


def test_real_adjoint_acts_on_coordinates(rng):
    A = random_qmatrix(rng, 4, 3)
    x = la.random_qvector(rng, 3)
    assert np.allclose(la.real_adjoint(A) @ x.to_real(), la.matvec(A, x).to_real())


def test_solve_examples(rng):
    b = la.random_qvector(rng, 3)
    assert la.solve(QMatrix.identity(3), b).isclose(b, atol=1e-15)
    x = la.solve(qm([[I]]), QVector([K.as_array()]))
    assert x.isclose(QVector([J.as_array()]), atol=1e-15)
    G = random_qmatrix(rng, 3, 3)
    A = la.matmul(la.hermitian(G), G) + QMatrix.identity(3)
    x_true = la.random_qvector(rng, 3)
    assert la.solve(A, la.matvec(A, x_true)).isclose(x_true, atol=1e-8)


def test_solve_matrix_rhs_and_inverse(rng):
    A = random_qmatrix(rng, 3, 3)
    assert la.matmul(A, la.inv(A)).isclose(QMatrix.identity(3), atol=1e-10)


def test_singular_solve_raises():
    A = QMatrix.from_real(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(SingularMatrixError) as info:
        la.solve(A, QVector.zeros(2))
    assert info.value.condition > la.COND_LIMIT
    with pytest.raises(ValueError):
        la.solve(QMatrix.zeros(2, 3), QVector.zeros(2))


def test_pinv_apply_examples(rng):
    b = la.random_qvector(rng, 3)
    assert la.pinv_apply(QMatrix.identity(3), b).isclose(b, atol=1e-14)
    A = QMatrix.from_real(rng.standard_normal((6, 3)))
    expected = np.linalg.lstsq(A.data[:, :, 0], b.data[:, 0].tolist() + [0.0] * 3, rcond=None)[0]
    b6 = QVector.from_reals(b.data[:, 0].tolist() + [0.0] * 3)
    assert np.allclose(la.pinv_apply(A, b6).data[:, 0], expected, atol=1e-12)
    A = random_qmatrix(rng, 6, 3)
    x = la.random_qvector(rng, 3)
    got = la.pinv_apply(A, la.matvec(A, x))
    assert (la.matvec(A, got) - la.matvec(A, x)).norm() < 1e-10


def test_positive_definite(rng):
    G = random_qmatrix(rng, 4, 3)
    gram = la.matmul(la.hermitian(G), G)
    assert la.is_positive_definite(gram)
    assert not la.is_positive_definite(gram * -1.0)


@given(qvectors(3), qvectors(3))
def test_inner_products(p, q):
    assert la.dot_h(p, q).isclose(la.dot_h(q, p).conj(), atol=1e-12)
    assert la.dot_h(p, p).is_real or abs(la.dot_h(p, p).vector.norm()) < 1e-12
    assert la.dot_h(p, p).a == pytest.approx(p.norm2(), rel=1e-12, abs=1e-12)


def test_vector_arithmetic_sides():
    v = QVector([I.as_array()])
    # right and left scalar multiplication differ for quaternion scalars
    assert (v * J)[0] == K
    assert (J * v)[0] == -K


def test_serialization(rng):
    A = random_qmatrix(rng, 3, 2)
    v = la.random_qvector(rng, 4)
    assert la.loads_matrix(la.dumps(A)) == A
    assert la.loads_vector(la.dumps(v)) == v
    for x, vector in ((A, False), (v, True)):
        buf = io.StringIO()
        la.write_csv(x, buf)
        buf.seek(0)
        assert la.read_csv(buf, vector=vector) == x
