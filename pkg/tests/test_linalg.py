import sympy
from hypothesis import given, strategies as st

from lgdefect.linalg import det_scalar, inverse_scalar, kernel, rank_of_columns, solve_dense
from lgdefect.scalar import FieldSpec

matrices = st.lists(st.lists(st.integers(-3, 3), min_size=3, max_size=3), min_size=3, max_size=3)


@given(M=matrices)
def test_det_and_rank_match_sympy(M):
    S = sympy.Matrix(M)
    assert det_scalar(M) == int(S.det())
    cols = [{i: M[i][j] for i in range(3) if M[i][j]} for j in range(3)]
    assert rank_of_columns(cols) == S.rank()


@given(M=matrices)
def test_kernel_vectors_are_in_the_kernel(M):
    cols = [{i: M[i][j] for i in range(3) if M[i][j]} for j in range(3)]
    ker = kernel(cols)
    assert len(ker) == 3 - sympy.Matrix(M).rank()
    for v in ker:
        for i in range(3):
            assert sum(M[i][j] * v.get(j, 0) for j in range(3)) == 0


@given(M=matrices, b=st.lists(st.integers(-3, 3), min_size=3, max_size=3))
def test_solve_dense(M, b):
    x = solve_dense(M, b)
    consistent = sympy.Matrix(M).rank() == sympy.Matrix(M).row_join(sympy.Matrix(b)).rank()
    assert (x is not None) == consistent
    if x is not None:
        for i in range(3):
            assert sum(M[i][j] * x[j] for j in range(3)) == b[i]


def test_cyclotomic_inverse_matrix():
    z = FieldSpec.cyclotomic(5).zeta()
    M = [[1, z], [z ** 2, 3]]
    inv = inverse_scalar(M)
    for i in range(2):
        for j in range(2):
            assert sum(M[i][k] * inv[k][j] for k in range(2)) == (1 if i == j else 0)
