import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padic_pca.core import Params, axpy_mod, row_norms
from padic_pca.ortho import is_orthogonal_system
from padic_pca.pca import BudgetTooLarge, FactorModel, nrpca, pca_body, residual, rpca, score, total_loss
from padic_pca.projection import brute_force_component


def test_score_examples():
    P = Params(2, 2, 1)
    assert score((0, 0), (1, 3), P)[0] == 0
    a, b = score((1,), (1,), P)
    assert a * b == 4
    # scaling the component by p divides its rescaled norm by p**q
    assert score((1,), (2,), P)[1] * 2 == score((1,), (1,), P)[1]


def test_pca_body_zero_data_and_zero_pivot():
    P = Params(3, 2, 1, 3)
    Y = np.zeros((4, 3), dtype=np.int64)
    model = FactorModel(P, 4)
    assert not pca_body(Y, model, np.array([1, 2, 0]), P)
    assert len(model) == 0
    Y = np.arange(12).reshape(4, 3) % 9
    before = Y.copy()
    assert not pca_body(Y, model, np.zeros(3, dtype=np.int64), P)
    assert Y.tolist() == before.tolist()


def test_pca_body_absorbs_multiples_of_a_unit_vector():
    P = Params(5, 2, 1, 3)
    x = np.array([1, 0, 0])
    Y = np.array([[3, 0, 0], [10, 0, 0], [24, 0, 0]])
    model = FactorModel(P, 3)
    assert pca_body(Y, model, x, P)
    assert not Y.any()
    assert model.coeffs[0].tolist() == [3, 10, 24]


def test_nrpca_rank_one():
    P = Params(5, 2, 1, 3)
    v = np.array([1, 7, 12])
    Y = np.stack([(c * v) % 25 for c in (1, 2, 3)])
    model = nrpca(Y, 2, P)
    assert len(model) == 1
    assert not residual(Y, model).any()
    assert total_loss(residual(Y, model), P) == 0
    for i in range(3):
        c, loss = brute_force_component(Y[i].tolist(), v.tolist(), P)
        assert loss == 0


@pytest.mark.parametrize("algo", [nrpca, rpca])
def test_zero_matrix_and_zero_budget(algo):
    P = Params(3, 2, 1, 4)
    Z = np.zeros((5, 4), dtype=np.int64)
    assert len(algo(Z, 3, P)) == 0
    Y = np.random.default_rng(0).integers(0, 9, size=(5, 4))
    before = Y.copy()
    model = algo(Y, 0, P)
    assert len(model) == 0
    assert Y.tolist() == before.tolist()


@pytest.mark.parametrize("algo", [nrpca, rpca])
def test_budget_beyond_dimension_rejected(algo):
    P = Params(3, 2, 1, 4)
    with pytest.raises(BudgetTooLarge):
        algo(np.zeros((2, 4), dtype=np.int64), 5, P)


def test_rpca_on_orthogonal_rows_uses_them_by_norm():
    P = Params(3, 2, 1, 3)
    Y = np.array([[3, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert is_orthogonal_system(Y, P)
    model = rpca(Y, 3, P)
    assert sorted(map(tuple, model.X.tolist())) == sorted(map(tuple, Y.tolist()))
    assert not residual(Y, model).any()


def test_nrpca_overprovisioning_keeps_top_scores():
    rng = np.random.default_rng(3)
    P = Params(3, 3, 1, 6)
    Y = rng.integers(0, P.modulus, size=(30, 6))
    wide = nrpca(Y, 2, P, d_prime_minus=5)
    assert len(wide) == 2
    assert wide.info["residual"].tolist() == residual(Y, wide).tolist()
    with pytest.raises(ValueError):
        nrpca(Y, 3, P, d_prime_minus=2)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["nrpca", "rpca"]))
def test_model_invariants(seed, which):
    rng = np.random.default_rng(seed)
    P = Params(int(rng.choice([2, 3, 7])), 3, 1, 5)
    Y = rng.integers(0, P.modulus, size=(12, 5))
    d_minus = int(rng.integers(1, 6))
    model = (nrpca if which == "nrpca" else rpca)(Y, d_minus, P)
    R = residual(Y, model)
    assert len(model) <= d_minus
    assert model.info["residual"].tolist() == R.tolist()
    keys = [a * b for a, b in model.scores]
    assert keys == sorted(keys, reverse=True)
    for c in model.coeffs:
        assert c.any()
    for a, b in zip(row_norms(R, P), row_norms(Y, P)):
        assert a <= b
    shuffled = model.copy()
    shuffled.coeffs.reverse()
    shuffled.components.reverse()
    assert residual(Y, shuffled).tolist() == R.tolist()


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1))
def test_each_pca_step_strictly_lowers_loss(seed):
    rng = np.random.default_rng(seed)
    P = Params(3, 3, 1, 5)
    Y = rng.integers(0, P.modulus, size=(10, 5))
    R = Y.copy()
    model = FactorModel(P, 10)
    for j in range(10):
        before = total_loss(R, P)
        old = R.copy()
        if pca_body(R, model, R[j].copy(), P):
            assert total_loss(R, P) < before
            c = model.coeffs[-1]
            for i in range(10):
                assert tuple(R[i]) == axpy_mod(old[i], int(c[i]), model.components[-1], P)
        else:
            assert total_loss(R, P) == before


@pytest.mark.parametrize(
    "N,p,E,D,d_minus",
    [
        pytest.param(
            5, 3, 2, 4, 2,
            marks=pytest.mark.xfail(
                strict=True,
                reason="with 5 rows NRPCA zeroes its own pivot rows exactly, which RPCA pivots never do",
            ),
        ),
        (50, 3, 2, 4, 2),
        (200, 3, 3, 8, 3),
    ],
)
def test_rpca_loss_at_most_nrpca_in_most_seeds(N, p, E, D, d_minus):
    P = Params(p, E, 1, D)
    wins = 0
    for seed in range(10):
        Y = np.random.default_rng(seed).integers(0, P.modulus, size=(N, D))
        lr = total_loss(residual(Y, rpca(Y, d_minus, P)), P)
        ln = total_loss(residual(Y, nrpca(Y, d_minus, P)), P)
        wins += lr <= ln
    assert wins > 5
