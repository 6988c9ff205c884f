# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Common Python resources for optfield: tests for potentials module."""

import numpy as np
import pytest
from optfield import generic
from optfield.potentials import (
    Quadratic,
    RegularizedMaxAffine,
    identity_potential,
    random_quadratic,
    random_max_affine,
    from_dict,
    save_potential,
    load_potential,
)

H = 1e-5


def _abs_1d():
    return RegularizedMaxAffine([[1.0], [-1.0]], [0.0, 0.0], strength=1.0)


def _instances(seed):
    gen = generic.rng(seed, "potentials")
    out = [random_quadratic(d, gen) for d in (1, 2, 5)]
    out += [random_max_affine(d, gen) for d in (1, 2)]
    return out, gen


class TestEval:
    def test_identity_01(self):
        psi = Quadratic.from_matrix(np.eye(2))
        assert psi.eval([3.0, 4.0]) == pytest.approx(12.5)

    def test_quadratic_01(self):
        psi = Quadratic.from_matrix([[2.0]])
        assert psi.eval(3.0) == pytest.approx(9.0)

    def test_max_affine_01(self):
        assert _abs_1d().eval(2.0) == pytest.approx(4.0)

    def test_batch_01(self):
        psi = identity_potential(2)
        values = psi.eval([[3.0, 4.0], [0.0, 0.0]])
        assert values.shape == (2,)
        np.testing.assert_allclose(values, [12.5, 0.0])

    def test_callable_01(self):
        psi = _abs_1d()
        assert psi(-3.0) == psi.eval(-3.0)


class TestGrad:
    def test_shift_01(self):
        psi = Quadratic.from_matrix(np.eye(2), shift=[1.0, 0.0])
        np.testing.assert_allclose(psi.grad([0.0, 0.0]), [1.0, 0.0])

    def test_quadratic_01(self):
        psi = Quadratic.from_matrix([[2.0]])
        np.testing.assert_allclose(psi.grad(3.0), [6.0])

    def test_tie_break_01(self):
        psi = _abs_1d()
        np.testing.assert_array_equal(psi.grad(0.0), [1.0])
        assert psi.piece(0.0) == 0

    def test_max_affine_01(self):
        np.testing.assert_allclose(_abs_1d().grad(-2.0), [-3.0])

    def test_hessian_01(self):
        psi = Quadratic.from_matrix([[2.0, 0.5], [0.5, 1.0]])
        np.testing.assert_allclose(psi.hessian([1.0, 1.0]), psi.matrix)

    @pytest.mark.parametrize("index", range(5))
    def test_finite_differences_01(self, index):
        instances, gen = _instances(11)
        psi = instances[index]
        for _ in range(20):
            x = gen.normal(size=psi.dim)
            v = gen.normal(size=psi.dim)
            if psi.piece(x + H * v) != psi.piece(x - H * v):
                continue
            fd = (psi.eval(x + H * v) - psi.eval(x - H * v)) / (2 * H)
            exact = psi.grad(x) @ v
            assert abs(fd - exact) <= 1e-6 * (1 + abs(exact))


class TestConvexity:
    @pytest.mark.parametrize("index", range(5))
    def test_monotone_01(self, index):
        instances, gen = _instances(12)
        psi = instances[index]
        x = gen.normal(scale=2.0, size=(200, psi.dim))
        y = gen.normal(scale=2.0, size=(200, psi.dim))
        inner = np.sum((psi.grad(x) - psi.grad(y)) * (x - y), axis=1)
        assert np.all(inner >= 0)

    @pytest.mark.parametrize("index", range(5))
    def test_jensen_01(self, index):
        instances, gen = _instances(14)
        psi = instances[index]
        x = gen.normal(scale=2.0, size=(500, psi.dim))
        y = gen.normal(scale=2.0, size=(500, psi.dim))
        weight = gen.uniform(size=(500, 1))
        mixed = psi.eval(weight * x + (1 - weight) * y)
        bound = weight[:, 0] * psi.eval(x) + (1 - weight[:, 0]) * psi.eval(y)
        assert np.all(mixed <= bound + 1e-12 * (1 + np.abs(bound)))

    def test_strong_convexity_01(self):
        gen = generic.rng(13, "potentials")
        psi = random_max_affine(2, gen, strength=0.3)
        x = gen.normal(scale=2.0, size=(500, 2))
        y = gen.normal(scale=2.0, size=(500, 2))
        inner = np.sum((psi.grad(x) - psi.grad(y)) * (x - y), axis=1)
        bound = 0.3 * np.sum((x - y) ** 2, axis=1)
        assert np.all(inner >= bound - 1e-12)

    def test_strong_convexity_02(self):
        psi = Quadratic.from_matrix(np.diag([0.5, 3.0]))
        assert psi.strong_convexity == pytest.approx(0.5)


class TestParams:
    def test_offset_01(self):
        gen = generic.rng(14, "potentials")
        psi = random_quadratic(1, gen)
        for x in (-2.0, 0.0, 5.0):
            assert psi.param_grad(x)[-1] == 1.0

    def test_factor_01(self):
        psi = Quadratic([[1.0]], ridge=1e-6)
        assert psi.param_grad(2.0)[0] == pytest.approx(4.0)

    def test_active_row_01(self):
        psi = RegularizedMaxAffine(
            [[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]], [0.0, 0.0, 0.0]
        )
        grad = psi.param_grad([0.0, 2.0])
        np.testing.assert_array_equal(
            grad, [0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.0, 0.0]
        )

    def test_layout_01(self):
        psi = Quadratic(
            [[1.0, 0.0], [0.5, 2.0]], shift=[3.0, 4.0], offset=5.0
        )
        np.testing.assert_array_equal(
            psi.params, [1.0, 0.5, 2.0, 3.0, 4.0, 5.0]
        )
        assert psi.n_params == 6

    @pytest.mark.parametrize("index", range(5))
    def test_round_trip_01(self, index):
        instances, _ = _instances(15)
        psi = instances[index]
        other = psi.with_params(psi.params)
        np.testing.assert_array_equal(other.params, psi.params)
        x = np.linspace(-1.0, 1.0, psi.dim)
        assert other.eval(x) == psi.eval(x)

    def test_wrong_size_01(self):
        with pytest.raises(ValueError):
            identity_potential(2).with_params(np.zeros(3))

    @pytest.mark.parametrize("index", range(5))
    def test_finite_differences_01(self, index):
        instances, gen = _instances(16)
        psi = instances[index]
        theta = psi.params
        for _ in range(5):
            x = gen.normal(size=psi.dim)
            exact = psi.param_grad(x)
            jac = psi.grad_param_jacobian(x)
            for p in range(psi.n_params):
                e = np.zeros(psi.n_params)
                e[p] = H
                plus = psi.with_params(theta + e)
                minus = psi.with_params(theta - e)
                if plus.piece(x) != minus.piece(x):
                    continue
                fd = (plus.eval(x) - minus.eval(x)) / (2 * H)
                tol = 1e-6 * (1 + np.linalg.norm(exact))
                assert abs(fd - exact[p]) <= tol
                fd_grad = (plus.grad(x) - minus.grad(x)) / (2 * H)
                np.testing.assert_allclose(
                    fd_grad, jac[:, p], rtol=0, atol=tol
                )


class TestConstruction:
    def test_not_triangular_01(self):
        with pytest.raises(ValueError):
            Quadratic([[1.0, 1.0], [0.0, 1.0]])

    def test_ridge_01(self):
        with pytest.raises(ValueError):
            Quadratic([[1.0]], ridge=0.0)

    def test_not_spd_01(self):
        with pytest.raises(generic.SPDViolation):
            Quadratic.from_matrix([[1.0, 2.0], [2.0, 1.0]])

    def test_from_matrix_01(self):
        matrix = [[2.0, 0.5], [0.5, 1.0]]
        psi = Quadratic.from_matrix(matrix, shift=[1.0, -1.0])
        np.testing.assert_allclose(psi.matrix, matrix, atol=1e-14)
        np.testing.assert_array_equal(psi.shift, [1.0, -1.0])

    def test_strength_01(self):
        with pytest.raises(ValueError):
            RegularizedMaxAffine([[1.0]], [0.0], strength=0.0)

    def test_intercepts_01(self):
        with pytest.raises(ValueError):
            RegularizedMaxAffine([[1.0], [2.0]], [0.0])


class TestSerialization:
    @pytest.mark.parametrize("index", range(5))
    def test_from_dict_01(self, index):
        instances, _ = _instances(17)
        psi = instances[index]
        other = from_dict(psi.to_dict())
        assert type(other) is type(psi)
        np.testing.assert_array_equal(other.params, psi.params)

    def test_matrix_01(self):
        psi = from_dict(
            dict(variant="quadratic", matrix=[[2.0]], shift=[1.0])
        )
        assert psi.eval(1.0) == pytest.approx(2.0)

    def test_unknown_variant_01(self):
        with pytest.raises(ValueError):
            from_dict(dict(variant="icnn"))

    def test_unknown_key_01(self):
        with pytest.raises(ValueError):
            from_dict(dict(variant="quadratic", factor=[[1.0]], scale=1))

    def test_dims_01(self):
        with pytest.raises(ValueError):
            from_dict(dict(variant="quadratic", dims=2, factor=[[1.0]]))

    def test_file_01(self, tmp_path):
        psi = _abs_1d()
        filepath = tmp_path / "potential.json"
        save_potential(psi, filepath)
        other = load_potential(filepath)
        np.testing.assert_array_equal(other.params, psi.params)
        assert other.strength == psi.strength
