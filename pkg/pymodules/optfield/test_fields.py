# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Common Python resources for optfield: tests for fields module."""

import numpy as np
import pytest
from optfield import generic, fields
from optfield.potentials import (
    Quadratic,
    RegularizedMaxAffine,
    identity_potential,
    random_quadratic,
    random_max_affine,
)

H = 1e-5


def _square():
    return Quadratic.from_matrix([[2.0]])


def _instances(seed):
    gen = generic.rng(seed, "potentials")
    out = [random_quadratic(d, gen) for d in (1, 2, 5)]
    out += [random_max_affine(d, gen) for d in (1, 2)]
    return out, gen


class TestSettings:
    def test_order_01(self):
        with pytest.raises(ValueError):
            fields.FieldSettings(t_corner=1e-2, t_switch=1e-3)

    def test_range_01(self):
        with pytest.raises(ValueError):
            fields.FieldSettings(t_switch=1.0)


class TestVelocity:
    def test_identity_01(self):
        psi = identity_potential(2)
        x = generic.rng(31, "x").normal(size=(10, 2))
        for t in (0.0, 0.3, 1.0):
            u = fields.field_velocity(psi, t, x)
            np.testing.assert_allclose(u, 0.0, atol=1e-5)

    def test_square_01(self):
        u = fields.field_velocity(_square(), 0.5, 3.0)
        np.testing.assert_allclose(u, [2.0])

    def test_translation_01(self):
        m = np.array([1.0, -2.0])
        psi = Quadratic.from_matrix(np.eye(2), shift=m)
        x = generic.rng(32, "x").normal(size=(5, 2))
        np.testing.assert_allclose(
            fields.field_velocity(psi, 0.0, x), np.tile(m, (5, 1)), atol=1e-5
        )

    def test_kink_01(self):
        # z0 = 0 on the kink of |z| for every |x| <= t
        psi = RegularizedMaxAffine(
            [[1.0], [-1.0]], [0.0, 0.0], strength=1.0
        )
        evaluation = fields.field_eval(psi, 0.5, [[0.2], [-0.3]])
        np.testing.assert_allclose(evaluation.z0, 0.0, atol=1e-12)
        np.testing.assert_allclose(evaluation.velocity, [[0.4], [-0.6]])

    @pytest.mark.parametrize("index", range(5))
    def test_straight_lines_01(self, index):
        instances, gen = _instances(33)
        psi = instances[index]
        z0 = gen.normal(size=(20, psi.dim))
        target = psi.grad(z0)
        for t in (0.1, 0.5, 0.9):
            x = (1 - t) * z0 + t * target
            np.testing.assert_allclose(
                fields.field_velocity(psi, t, x),
                target - z0,
                rtol=0,
                atol=1e-8,
            )


class TestScalarPotential:
    def test_identity_01(self):
        psi = identity_potential(2)
        x = generic.rng(34, "x").normal(size=(10, 2))
        for t in (0.0, 1e-4, 0.5, 1.0):
            np.testing.assert_allclose(
                fields.s_eval(psi, t, x), 0.0, atol=1e-5
            )

    def test_square_01(self):
        assert fields.s_eval(_square(), 0.5, 3.0) == pytest.approx(3.0)

    def test_end_01(self):
        assert fields.s_eval(_square(), 1.0, 4.0) == pytest.approx(4.0)

    def test_start_01(self):
        assert fields.s_eval(_square(), 0.0, 3.0) == pytest.approx(4.5)

    def test_time_derivative_01(self):
        value = fields.s_time_derivative(_square(), 0.5, 3.0)
        assert value == pytest.approx(-2.0)

    @pytest.mark.parametrize("index", range(5))
    def test_continuity_01(self, index):
        instances, gen = _instances(35)
        psi = instances[index]
        x = gen.normal(size=(10, psi.dim))
        t = fields.FieldSettings().t_switch
        below = fields.s_eval(psi, t * (1 - 1e-9), x)
        above = fields.s_eval(psi, t * (1 + 1e-9), x)
        np.testing.assert_allclose(below, above, rtol=1e-8, atol=1e-8)

    @pytest.mark.parametrize("index", range(5))
    def test_continuity_02(self, index):
        instances, gen = _instances(35)
        psi = instances[index]
        x = gen.normal(size=(10, psi.dim))
        t = fields.FieldSettings().t_corner
        below = fields.s_eval(psi, 0.5 * t, x)
        above = fields.s_eval(psi, 2 * t, x)
        sqnorm = np.sum(fields.field_velocity(psi, t, x) ** 2, axis=1)
        assert np.all(np.abs(below - above) <= 2 * t * sqnorm + 1e-9)

    @pytest.mark.parametrize("index", range(5))
    def test_gradient_identity_01(self, index):
        instances, gen = _instances(36)
        psi = instances[index]
        for _ in range(10):
            t = gen.uniform(0.05, 0.95)
            x = gen.normal(size=psi.dim)
            v = gen.normal(size=psi.dim)
            stencil = np.stack([x - H * v, x + H * v])
            evaluation = fields.field_eval(psi, t, stencil)
            if psi.piece(evaluation.z0[0]) != psi.piece(evaluation.z0[1]):
                continue
            fd = (evaluation.s_value[1] - evaluation.s_value[0]) / (2 * H)
            exact = fields.field_velocity(psi, t, x) @ v
            assert abs(fd - exact) <= 1e-4 * (1 + abs(exact))


class TestBracket:
    def test_identity_01(self):
        psi = identity_potential(2)
        assert fields.bracket(psi, 0.3, [1.0, 2.0]) == 0.0

    def test_square_01(self):
        assert fields.bracket(_square(), 0.5, 3.0) == 0.0

    @pytest.mark.parametrize("index", range(5))
    def test_analytic_01(self, index):
        instances, gen = _instances(37)
        psi = instances[index]
        times = gen.uniform(0.05, 0.95, size=50)
        x = gen.normal(size=(50, psi.dim))
        velocity = fields.field_velocity(psi, times, x)
        bound = 1e-9 * (1 + np.sum(velocity**2, axis=1))
        assert np.all(np.abs(fields.bracket(psi, times, x)) <= bound)

    def test_finite_differences_01(self):
        gen = generic.rng(38, "potentials")
        psi = random_quadratic(2, gen)
        for _ in range(20):
            t = gen.uniform(0.05, 0.95)
            x = gen.normal(size=2)
            grad = [
                (
                    fields.s_eval(psi, t, x + H * e)
                    - fields.s_eval(psi, t, x - H * e)
                )
                / (2 * H)
                for e in np.eye(2)
            ]
            dt = (
                fields.s_eval(psi, t + H, x) - fields.s_eval(psi, t - H, x)
            ) / (2 * H)
            assert abs(0.5 * np.sum(np.square(grad)) + dt) <= 1e-3


class TestPushforward:
    def test_identity_01(self):
        x0 = generic.rng(39, "x").normal(size=(10, 2))
        psi = identity_potential(2)
        for method in ("euler", "rk4"):
            out = fields.pushforward(psi, x0, 3, method)
            np.testing.assert_allclose(out, x0, atol=1e-5)

    def test_translation_01(self):
        m = np.array([1.0, -2.0])
        psi = Quadratic.from_matrix(np.eye(2), shift=m)
        x0 = generic.rng(40, "x").normal(size=(10, 2))
        out = fields.pushforward(psi, x0, 1, "euler")
        np.testing.assert_allclose(out, x0 + m, atol=1e-5)

    def test_square_01(self):
        out = fields.pushforward(_square(), 3.0, 10, "rk4")
        np.testing.assert_allclose(out, [6.0], rtol=0, atol=1e-6)

    @pytest.mark.parametrize("index", range(5))
    def test_endpoint_01(self, index):
        instances, gen = _instances(41)
        psi = instances[index]
        x0 = gen.normal(size=(20, psi.dim))
        target = psi.grad(x0)
        out = fields.pushforward(psi, x0, 10, "rk4")
        scale = np.maximum(np.linalg.norm(target, axis=1), 1.0)
        error = np.linalg.norm(out - target, axis=1) / scale
        assert np.all(error <= 1e-6)

    def test_invalid_01(self):
        with pytest.raises(ValueError):
            fields.pushforward(_square(), 3.0, 0)

    def test_invalid_02(self):
        with pytest.raises(ValueError):
            fields.pushforward(_square(), 3.0, 5, "midpoint")
