# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Common Python resources for optfield: tests for conjugate module."""

import numpy as np
import pytest
from optfield import generic, conjugate, oracles
from optfield.potentials import (
    Quadratic,
    RegularizedMaxAffine,
    random_quadratic,
    random_max_affine,
)


def _abs_1d():
    return RegularizedMaxAffine([[1.0], [-1.0]], [0.0, 0.0], strength=1.0)


def _fenchel_young_gap(f, y, result):
    inner = np.sum(np.asarray(y, dtype=float) * result.argmax, axis=-1)
    return np.abs(f.eval(result.argmax) + result.value - inner)


class TestSettings:
    def test_defaults_01(self):
        settings = conjugate.SolverSettings()
        assert settings.to_dict() == dict(
            tol=1e-10, max_iters=500, accept_tol=1e-6
        )

    def test_tolerance_01(self):
        with pytest.raises(ValueError):
            conjugate.SolverSettings(tol=0.0)

    def test_max_iters_01(self):
        with pytest.raises(ValueError):
            conjugate.SolverSettings(max_iters=0)


class TestQuadratic:
    def test_identity_01(self):
        psi = Quadratic.from_matrix(np.eye(2))
        result = conjugate.conjugate(psi, [3.0, 4.0])
        assert result.value == pytest.approx(12.5)
        np.testing.assert_allclose(result.argmax, [3.0, 4.0])
        assert result.weights is None

    def test_scaled_01(self):
        psi = Quadratic.from_matrix([[2.0]])
        result = conjugate.conjugate(psi, 4.0)
        assert result.value == pytest.approx(4.0)
        np.testing.assert_allclose(result.argmax, [2.0])

    def test_shift_offset_01(self):
        psi = Quadratic.from_matrix([[1.0]], shift=[2.0], offset=0.5)
        result = conjugate.conjugate(psi, 5.0)
        assert result.value == pytest.approx(0.5 * 9 - 0.5)

    def test_batch_01(self):
        psi = random_quadratic(3, generic.rng(21, "potentials"))
        y = generic.rng(21, "y").normal(size=(10, 3))
        batch = conjugate.conjugate(psi, y)
        for i in range(10):
            single = conjugate.conjugate(psi, y[i])
            assert batch.value[i] == pytest.approx(single.value, rel=1e-12)
            assert _fenchel_young_gap(psi, y[i], single) <= 1e-8


class TestMaxAffine:
    def test_kink_01(self):
        psi = _abs_1d()
        result = conjugate.conjugate(psi, 0.5)
        assert result.value == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(result.argmax, [0.0], atol=1e-12)
        np.testing.assert_allclose(result.weights, [0.75, 0.25])

    def test_smooth_01(self):
        result = conjugate.conjugate(_abs_1d(), 3.0)
        assert result.value == pytest.approx(2.0)
        np.testing.assert_allclose(result.argmax, [2.0])
        np.testing.assert_array_equal(result.weights, [1.0, 0.0])

    def test_supergradient_01(self):
        gen = generic.rng(22, "potentials")
        psi = random_max_affine(2, gen)
        y = gen.normal(scale=2.0, size=(50, 2))
        result = conjugate.conjugate(psi, y)
        grad = psi.grad(result.argmax, result.weights)
        np.testing.assert_allclose(grad, y, rtol=0, atol=1e-8)
        np.testing.assert_allclose(result.weights.sum(axis=1), 1.0)

    @pytest.mark.parametrize("index", range(50))
    def test_grid_1d_01(self, index):
        gen = generic.rng(23, "potentials", index)
        psi = random_max_affine(1, gen)
        y = gen.normal(scale=2.0, size=1)
        result = conjugate.conjugate(psi, y)
        box = oracles.conjugate_box(psi, y)
        grid = oracles.grid_conjugate(psi, y, box, 10**6, refinements=3)
        assert not grid.on_boundary
        assert abs(result.value - grid.value) <= 1e-4
        assert grid.value <= result.value + 1e-12
        assert _fenchel_young_gap(psi, y, result) <= 1e-8

    @pytest.mark.parametrize("index", range(20))
    def test_grid_2d_01(self, index):
        gen = generic.rng(24, "potentials", index)
        psi = random_max_affine(2, gen)
        y = gen.normal(size=2)
        result = conjugate.conjugate(psi, y)
        box = oracles.conjugate_box(psi, y)
        grid = oracles.grid_conjugate(psi, y, box, 2000, refinements=6)
        assert not grid.on_boundary
        assert abs(result.value - grid.value) <= 1e-4
        assert grid.value <= result.value + 1e-12
        assert _fenchel_young_gap(psi, y, result) <= 1e-8

    @pytest.mark.parametrize("dim", [1, 2])
    def test_random_01(self, dim):
        for index in range(100):
            gen = generic.rng(28, "potentials", dim, index)
            psi = random_max_affine(dim, gen)
            y = gen.normal(scale=2.0, size=(20, dim))
            result = conjugate.conjugate(psi, y)
            assert _fenchel_young_gap(psi, y, result).max() <= 1e-8
            grad = psi.grad(result.argmax, result.weights)
            np.testing.assert_allclose(grad, y, rtol=0, atol=1e-8)
            assert result.weights.min() >= 0
            np.testing.assert_allclose(result.weights.sum(axis=1), 1.0)

    def test_time_scaled_01(self):
        gen = generic.rng(29, "potentials")
        psi = random_max_affine(2, gen)
        x = gen.normal(scale=2.0, size=(500, 2))
        times = gen.uniform(size=500)
        result = conjugate.time_scaled_conjugate(psi, times, x)
        z0 = result.argmax
        matched = times[:, None] * psi.grad(z0, result.weights)
        matched += (1 - times[:, None]) * z0
        np.testing.assert_allclose(matched, x, rtol=0, atol=1e-8)

    def test_many_pieces_01(self):
        gen = generic.rng(30, "potentials")
        psi = random_max_affine(2, gen, pieces=40)
        y = gen.normal(scale=2.0, size=(20, 2))
        result = conjugate.conjugate(psi, y)
        assert _fenchel_young_gap(psi, y, result).max() <= 1e-8
        grad = psi.grad(result.argmax, result.weights)
        np.testing.assert_allclose(grad, y, rtol=0, atol=1e-8)

    def test_not_converged_01(self, monkeypatch):
        monkeypatch.setattr(conjugate, "_exact_weights", lambda *args: None)
        psi = RegularizedMaxAffine(
            [[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]], np.zeros(3), strength=1.0
        )
        settings = conjugate.SolverSettings(max_iters=1)
        with pytest.raises(generic.MaxItersExceeded) as err:
            conjugate.conjugate(psi, [0.2, 0.1], settings)
        assert err.value.result.iterations == 1
        assert err.value.result.grad_norm > 0.5
        np.testing.assert_allclose(err.value.result.argmax, [-0.05, 0.1])

    def test_ascent_direction_01(self):
        psi = _abs_1d()
        structure = conjugate._max_affine_structure(psi)
        y, z = np.array([0.5]), np.zeros(1)
        grad, weights = conjugate._supergradient(psi, structure, y, z)
        np.testing.assert_allclose(grad, [0.0], atol=1e-10)
        np.testing.assert_allclose(weights, [0.75, 0.25], atol=1e-10)


class TestFenchelYoung:
    @pytest.mark.parametrize("kind", ["quadratic", "max_affine"])
    def test_inequality_01(self, kind):
        gen = generic.rng(31, "potentials", kind)
        if kind == "quadratic":
            psi = random_quadratic(2, gen)
        else:
            psi = random_max_affine(2, gen)
        y = gen.normal(scale=2.0, size=(200, 2))
        z = gen.normal(scale=3.0, size=(200, 2))
        result = conjugate.conjugate(psi, y)
        lower = np.sum(y * z, axis=1) - psi.eval(z)
        assert np.all(result.value >= lower - 1e-12)
        assert _fenchel_young_gap(psi, y, result).max() <= 1e-8

    def test_biconjugate_01(self):
        psi = random_quadratic(3, generic.rng(32, "potentials"))
        inverse = np.linalg.inv(psi.matrix)
        shift = psi.shift
        dual = Quadratic.from_matrix(
            inverse,
            -inverse @ shift,
            0.5 * shift @ inverse @ shift - psi.offset,
        )
        y = generic.rng(32, "y").normal(size=(10, 3))
        np.testing.assert_allclose(
            dual.eval(y),
            conjugate.conjugate(psi, y).value,
            rtol=1e-10,
            atol=1e-10,
        )
        x = generic.rng(32, "x").normal(size=(10, 3))
        np.testing.assert_allclose(
            conjugate.conjugate(dual, x).value,
            psi.eval(x),
            rtol=1e-10,
            atol=1e-10,
        )


class TestGate:
    def _failing(self, grad_norm):
        def solve(f, y, settings):
            result = conjugate.ConjugateResult(0.0, y, 1, grad_norm)
            raise generic.MaxItersExceeded("stopped", result)

        return solve

    def test_reject_01(self, monkeypatch):
        monkeypatch.setattr(
            conjugate, "_conjugate_iterative", self._failing(1e-3)
        )
        with pytest.raises(generic.EstimatorError) as err:
            conjugate.conjugate(_abs_1d(), np.zeros((3, 1)))
        assert err.value.index == 0

    def test_accept_01(self, monkeypatch):
        monkeypatch.setattr(
            conjugate, "_conjugate_iterative", self._failing(1e-8)
        )
        with pytest.warns(RuntimeWarning):
            result = conjugate.conjugate(_abs_1d(), np.zeros((3, 1)))
        np.testing.assert_array_equal(result.value, [0.0, 0.0, 0.0])


class TestTimeScaled:
    def test_range_01(self):
        with pytest.raises(ValueError):
            conjugate.TimeScaledPotential(_abs_1d(), 1.5)

    def test_strong_convexity_01(self):
        f = conjugate.TimeScaledPotential(_abs_1d(), 0.5)
        assert f.strong_convexity == pytest.approx(1.0)

    def test_quadratic_01(self):
        psi = Quadratic.from_matrix([[2.0]])
        result = conjugate.time_scaled_conjugate(psi, 0.5, 3.0)
        assert result.value == pytest.approx(3.0)
        np.testing.assert_allclose(result.argmax, [2.0])

    def test_closed_form_batch_01(self):
        gen = generic.rng(25, "potentials")
        psi = random_quadratic(2, gen)
        x = gen.normal(size=(20, 2))
        times = gen.uniform(size=20)
        batch = conjugate.time_scaled_conjugate(psi, times, x)
        for i in range(20):
            f = conjugate.TimeScaledPotential(psi, times[i])
            single = conjugate.conjugate(f, x[i])
            assert batch.value[i] == pytest.approx(
                single.value, rel=1e-10, abs=1e-12
            )
            np.testing.assert_allclose(
                batch.argmax[i], single.argmax, rtol=1e-10, atol=1e-12
            )


class TestRecoverZ0:
    def test_zero_time_01(self):
        psi = random_max_affine(2, generic.rng(26, "potentials"))
        z0 = conjugate.recover_z0(psi, 0.0, [5.0, -1.0])
        np.testing.assert_array_equal(z0, [5.0, -1.0])

    def test_quadratic_01(self):
        psi = Quadratic.from_matrix([[2.0]])
        np.testing.assert_allclose(
            conjugate.recover_z0(psi, 0.5, 3.0), [2.0]
        )

    @pytest.mark.parametrize("kind", ["quadratic", "max_affine"])
    def test_round_trip_01(self, kind):
        gen = generic.rng(27, "potentials", kind)
        if kind == "quadratic":
            psi = random_quadratic(2, gen)
        else:
            psi = random_max_affine(2, gen)
        z0 = gen.normal(size=(30, 2))
        times = gen.uniform(0.05, 0.95, size=30)
        x = times[:, None] * psi.grad(z0) + (1 - times[:, None]) * z0
        np.testing.assert_allclose(
            conjugate.recover_z0(psi, times, x), z0, rtol=0, atol=1e-8
        )
