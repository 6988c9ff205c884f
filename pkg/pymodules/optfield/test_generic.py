# Copyright (c) 2026-now The optfield developers.
#
# License: BSD 3-clause "new" or "revised" license (BSD-3-Clause).

"""Common Python resources for optfield: tests for generic module."""

import os
import argparse
import numpy as np
import pytest
from optfield import generic


@pytest.fixture
def single_thread():
    yield
    generic.set_threads(1)


class TestConvertToBoolean:
    def _parse(self, value):
        parser = argparse.ArgumentParser()
        parser.add_argument("--flag", action=generic.ConvertToBoolean)
        return parser.parse_args(["--flag", value]).flag

    def test_true_01(self):
        assert self._parse("true") is True

    def test_true_02(self):
        assert self._parse("Y") is True

    def test_false_01(self):
        assert self._parse("no") is False

    def test_invalid_01(self):
        with pytest.raises(ValueError):
            self._parse("maybe")


class TestProcessPath:
    def test_none_01(self):
        assert generic.process_path(None) is None

    def test_none_02(self):
        assert generic.process_path("  ") is None

    def test_home_01(self):
        expected = os.path.join(os.path.expanduser("~"), "out")
        assert generic.process_path("~/out") == expected


class TestStreams:
    def test_determinism_01(self):
        a = generic.rng(7, "sample").normal(size=5)
        b = generic.rng(7, "sample").normal(size=5)
        np.testing.assert_array_equal(a, b)

    def test_independent_streams_01(self):
        a = generic.rng(7, "x0").normal(size=5)
        b = generic.rng(7, "x1").normal(size=5)
        assert not np.allclose(a, b)

    def test_independent_seeds_01(self):
        a = generic.rng(7, "x0").normal(size=5)
        b = generic.rng(8, "x0").normal(size=5)
        assert not np.allclose(a, b)

    def test_nested_streams_01(self):
        a = generic.rng(1, "epoch", 1).random()
        b = generic.rng(1, "epoch", 2).random()
        assert a != b

    def test_derive_seed_01(self):
        seed = generic.derive_seed(3, "pairs")
        assert seed == generic.derive_seed(3, "pairs")
        assert 0 <= seed < 2**64
        assert seed != generic.derive_seed(3, "time")

    def test_negative_seed_01(self):
        with pytest.raises(ValueError):
            generic.rng(-1)


class TestThreads:
    def test_environment_01(self, monkeypatch, single_thread):
        monkeypatch.setenv(generic.THREADS_ENV_VAR, "3")
        generic.set_threads()
        assert generic.get_threads() == 3

    def test_explicit_01(self, monkeypatch, single_thread):
        monkeypatch.setenv(generic.THREADS_ENV_VAR, "3")
        generic.set_threads(2)
        assert generic.get_threads() == 2

    def test_invalid_01(self, single_thread):
        with pytest.raises(ValueError):
            generic.set_threads(0)

    def test_map_rows_order_01(self, single_thread):
        generic.set_threads(4)
        assert generic.map_rows(lambda i: i**2, 10) == [
            i**2 for i in range(10)
        ]

    def test_map_rows_empty_01(self, single_thread):
        generic.set_threads(4)
        assert generic.map_rows(lambda i: i, 0) == []


class TestAsRows:
    def test_single_01(self):
        rows, single = generic.as_rows([1.0, 2.0], 2)
        assert single is True
        assert rows.shape == (1, 2)

    def test_scalar_01(self):
        rows, single = generic.as_rows(3.0, 1)
        assert single is True
        assert rows.shape == (1, 1)

    def test_batch_01(self):
        rows, single = generic.as_rows(np.zeros((4, 3)), 3)
        assert single is False
        assert rows.shape == (4, 3)

    def test_wrong_dim_01(self):
        with pytest.raises(ValueError):
            generic.as_rows(np.zeros((4, 3)), 2)


class TestAsTimes:
    def test_scalar_01(self):
        np.testing.assert_array_equal(generic.as_times(0.5, 3), [0.5] * 3)

    def test_per_row_01(self):
        times = generic.as_times([0.0, 1.0], 2)
        np.testing.assert_array_equal(times, [0.0, 1.0])

    def test_out_of_range_01(self):
        with pytest.raises(ValueError):
            generic.as_times(1.5, 2)

    def test_wrong_shape_01(self):
        with pytest.raises(ValueError):
            generic.as_times([0.1, 0.2, 0.3], 2)
