import numpy as np
import pytest

from sonoforge.domain.entities import RngStream
from sonoforge.domain.exceptions import ValidationError
from sonoforge.services.rng_service import (
    derive_seed,
    fork,
    rng_integer,
    rng_uniform,
    spawn_generator,
    splitmix64,
)


class TestRngUniform:
    """Scalar draws from a counter-based stream."""

    def test_same_stream_same_value(self):
        stream = RngStream(seed=42, counter=7)
        assert rng_uniform(stream, 0.0, 1.0) == rng_uniform(stream, 0.0, 1.0)

    def test_draw_advances_counter(self):
        value, next_stream = rng_uniform(RngStream(seed=1), 0.0, 1.0)
        assert next_stream == RngStream(seed=1, counter=1)
        assert 0.0 <= value < 1.0

    def test_values_stay_in_half_open_interval(self):
        stream = RngStream(seed=99)
        for _ in range(2000):
            value, stream = rng_uniform(stream, -2.0, 3.0)
            assert -2.0 <= value < 3.0

    def test_degenerate_interval_returns_bound(self):
        value, stream = rng_uniform(RngStream(seed=5), 1.5, 1.5)
        assert value == 1.5
        assert stream.counter == 1

    def test_reversed_interval_rejected(self):
        with pytest.raises(ValidationError):
            rng_uniform(RngStream(seed=5), 1.0, 0.0)

    def test_mean_of_many_draws(self):
        stream = RngStream(seed=2024)
        values = []
        for _ in range(10000):
            value, stream = rng_uniform(stream, 0.0, 1.0)
            values.append(value)
        assert abs(np.mean(values) - 0.5) < 0.02

    def test_stream_rejects_negative_seed(self):
        with pytest.raises(ValidationError):
            RngStream(seed=-1)


class TestRngInteger:
    def test_inclusive_bounds_are_reached(self):
        stream = RngStream(seed=3)
        seen = set()
        for _ in range(500):
            value, stream = rng_integer(stream, 1, 4)
            seen.add(value)
        assert seen == {1, 2, 3, 4}

    def test_single_value_range(self):
        assert rng_integer(RngStream(seed=3), 7, 7)[0] == 7


class TestDeriveSeed:
    """Per (seed, pattern, copy, op) stream keys."""

    def test_same_inputs_same_stream(self):
        assert derive_seed(1, "clip-a", 0, 2) == derive_seed(1, "clip-a", 0, 2)

    def test_each_input_changes_the_stream(self):
        base = derive_seed(1, "clip-a", 0, 2)
        assert derive_seed(2, "clip-a", 0, 2) != base
        assert derive_seed(1, "clip-b", 0, 2) != base
        assert derive_seed(1, "clip-a", 1, 2) != base
        assert derive_seed(1, "clip-a", 0, 3) != base

    def test_copy_streams_do_not_collide(self):
        seeds = {derive_seed(0, "pattern", copy, 0).seed for copy in range(10000)}
        assert len(seeds) == 10000

    def test_first_draws_of_copies_differ(self):
        draws = {
            rng_uniform(derive_seed(0, "pattern", copy, 0), 0.0, 1.0)[0] for copy in range(10000)
        }
        assert len(draws) == 10000

    def test_known_value_is_platform_independent(self):
        # splitmix64 reference output for input 0
        assert splitmix64(0) == 0xE220A8397B1DCDAF


class TestForkAndGenerator:
    def test_children_differ(self):
        parent = RngStream(seed=11)
        children = {fork(parent, i) for i in range(100)}
        assert len(children) == 100

    def test_negative_fork_index_rejected(self):
        with pytest.raises(ValidationError):
            fork(RngStream(seed=1), -1)

    def test_generator_is_reproducible(self):
        stream = RngStream(seed=8, counter=3)
        first = spawn_generator(stream).standard_normal(5)
        second = spawn_generator(stream).standard_normal(5)
        np.testing.assert_array_equal(first, second)

    def test_generator_depends_on_counter(self):
        a = spawn_generator(RngStream(seed=8, counter=0)).random(4)
        b = spawn_generator(RngStream(seed=8, counter=1)).random(4)
        assert not np.array_equal(a, b)
