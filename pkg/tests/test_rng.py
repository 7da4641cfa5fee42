import numpy as np
import pytest

from cliffsamp import rng as rs


def test_streams_reproducible():
    a = rs.stream(5, "configs", 3).random(4)
    assert np.array_equal(a, rs.stream(5, "configs", 3).random(4))


def test_streams_separate():
    base = rs.stream(5, "configs", 0).random(4)
    assert not np.array_equal(base, rs.stream(5, "configs", 1).random(4))
    assert not np.array_equal(base, rs.stream(5, "shots", 0).random(4))
    assert not np.array_equal(base, rs.stream(6, "configs", 0).random(4))


def test_blocks_cover_range():
    bl = rs.blocks(1100, 512)
    assert bl == [(0, 0, 512), (1, 512, 1024), (2, 1024, 1100)]
    assert rs.blocks(0) == []


@pytest.mark.parametrize("bad", [-1, 2**64, 1.5, True, "3"])
def test_seed_checked(bad):
    with pytest.raises(ValueError):
        rs.check_seed(bad)


def test_large_seed_accepted():
    rs.stream(2**64 - 1, "x").random()
