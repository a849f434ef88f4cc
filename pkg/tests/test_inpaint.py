import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from physdepth.exceptions import EmptyPrior, InvalidInput
from physdepth.inpaint import telea, telea_march


def _disk(shape, center, radius):
    yy, xx = np.mgrid[:shape[0], :shape[1]]
    return (yy - center[0]) ** 2 + (xx - center[1]) ** 2 <= radius ** 2


def test_constant_field():
    vals = np.full((30, 40), 7.25)
    known = ~_disk(vals.shape, (15, 20), 6)
    out = telea(np.where(known, vals, -99.0), known)
    assert np.abs(out - 7.25).max() < 1e-3


@pytest.mark.parametrize("radius", [1, 3, 5])
def test_linear_ramp(radius):
    yy, xx = np.mgrid[:40, :50].astype(float)
    ramp = 10.0 + 0.3 * xx + 0.1 * yy
    hole = _disk(ramp.shape, (20, 25), radius)
    out = telea(np.where(hole, 0.0, ramp), ~hole)
    rel = np.abs(out - ramp)[hole] / ramp[hole]
    assert rel.max() < 0.02


def test_known_pixels_untouched(rng):
    vals = rng.uniform(1, 5, (20, 20))
    known = rng.random((20, 20)) > 0.4
    out = telea(vals, known)
    assert np.array_equal(out[known], vals[known])
    assert np.all(np.isfinite(out))


def test_hole_contents_ignored(rng):
    vals = rng.uniform(1, 5, (16, 16))
    known = ~_disk(vals.shape, (8, 8), 4)
    a = telea(vals, known)
    b = telea(np.where(known, vals, 1e9), known)
    assert np.array_equal(a, b)


def test_idempotent(rng):
    vals = rng.uniform(1, 5, (16, 16))
    known = rng.random((16, 16)) > 0.5
    once = telea(vals, known)
    assert np.array_equal(telea(once, known), once)
    assert np.array_equal(telea(once, np.ones_like(known)), once)


def test_fill_order_follows_arrival_time(rng):
    vals = rng.uniform(1, 5, (24, 24))
    known = rng.random((24, 24)) > 0.8
    _, T, order = telea_march(vals, known)
    assert np.all(T[known] == 0) and np.all(order[known] == -1)
    unknown = ~known
    assert sorted(order[unknown].tolist()) == list(range(int(unknown.sum())))
    seq = T[unknown][np.argsort(order[unknown])]
    assert np.all(np.diff(seq) >= -1e-12)
    assert np.all(T[unknown] > 0)


def test_arrival_time_is_distance_from_edge():
    known = np.zeros((1, 12), bool)
    known[0, 0] = True
    _, T, _ = telea_march(np.ones((1, 12)), known)
    np.testing.assert_allclose(T[0], np.arange(12.0))


def test_errors():
    with pytest.raises(EmptyPrior):
        telea(np.ones((3, 3)), np.zeros((3, 3), bool))
    with pytest.raises(InvalidInput):
        telea(np.ones((3, 3)), np.ones((3, 2), bool))
    with pytest.raises(InvalidInput):
        telea(np.ones((3, 3)), np.ones((3, 3), bool), radius=0)
    with pytest.raises(InvalidInput):
        telea(np.full((3, 3), np.nan), np.ones((3, 3), bool))


def test_all_known_returns_copy():
    vals = np.arange(6.0).reshape(2, 3)
    out = telea(vals, np.ones((2, 3), bool))
    assert np.array_equal(out, vals) and out is not vals


def test_deterministic(rng):
    vals = rng.uniform(1, 5, (20, 30))
    known = rng.random((20, 30)) > 0.6
    assert telea(vals, known).tobytes() == telea(vals, known).tobytes()


@settings(max_examples=100, deadline=None)
@given(
    arrays(np.float64, (12, 14), elements=st.floats(-50, 50)),
    arrays(np.bool_, (12, 14)),
    st.integers(1, 5),
)
def test_maximum_principle(vals, known, radius):
    if not known.any():
        known[0, 0] = True
    out = telea(vals, known, radius)
    lo, hi = vals[known].min(), vals[known].max()
    assert np.all(out >= lo) and np.all(out <= hi)
