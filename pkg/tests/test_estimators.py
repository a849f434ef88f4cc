import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from physdepth.estimators import MedianScaler, PhysicsDepthTransformer
from physdepth.exceptions import InvalidInput
from physdepth.synth import synth_scene


@pytest.fixture(scope="module")
def scene():
    return synth_scene()


def test_transform_single_and_stack(scene):
    t = PhysicsDepthTransformer(camera=scene.camera, schema=scene.schema).fit()
    one = t.transform(scene.labels)
    assert one.shape == (192, 640) and np.all(np.isfinite(one))
    stack = t.transform(np.stack([scene.labels, scene.labels]))
    assert stack.shape == (2, 192, 640)
    assert np.array_equal(stack[1], one)


def test_stage_selection(scene):
    road = PhysicsDepthTransformer(camera=scene.camera, schema=scene.schema, stage="road").fit()
    out = road.transform(scene.labels)
    res = road.compute(scene.labels)
    assert np.array_equal(np.isnan(out), ~res.road.valid)


def test_rescales_for_smaller_masks(scene):
    t = PhysicsDepthTransformer(camera=scene.camera, schema=scene.schema, stage="road").fit()
    out = t.transform(scene.labels[::2, ::2])
    assert out.shape == (96, 320)


def test_params_and_clone(scene):
    t = PhysicsDepthTransformer(camera=scene.camera, max_depth=50.0)
    c = clone(t)
    assert c.get_params()["max_depth"] == 50.0
    assert not hasattr(c, "config_")


def test_validation(scene):
    with pytest.raises(InvalidInput):
        PhysicsDepthTransformer().fit()
    with pytest.raises(InvalidInput):
        PhysicsDepthTransformer(camera=scene.camera, stage="bogus").fit()
    with pytest.raises(NotFittedError):
        PhysicsDepthTransformer(camera=scene.camera).transform(scene.labels)


def test_median_scaler(rng):
    gt = rng.uniform(1, 70, (10, 12))
    pred = gt / 3.0
    m = MedianScaler().fit(pred, gt)
    assert m.scale_ == pytest.approx(3.0)
    np.testing.assert_allclose(m.transform(pred), gt)
    assert m.score(pred, gt) == 1.0


def test_pipeline(scene):
    pipe = make_pipeline(PhysicsDepthTransformer(camera=scene.camera, schema=scene.schema))
    out = pipe.fit_transform(scene.labels)
    assert out.shape == scene.labels.shape
