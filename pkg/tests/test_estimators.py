"""Estimator-contract checks: get_params/set_params/clone across the facades."""

import numpy as np
from sklearn.base import clone

from conftest import random_image
from rainforge import PatchFuser, RainSynthesizer, SlicSegmenter, SuperpixelPatch


def make_patch(rng, size=6):
    return SuperpixelPatch(
        bbox=(0, 0, size, size),
        mask=np.ones((size, size), dtype=bool),
        pixels=rng.random((size, size, 3)),
    )


class TestSklearnCompat:
    def test_clone_slic(self):
        seg = SlicSegmenter(n_segments=12, compactness=5.0)
        copy = clone(seg)
        assert copy.get_params() == seg.get_params()

    def test_clone_fuser(self):
        fuser = PatchFuser(alpha=0.35, mask_keep_frac=0.7, random_state=3)
        copy = clone(fuser)
        assert copy.get_params() == fuser.get_params()

    def test_clone_synthesizer(self):
        synth = RainSynthesizer(beta=(0.8, 0.9), random_state=1)
        copy = clone(synth)
        assert copy.get_params() == synth.get_params()

    def test_set_params(self):
        seg = SlicSegmenter().set_params(n_segments=3)
        assert seg.n_segments == 3

    def test_clone_drops_fitted_state(self, rng):
        seg = SlicSegmenter(n_segments=4).fit(random_image(rng, 16, 16))
        assert hasattr(seg, "labels_")
        assert not hasattr(clone(seg), "labels_")


class TestComposition:
    def test_full_stage_chain(self, rng):
        source = random_image(rng, 32, 32)
        target = random_image(rng, 36, 36)

        segmenter = SlicSegmenter(n_segments=6).fit(source)
        patches = segmenter.extract_patches(source)
        fuser = PatchFuser(min_patch_frac=0.0, random_state=5).fit(patches[0])
        fused = fuser.transform(target)
        rainy = RainSynthesizer(random_state=9).fit().transform(fused)

        assert fused.shape == target.shape
        assert rainy.shape == target.shape
        assert 0.0 <= rainy.min() and rainy.max() <= 1.0
        # same seeds, same answer, estimator state notwithstanding
        again = RainSynthesizer(random_state=9).fit().transform(
            PatchFuser(min_patch_frac=0.0, random_state=5).fit(patches[0]).transform(target)
        )
        assert np.array_equal(rainy, again)
