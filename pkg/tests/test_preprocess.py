import numpy as np
import pytest

from teleopkit.preprocess import (
    SampleBatch,
    SampleItem,
    resize_image,
    tile_super_image,
    untile_super_image,
    vision_dropout,
)


def make_batch(rng, n, img_shape=(6, 8), tactile_shape=(4, 5)):
    items = []
    for _ in range(n):
        items.append(
            SampleItem(
                global_img=(rng.uniform(size=img_shape) * 255).astype(np.uint8),
                wrist_img=(rng.uniform(size=img_shape) * 255).astype(np.uint8),
                tactile=tuple((rng.uniform(size=tactile_shape) * 255).astype(np.uint8) for _ in range(8)),
                joints=rng.normal(size=13),
            )
        )
    return SampleBatch(tuple(items))


class TestTiling:
    def test_vga_inputs_give_double_dims(self):
        imgs = [np.zeros((480, 640), dtype=np.uint8) for _ in range(4)]
        assert tile_super_image(imgs).shape == (960, 1280)

    def test_quadrant_means(self):
        imgs = [np.full((10, 12), v, dtype=np.uint8) for v in (10, 20, 30, 40)]
        tiled = tile_super_image(imgs)
        assert tiled[:10, :12].mean() == 10
        assert tiled[:10, 12:].mean() == 20
        assert tiled[10:, :12].mean() == 30
        assert tiled[10:, 12:].mean() == 40

    def test_untile_inverts_bit_exact(self, rng):
        imgs = [(rng.uniform(size=(7, 9)) * 255).astype(np.uint8) for _ in range(4)]
        back = untile_super_image(tile_super_image(imgs))
        for a, b in zip(imgs, back):
            np.testing.assert_array_equal(a, b)

    def test_pixel_sum_conserved(self, rng):
        imgs = [(rng.uniform(size=(16, 16)) * 255).astype(np.uint8) for _ in range(4)]
        tiled = tile_super_image(imgs)
        assert tiled.astype(np.uint64).sum() == sum(im.astype(np.uint64).sum() for im in imgs)

    def test_wrong_count_rejected(self):
        with pytest.raises(ValueError, match="4"):
            tile_super_image([np.zeros((2, 2), dtype=np.uint8)] * 3)

    def test_mismatched_dims_rejected(self):
        imgs = [np.zeros((4, 4), dtype=np.uint8)] * 3 + [np.zeros((4, 5), dtype=np.uint8)]
        with pytest.raises(ValueError, match="identical"):
            tile_super_image(imgs)


class TestDropout:
    def test_p_zero_is_identity(self, rng):
        batch = make_batch(rng, 20)
        out = vision_dropout(batch, 0.0, seed=4)
        for a, b in zip(batch.items, out.items):
            np.testing.assert_array_equal(a.global_img, b.global_img)
            np.testing.assert_array_equal(a.wrist_img, b.wrist_img)

    def test_p_one_zeroes_cameras_only(self, rng):
        batch = make_batch(rng, 10)
        out = vision_dropout(batch, 1.0, seed=4)
        for a, b in zip(batch.items, out.items):
            assert not b.global_img.any()
            assert not b.wrist_img.any()
            for ta, tb in zip(a.tactile, b.tactile):
                np.testing.assert_array_equal(ta, tb)
            np.testing.assert_array_equal(a.joints, b.joints)

    def test_cameras_drop_together(self, rng):
        batch = make_batch(rng, 200)
        out = vision_dropout(batch, 0.5, seed=1)
        for a, b in zip(batch.items, out.items):
            g_zeroed = not b.global_img.any()
            w_zeroed = not b.wrist_img.any()
            assert g_zeroed == w_zeroed

    def test_fraction_within_binomial_bound(self, rng):
        batch = make_batch(rng, 10000, img_shape=(1, 1), tactile_shape=(1, 1))
        out = vision_dropout(batch, 0.3, seed=7)
        dropped = sum(1 for a, b in zip(batch.items, out.items) if not np.array_equal(a.global_img, b.global_img))
        assert 0.28 <= dropped / 10000 <= 0.32

    def test_deterministic_per_seed(self, rng):
        batch = make_batch(rng, 50)
        a = vision_dropout(batch, 0.4, seed=11)
        b = vision_dropout(batch, 0.4, seed=11)
        for ia, ib in zip(a.items, b.items):
            np.testing.assert_array_equal(ia.global_img, ib.global_img)

    def test_invalid_p_rejected(self, rng):
        with pytest.raises(ValueError):
            vision_dropout(make_batch(rng, 1), 1.5, seed=0)


class TestSampleBatch:
    def test_validation(self, rng):
        with pytest.raises(ValueError, match="tactile"):
            SampleItem(np.zeros((2, 2)), np.zeros((2, 2)), tuple(np.zeros((2, 2)) for _ in range(7)), np.zeros(13))
        with pytest.raises(ValueError, match="13"):
            SampleItem(np.zeros((2, 2)), np.zeros((2, 2)), tuple(np.zeros((2, 2)) for _ in range(8)), np.zeros(12))

    def test_npz_round_trip(self, tmp_path, rng):
        batch = make_batch(rng, 6)
        path = tmp_path / "batch.npz"
        batch.to_npz(path)
        loaded = SampleBatch.from_npz(path)
        assert len(loaded) == 6
        for a, b in zip(batch.items, loaded.items):
            np.testing.assert_array_equal(a.global_img, b.global_img)
            np.testing.assert_array_equal(a.tactile[3], b.tactile[3])
            np.testing.assert_array_equal(a.joints, b.joints)


class TestResize:
    def test_super_image_to_target_dims(self, rng):
        img = (rng.uniform(size=(960, 1280)) * 255).astype(np.uint8)
        out = resize_image(img, (320, 480))
        assert out.shape == (480, 320)

    def test_identity_resize_bit_exact(self, rng):
        img = (rng.uniform(size=(48, 64)) * 255).astype(np.uint8)
        out = resize_image(img, (64, 48))
        np.testing.assert_array_equal(out, img)

    def test_constant_image_stays_constant(self):
        img = np.full((30, 40), 77, dtype=np.uint8)
        out = resize_image(img, (13, 11))
        assert np.all(out == 77)

    def test_channel_last_supported(self, rng):
        img = (rng.uniform(size=(24, 32, 3)) * 255).astype(np.uint8)
        out = resize_image(img, (16, 12))
        assert out.shape == (12, 16, 3)

    def test_zero_target_rejected(self):
        with pytest.raises(ValueError):
            resize_image(np.zeros((4, 4), dtype=np.uint8), (0, 4))

    def test_float_image_preserves_dtype(self, rng):
        img = rng.uniform(size=(20, 20))
        out = resize_image(img, (10, 10))
        assert out.dtype == img.dtype
