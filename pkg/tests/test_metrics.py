import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from osmoblend.image import Canvas
from osmoblend.metrics import fit_global_offset, fit_global_scale, seam_energy, smooth_test_image, synth_degrade
from osmoblend.seams import Seam


class TestSeamEnergy:
    def test_constant(self):
        assert seam_energy(Canvas(np.full((4, 8), 9.0)), Seam([4] * 4)) == 0.0

    def test_step(self):
        v = np.where(np.arange(8) < 4, 0.0, 100.0)[None, :].repeat(4, axis=0)
        assert seam_energy(Canvas(v), Seam([4] * 4)) == 40000.0

    def test_random_by_loop(self, rng):
        v = rng.uniform(0, 255, (3, 6, 9))
        seam = Seam([3, 4, 4, 5, 4, 3])
        expect = sum((v[c, y, s] - v[c, y, s - 1]) ** 2 for c in range(3) for y, s in enumerate(seam.faces))
        assert seam_energy(Canvas(v), seam) == pytest.approx(expect, rel=1e-12)

    def test_outside(self):
        with pytest.raises(ValueError):
            seam_energy(Canvas(np.ones((2, 4))), Seam([4, 4]))


class TestGlobalFit:
    def test_doubling(self, rng):
        r = rng.uniform(10, 100, (8, 8))
        fit = fit_global_scale(Canvas(2 * r), Canvas(r))
        assert fit.coef[0] == pytest.approx(2.0, rel=1e-14)
        assert fit.mse[0] == pytest.approx(0.0, abs=1e-20)

    def test_identity(self, rng):
        r = rng.uniform(10, 100, (8, 8))
        fit = fit_global_scale(Canvas(r), Canvas(r))
        assert fit.coef[0] == pytest.approx(1.0, rel=1e-15)

    def test_closed_form(self, rng):
        a, r = rng.uniform(1, 254, (2, 10, 10))
        fit = fit_global_scale(Canvas(a), Canvas(r))
        c = sum(x * y for x, y in zip(a.ravel(), r.ravel())) / sum(y * y for y in r.ravel())
        assert fit.coef[0] == pytest.approx(c, rel=1e-10)
        assert fit.mse[0] == pytest.approx(np.mean((a - c * r) ** 2), rel=1e-10)

    def test_clipped_pixels_excluded(self):
        r = np.array([[10.0, 20.0, 200.0]])
        a = np.array([[20.0, 40.0, 255.0]])
        fit = fit_global_scale(Canvas(a), Canvas(r))
        assert fit.count == 2 and fit.coef[0] == pytest.approx(2.0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-20, 20))
    def test_offset_recovered(self, seed, c):
        r = np.random.default_rng(seed).uniform(30, 200, (6, 6))
        fit = fit_global_offset(Canvas(r + c), Canvas(r))
        assert fit.coef[0] == pytest.approx(c, abs=1e-9)
        assert fit.mse[0] <= 1e-18


class TestSynthDegrade:
    def test_additive_saturates(self):
        img = Canvas(np.full((4, 20), 240.0))
        a, b = synth_degrade(img, "left", "additive", 30, overlap=4)
        assert np.all(a.image.data == 255.0) and np.all(b.image.data == 240.0)

    def test_multiplicative(self):
        a, b = synth_degrade(Canvas(np.full((4, 20), 100.0)), "right", "multiplicative", 1.3, overlap=4)
        assert np.allclose(b.image.data, 130.0) and np.all(a.image.data == 100.0)

    def test_geometry(self):
        a, b = synth_degrade(Canvas(np.zeros((2, 20))), overlap=6)
        assert a.image.nx == 13 and b.offset == (7, 0) and b.image.nx == 13

    def test_overlap_too_wide(self):
        with pytest.raises(ValueError):
            synth_degrade(Canvas(np.zeros((2, 8))), overlap=8)


def test_smooth_image_range():
    v = smooth_test_image().data
    assert v.shape == (1, 128, 128)
    assert v.min() >= 30 and v.max() * 1.3 <= 255 and v.max() + 30 <= 255
    assert np.array_equal(v, np.round(v))
