import logging

import numpy as np
import pytest

from osmoblend.drift import AlphaParams
from osmoblend.image import AlignedInput, Canvas, naive_stitch
from osmoblend.metrics import fit_global_scale, smooth_test_image, synth_degrade
from osmoblend.pipeline import MODES, PipelineConfig, blend, find_seams, thread_count
from osmoblend.seams import build_partition


def crops(canvas, overlap=16):
    return list(synth_degrade(canvas, amount=1.0, overlap=overlap))


@pytest.fixture(scope="module")
def smooth64():
    return Canvas(smooth_test_image(128).data[:, ::2, ::2])


@pytest.mark.parametrize("mode", [m for m in MODES if m != "seam-removal"])
def test_identical_inputs_reproduce_image(smooth64, mode):
    ins = crops(smooth64)
    _, out, rep = blend(ins, (64, 64), PipelineConfig(mode=mode, alpha=AlphaParams(4)))
    assert np.max(np.abs(out.data - smooth64.data)) <= 0.5
    assert rep.converged


def test_seam_removal_on_identical_inputs(smooth64):
    # seam removal drops the true gradient across the seam, so the image is
    # only reproduced where it is flat across that face
    v = smooth64.data.copy()
    v[:, :, 32:] = v[:, :, 31:-1]
    flat = Canvas(v)
    _, out, rep = blend(crops(flat), (64, 64), PipelineConfig(mode="seam-removal"))
    assert np.max(np.abs(out.data - flat.data)) <= 0.5
    _, out, _ = blend(crops(smooth64), (64, 64), PipelineConfig(mode="seam-removal"))
    assert np.max(np.abs(out.data - smooth64.data)) > 0.5


def test_single_input(camera64):
    ins = [AlignedInput(camera64, (0, 0))]
    _, out, rep = blend(ins, (64, 64), PipelineConfig(mode="drift"))
    assert np.max(np.abs(out.data - camera64.data)) <= 0.5
    assert rep.seams == []


@pytest.mark.parametrize("seam", ["middle", "optimal"])
def test_brightness_change_is_removed(smooth64, seam):
    ins = list(synth_degrade(smooth64, "left", "multiplicative", 1.3, overlap=16))
    _, out, rep = blend(ins, (64, 64), PipelineConfig(mode="drift", seam=seam))
    assert rep.seam_energy_after <= 0.01 * rep.seam_energy_before
    assert fit_global_scale(out, smooth64).mse[0] <= 2.0


def test_naive_mode_is_plain_stitch(camera64):
    ins = crops(camera64)
    seams = find_seams(ins, "optimal")
    expect = naive_stitch(ins, build_partition(ins, seams, (64, 64)))
    raw, out, rep = blend(ins, (64, 64), PipelineConfig(mode="naive", seam="optimal"))
    assert np.array_equal(out.data, expect.data) and np.array_equal(raw, expect.data)
    assert rep.solves == []


def test_mean_is_carried_over(smooth64):
    ins = list(synth_degrade(smooth64, "right", "additive", 30, overlap=16))
    raw, _, rep = blend(ins, (64, 64), PipelineConfig(mode="seam-removal"))
    assert abs(rep.mean_after[0] - rep.mean_before[0]) <= 1e-5 * rep.mean_before[0]
    assert max(rep.mean_drift) <= 1e-6
    assert min(rep.min_before_unoffset) > 0


def test_deterministic(camera64):
    ins = list(synth_degrade(camera64, "left", "multiplicative", 1.2, overlap=12))
    cfg = PipelineConfig(mode="drift", seam="optimal")
    a = blend(ins, (64, 64), cfg)[0]
    b = blend(ins, (64, 64), cfg)[0]
    assert np.array_equal(a, b)


def test_colour_channels_and_threads(astronaut48, monkeypatch):
    ins = list(synth_degrade(astronaut48, "left", "multiplicative", 1.1, overlap=12))
    monkeypatch.setenv("OSMOBLEND_THREADS", "1")
    one = blend(ins, (48, 48), PipelineConfig())[0]
    monkeypatch.setenv("OSMOBLEND_THREADS", "3")
    three = blend(ins, (48, 48), PipelineConfig())[0]
    assert one.shape == (3, 48, 48)
    assert np.array_equal(one, three)


def test_thread_count(monkeypatch):
    monkeypatch.delenv("OSMOBLEND_THREADS", raising=False)
    assert thread_count(PipelineConfig(), 3) == 3
    monkeypatch.setenv("OSMOBLEND_THREADS", "2")
    assert thread_count(PipelineConfig(), 3) == 2
    assert thread_count(PipelineConfig(threads=5), 3) == 5


def test_alpha_width_is_clamped(smooth64, caplog):
    ins = crops(smooth64, overlap=8)
    with caplog.at_level(logging.WARNING):
        _, _, rep = blend(ins, (64, 64), PipelineConfig(mode="alpha", alpha=AlphaParams(16)))
    assert rep.alpha_half_width == 4
    assert "exceeds the overlap" in caplog.text


def test_alpha_forces_middle_seam(caplog):
    with caplog.at_level(logging.WARNING):
        cfg = PipelineConfig(mode="alpha", seam="optimal")
    assert cfg.seam == "middle"


@pytest.mark.parametrize("kw", [dict(mode="sharp"), dict(seam="best"), dict(offset=0.0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        PipelineConfig(**kw)
