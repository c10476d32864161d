import numpy as np
import pytest
from scipy.signal import correlate2d

from sncl.diffcore.tensor import Tensor
from sncl.errors import ParameterError, ShapeError, UnknownHeadError
from sncl.nir.decoder import build_decoder, decode_frame, frame_size
from sncl.nir.encoding import (EMBED_DIM, PAIRS_PER_INDEX, positional_encode,
                               session_time_embedding)
from sncl.nir.metrics import PSNR_CAP_DB, gaussian_window, psnr, ssim, vil_loss
from sncl.nir.training import warmup_cosine_lr

from _fd import fd_grad


class TestEncoding:
    def test_dimension(self):
        v = positional_encode(0.5, 0.25)
        assert v.shape == (EMBED_DIM,) == (160,)

    def test_interleaved_sin_cos(self):
        s, t = 0.3, 0.8
        v = positional_encode(s, t)
        phases_s = (1.25 ** np.arange(PAIRS_PER_INDEX)) * np.pi * s
        phases_t = (1.25 ** np.arange(PAIRS_PER_INDEX)) * np.pi * t
        half = 2 * PAIRS_PER_INDEX
        np.testing.assert_allclose(v[:half:2], np.sin(phases_s), rtol=0, atol=0)
        np.testing.assert_allclose(v[1:half:2], np.cos(phases_s), rtol=0, atol=0)
        np.testing.assert_allclose(v[half::2], np.sin(phases_t), rtol=0, atol=0)
        np.testing.assert_allclose(v[half + 1 :: 2], np.cos(phases_t), rtol=0, atol=0)

    @pytest.mark.parametrize("s,t", [(-0.1, 0.5), (1.1, 0.5), (0.5, -1e-9), (0.5, 2.0)])
    def test_domain_checked(self, s, t):
        with pytest.raises(ParameterError):
            positional_encode(s, t)

    def test_nearby_times_are_closer(self):
        anchor = positional_encode(0.5, 0.50)
        near = positional_encode(0.5, 0.52)
        far = positional_encode(0.5, 0.70)
        assert np.linalg.norm(anchor - near) < np.linalg.norm(anchor - far)

    def test_sessions_distinguishable(self):
        a = session_time_embedding(1, 0, 3, 8)
        b = session_time_embedding(2, 0, 3, 8)
        assert np.linalg.norm(a - b) > 0.1

    def test_single_frame_video_uses_t_zero(self):
        v = session_time_embedding(2, 0, 4, 1)
        np.testing.assert_array_equal(v, positional_encode(0.5, 0.0))

    @pytest.mark.parametrize("sid,frame", [(0, 0), (4, 0), (1, 8), (1, -1)])
    def test_index_bounds(self, sid, frame):
        with pytest.raises(ParameterError):
            session_time_embedding(sid, frame, 3, 8)


def reference_ssim(x, y, data_range=1.0, k1=0.01, k2=0.03, window=11, sigma=1.5):
    """Independent recompute: scipy valid correlation per channel."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 2:
        x, y = x[:, :, None], y[:, :, None]
    h, w, _ = x.shape
    if h < window or w < window:
        kern = np.full((h, w), 1.0 / (h * w))
    else:
        half = (window - 1) / 2.0
        g = np.exp(-((np.arange(window) - half) ** 2) / (2 * sigma**2))
        kern = np.outer(g, g)
        kern /= kern.sum()
    c1, c2 = (k1 * data_range) ** 2, (k2 * data_range) ** 2
    maps = []
    for c in range(x.shape[2]):
        xa, ya = x[:, :, c], y[:, :, c]
        mx = correlate2d(xa, kern, mode="valid")
        my = correlate2d(ya, kern, mode="valid")
        vx = correlate2d(xa * xa, kern, mode="valid") - mx * mx
        vy = correlate2d(ya * ya, kern, mode="valid") - my * my
        cov = correlate2d(xa * ya, kern, mode="valid") - mx * my
        maps.append(((2 * mx * my + c1) * (2 * cov + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2)))
    return float(np.mean(maps))


class TestSsim:
    def test_identical_frames_score_one(self):
        x = np.random.default_rng(0).random((16, 16, 3))
        assert ssim(x, x).item() == pytest.approx(1.0, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        x, y = rng.random((14, 14)), rng.random((14, 14))
        assert ssim(x, y).item() == pytest.approx(ssim(y, x).item(), abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_independent_recompute(self, seed):
        rng = np.random.default_rng(seed)
        shape = [(16, 16), (13, 17), (16, 16, 3), (11, 11), (20, 12, 3)][seed]
        x, y = rng.random(shape), rng.random(shape)
        assert ssim(x, y).item() == pytest.approx(reference_ssim(x, y), abs=1e-10)

    def test_small_frames_use_global_window(self):
        rng = np.random.default_rng(2)
        x, y = rng.random((6, 6)), rng.random((6, 6))
        assert ssim(x, y).item() == pytest.approx(reference_ssim(x, y), abs=1e-12)

    def test_blur_scores_below_self(self):
        rng = np.random.default_rng(3)
        x = rng.random((24, 24))
        blurred = correlate2d(np.pad(x, 1, mode="edge"), np.full((3, 3), 1 / 9), mode="valid")
        assert ssim(x, blurred).item() < 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            ssim(np.zeros((8, 8)), np.zeros((9, 8)))

    def test_window_normalized(self):
        w = gaussian_window(11, 1.5)
        assert w.shape == (11, 11)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        assert w[5, 5] == w.max()


class TestPsnr:
    def test_identical_capped(self):
        x = np.ones((8, 8))
        assert psnr(x, x) == PSNR_CAP_DB

    def test_known_value(self):
        x = np.zeros((10, 10))
        y = np.full((10, 10), 0.1)  # mse = 0.01 over range 1 -> exactly 20 dB
        assert psnr(x, y) == pytest.approx(20.0, abs=1e-12)

    def test_cap_binds_for_tiny_error(self):
        x = np.zeros((4, 4))
        y = x.copy()
        y[0, 0] = 1e-9
        assert psnr(x, y) == PSNR_CAP_DB

    def test_data_range_scales(self):
        x = np.zeros((6, 6))
        y = np.full((6, 6), 25.5)
        assert psnr(x, y, data_range=255.0) == pytest.approx(20.0, abs=1e-12)


class TestVilLoss:
    def test_alpha_one_is_pure_l1(self):
        rng = np.random.default_rng(0)
        a, b = rng.random((12, 12, 3)), rng.random((12, 12, 3))
        assert vil_loss(a, b, alpha=1.0).item() == pytest.approx(np.abs(a - b).mean(), abs=1e-12)

    def test_alpha_zero_is_ssim_complement(self):
        rng = np.random.default_rng(1)
        a, b = rng.random((16, 16)), rng.random((16, 16))
        assert vil_loss(a, b, alpha=0.0).item() == pytest.approx(1.0 - ssim(a, b).item(), abs=1e-12)

    def test_perfect_prediction_is_zero_loss(self):
        a = np.random.default_rng(2).random((12, 12))
        assert vil_loss(a, a).item() == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("shape", [(8, 8), (16, 16)])
    def test_gradient_matches_finite_differences(self, shape):
        rng = np.random.default_rng(4)
        target = rng.random(shape)
        pred = rng.random(shape)
        leaf = Tensor(pred, needs_grad=True)
        vil_loss(target, leaf).backward()
        numeric = fd_grad(lambda: vil_loss(target, Tensor(pred)).item(), pred)
        np.testing.assert_allclose(leaf.grad, numeric, rtol=1e-5, atol=1e-8)


class TestDecoder:
    def test_frame_size(self):
        assert frame_size() == 32

    def test_decode_shapes_and_range(self):
        model = build_decoder(sessions=2)
        emb = session_time_embedding(1, 0, 2, 4)
        frame, handles = decode_frame(model, emb, head=1)
        assert frame.data.shape == (32, 32, 3)
        assert (frame.data > 0).all() and (frame.data < 1).all()
        assert any(name.startswith("head1") for name in handles)

    def test_unknown_head(self):
        model = build_decoder(sessions=2)
        emb = session_time_embedding(1, 0, 2, 4)
        with pytest.raises(UnknownHeadError):
            decode_frame(model, emb, head=9)

    @pytest.mark.parametrize("placement,grid", [("fnerv2", 16), ("fnerv3", 32)])
    def test_fso_placement_grid(self, placement, grid):
        model = build_decoder(sessions=1, fso_placement=placement, fso_modes=(3, 3))
        stage_params = [p for p in model.parameters() if ".fso." in p.name]
        assert stage_params, "placement should add spectral tensors"
        emb = session_time_embedding(1, 0, 1, 2)
        frame, _ = decode_frame(model, emb, head=1)
        assert frame.data.shape == (32, 32, 3)

    def test_bad_placement_rejected(self):
        with pytest.raises(ParameterError):
            build_decoder(sessions=1, fso_placement="everywhere")

    def test_no_placement_has_no_spectral_weights(self):
        model = build_decoder(sessions=1)
        assert not [p for p in model.parameters() if ".fso." in p.name]


class TestSchedule:
    def test_linear_warmup(self):
        lrs = [warmup_cosine_lr(1.0, e, 10, 4) for e in range(4)]
        np.testing.assert_allclose(lrs, [0.25, 0.5, 0.75, 1.0])

    def test_cosine_tail(self):
        total, warm = 10, 4
        lr_mid = warmup_cosine_lr(1.0, 7, total, warm)
        assert lr_mid == pytest.approx(0.5 * (1 + np.cos(np.pi * 3 / 6)))

    def test_monotone_decay_after_warmup(self):
        vals = [warmup_cosine_lr(2e-3, e, 30, 5) for e in range(5, 30)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_no_warmup_starts_at_base(self):
        assert warmup_cosine_lr(0.5, 0, 20, 0) == 0.5
