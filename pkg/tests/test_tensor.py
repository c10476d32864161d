"""Autodiff engine checks: every op against central finite differences,
plus layout oracles for the structured ops."""

import numpy as np
import pytest

from _fd import check_against_fd, fd_grad, assert_grads_close
from sncl.diffcore import Tensor, const, conv2d, pixel_shuffle
from sncl.errors import ShapeError

rng = np.random.default_rng(20240817)


def leaf(shape, scale=1.0, offset=0.0):
    return rng.standard_normal(shape) * scale + offset


class TestScalarQuadratic:
    def test_quadratic_matches_fd_to_1e6(self):
        # L(w) = sum((x @ w - y)^2), the canonical smoke case
        x = leaf((5, 3))
        w = leaf((3, 2))
        y = leaf((5, 2))

        def make():
            tw = Tensor(w, needs_grad=True)
            r = Tensor(x, needs_grad=False) @ tw - const(y)
            return (r * r).sum(), [tw]

        loss, (tw,) = make()
        loss.backward()
        num = fd_grad(lambda: make()[0].item(), w)
        assert np.abs(tw.grad - num).max() <= 1e-6


class TestElementwiseOps:
    @pytest.mark.parametrize("name,fn,domain", [
        ("add", lambda a, b: a + b, None),
        ("sub", lambda a, b: a - b, None),
        ("mul", lambda a, b: a * b, None),
        ("div", lambda a, b: a / b, "denom_away_from_zero"),
    ])
    def test_binary_ops(self, name, fn, domain):
        a = leaf((4, 3))
        b = leaf((4, 3)) + (3.0 if domain else 0.0)

        def make():
            ta, tb = Tensor(a, needs_grad=True), Tensor(b, needs_grad=True)
            return (fn(ta, tb) * fn(ta, tb)).sum(), [ta, tb]

        check_against_fd(make, [a, b])

    @pytest.mark.parametrize("name", ["relu", "gelu", "sigmoid", "tanh", "exp", "sqrt", "log", "abs"])
    def test_unary_ops(self, name):
        if name in ("sqrt", "log"):
            a = np.abs(leaf((3, 4))) + 0.5
        elif name in ("relu", "abs"):
            a = leaf((3, 4)) + 0.3  # keep probes away from the kink
            a[np.abs(a) < 0.05] = 0.2
        else:
            a = leaf((3, 4))

        def make():
            ta = Tensor(a, needs_grad=True)
            out = getattr(ta, name)()
            return (out * out).sum(), [ta]

        check_against_fd(make, [a])

    def test_pow_and_neg(self):
        a = np.abs(leaf((5,))) + 0.5

        def make():
            ta = Tensor(a, needs_grad=True)
            return (-(ta**3) + ta**-1).sum(), [ta]

        check_against_fd(make, [a])


class TestBroadcasting:
    @pytest.mark.parametrize("sa,sb", [
        ((4, 3), (3,)),
        ((4, 3), (1, 3)),
        ((4, 1), (1, 3)),
        ((2, 1, 3), (4, 3)),
        ((1,), (5, 2)),
    ])
    def test_broadcast_grads(self, sa, sb):
        a, b = leaf(sa), leaf(sb)

        def make():
            ta, tb = Tensor(a, needs_grad=True), Tensor(b, needs_grad=True)
            out = ta * tb + ta
            return (out * out).sum(), [ta, tb]

        check_against_fd(make, [a, b])


class TestReductionsAndShapes:
    def test_sum_axis_keepdims(self):
        a = leaf((3, 4, 2))

        def make():
            ta = Tensor(a, needs_grad=True)
            s = ta.sum(axis=(0, 2)) + ta.sum(axis=(1, 2), keepdims=True).reshape((3,)).sum()
            return (s * s).sum(), [ta]

        check_against_fd(make, [a])

    def test_mean_matches_manual(self):
        a = leaf((6, 2))
        ta = Tensor(a, needs_grad=True)
        ta.mean().backward()
        assert_grads_close(ta.grad, np.full_like(a, 1.0 / a.size))

    def test_transpose_reshape(self):
        a = leaf((2, 3, 4))

        def make():
            ta = Tensor(a, needs_grad=True)
            out = ta.transpose((2, 0, 1)).reshape((4, 6))
            return (out * out).sum(), [ta]

        check_against_fd(make, [a])

    def test_matmul_shape_errors(self):
        with pytest.raises(ShapeError):
            _ = Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 3)))
        with pytest.raises(ShapeError):
            Tensor(np.ones((2, 2))).backward()  # non-scalar


def conv2d_loop_oracle(x, w, b, stride, padding):
    """Direct quadruple-loop cross-correlation, the independent reference."""
    bs, cin, h, ww = x.shape
    cout, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (ww + 2 * padding - kw) // stride + 1
    y = np.zeros((bs, cout, ho, wo))
    for n in range(bs):
        for o in range(cout):
            for i in range(ho):
                for j in range(wo):
                    patch = xp[n, :, i * stride : i * stride + kh, j * stride : j * stride + kw]
                    y[n, o, i, j] = (patch * w[o]).sum() + b[o]
    return y


class TestConv2d:
    @pytest.mark.parametrize("stride,padding", [(1, 0), (1, 1), (2, 0), (2, 1)])
    def test_forward_matches_loop_oracle(self, stride, padding):
        x = leaf((2, 3, 6, 5))
        w = leaf((4, 3, 3, 3))
        b = leaf((4,))
        out = conv2d(Tensor(x), Tensor(w), Tensor(b), stride=stride, padding=padding)
        np.testing.assert_allclose(out.data, conv2d_loop_oracle(x, w, b, stride, padding),
                                   rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("stride,padding", [(1, 0), (1, 1), (2, 1)])
    def test_grads(self, stride, padding):
        x = leaf((1, 2, 5, 4))
        w = leaf((2, 2, 3, 3))
        b = leaf((2,))

        def make():
            tx = Tensor(x, needs_grad=True)
            tw = Tensor(w, needs_grad=True)
            tb = Tensor(b, needs_grad=True)
            out = conv2d(tx, tw, tb, stride=stride, padding=padding)
            return (out * out).sum(), [tx, tw, tb]

        check_against_fd(make, [x, w, b])

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            conv2d(Tensor(np.ones((1, 3, 4, 4))), Tensor(np.ones((2, 2, 3, 3))))


class TestPixelShuffle:
    def test_layout_matches_index_oracle(self):
        bsz, c, r, h, w = 2, 3, 2, 3, 4
        x = leaf((bsz, c * r * r, h, w))
        y = pixel_shuffle(Tensor(x), r).data
        assert y.shape == (bsz, c, h * r, w * r)
        for n in range(bsz):
            for ch in range(c):
                for i in range(h * r):
                    for j in range(w * r):
                        src = x[n, ch * r * r + (i % r) * r + (j % r), i // r, j // r]
                        assert y[n, ch, i, j] == src

    def test_grads(self):
        x = leaf((1, 4, 2, 3))

        def make():
            tx = Tensor(x, needs_grad=True)
            out = pixel_shuffle(tx, 2)
            return (out * out).sum(), [tx]

        check_against_fd(make, [x])

    def test_bad_channels(self):
        with pytest.raises(ShapeError):
            pixel_shuffle(Tensor(np.ones((1, 3, 2, 2))), 2)


class TestTapeMechanics:
    def test_grad_accumulates_across_reuse(self):
        a = leaf((3,))
        ta = Tensor(a, needs_grad=True)
        (ta * ta + ta * const(2.0)).sum().backward()
        assert_grads_close(ta.grad, 2 * a + 2)

    def test_constants_get_no_grad(self):
        c = const(np.ones(3))
        t = Tensor(np.ones(3), needs_grad=True)
        (t * c).sum().backward()
        assert c.grad is None

    def test_diamond_graph(self):
        a = leaf((4,))

        def make():
            ta = Tensor(a, needs_grad=True)
            u = ta * ta
            v = u + ta
            return (u * v).sum(), [ta]

        check_against_fd(make, [a])
