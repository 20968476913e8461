import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stopbed.errors import ShapeError, StateError, UpdateRejected
from stopbed.nn import DenseNet, Optimizer, apply_update, forward, grad_input, grad_params, load_nets, save_nets


def linear_net(w, b):
    w = np.atleast_2d(np.asarray(w, dtype=float))
    return DenseNet([w.shape[0], w.shape[1]], weights=[w], biases=[np.asarray(b, dtype=float)])


def fd_param_grads(net, x, up, h=1e-5):
    out = []
    for p in net.params():
        g = np.zeros_like(p)
        for i in np.ndindex(p.shape):
            old = p[i]
            p[i] = old + h
            fp = np.sum(up * forward(net, x))
            p[i] = old - h
            fm = np.sum(up * forward(net, x))
            p[i] = old
            g[i] = (fp - fm) / (2 * h)
        out.append(g)
    return out


class TestForward:
    def test_zero_parameters(self):
        net = DenseNet([3, 4, 2], weights=[np.zeros((3, 4)), np.zeros((4, 2))], biases=[np.zeros(4), np.zeros(2)])
        np.testing.assert_array_equal(forward(net, np.ones(3)), 0.0)

    def test_single_linear_layer(self, rng):
        w, b = rng.normal(size=(3, 2)), rng.normal(size=2)
        x = rng.normal(size=(5, 3))
        np.testing.assert_allclose(forward(linear_net(w, b), x), x @ w + b)

    def test_relu_blocks_negative(self):
        net = DenseNet([1, 1, 1], weights=[np.array([[1.0]]), np.array([[2.0]])], biases=[np.zeros(1), np.zeros(1)])
        assert forward(net, np.array([-3.0]))[0] == 0.0
        assert forward(net, np.array([3.0]))[0] == 6.0

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            forward(DenseNet([3, 2]), np.ones(4))

    def test_seeded_init(self):
        a, b = DenseNet([4, 8, 1], seed=5), DenseNet([4, 8, 1], seed=5)
        for p, q in zip(a.params(), b.params()):
            np.testing.assert_array_equal(p, q)
        lim = 1 / np.sqrt(4)
        assert np.abs(a.weights[0]).max() <= lim


class TestGradients:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_param_gradients_match_fd(self, seed):
        r = np.random.default_rng(seed)
        sizes = [int(r.integers(1, 5))] + [int(r.integers(2, 7)) for _ in range(r.integers(1, 3))] + [int(r.integers(1, 3))]
        net = DenseNet(sizes, seed=seed)
        x = r.uniform(-1, 1, size=(3, sizes[0]))
        up = r.normal(size=(3, sizes[-1]))
        for g, fd in zip(grad_params(net, x, up), fd_param_grads(net, x, up)):
            np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-8)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_input_gradients_match_fd(self, seed):
        r = np.random.default_rng(seed)
        net = DenseNet([3, 6, 5, 1], seed=seed)
        x = r.uniform(-1, 1, size=(2, 3))
        g = grad_input(net, x)
        h = 1e-5
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (forward(net, x + e) - forward(net, x - e))[:, 0] / (2 * h)
            np.testing.assert_allclose(g[:, j], fd, rtol=1e-5, atol=1e-8)

    def test_zero_upstream(self, rng):
        net = DenseNet([3, 5, 2], seed=1)
        for g in grad_params(net, rng.normal(size=(4, 3)), np.zeros((4, 2))):
            assert not g.any()

    def test_linear_net_analytic(self, rng):
        w, b = rng.normal(size=(3, 1)), rng.normal(size=1)
        x = rng.normal(size=3)
        net = linear_net(w, b)
        gw, gb = grad_params(net, x, np.ones(1))
        np.testing.assert_allclose(gw[:, 0], x)
        np.testing.assert_allclose(gb, 1.0)
        np.testing.assert_allclose(grad_input(net, x), w[:, 0])

    def test_dead_relu_input(self):
        # the only path from input 0 runs through a unit that is never active
        w0 = np.array([[1.0, 0.0], [0.0, 1.0]])
        net = DenseNet([2, 2, 1], weights=[w0, np.array([[1.0], [1.0]])], biases=[np.array([-100.0, 0.0]), np.zeros(1)])
        g = grad_input(net, np.array([[0.5, 0.7], [-0.3, 0.2]]))
        np.testing.assert_array_equal(g[:, 0], 0.0)

    def test_multi_output_grad_input_rejected(self):
        with pytest.raises(ShapeError):
            grad_input(DenseNet([2, 3]), np.ones(2))
        with pytest.raises(ShapeError):
            grad_params(DenseNet([2, 3]), np.ones((4, 2)), np.ones((4, 2)))


class TestUpdates:
    def test_sgd_step(self, rng):
        net = DenseNet([2, 1], seed=0)
        before = [p.copy() for p in net.params()]
        grads = [rng.normal(size=p.shape) for p in net.params()]
        apply_update(net, grads, Optimizer("sgd", 0.1), "ascent")
        for p, p0, g in zip(net.params(), before, grads):
            np.testing.assert_allclose(p, p0 + 0.1 * g)
        apply_update(net, grads, Optimizer("sgd", 0.1), "descent")
        for p, p0 in zip(net.params(), before):
            np.testing.assert_allclose(p, p0, atol=1e-15)

    def test_zero_gradient_sgd(self):
        net = DenseNet([2, 3, 1], seed=0)
        before = [p.copy() for p in net.params()]
        opt = Optimizer("sgd", 0.5)
        apply_update(net, [np.zeros_like(p) for p in net.params()], opt)
        assert opt.step == 1
        for p, p0 in zip(net.params(), before):
            np.testing.assert_array_equal(p, p0)

    def test_adam_constant_gradient_step_is_lr(self):
        opt = Optimizer("adam", 1e-3)
        for _ in range(200):
            d = opt.deltas([np.full(3, 0.37)])
        np.testing.assert_allclose(d[0], 1e-3, rtol=1e-4)

    def test_nan_rejected(self):
        net = DenseNet([2, 1], seed=0)
        before = [p.copy() for p in net.params()]
        bad = [np.full(p.shape, np.nan) for p in net.params()]
        with pytest.raises(UpdateRejected):
            apply_update(net, bad, Optimizer())
        for p, p0 in zip(net.params(), before):
            np.testing.assert_array_equal(p, p0)

    def test_optimizer_validation(self):
        with pytest.raises(ValueError):
            Optimizer("adam", 0.0)
        with pytest.raises(ValueError):
            Optimizer("rmsprop", 1e-3)


class TestCheckpoints:
    def test_bit_exact_roundtrip(self, tmp_path, rng):
        a, b = DenseNet([5, 80, 80, 1], seed=1), DenseNet([4, 80, 80, 2], seed=2)
        save_nets(tmp_path / "ck", q=a, policy=b)
        nets = load_nets(tmp_path / "ck")
        assert set(nets) == {"q", "policy"}
        for src, dst in ((a, nets["q"]), (b, nets["policy"])):
            assert dst.layer_sizes == src.layer_sizes
            for p, q in zip(src.params(), dst.params()):
                assert p.tobytes() == q.tobytes()

    def test_corrupt_files(self, tmp_path):
        save_nets(tmp_path / "ck", q=DenseNet([3, 4, 1]))
        raw = (tmp_path / "ck").read_bytes()
        (tmp_path / "trunc").write_bytes(raw[:-9])
        with pytest.raises(StateError):
            load_nets(tmp_path / "trunc")
        (tmp_path / "junk").write_bytes(b"hello world")
        with pytest.raises(StateError):
            load_nets(tmp_path / "junk")
        (tmp_path / "extra").write_bytes(raw + b"\x00")
        with pytest.raises(StateError):
            load_nets(tmp_path / "extra")
