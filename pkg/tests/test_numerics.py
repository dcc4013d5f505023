import math

import numpy as np
import pytest

from gmasimt import numerics as nx
from gmasimt.numerics import Tensor, grad_check


def param(a):
    return Tensor(np.asarray(a, dtype=float), requires_grad=True)


def test_matmul_identity_and_hand_values():
    a = Tensor(np.eye(2))
    b = Tensor(np.array([[3.0, 4.0], [5.0, 6.0]]))
    assert np.array_equal(nx.matmul(a, b).data, b.data)
    assert nx.matmul(Tensor([[1.0, 2.0]]), Tensor([[3.0], [4.0]])).data.tolist() == [[11.0]]


def test_matmul_shape_mismatch():
    with pytest.raises(nx.ShapeError):
        nx.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_matmul_gradient(rng):
    a, b = param(rng.normal(size=(3, 4))), param(rng.normal(size=(4, 2)))
    assert grad_check(lambda: nx.tsum(nx.matmul(a, b)), [a, b]) < 1e-6
    a.grad = None
    nx.tsum(nx.matmul(a, b)).backward()
    assert np.allclose(a.grad, np.broadcast_to(b.data.sum(axis=1), (3, 4)))


def test_batched_matmul_gradient(rng):
    a, b = param(rng.normal(size=(2, 3, 4))), param(rng.normal(size=(4, 5)))
    w = rng.normal(size=(2, 3, 5))
    assert grad_check(lambda: nx.tsum(nx.matmul(a, b) * w), [a, b]) < 1e-6


@pytest.mark.parametrize("row, expected", [
    ([0.0, 0.0, 0.0], [1 / 3, 1 / 3, 1 / 3]),
    ([1000.0, 1000.0], [0.5, 0.5]),
    ([0.0, math.log(3.0)], [0.25, 0.75]),
])
def test_softmax_examples(row, expected):
    out = nx.softmax_lastdim(Tensor(row)).data
    assert np.allclose(out, expected, atol=1e-12)
    assert np.isfinite(out).all()


def test_softmax_rows_and_shift(rng):
    x = rng.normal(size=(5, 7)) * 10
    s = nx.softmax_lastdim(Tensor(x)).data
    assert np.abs(s.sum(axis=-1) - 1).max() < 1e-12
    assert np.abs(nx.softmax_lastdim(Tensor(x + 123.4)).data - s).max() < 1e-12


def test_softmax_fully_masked_row_raises():
    with pytest.raises(nx.NonFiniteError):
        nx.softmax_lastdim(Tensor(np.zeros((1, 3))), np.zeros((1, 3), dtype=bool))


def test_softmax_gradient_with_mask(rng):
    x = param(rng.normal(size=(3, 4)))
    mask = np.array([[1, 1, 0, 0], [1, 1, 1, 1], [1, 0, 0, 0]], dtype=bool)
    w = rng.normal(size=(3, 4))
    assert grad_check(lambda: nx.tsum(nx.softmax_lastdim(x, mask) * w), [x]) < 1e-6


def test_elementwise_values_and_grads():
    assert nx.exp(Tensor(0.0)).item() == 1.0
    assert nx.tanh(Tensor(0.0)).item() == 0.0
    x = param(1.0)
    nx.exp(x).backward()
    assert abs(x.grad - math.e) < 1e-12
    assert grad_check(lambda: nx.exp(x), [x]) < 1e-8


@pytest.mark.parametrize("name", ["tanh", "exp", "add", "mul", "scale"])
def test_elementwise_registry(name, rng):
    a, b = param(rng.normal(size=(2, 3))), param(rng.normal(size=(3,)))
    if name in ("tanh", "exp"):
        f = lambda: nx.tsum(nx.elementwise(name, a))
        ps = [a]
    elif name == "scale":
        f = lambda: nx.tsum(nx.elementwise(name, a, 2.5))
        ps = [a]
    else:
        f = lambda: nx.tsum(nx.elementwise(name, a, b) * a)
        ps = [a, b]
    assert grad_check(f, ps) < 1e-6


def test_broadcast_shape_mismatch():
    with pytest.raises(nx.ShapeError):
        nx.add(Tensor(np.ones((2, 3))), Tensor(np.ones((4,))))


def test_cumsum_examples_and_grad(rng):
    assert nx.cumsum_lastdim(Tensor([1.0, 1.0, 1.0])).data.tolist() == [1.0, 2.0, 3.0]
    assert nx.cumsum_lastdim(Tensor([0.5, 1.0, 2.0])).data.tolist() == [0.5, 1.5, 3.5]
    x = param(rng.normal(size=(2, 5)))
    w = rng.normal(size=(2, 5))
    assert grad_check(lambda: nx.tsum(nx.cumsum_lastdim(x) * w), [x]) < 1e-6


def test_cross_entropy_examples(rng):
    logits = np.full((3, 4), -50.0)
    targets = np.array([0, 2, 3])
    logits[np.arange(3), targets] = 50.0
    assert nx.cross_entropy(Tensor(logits), targets).item() < 1e-12
    assert abs(nx.cross_entropy(Tensor(np.zeros((2, 4))), [1, 3]).item() - math.log(4)) < 1e-12
    x = param(rng.normal(size=(3, 5)))
    assert grad_check(lambda: nx.cross_entropy(x, [4, 0, 2]), [x]) < 1e-6


def test_cross_entropy_mask_and_range():
    logits = Tensor(np.zeros((1, 2, 4)))
    mask = np.array([[True, False]])
    assert abs(nx.cross_entropy(logits, np.array([[1, 0]]), mask).item() - math.log(4)) < 1e-12
    with pytest.raises(IndexError):
        nx.cross_entropy(Tensor(np.zeros((2, 4))), [1, 4])


def test_grad_check_square_and_constant():
    x = param(3.0)
    assert grad_check(lambda: nx.square(x), [x]) < 1e-6
    c = param(2.0)
    x.grad = None
    out = nx.scale(c, 0.0) + 1.0
    out.backward()
    assert c.grad == 0.0
    assert grad_check(lambda: nx.scale(c, 0.0) + 1.0, [c]) == 0.0


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_grad_check_reports_non_finite():
    x = param(-1.0)
    with pytest.raises(nx.NonFiniteError):
        grad_check(lambda: nx.log(x), [x])


def test_fan_out_accumulates():
    x = param(2.0)
    y = x * x + nx.scale(x, 3.0)   # two paths through x
    y.backward()
    assert x.grad == pytest.approx(2 * 2.0 + 3.0)


def test_backward_twice_accumulates():
    x = param(1.5)
    nx.square(x).backward()
    nx.square(x).backward()
    assert x.grad == pytest.approx(6.0)


@pytest.mark.parametrize("op", ["layer_norm", "relu", "div", "getitem", "embedding", "concat",
                                "transpose", "log_softmax", "tmean", "maximum", "absolute"])
def test_registered_op_gradients(op, rng):
    x = param(rng.normal(size=(3, 4)) + 0.1)
    w = rng.normal(size=(3, 4))
    if op == "layer_norm":
        g, b = param(rng.normal(size=4)), param(rng.normal(size=4))
        f, ps = (lambda: nx.tsum(nx.layer_norm(x, g, b) * w)), [x, g, b]
    elif op == "relu":
        f, ps = (lambda: nx.tsum(nx.relu(x) * w)), [x]
    elif op == "div":
        y = param(rng.uniform(1, 2, size=(3, 4)))
        f, ps = (lambda: nx.tsum(nx.div(x, y) * w)), [x, y]
    elif op == "getitem":
        f, ps = (lambda: nx.tsum(nx.getitem(x, (slice(None), [0, 0, 2])))), [x]
    elif op == "embedding":
        f, ps = (lambda: nx.tsum(nx.embedding(x, np.array([[0, 2], [2, 2]])) * 1.7)), [x]
    elif op == "concat":
        y = param(rng.normal(size=(3, 2)))
        f, ps = (lambda: nx.tsum(nx.concat([x, y], axis=1) * rng_w(3, 6))), [x, y]
    elif op == "transpose":
        f, ps = (lambda: nx.tsum(nx.transpose(x) * w.T)), [x]
    elif op == "log_softmax":
        f, ps = (lambda: nx.tsum(nx.log_softmax_lastdim(x) * w)), [x]
    elif op == "tmean":
        f, ps = (lambda: nx.tsum(nx.tmean(x, axis=0) * w[0])), [x]
    elif op == "maximum":
        f, ps = (lambda: nx.tsum(nx.maximum(x, 0.05) * w)), [x]
    else:
        f, ps = (lambda: nx.tsum(nx.absolute(x) * w)), [x]
    assert grad_check(f, ps) < 1e-5


def rng_w(*shape):
    return np.linspace(-1, 1, int(np.prod(shape))).reshape(shape)


def test_determinism(rng):
    a = rng.normal(size=(4, 4))

    def run():
        x = param(a)
        y = nx.tsum(nx.softmax_lastdim(nx.matmul(x, x)) * 3.0)
        y.backward()
        return y.data.copy(), x.grad.copy()

    (y1, g1), (y2, g2) = run(), run()
    assert np.array_equal(y1, y2) and np.array_equal(g1, g2)


def test_no_grad_builds_no_graph():
    x = param(1.0)
    with nx.no_grad():
        y = nx.exp(x)
    assert not y.requires_grad
