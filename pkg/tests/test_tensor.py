"""
Tests for the tensor engine, gradient checking, Adam and checkpoint storage
"""

import numpy as np
import pytest

from discograms.core import tensor as T
from discograms.core.checkpoint import (
    PARAMS_FILE, load_checkpoint, load_optimizer_state, read_manifest, save_checkpoint
)
from discograms.core.gradcheck import autodiff_gradient, discrepancy, grad_check, numeric_gradient
from discograms.core.optim import Adam, adam_step
from discograms.core.tensor import Parameter, Tensor
from discograms.utils.exceptions import NonFinite, SchemaViolation, ShapeMismatch, UnreadableFile


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def weighted(rng, shape):
    """Random float64 weights so checked functions have non-trivial gradients."""
    w = Tensor(rng.normal(size=shape))

    def reduce(out):
        return (out * w).sum()
    return reduce


def away_from_zero(rng, shape):
    return Tensor(rng.uniform(0.2, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape))


class TestForward:

    def test_softmax_of_zeros(self):
        np.testing.assert_allclose(T.softmax(Tensor([0.0, 0.0])).data, [0.5, 0.5])

    def test_softmax_rows_sum_to_one(self, rng):
        out = T.softmax(Tensor(rng.normal(size=(5, 7)) * 30))
        np.testing.assert_allclose(out.data.sum(axis=-1), np.ones(5), atol=1e-9)

    def test_identity_matmul(self, rng):
        a = rng.normal(size=(3, 4))
        np.testing.assert_allclose(T.matmul(Tensor(np.eye(3)), Tensor(a)).data, a)

    def test_matmul_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            T.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_add_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            Tensor(np.ones((2, 3))) + Tensor(np.ones((4,)))

    def test_python_scalars_are_float32(self):
        assert Tensor(1.5).dtype == np.float32
        assert (Tensor(np.ones(2)) * 2.0).dtype == np.float64

    def test_segment_softmax(self):
        scores = Tensor(np.array([1.0, 2.0, 3.0, -1.0, 0.5]))
        out = T.segment_softmax(scores, np.array([0, 0, 1, 1, 1]), 2)
        np.testing.assert_allclose([out.data[:2].sum(), out.data[2:].sum()], [1.0, 1.0])
        np.testing.assert_allclose(out.data[:2], T.softmax(Tensor(np.array([1.0, 2.0]))).data)

    def test_causal_mask(self):
        mask = T.causal_mask(3).data
        assert (mask[np.tril_indices(3)] == 0).all()
        assert (mask[np.triu_indices(3, k=1)] < -1e8).all()

    def test_cross_entropy_uniform_two_classes(self):
        loss = T.cross_entropy(Tensor(np.zeros((1, 2))), [0])
        assert loss.item() == pytest.approx(np.log(2.0), abs=1e-6)

    def test_cross_entropy_rejects_bad_targets(self):
        with pytest.raises(ShapeMismatch):
            T.cross_entropy(Tensor(np.zeros((2, 3))), [0])
        with pytest.raises(ShapeMismatch):
            T.cross_entropy(Tensor(np.zeros((1, 3))), [3])
        with pytest.raises(NonFinite):
            T.cross_entropy(Tensor(np.array([[np.nan, 0.0]])), [0])

    def test_dropout(self):
        x = Tensor(np.ones((50, 4)), requires_grad=True)
        assert T.dropout(x, 0.5, training=False) is x
        out = T.dropout(x, 0.5, training=True, rng=np.random.default_rng(1))
        assert set(np.unique(out.data)) <= {0.0, 2.0}
        out.sum().backward()
        np.testing.assert_array_equal(x.grad, out.data)
        with pytest.raises(ValueError):
            T.dropout(x, 1.0, training=True)

    def test_no_grad(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with T.no_grad():
            y = x * 2.0
        assert not y.requires_grad
        assert (x * 2.0).requires_grad

    def test_backward_needs_seed_for_vectors(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(ShapeMismatch):
            (x * 2.0).backward()

    def test_shared_input_accumulates(self):
        x = Tensor(np.array([3.0]), requires_grad=True)
        (x * x + x).sum().backward()
        np.testing.assert_allclose(x.grad, [7.0])


class TestGradCheck:

    def test_sum_of_squares(self, rng):
        assert grad_check(lambda x: (x * x).sum(), Tensor(rng.normal(size=(4, 3))))

    def test_constant_function_has_zero_gradient(self, rng):
        x = Tensor(rng.normal(size=(3,)))
        np.testing.assert_array_equal(autodiff_gradient(lambda _: Tensor(np.array(2.5)), x), np.zeros(3))

    def test_corrupted_backward_is_caught(self, rng):
        class DoubledExp(T.Exp):
            def backward(self, grad):
                return 2.0 * grad * self.out

        reduce = weighted(rng, (3, 2))
        x = Tensor(rng.normal(size=(3, 2)))
        assert not grad_check(lambda v: reduce(DoubledExp.apply(v)), x)
        assert grad_check(lambda v: reduce(T.exp(v)), x)

    def test_discrepancy_scale(self):
        assert discrepancy(np.zeros(3), np.zeros(3)) == 0.0
        assert discrepancy(np.array([1.0, 2.0]), np.array([1.0, 2.2])) == pytest.approx(0.2 / 2.2)

    def test_numeric_gradient_of_square(self):
        grad = numeric_gradient(lambda x: (x * x).sum(), Tensor(np.array([1.0, -2.0])))
        np.testing.assert_allclose(grad, [2.0, -4.0], atol=1e-6)

    def test_rejects_vector_output(self, rng):
        with pytest.raises(ShapeMismatch):
            grad_check(lambda x: x * 2.0, Tensor(rng.normal(size=3)))


UNARY = {
    'neg': lambda x: -x,
    'exp': T.exp,
    'log': lambda x: T.log(x * x + 1.0),
    'relu': T.relu,
    'leaky_relu': T.leaky_relu,
    'elu': T.elu,
    'softmax': lambda x: T.softmax(x, axis=-1),
    'softmax_axis0': lambda x: T.softmax(x, axis=0),
    'sum_axis': lambda x: x.sum(axis=1, keepdims=True) * x,
    'mean_axis': lambda x: x.mean(axis=0) * x,
    'reshape': lambda x: x.reshape(2, 6),
    'transpose': lambda x: x.transpose(),
    'take': lambda x: T.take(x, np.array([3, 0, 0, 2])),
    'index_add': lambda x: T.index_add(x, np.array([1, 1, 0, 2]), 3),
    'concat': lambda x: T.concat([x, x * x], axis=1),
    'divide': lambda x: x / (x * x + 2.0),
    'segment_softmax': lambda x: T.segment_softmax(x, np.array([0, 1, 0, 1]), 2),
}


class TestOperatorGradients:

    @pytest.mark.parametrize('name', sorted(UNARY))
    def test_unary(self, name, rng):
        op = UNARY[name]
        x = away_from_zero(rng, (4, 3))
        reduce = weighted(rng, op(x).shape)
        assert grad_check(lambda v: reduce(op(v)), x)

    def test_matmul_both_sides(self, rng):
        a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
        reduce = weighted(rng, (3, 2))
        assert grad_check(lambda v: reduce(v @ Tensor(b)), Tensor(a))
        assert grad_check(lambda v: reduce(Tensor(a) @ v), Tensor(b))

    def test_broadcast_add_and_mul(self, rng):
        x = Tensor(rng.normal(size=(3, 4)))
        reduce = weighted(rng, (3, 4))
        assert grad_check(lambda b: reduce(x + b), Tensor(rng.normal(size=(4,))))
        assert grad_check(lambda b: reduce(x * b), Tensor(rng.normal(size=(1, 4))))
        assert grad_check(lambda b: reduce(x - b), Tensor(rng.normal(size=(3, 1))))

    def test_layer_norm(self, rng):
        x = rng.normal(size=(3, 5))
        gamma, beta = rng.normal(size=(5,)), rng.normal(size=(5,))
        reduce = weighted(rng, (3, 5))
        assert grad_check(lambda v: reduce(T.layer_norm(v, Tensor(gamma), Tensor(beta))), Tensor(x))
        assert grad_check(lambda g: reduce(T.layer_norm(Tensor(x), g, Tensor(beta))), Tensor(gamma))
        assert grad_check(lambda b: reduce(T.layer_norm(Tensor(x), Tensor(gamma), b)), Tensor(beta))

    def test_cross_entropy(self, rng):
        assert grad_check(lambda z: T.cross_entropy(z, [1, 4, 0]), Tensor(rng.normal(size=(3, 5))))


class TestAdam:

    def test_zero_gradient_keeps_parameters(self):
        p = Parameter(np.array([0.5, -1.5]))
        adam_step([p], [np.zeros(2)], lr=0.1)
        np.testing.assert_array_equal(p.data, np.array([0.5, -1.5], dtype=np.float32))

    def test_one_step_on_square(self):
        p = Parameter(np.array([1.0]))
        adam_step([p], [2.0 * p.data], lr=0.1)
        assert abs(p.data[0]) < 1.0
        assert p.data[0] == pytest.approx(0.9, abs=1e-6)

    def test_zero_learning_rate(self):
        p = Parameter(np.array([1.0, 2.0]))
        adam_step([p], [np.array([3.0, -4.0])], lr=0.0)
        np.testing.assert_array_equal(p.data, np.array([1.0, 2.0], dtype=np.float32))

    def test_non_finite_gradient(self):
        p = Parameter(np.array([1.0]))
        with pytest.raises(NonFinite):
            adam_step([p], [np.array([np.nan])], lr=0.1)

    def test_optimizer_descends(self):
        p = Parameter(np.array([3.0, -2.0]), name='w')
        optimizer = Adam([p], lr=0.1)
        for _ in range(100):
            optimizer.zero_grad()
            loss = (p * p).sum()
            loss.backward()
            optimizer.step()
        assert optimizer.step_count == 100
        assert np.all(np.abs(p.data) < 0.5)

    def test_missing_gradient_counts_as_zero(self):
        p = Parameter(np.array([1.0]))
        optimizer = Adam([p], lr=0.1)
        optimizer.step()
        np.testing.assert_array_equal(p.data, [1.0])


class TestCheckpoint:

    def test_round_trip(self, tmp_path, rng):
        a = rng.normal(size=(2, 3)).astype(np.float32)
        b = rng.normal(size=(4,)).astype(np.float32)
        m, v = [np.ones_like(a), np.ones_like(b)], [np.full_like(a, 2.0), np.full_like(b, 2.0)]
        save_checkpoint(tmp_path, [('a', a), ('b', b)], step=3, config_hash='abc',
                        extra={'variant': 'full'}, optimizer=(m, v))

        arrays, manifest = load_checkpoint(tmp_path)
        np.testing.assert_array_equal(arrays['a'], a)
        np.testing.assert_array_equal(arrays['b'], b)
        assert manifest['step'] == 3 and manifest['variant'] == 'full'
        assert manifest['params'][1] == {'name': 'b', 'shape': [4], 'offset': 6, 'size': 4}

        first, second = load_optimizer_state(tmp_path, manifest)
        np.testing.assert_array_equal(first[1], m[1])
        np.testing.assert_array_equal(second[0], v[0])

    def test_little_endian_float32_payload(self, tmp_path):
        save_checkpoint(tmp_path, [('w', np.array([1.0, -2.0]))], step=0, config_hash='h')
        assert (tmp_path / PARAMS_FILE).read_bytes() == np.array([1.0, -2.0], dtype='<f4').tobytes()

    def test_truncated_payload(self, tmp_path):
        save_checkpoint(tmp_path, [('w', np.ones(8))], step=0, config_hash='h')
        payload = tmp_path / PARAMS_FILE
        payload.write_bytes(payload.read_bytes()[:-4])
        with pytest.raises(SchemaViolation):
            load_checkpoint(tmp_path)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(UnreadableFile):
            read_manifest(tmp_path / 'nowhere')

    def test_without_optimizer(self, tmp_path):
        save_checkpoint(tmp_path, [('w', np.ones(2))], step=0, config_hash='h')
        _, manifest = load_checkpoint(tmp_path)
        assert load_optimizer_state(tmp_path, manifest) is None
