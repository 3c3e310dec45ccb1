"""Layers, the layer factory and networks"""
import numpy as np
import pytest

from src.core.layer_factory import LayerFactory
from src.core.layers import (
    BatchNorm,
    Conv2D,
    Dense,
    MaxPool2D,
    Reshape,
    UnitNorm,
    batchnorm_forward,
    conv2d_forward,
    leaky_relu_forward,
    maxpool2d_forward,
    sigmoid_forward,
    upsample2d_forward,
)
from src.core.network import Network
from src.core.priors import Rng
from src.core.tensor import Tensor, verification_mode
from src.models.base import LayerKind
from src.models.specs import LayerSpec
from src.utils.errors import CheckpointError, ContractError, DimensionError, SpecError


def _spec(kind, **fields):
    return LayerSpec(kind=kind, **fields)


class TestForwardFunctions:
    def test_conv2d_sums_window_plus_bias(self):
        out = conv2d_forward(Tensor(np.ones((1, 1, 3, 3))), Tensor(np.ones((1, 1, 2, 2))), Tensor([0.5]))
        np.testing.assert_allclose(out.data, np.full((1, 1, 2, 2), 4.5))

    def test_upsample_repeats_pixels(self):
        out = upsample2d_forward(Tensor([[[[1.0, 2.0]]]]), 2)
        np.testing.assert_array_equal(out.data, [[[[1, 1, 2, 2], [1, 1, 2, 2]]]])

    def test_maxpool_takes_window_max(self):
        out = maxpool2d_forward(Tensor([[[[1.0, 4.0], [3.0, 2.0]]]]), 2)
        np.testing.assert_array_equal(out.data, [[[[4.0]]]])

    def test_leaky_relu_and_sigmoid(self):
        np.testing.assert_allclose(leaky_relu_forward(Tensor([-1.0, 2.0])).data, [-0.2, 2.0], rtol=1e-6)
        np.testing.assert_allclose(sigmoid_forward(Tensor([0.0])).data, [0.5])


class TestLayerShapes:
    def test_missing_spec_field_is_a_spec_error(self):
        spec = LayerSpec.model_construct(kind=LayerKind.DENSE, units=None)
        with pytest.raises(SpecError):
            Dense(spec).build((3,), Rng(0))

    def test_forward_before_build(self):
        layer = Reshape(_spec(LayerKind.RESHAPE, target_shape=(2, 2)))
        with pytest.raises(ContractError):
            layer.forward(Tensor(np.zeros((1, 4))), training=False)

    def test_dense(self):
        layer = Dense(_spec(LayerKind.DENSE, units=5))
        assert layer.build((3,), Rng(0)) == (5,)
        assert layer.params["weight"].shape == (3, 5)
        assert layer.params["bias"].shape == (5,)

    def test_dense_needs_flat_input(self):
        with pytest.raises(SpecError):
            Dense(_spec(LayerKind.DENSE, units=5)).build((1, 4, 4))

    def test_conv2d_output_size(self):
        layer = Conv2D(_spec(LayerKind.CONV2D, channels=4, kernel_size=3, stride=2, padding=1))
        assert layer.build((2, 9, 9), Rng(0)) == (4, 5, 5)
        assert layer.params["kernel"].shape == (4, 2, 3, 3)

    def test_conv2d_kernel_too_large(self):
        with pytest.raises(SpecError):
            Conv2D(_spec(LayerKind.CONV2D, channels=1, kernel_size=5)).build((1, 3, 3))

    def test_maxpool(self):
        layer = MaxPool2D(_spec(LayerKind.MAXPOOL2D, window=2, stride=2))
        assert layer.build((3, 8, 6)) == (3, 4, 3)

    def test_reshape_size_mismatch(self):
        with pytest.raises(SpecError):
            Reshape(_spec(LayerKind.RESHAPE, target_shape=(2, 3))).build((5,))

    def test_unit_norm_needs_flat_input(self):
        with pytest.raises(SpecError):
            UnitNorm(_spec(LayerKind.UNIT_NORM)).build((1, 2, 2))

    def test_spec_kind_must_match_class(self):
        with pytest.raises(SpecError):
            Dense(_spec(LayerKind.SIGMOID))

    def test_no_rng_gives_zero_weights(self):
        layer = Dense(_spec(LayerKind.DENSE, units=2))
        layer.build((3,))
        assert not layer.params["weight"].data.any()

    def test_glorot_limit(self):
        layer = Dense(_spec(LayerKind.DENSE, units=10))
        layer.build((20,), Rng(4))
        assert np.abs(layer.params["weight"].data).max() <= np.sqrt(6.0 / 30.0)


class TestBatchNorm:
    def _built(self, shape=(3,)):
        layer = BatchNorm(_spec(LayerKind.BATCHNORM, momentum=0.9))
        layer.build(shape)
        return layer

    def test_running_stats_update(self):
        layer = self._built()
        x = np.array([[1.0, 2.0, 3.0], [3.0, 6.0, 3.0]], dtype=np.float32)
        layer.forward(Tensor(x), training=True)
        np.testing.assert_allclose(layer.buffers["running_mean"], 0.1 * x.mean(axis=0), rtol=1e-6)
        np.testing.assert_allclose(layer.buffers["running_var"], 0.9 + 0.1 * x.var(axis=0), rtol=1e-6)

    def test_training_output_is_normalized(self):
        layer = self._built()
        x = Rng(2).normal_array((64, 3)) * 5.0 + 2.0
        out = layer.forward(Tensor(x), training=True).data
        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-4)
        np.testing.assert_allclose(out.std(axis=0), 1.0, atol=1e-3)

    def test_evaluation_uses_running_stats_and_leaves_them(self):
        layer = self._built()
        before = {k: v.copy() for k, v in layer.buffers.items()}
        x = np.array([[4.0, 4.0, 4.0]], dtype=np.float32)
        out = layer.forward(Tensor(x), training=False).data
        np.testing.assert_allclose(out, x / np.sqrt(1.0 + 1e-5), rtol=1e-5)
        for k in before:
            np.testing.assert_array_equal(layer.buffers[k], before[k])

    def test_training_batch_of_one(self):
        layer = self._built()
        with pytest.raises(ContractError):
            layer.forward(Tensor(np.ones((1, 3))), training=True)

    def test_channel_mismatch(self):
        with verification_mode():
            gamma, beta = Tensor(np.ones(2)), Tensor(np.zeros(2))
            stats = {"running_mean": np.zeros(2), "running_var": np.ones(2)}
            with pytest.raises(ContractError):
                batchnorm_forward(Tensor(np.ones((4, 3))), gamma, beta, stats, training=True)

    def test_image_channels(self):
        layer = self._built((2, 4, 4))
        assert layer.params["gamma"].shape == (2,)
        out = layer.forward(Tensor(Rng(3).normal_array((5, 2, 4, 4))), training=True)
        assert out.shape == (5, 2, 4, 4)


class TestLayerFactory:
    def test_every_kind_registered(self):
        factory = LayerFactory()
        assert set(factory._layer_registry) == set(LayerKind)

    def test_unregistered_kind(self):
        factory = LayerFactory()
        factory._layer_registry.pop(LayerKind.SIGMOID)
        with pytest.raises(SpecError):
            factory.create_layer(_spec(LayerKind.SIGMOID))


class TestNetwork:
    def _net(self, rng=None):
        specs = [
            _spec(LayerKind.DENSE, units=4),
            _spec(LayerKind.BATCHNORM),
            _spec(LayerKind.LEAKY_RELU),
            _spec(LayerKind.DENSE, units=2),
            _spec(LayerKind.UNIT_NORM),
        ]
        return Network.from_specs("encoder", (3,), specs, rng or Rng(5))

    def test_parameter_names(self):
        net = self._net()
        assert list(net.params) == [
            "0.dense.weight",
            "0.dense.bias",
            "1.batchnorm.gamma",
            "1.batchnorm.beta",
            "3.dense.weight",
            "3.dense.bias",
        ]
        assert list(net.buffers) == ["1.batchnorm.running_mean", "1.batchnorm.running_var"]
        assert net.params["3.dense.weight"].name == "encoder/3.dense.weight"
        assert net.parameter_count == 12 + 4 + 4 + 4 + 8 + 2

    def test_forward_shape_and_unit_rows(self):
        net = self._net()
        out = net(Rng(1).normal_array((6, 3))).data
        assert out.shape == (6, 2)
        np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-5)

    def test_input_shape_checked(self):
        with pytest.raises(DimensionError):
            self._net()(np.zeros((2, 4)))

    def test_evaluation_context_restores_mode(self):
        net = self._net()
        with net.evaluation():
            assert not net.training
            net(np.ones((1, 3)))
        assert net.training

    def test_frozen_blocks_parameter_grads_only(self):
        net = self._net()
        x = Tensor(Rng(2).normal_array((4, 3)), requires_grad=True)
        with net.frozen():
            net(x).sum().backward()
        assert all(t.grad is None for t in net.params.values())
        assert x.grad is not None
        assert all(t.requires_grad for t in net.params.values())

    def test_spec_json_round_trip(self):
        net = self._net()
        rebuilt = Network.from_spec_json("encoder", net.spec_json())
        assert rebuilt.spec_json() == net.spec_json()
        rebuilt.load_arrays({k: t.data for k, t in net.params.items()}, net.buffers)
        x = Rng(9).normal_array((5, 3))
        with net.evaluation(), rebuilt.evaluation():
            np.testing.assert_array_equal(net(x).data, rebuilt(x).data)

    def test_bad_spec_json(self):
        with pytest.raises(CheckpointError):
            Network.from_spec_json("encoder", '{"layers": []}')

    def test_load_arrays_rejects_wrong_shape(self):
        net = self._net()
        params = {k: t.data.copy() for k, t in net.params.items()}
        params["0.dense.weight"] = np.zeros((2, 2))
        with pytest.raises(CheckpointError):
            net.load_arrays(params, net.buffers)

    def test_load_arrays_rejects_missing_names(self):
        net = self._net()
        params = {k: t.data for k, t in net.params.items() if k != "0.dense.bias"}
        with pytest.raises(CheckpointError):
            net.load_arrays(params, net.buffers)
