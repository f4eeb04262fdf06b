import pytest

from ralp.layers import (
    LayerKind,
    ModelError,
    ModelGraph,
    TensorShape,
    infer_conv,
    infer_fc,
    infer_layer,
    infer_pool,
)
from conftest import make_layer


class TestInference:
    def test_conv_params_3x3x3_to_64(self):
        # 9*3*64 + 64, worked by hand
        params, shape, flops = infer_conv(TensorShape(32, 32, 3), kernel=3, c_out=64, pad=1)
        assert params == 1792
        assert shape == TensorShape(32, 32, 64)
        assert flops == 2 * 9 * 3 * 64 * 32 * 32

    def test_fc_params_4096_to_1000(self):
        params, shape, flops = infer_fc(4096, 1000)
        assert params == 4_097_000
        assert shape.elems == 1000
        assert flops == 2 * 4096 * 1000

    def test_maxpool_halves_spatial_dims(self):
        params, shape, flops = infer_pool(TensorShape(8, 8, 16), window=2)
        assert params == 0
        assert shape == TensorShape(4, 4, 16)
        assert shape.elems == 4 * 4 * 16
        assert flops == 0

    def test_infer_layer_dispatch(self):
        params, out, flops, shape = infer_layer(LayerKind.CONVOLUTION, {"k": 3, "cout": 64, "pad": 1},
                                                TensorShape(32, 32, 3))
        assert (params, out) == (1792, 32 * 32 * 64)
        params, out, _, _ = infer_layer(LayerKind.FLATTEN, {}, TensorShape(4, 4, 16))
        assert (params, out) == (0, 256)

    def test_window_larger_than_padded_input(self):
        with pytest.raises(ModelError, match="does not fit"):
            infer_pool(TensorShape(2, 2, 4), window=5)

    def test_nonpositive_dimensions(self):
        with pytest.raises(ModelError):
            infer_fc(0, 10)
        with pytest.raises(ModelError):
            infer_conv(TensorShape(8, 8, 3), kernel=3, c_out=-1)

    def test_stride_and_valid_padding(self):
        # (227 - 11)/4 + 1 = 55
        _, shape, _ = infer_conv(TensorShape(227, 227, 3), kernel=11, c_out=64, stride=4)
        assert (shape.h, shape.w) == (55, 55)


class TestModelGraph:
    def _two_layer(self, batch=4):
        layers = (
            make_layer(1, LayerKind.CONVOLUTION, params=100, out=1000, flops=5000),
            make_layer(2, LayerKind.FULLY_CONNECTED, params=50, out=10, flops=200),
        )
        return ModelGraph(name="m", layers=layers, batch_size=batch)

    def test_total_param_bytes_identity(self):
        m = self._two_layer()
        assert m.total_param_bytes == 4 * (100 + 50)
        assert m.total_param_bytes // m.bytes_per_element == m.total_param_count

    def test_output_bytes_scale_with_batch(self):
        m4 = self._two_layer(batch=4)
        m8 = self._two_layer(batch=8)
        for i in (1, 2):
            assert m8.output_bytes(i) == 2 * m4.output_bytes(i)
        assert m8.total_param_bytes == m4.total_param_bytes

    def test_cumulative_params(self):
        m = self._two_layer()
        assert m.cumulative_param_bytes(1) == 400
        assert m.cumulative_param_bytes(2) == 600

    def test_segment_flops(self):
        m = self._two_layer()
        assert m.forward_flops_per_sample() == 5200
        assert m.forward_flops_per_sample(2, 2) == 200

    def test_indices_must_be_contiguous(self):
        layers = (
            make_layer(1, LayerKind.CONVOLUTION, 10, 10),
            make_layer(3, LayerKind.FULLY_CONNECTED, 10, 10),
        )
        with pytest.raises(ModelError, match="contiguous"):
            ModelGraph(name="bad", layers=layers, batch_size=1)

    def test_empty_chain_rejected(self):
        with pytest.raises(ModelError, match="empty"):
            ModelGraph(name="bad", layers=(), batch_size=1)

    def test_params_only_on_weighted_kinds(self):
        with pytest.raises(ModelError, match="cannot carry parameters"):
            make_layer(1, LayerKind.POOLING, params=5, out=10)

    def test_nonloss_needs_output(self):
        with pytest.raises(ModelError, match="empty output"):
            make_layer(1, LayerKind.CONVOLUTION, params=5, out=0)
        # loss may produce nothing
        make_layer(1, LayerKind.LOSS, params=0, out=0)
