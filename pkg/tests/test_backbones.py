"""Тесты бэкбонов, голов и чекпоинтов."""
import numpy as np
import pytest

from backbones import (CheckpointFormatError, ConvShapeletBackbone, ConvShapeletConfig, EarlyClassifier, LinearHead,
                       LstmConfig, ModelConfig, StackedLstmBackbone, classify, decode_checkpoint, encode_checkpoint,
                       load_checkpoint, save_checkpoint)
from ndtensor import (ArgumentError, DiffNode, DimensionError, batch_norm, check_gradients, concat_features, mul,
                      no_grad, sum_all)


def _zero_lstm(config: LstmConfig) -> StackedLstmBackbone:
    backbone = StackedLstmBackbone(config, np.random.default_rng(0))
    for node in backbone.parameters().values():
        node.values = np.zeros_like(node.values)
    return backbone


# конфигурации

def test_conv_hidden_dim_is_blocks_times_kernels():
    config = ConvShapeletConfig(num_blocks=6, kernels_per_block=75, width_step=50)
    assert config.hidden_dim == 450
    assert [config.kernel_width(l) for l in (1, 2, 3)] == [50, 100, 150]


def test_model_config_fills_backbone_defaults():
    config = ModelConfig(backbone="lstm", num_classes=3)
    assert config.lstm == LstmConfig()
    assert config.hidden_dim == 32


def test_config_rejects_invalid_counts():
    with pytest.raises(ValueError):
        ConvShapeletConfig(num_blocks=0)
    with pytest.raises(ValueError):
        ModelConfig(num_classes=1)


# LSTM

def test_lstm_zero_parameters_give_zero_hidden():
    backbone = _zero_lstm(LstmConfig(num_layers=2, hidden_dim=3))
    h, _ = backbone.lstm_step(np.array([0.7]), backbone.initial_state())
    np.testing.assert_array_equal(h.values, np.zeros(3))


def test_lstm_step_is_pure(tiny_lstm_model):
    backbone = tiny_lstm_model.backbone
    state = backbone.initial_state()
    first, _ = backbone.lstm_step(np.array([0.3]), state)
    second, _ = backbone.lstm_step(np.array([0.3]), state)
    np.testing.assert_array_equal(first.values, second.values)


def test_lstm_step_dimension_errors(tiny_lstm_model):
    backbone = tiny_lstm_model.backbone
    with pytest.raises(DimensionError):
        backbone.lstm_step(np.array([0.3, 0.1]), backbone.initial_state())
    state = backbone.initial_state()
    state.hidden.pop()
    state.cell.pop()
    with pytest.raises(DimensionError):
        backbone.lstm_step(np.array([0.3]), state)


def test_lstm_forget_bias_initialized_to_one(tiny_lstm_model):
    backbone = tiny_lstm_model.backbone
    size = backbone.hidden_dim
    for bias in backbone.biases:
        np.testing.assert_array_equal(bias.values[size:2 * size], 1.0)


def test_lstm_incremental_matches_full_unroll(tiny_lstm_model, rng):
    backbone = tiny_lstm_model.backbone
    x = rng.normal(size=(9, 1))
    with no_grad():
        incremental = backbone.all_prefix_hidden(x).values
        for t in range(9):
            np.testing.assert_array_equal(incremental[t], backbone.hidden_at(x, t).values)


def test_lstm_gradcheck_three_steps(tiny_lstm_model, rng):
    backbone = tiny_lstm_model.backbone
    x = rng.normal(size=(3, 1))
    weights = rng.normal(size=backbone.hidden_dim)
    leaves = list(backbone.parameters().values())
    assert check_gradients(lambda: sum_all(mul(backbone.hidden_at(x, 2), weights)), leaves) < 1e-4


# сверточная модель

def test_conv_first_step_is_first_frame_response(tiny_conv_model, rng):
    backbone = tiny_conv_model.backbone
    x = DiffNode(rng.normal(size=(6, 1)))
    with no_grad():
        first_frame = concat_features([f[0] for f in backbone.feature_maps(x)])
        expected = batch_norm(first_frame, backbone.norm, training=False).values
        np.testing.assert_array_equal(backbone.conv_hidden(x, 0).values, expected)


def test_conv_features_non_decreasing_in_t(tiny_conv_model, rng):
    with no_grad():
        maxima = tiny_conv_model.backbone.running_maxima(rng.normal(size=(15, 1)))
    for block in maxima:
        assert np.all(np.diff(block.values, axis=0) >= 0)


def test_conv_all_prefix_matches_per_t(tiny_conv_model, rng):
    backbone = tiny_conv_model.backbone
    x = rng.normal(size=(11, 1))
    with no_grad():
        sequence = backbone.all_prefix_hidden(x).values
        for t in range(11):
            np.testing.assert_array_equal(sequence[t], backbone.conv_hidden(x, t).values)


def test_single_observation_gives_single_state(tiny_conv_model, tiny_lstm_model):
    with no_grad():
        assert tiny_conv_model.backbone.all_prefix_hidden(np.ones((1, 1))).shape == (1, 6)
        assert tiny_lstm_model.backbone.all_prefix_hidden(np.ones((1, 1))).shape == (1, 4)


def test_conv_hidden_index_out_of_range(tiny_conv_model):
    with pytest.raises(IndexError):
        tiny_conv_model.backbone.conv_hidden(np.ones((4, 1)), 4)


def test_empty_series_is_argument_error(tiny_conv_model, tiny_lstm_model):
    for model in (tiny_conv_model, tiny_lstm_model):
        with pytest.raises(ArgumentError):
            model.backbone.all_prefix_hidden(np.zeros((0, 1)))


def test_conv_backbone_gradcheck():
    config = ConvShapeletConfig(num_blocks=2, kernels_per_block=2, width_step=2, dropout_rate=0.0)
    backbone = ConvShapeletBackbone(config, np.random.default_rng(3))
    rng = np.random.default_rng(4)
    x = rng.normal(size=(2, 8, 1))
    weights = rng.normal(size=(2, 8, config.hidden_dim))
    leaves = list(backbone.parameters().values())
    error = check_gradients(lambda: sum_all(mul(backbone.all_prefix_hidden(x), weights)), leaves)
    assert error < 1e-4


def test_dropout_only_in_training():
    config = ConvShapeletConfig(num_blocks=1, kernels_per_block=4, width_step=2, dropout_rate=0.5)
    backbone = ConvShapeletBackbone(config, np.random.default_rng(0))
    x = np.random.default_rng(1).normal(size=(2, 6, 1))
    with no_grad():
        trained = backbone.all_prefix_hidden(x, training=True, rng=np.random.default_rng(2)).values
        inferred = backbone.all_prefix_hidden(x).values
    assert np.any(trained == 0.0)
    assert not np.any(inferred == 0.0)


# причинность

@pytest.mark.parametrize("model_fixture", ["tiny_conv_model", "tiny_lstm_model"])
def test_model_outputs_are_causal(model_fixture, request):
    model = request.getfixturevalue(model_fixture)
    rng = np.random.default_rng(99)
    for _ in range(1000):
        x = rng.normal(size=(10, 1))
        moved = x.copy()
        cut = int(rng.integers(1, 10))
        moved[cut:] += rng.normal(size=(10 - cut, 1))
        with no_grad():
            before = model.forward(x)
            after = model.forward(moved)
        np.testing.assert_array_equal(before.hidden.values[0, :cut], after.hidden.values[0, :cut])
        np.testing.assert_array_equal(before.logits.values[0, :cut], after.logits.values[0, :cut])
        np.testing.assert_array_equal(before.delta.values[0, :cut], after.delta.values[0, :cut])


# головы

def test_classify_zero_head_is_uniform():
    head = LinearHead.create(4, 3, np.random.default_rng(0), "classifier")
    head.weight.values = np.zeros((4, 3))
    head.bias.values = np.zeros(3)
    np.testing.assert_allclose(classify(DiffNode(np.ones(4)), head).values, np.full(3, 1.0 / 3.0))


def test_classify_sums_to_one_and_is_shift_invariant(rng):
    head = LinearHead.create(5, 4, rng, "classifier")
    h = DiffNode(rng.normal(size=(7, 5)))
    probs = classify(h, head).values
    np.testing.assert_allclose(probs.sum(axis=-1), 1.0, atol=1e-12)
    head.bias.values = head.bias.values + 12.5
    np.testing.assert_array_equal(classify(h, head).values.argmax(axis=-1), probs.argmax(axis=-1))


def test_classify_dimension_mismatch(rng):
    with pytest.raises(DimensionError):
        classify(DiffNode(np.ones(3)), LinearHead.create(4, 2, rng, "classifier"))


# модель и чекпоинты

def test_forward_shapes(tiny_conv_model, rng):
    output = tiny_conv_model.forward(rng.normal(size=(3, 12, 1)))
    assert output.hidden.shape == (3, 12, 6)
    assert output.logits.shape == (3, 12, 2)
    assert output.delta.shape == (3, 12)


def test_single_series_is_batched(tiny_lstm_model, rng):
    probs, delta = tiny_lstm_model.infer(rng.normal(size=8))
    assert probs.shape == (1, 8, 2)
    assert delta.shape == (1, 8)


def test_classification_parameters_exclude_stopping_head(tiny_conv_model):
    names = set(tiny_conv_model.classification_parameters())
    assert "stopping.weight" not in names and "stopping.bias" not in names
    assert set(tiny_conv_model.parameters()) - names == {"stopping.weight", "stopping.bias"}


def test_same_seed_same_parameters(tiny_conv_config):
    first = EarlyClassifier(tiny_conv_config, seed=3).parameters()
    second = EarlyClassifier(tiny_conv_config, seed=3).parameters()
    for name in first:
        np.testing.assert_array_equal(first[name].values, second[name].values)


@pytest.mark.parametrize("model_fixture", ["tiny_conv_model", "tiny_lstm_model"])
def test_checkpoint_round_trip(model_fixture, request, tmp_path, rng):
    model = request.getfixturevalue(model_fixture)
    model.backbone.load_buffers({name: values + 0.25 for name, values in model.buffers().items()})
    path = save_checkpoint(model, tmp_path / "model.ehalt", meta={"dataset": "demo"})
    restored, meta = load_checkpoint(path)
    assert meta == {"dataset": "demo"}
    assert restored.config == model.config
    x = rng.normal(size=(2, 7, 1))
    for expected, actual in zip(model.infer(x), restored.infer(x)):
        np.testing.assert_array_equal(expected, actual)


def test_checkpoint_bytes_are_deterministic(tiny_conv_config):
    first = encode_checkpoint(EarlyClassifier(tiny_conv_config, seed=1), {"seed": 1})
    second = encode_checkpoint(EarlyClassifier(tiny_conv_config, seed=1), {"seed": 1})
    assert first == second
    assert first.startswith(b"EHALT1\n")


def test_checkpoint_rejects_foreign_bytes(tiny_conv_model):
    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(b"PK\x03\x04 not a checkpoint")
    with pytest.raises(CheckpointFormatError):
        decode_checkpoint(encode_checkpoint(tiny_conv_model)[:-8])
