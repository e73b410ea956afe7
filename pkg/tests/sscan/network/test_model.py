import numpy as np
import pytest

from sscan.autodiff import Tensor, add, tensor_sum
from sscan.errors import BandMismatchError, ConfigError, ShapeError
from sscan.network import (SSAB, SSAN, ModelConfig, build_model, model_forward, named_parameters, parameter_count,
                           sgcam_forward, ssab_forward, ssan_forward)
from tests.sscan import model_parameter_total, small_model_config


def _random_config(rng: np.random.Generator) -> ModelConfig:
    k = int(rng.integers(2, 6))
    reduction = int(rng.choice([1, 2, 4]))
    return ModelConfig(bands=int(rng.integers(k, 13)), k=k, o=int(rng.integers(0, k)),
                       n_ssab=int(rng.integers(0, 3)), trunk_channels=reduction * int(rng.integers(1, 4)),
                       group_channels=int(rng.integers(1, 5)), reduction=reduction,
                       spatial_kernel=int(rng.choice([1, 3, 7])), seed=int(rng.integers(0, 1000)),
                       fusion_ssab=int(rng.integers(0, 3)), ssab_trunk=bool(rng.integers(0, 2)),
                       sgcam_activation=str(rng.choice(["between", "after_each", "none"])))


def test_fresh_models_are_the_identity():
    rng = np.random.default_rng(0)
    for _ in range(10):
        config = _random_config(rng)
        model = build_model(config)
        x = rng.standard_normal((2, config.bands, 5, 6))
        out = model_forward(model, Tensor(x))
        assert out.data.tobytes() == x.tobytes(), config


def test_float32_model_is_the_identity():
    config = small_model_config(dtype="float32")
    model = build_model(config)
    x = np.random.default_rng(1).random((1, 6, 8, 8))
    out = model(Tensor(x))
    assert out.dtype == np.float32
    assert np.array_equal(out.data, x.astype(np.float32))
    assert all(p.dtype == np.float32 for p in model.parameters())


def test_same_seed_same_weights():
    a, b = build_model(small_model_config(seed=4)), build_model(small_model_config(seed=4))
    for (name_a, p_a), (name_b, p_b) in zip(named_parameters(a), named_parameters(b)):
        assert name_a == name_b
        assert np.array_equal(p_a.data, p_b.data)
    c = build_model(small_model_config(seed=5))
    assert not np.array_equal(a.sgcam.trunk_in.weight.data, c.sgcam.trunk_in.weight.data)


def test_parameter_names_are_unique_and_dotted():
    names = [name for name, _ in named_parameters(build_model(small_model_config(n_ssab=2)))]
    assert len(names) == len(set(names))
    assert names[0] == "sgcam.trunk_in.weight"
    assert names[-1] == "reconstruction.bias"
    assert "branch.block1.spatial.conv.weight" in names


@pytest.mark.parametrize("overrides", [
    {},
    {"n_ssab": 0},
    {"n_ssab": 2, "fusion_ssab": 1},
    {"ssab_trunk": False},
    {"k": 3, "o": 1},
    {"spatial_kernel": 7, "reduction": 2},
])
def test_parameter_count_closed_form(overrides):
    config = small_model_config(bands=9, **overrides)
    assert parameter_count(build_model(config)) == model_parameter_total(config)


def test_full_size_parameter_count():
    config = ModelConfig(bands=191)
    assert parameter_count(build_model(config)) == model_parameter_total(config, n_groups=95)


def test_block_shapes():
    model = build_model(small_model_config())
    rng = np.random.default_rng(2)
    g_i, g_next = Tensor(rng.random((3, 4, 7, 5))), Tensor(rng.random((3, 4, 7, 5)))
    assert sgcam_forward(model, g_i, g_next).shape == (3, 4, 7, 5)
    f = Tensor(rng.random((3, 4, 7, 5)))
    assert ssab_forward(model.branch.blocks[0], f).shape == (3, 4, 7, 5)
    assert ssan_forward(model.branch, f).shape == (3, 4, 7, 5)
    assert model.features(Tensor(rng.random((2, 6, 7, 5)))).shape == (2, 8, 7, 5)


def test_sgcam_rejects_mismatched_groups():
    model = build_model(small_model_config())
    with pytest.raises(ShapeError):
        sgcam_forward(model, Tensor(np.ones((1, 4, 5, 5))), Tensor(np.ones((1, 4, 5, 6))))
    with pytest.raises(ShapeError):
        sgcam_forward(model, Tensor(np.ones((1, 3, 5, 5))), Tensor(np.ones((1, 3, 5, 5))))


def test_attention_masks_lie_in_the_unit_interval():
    model = build_model(small_model_config())
    rng = np.random.default_rng(3)
    f = Tensor(rng.standard_normal((2, 4, 6, 6)))
    block = model.branch.blocks[0]
    spectral = block.spectral_mask(f).data
    spatial = block.spatial_mask(f).data
    assert spectral.shape == (2, 4, 1, 1) and spatial.shape == (2, 1, 6, 6)
    assert np.all((spectral > 0) & (spectral < 1))
    assert np.all((spatial > 0) & (spatial < 1))
    mask = model.sgcam.attention_mask(Tensor(rng.random((2, 4, 6, 6))), Tensor(rng.random((2, 4, 6, 6))))
    assert mask.shape == (2, 8, 1, 1)


def test_empty_ssan_is_the_identity():
    network = SSAN("empty", 0, 4, 1, 3, True, np.random.default_rng(0), np.dtype(np.float64))
    f = Tensor(np.random.default_rng(1).random((1, 4, 3, 3)))
    assert ssan_forward(network, f) is f
    assert network.parameters() == []


def test_band_mismatch_names_both_counts():
    model = build_model(small_model_config())
    with pytest.raises(BandMismatchError, match="6.*7"):
        model(Tensor(np.zeros((1, 7, 5, 5))))
    with pytest.raises(ShapeError):
        model(Tensor(np.zeros((6, 5, 5))))


def test_trained_model_is_not_the_identity():
    model = build_model(small_model_config())
    model.reconstruction.weight.data = np.full(model.reconstruction.weight.shape, 0.01)
    x = np.random.default_rng(4).random((1, 6, 6, 6))
    assert not np.array_equal(model(Tensor(x)).data, x)


def test_activation_placement_changes_the_output():
    x = Tensor(np.random.default_rng(5).random((1, 4, 6, 6)))
    outputs = []
    for activation in ("between", "after_each", "none"):
        model = build_model(small_model_config(sgcam_activation=activation))
        outputs.append(sgcam_forward(model, x, x).data)
    assert not np.allclose(outputs[0], outputs[2])
    assert not np.allclose(outputs[0], outputs[1])


def _unit_masks(monkeypatch, block: SSAB):
    def ones(x):
        return Tensor(np.ones_like(x.data))
    monkeypatch.setattr(block, "spectral_mask", ones)
    monkeypatch.setattr(block, "spatial_mask", ones)


def test_ssab_with_unit_masks_adds_its_trunk_to_the_input(monkeypatch):
    rng = np.random.default_rng(6)
    f = Tensor(rng.standard_normal((2, 4, 5, 5)))
    without_trunk = SSAB("plain", 4, 1, 3, False, rng, np.dtype(np.float64))
    _unit_masks(monkeypatch, without_trunk)
    assert np.array_equal(ssab_forward(without_trunk, f).data, 2.0 * f.data)

    with_trunk = SSAB("trunk", 4, 1, 3, True, rng, np.dtype(np.float64))
    _unit_masks(monkeypatch, with_trunk)
    assert np.allclose(ssab_forward(with_trunk, f).data, with_trunk.trunk(f).data + f.data, rtol=0, atol=1e-12)


@pytest.mark.parametrize("n_blocks", [1, 3])
def test_ssan_is_its_blocks_in_sequence_plus_the_input(n_blocks):
    network = SSAN("ssan", n_blocks, 4, 1, 3, True, np.random.default_rng(7), np.dtype(np.float64))
    f = Tensor(np.random.default_rng(8).standard_normal((1, 4, 6, 6)))
    out = f
    for block in network.blocks:
        out = ssab_forward(block, out)
    assert len(network.blocks) == n_blocks
    assert np.allclose(ssan_forward(network, f).data, out.data + f.data, rtol=0, atol=1e-12)


def test_sgcam_output_depends_on_both_groups():
    model = build_model(small_model_config())
    rng = np.random.default_rng(9)
    g_i = Tensor(rng.random((1, 4, 6, 6)), requires_grad=True)
    g_next = Tensor(rng.random((1, 4, 6, 6)), requires_grad=True)
    tensor_sum(sgcam_forward(model, g_i, g_next)).backward()
    assert np.any(g_i.grad != 0)
    assert np.any(g_next.grad != 0)


def test_graph_input_of_another_dtype_is_rejected():
    model = build_model(small_model_config())
    rng = np.random.default_rng(10)
    a = Tensor(rng.random((1, 6, 5, 5)).astype(np.float32), requires_grad=True)
    b = Tensor(rng.random((1, 6, 5, 5)).astype(np.float32), requires_grad=True)
    with pytest.raises(ConfigError, match="dtype"):
        model(add(a, b))
    assert model(Tensor(a.data)).dtype == np.float64
