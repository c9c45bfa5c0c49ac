"""Unit tests for the staged ConvNet."""

import numpy as np
import pytest

from src.normperturb.models.network import NetworkConfig, StageSpec
from src.normperturb.services.network import ConvNet
from src.normperturb.tensor.functional import softmax_cross_entropy
from src.normperturb.tensor.gradcheck import check_gradient
from src.normperturb.tensor.tensor import ShapeError, Tensor
from tests.fixtures.images import np_sites, tiny_network_config


@pytest.fixture
def images(rng: np.random.Generator) -> Tensor:
    return Tensor(rng.uniform(0.0, 1.0, size=(4, 3, 16, 16)))


class TestLayout:
    """Tests for parameter layout and initialisation."""

    def test_parameter_names_in_forward_order(self) -> None:
        """Test names follow stage, block, then the head."""
        config = NetworkConfig(
            num_classes=3,
            input_size=8,
            stages=[StageSpec(channels=2, blocks=2), StageSpec(channels=4)],
        )
        assert ConvNet.parameter_names(config) == [
            "stage1.conv1.weight",
            "stage1.conv1.bias",
            "stage1.conv2.weight",
            "stage1.conv2.bias",
            "stage2.conv1.weight",
            "stage2.conv1.bias",
            "head.weight",
            "head.bias",
        ]
        shapes = ConvNet.parameter_shapes(config)
        assert shapes["stage1.conv2.weight"] == (2, 2, 3, 3)
        assert shapes["head.weight"] == (3, 4)

    def test_initialization_is_seeded(self) -> None:
        """Test equal seeds give equal weights, biases start at zero."""
        config = tiny_network_config()
        a = ConvNet.initialize(config, np.random.default_rng(0))
        b = ConvNet.initialize(config, np.random.default_rng(0))
        for (name, pa), (_, pb) in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(pa.data, pb.data)
            if name.endswith(".bias"):
                assert not pa.data.any()

    def test_initialization_bound(self) -> None:
        """Test conv weights stay within the fan-in scaled bound."""
        net = ConvNet.initialize(tiny_network_config(), np.random.default_rng(0))
        weight = net.params["stage1.conv1.weight"].data
        assert np.abs(weight).max() <= np.sqrt(2.0) * np.sqrt(3.0 / 27)

    def test_float32_initialization(self) -> None:
        """Test the dtype argument sets every parameter's precision."""
        net = ConvNet.initialize(tiny_network_config(), np.random.default_rng(0), np.float32)
        assert net.dtype == np.float32
        assert all(p.dtype == np.float32 for _, p in net.parameters())

    def test_wrong_parameter_shape(self) -> None:
        """Test mismatched parameters are rejected."""
        config = tiny_network_config()
        params = ConvNet.initialize(config, np.random.default_rng(0)).params
        params = {**params, "head.bias": Tensor(np.zeros(7))}
        with pytest.raises(ValueError, match="head.bias"):
            ConvNet(config, params)

    def test_missing_parameter(self) -> None:
        """Test an incomplete parameter set is rejected."""
        config = tiny_network_config()
        params = dict(ConvNet.initialize(config, np.random.default_rng(0)).params)
        del params["stage2.conv1.weight"]
        with pytest.raises(ValueError, match="missing"):
            ConvNet(config, params)

    def test_trainable_parameters(self) -> None:
        """Test frozen stages are left out of the trainable set."""
        net = ConvNet.initialize(tiny_network_config(), np.random.default_rng(0))
        names = [name for name, _ in net.trainable_parameters(frozen_stages=1)]
        assert names == ["stage2.conv1.weight", "stage2.conv1.bias", "head.weight", "head.bias"]
        with pytest.raises(ValueError):
            net.trainable_parameters(frozen_stages=3)

    def test_copy_is_independent(self) -> None:
        """Test copies do not share parameter storage."""
        net = ConvNet.initialize(tiny_network_config(), np.random.default_rng(0))
        clone = net.copy()
        clone.params["head.bias"].data += 1.0
        assert not net.params["head.bias"].data.any()


class TestForward:
    """Tests for the forward pass."""

    def test_shapes(self, images: Tensor) -> None:
        """Test logits and stage features have the expected shapes."""
        net = ConvNet.initialize(tiny_network_config(), np.random.default_rng(0))
        out = net.forward(images)
        assert out.logits.shape == (4, 4)
        assert [f.shape for f in out.stage_features] == [(4, 4, 16, 16), (4, 8, 8, 8)]

    def test_sites_transparent_at_evaluation(self, images: Tensor) -> None:
        """Test perturbation sites do not change eval-mode outputs."""
        plain = ConvNet.initialize(tiny_network_config(), np.random.default_rng(0))
        perturbed = ConvNet(tiny_network_config(np_sites(probability=1.0)), plain.params)
        np.testing.assert_array_equal(
            plain.forward(images).logits.data, perturbed.forward(images).logits.data
        )

    def test_sites_act_in_training(self, images: Tensor) -> None:
        """Test an always-on site changes training-mode logits."""
        plain = ConvNet.initialize(tiny_network_config(), np.random.default_rng(0))
        perturbed = ConvNet(tiny_network_config(np_sites(probability=1.0)), plain.params)
        clean = plain.forward(images, training=True).logits.data
        noisy = perturbed.forward(images, training=True, rng=np.random.default_rng(1)).logits.data
        assert not np.allclose(clean, noisy)

    def test_stage_features_are_clean(self, images: Tensor) -> None:
        """Test recorded features precede the perturbation site."""
        plain = ConvNet.initialize(tiny_network_config(), np.random.default_rng(0))
        site_config = tiny_network_config(np_sites(stages=(2,), probability=1.0))
        perturbed = ConvNet(site_config, plain.params)
        expected = plain.forward(images).stage_features[1].data
        got = perturbed.forward(images, training=True, rng=np.random.default_rng(1))
        np.testing.assert_array_equal(got.stage_features[1].data, expected)

    def test_training_forward_is_reproducible(self, images: Tensor) -> None:
        """Test equal noise and gate streams give equal outputs."""
        net = ConvNet.initialize(
            tiny_network_config(np_sites(probability=0.5)), np.random.default_rng(0)
        )

        def run() -> np.ndarray:
            return net.forward(
                images,
                training=True,
                rng=np.random.default_rng(5),
                gate_rng=np.random.default_rng(6),
            ).logits.data

        np.testing.assert_array_equal(run(), run())

    def test_np_plus_site(self, images: Tensor) -> None:
        """Test np_plus sites compute δ from the batch and run."""
        net = ConvNet.initialize(
            tiny_network_config(np_sites(probability=1.0, mode="np_plus")),
            np.random.default_rng(0),
        )
        out = net.forward(images, training=True, rng=np.random.default_rng(2))
        assert np.all(np.isfinite(out.logits.data))

    def test_training_sites_need_rng(self, images: Tensor) -> None:
        """Test training with sites but no rng is rejected."""
        net = ConvNet.initialize(tiny_network_config(np_sites()), np.random.default_rng(0))
        with pytest.raises(ValueError, match="rng"):
            net.forward(images, training=True)

    def test_wrong_channel_count(self) -> None:
        """Test grayscale input is rejected."""
        net = ConvNet.initialize(tiny_network_config(), np.random.default_rng(0))
        with pytest.raises(ShapeError):
            net.forward(Tensor(np.zeros((1, 1, 16, 16))))

    def test_indivisible_extent(self) -> None:
        """Test odd spatial sizes cannot be pooled."""
        net = ConvNet.initialize(tiny_network_config(), np.random.default_rng(0))
        with pytest.raises(ShapeError):
            net.forward(Tensor(np.zeros((1, 3, 15, 15))))

    def test_predict_batches(self, rng: np.random.Generator) -> None:
        """Test predict agrees across batch sizes."""
        net = ConvNet.initialize(tiny_network_config(), np.random.default_rng(0))
        data = rng.uniform(0.0, 1.0, size=(10, 3, 16, 16))
        np.testing.assert_array_equal(net.predict(data, batch_size=3), net.predict(data))


def test_network_gradient_with_frozen_noise(rng: np.random.Generator) -> None:
    """Test backward through a 2-stage 8×8 network with NP sites against finite differences."""
    config = NetworkConfig(
        num_classes=3,
        input_size=8,
        stages=[StageSpec(channels=4), StageSpec(channels=6)],
        np_sites=np_sites(probability=1.0),
    )
    net = ConvNet.initialize(config, np.random.default_rng(0))
    images = Tensor(rng.uniform(0.0, 1.0, size=(2, 3, 8, 8)))
    labels = [0, 2]

    def loss_for(name: str):  # type: ignore[no-untyped-def]
        def loss(weight: Tensor) -> Tensor:
            model = ConvNet(config, {**net.params, name: weight})
            out = model.forward(
                images,
                training=True,
                rng=np.random.default_rng(3),
                gate_rng=np.random.default_rng(4),
            )
            return softmax_cross_entropy(out.logits, labels)

        return loss

    for name in ("stage1.conv1.weight", "stage2.conv1.bias", "head.weight"):
        assert check_gradient(loss_for(name), net.params[name]).passed, name
