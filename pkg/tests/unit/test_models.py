"""Unit tests for data models."""

import numpy as np
import pytest
from pydantic import ValidationError

from src.normperturb.models.dataset import Benchmark, ImageSet, LabeledImage
from src.normperturb.models.network import EpochMetrics, NetworkConfig, StageSpec, TrainConfig
from src.normperturb.models.noise import NpSiteConfig
from src.normperturb.models.reports import GapReport, KernelSpec, StageGap
from src.normperturb.models.stats import ChannelStats, NoiseDraw, StatVariance
from src.normperturb.models.style import DomainSpec, StyleJitter, StyleParams


def _image_set(n: int = 4, domain: str = "source", offset: int = 0) -> ImageSet:
    return ImageSet(
        domain=domain,
        images=np.full((n, 3, 8, 8), 0.5),
        labels=np.arange(n) % 4,
        content_ids=np.arange(offset, offset + n),
    )


class TestChannelStats:
    """Tests for statistic models."""

    def test_valid_stats(self) -> None:
        """Test creating B×C statistics."""
        stats = ChannelStats(mean=np.zeros((2, 3)), std=np.ones((2, 3)))
        assert stats.batch_size == 2
        assert stats.num_channels == 3

    def test_negative_std(self) -> None:
        """Test std must be non-negative."""
        with pytest.raises(ValidationError):
            ChannelStats(mean=np.zeros((1, 2)), std=np.array([[1.0, -0.1]]))

    def test_shape_mismatch(self) -> None:
        """Test mean and std must share a shape."""
        with pytest.raises(ValidationError):
            ChannelStats(mean=np.zeros((2, 3)), std=np.ones((3, 2)))

    def test_lists_are_coerced(self) -> None:
        """Test nested lists become float arrays."""
        stats = ChannelStats(mean=[[1, 2]], std=[[0, 1]])
        assert stats.mean.dtype == np.float64

    def test_delta_range(self) -> None:
        """Test normalized δ must lie in [0, 1]."""
        with pytest.raises(ValidationError):
            StatVariance(
                delta_raw=np.array([1.0]), mean_of_means=np.array([0.0]), delta=np.array([2.0])
            )

    def test_noise_draw_shape(self) -> None:
        """Test α and β must match."""
        with pytest.raises(ValidationError):
            NoiseDraw(alpha=np.ones((2, 3)), beta=np.ones((2, 2)))


class TestImageSet:
    """Tests for ImageSet and Benchmark."""

    def test_valid_set(self) -> None:
        """Test length, item access and subsets."""
        images = _image_set(4)
        assert len(images) == 4
        item = images.item(1)
        assert isinstance(item, LabeledImage)
        assert item.label == 1
        subset = images.subset([3, 0])
        np.testing.assert_array_equal(subset.content_ids, [3, 0])

    def test_pixel_range(self) -> None:
        """Test pixels outside [0, 1] are rejected."""
        with pytest.raises(ValidationError, match=r"\[0, 1\]"):
            ImageSet(
                domain="bad",
                images=np.full((1, 3, 4, 4), 1.5),
                labels=[0],
                content_ids=[0],
            )

    def test_layout(self) -> None:
        """Test grayscale images are rejected."""
        with pytest.raises(ValidationError):
            ImageSet(domain="bad", images=np.zeros((1, 1, 4, 4)), labels=[0], content_ids=[0])

    def test_length_mismatch(self) -> None:
        """Test labels must match the image count."""
        with pytest.raises(ValidationError):
            ImageSet(domain="bad", images=np.zeros((2, 3, 4, 4)), labels=[0], content_ids=[0, 1])

    def test_float_labels_rejected(self) -> None:
        """Test non-integer labels are rejected."""
        with pytest.raises(ValidationError):
            ImageSet(domain="bad", images=np.zeros((1, 3, 4, 4)), labels=[0.5], content_ids=[0])

    def test_pairing(self) -> None:
        """Test pairing compares content ids in order."""
        assert _image_set(4).is_paired_with(_image_set(4, domain="fog"))
        assert not _image_set(4).is_paired_with(_image_set(4, offset=1))

    def test_evaluation_sets_order(self) -> None:
        """Test source validation comes first, then targets in order."""
        benchmark = Benchmark(
            source_train=_image_set(8),
            source_val=_image_set(4, offset=8),
            targets={"fog": _image_set(4, "fog", 8), "night": _image_set(4, "night", 8)},
        )
        assert list(benchmark.evaluation_sets()) == ["source", "fog", "night"]


class TestStyle:
    """Tests for style models."""

    def test_identity(self) -> None:
        """Test the default style is the identity."""
        assert StyleParams.identity().is_identity
        assert not StyleParams(fog_strength=0.1).is_identity

    def test_gain_must_be_positive(self) -> None:
        """Test zero gains are rejected."""
        with pytest.raises(ValidationError):
            StyleParams(channel_gain=(1.0, 0.0, 1.0))

    def test_fog_range(self) -> None:
        """Test fog strength is bounded by one."""
        with pytest.raises(ValidationError):
            StyleParams(fog_strength=1.5)

    def test_domain_name(self) -> None:
        """Test domain names must be file-name safe."""
        with pytest.raises(ValidationError):
            DomainSpec(name="fog/night")

    def test_sample_without_jitter(self, rng: np.random.Generator) -> None:
        """Test a jitter-free domain always yields its base style."""
        domain = DomainSpec(name="warm", style=StyleParams(channel_gain=(1.3, 1.0, 0.7)))
        assert domain.sample_style(rng) == domain.style

    def test_jitter_stays_valid(self, rng: np.random.Generator) -> None:
        """Test jittered draws stay within half-widths and valid ranges."""
        domain = DomainSpec(
            name="source",
            style_jitter=StyleJitter(channel_gain=0.2, fog_strength=0.3, contrast=0.1),
        )
        for _ in range(50):
            style = domain.sample_style(rng)
            assert all(0.8 <= g <= 1.2 for g in style.channel_gain)
            assert 0.0 <= style.fog_strength <= 0.3
            assert 0.9 <= style.contrast <= 1.1


class TestNetworkConfig:
    """Tests for network and training configuration."""

    def test_defaults(self) -> None:
        """Test the default four-stage layout."""
        config = NetworkConfig()
        assert [s.channels for s in config.stages] == [16, 32, 64, 128]
        assert config.input_size == 32

    def test_site_beyond_last_stage(self) -> None:
        """Test sites must reference an existing stage."""
        with pytest.raises(ValidationError, match="only 2 stages"):
            NetworkConfig(
                input_size=8,
                stages=[StageSpec(channels=2), StageSpec(channels=4)],
                np_sites=[NpSiteConfig(site_id=3)],
            )

    def test_duplicate_sites(self) -> None:
        """Test one site per stage."""
        with pytest.raises(ValidationError, match="distinct"):
            NetworkConfig(np_sites=[NpSiteConfig(site_id=1), NpSiteConfig(site_id=1)])

    def test_input_divisibility(self) -> None:
        """Test the input must halve cleanly between stages."""
        with pytest.raises(ValidationError, match="divisible"):
            NetworkConfig(input_size=12)

    def test_site_lookup(self) -> None:
        """Test site_for and the np_plus flag."""
        config = NetworkConfig(np_sites=[NpSiteConfig(site_id=2, mode="np_plus")])
        assert config.site_for(1) is None
        assert config.site_for(2) is not None
        assert config.uses_np_plus

    def test_train_batch_size(self) -> None:
        """Test batches need two samples."""
        with pytest.raises(ValidationError):
            TrainConfig(batch_size=1)

    def test_epoch_metrics_accuracy_range(self) -> None:
        """Test accuracy is a fraction."""
        with pytest.raises(ValidationError):
            EpochMetrics(epoch=1, split="train", loss=0.1, accuracy=1.2)


class TestReports:
    """Tests for report models."""

    def test_kernel_bandwidth_positive(self) -> None:
        """Test RBF bandwidths must be positive."""
        with pytest.raises(ValidationError):
            KernelSpec(bandwidth=0.0)

    def test_gap_stages_ordered(self) -> None:
        """Test per-stage gaps must be in stage order."""
        with pytest.raises(ValidationError, match="ordered"):
            GapReport(
                model_id="m",
                dataset_pair=("source", "fog"),
                per_stage=[
                    StageGap(stage=2, mmd=0.1, accumulated=0.1),
                    StageGap(stage=1, mmd=0.1, accumulated=0.2),
                ],
                summaries=[],
                kernel=KernelSpec(),
            )

    def test_mmd_report_view(self) -> None:
        """Test the per-stage MMD view of a gap report."""
        report = GapReport(
            model_id="m",
            dataset_pair=("source", "fog"),
            per_stage=[
                StageGap(stage=1, mmd=0.1, accumulated=0.1),
                StageGap(stage=2, mmd=0.3, accumulated=0.4),
            ],
            summaries=[],
            kernel=KernelSpec(family="linear"),
        )
        assert [m.mmd for m in report.to_mmd_report().per_stage] == [0.1, 0.3]
