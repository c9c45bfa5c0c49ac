"""Labeled image collections."""

from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.normperturb.models.arrays import FloatArray, IntArray


class LabeledImage(BaseModel):
    """One image with its class and domain."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    pixels: FloatArray
    label: int = Field(ge=0)
    domain: str

    @model_validator(mode="after")
    def check_pixels(self) -> "LabeledImage":
        if self.pixels.ndim != 3 or self.pixels.shape[0] != 3:
            raise ValueError(f"pixels must be 3×H×W, got {self.pixels.shape}")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise ValueError("pixels must lie in [0, 1]")
        return self


class ImageSet(BaseModel):
    """A batch of images from one domain.

    Attributes:
        domain: Domain name.
        images: N×3×H×W pixels in [0, 1].
        labels: N class indices.
        content_ids: N canvas ids; equal ids across domains mean paired content.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    domain: str
    images: FloatArray
    labels: IntArray
    content_ids: IntArray

    @model_validator(mode="after")
    def check_consistency(self) -> "ImageSet":
        """Validate shapes and pixel range.

        Raises:
            ValueError: On inconsistent lengths, a non N×3×H×W layout or pixels outside [0, 1].
        """
        if self.images.ndim != 4 or self.images.shape[1] != 3:
            raise ValueError(f"images must be N×3×H×W, got {self.images.shape}")
        count = self.images.shape[0]
        if self.labels.shape != (count,) or self.content_ids.shape != (count,):
            raise ValueError(
                f"labels {self.labels.shape} and content_ids {self.content_ids.shape} "
                f"must both have length {count}"
            )
        if count and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise ValueError("pixels must lie in [0, 1]")
        return self

    def __len__(self) -> int:
        return int(self.images.shape[0])

    def item(self, index: int) -> LabeledImage:
        return LabeledImage(
            pixels=self.images[index], label=int(self.labels[index]), domain=self.domain
        )

    def subset(self, indices: Sequence[int] | np.ndarray) -> "ImageSet":
        idx = np.asarray(indices, dtype=np.int64)
        return ImageSet(
            domain=self.domain,
            images=self.images[idx],
            labels=self.labels[idx],
            content_ids=self.content_ids[idx],
        )

    def is_paired_with(self, other: "ImageSet") -> bool:
        """True when both sets hold the same canvases in the same order."""
        return len(self) == len(other) and bool(np.array_equal(self.content_ids, other.content_ids))


class Benchmark(BaseModel):
    """Single-source benchmark: source train/val plus unseen target sets."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    source_train: ImageSet
    source_val: ImageSet
    targets: dict[str, ImageSet]

    def evaluation_sets(self) -> dict[str, ImageSet]:
        """Source validation set followed by every target, in insertion order."""
        return {"source": self.source_val, **self.targets}
