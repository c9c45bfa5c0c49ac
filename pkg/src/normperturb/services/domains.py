"""Synthetic multi-domain shape benchmark.

Content (one shape per canvas) is generated once per split and rendered under
every domain style, so index i of each domain's validation set shows the same
canvas. Every random draw comes from a per-item generator, which keeps the
output independent of generation order.
"""

from __future__ import annotations

import logging

import numpy as np
from PIL import Image, ImageDraw
from scipy.ndimage import gaussian_filter

from src.normperturb.models.dataset import Benchmark, ImageSet
from src.normperturb.models.style import DomainSpec, StyleJitter, StyleParams
from src.normperturb.utils.seeding import derive_seed, item_rng


logger = logging.getLogger(__name__)

SHAPES = ("disk", "square", "triangle", "cross")
NUM_CLASSES = len(SHAPES)
IMAGE_SIZE = 32

SOURCE_DOMAIN = DomainSpec(
    name="source",
    style=StyleParams.identity(),
    style_jitter=StyleJitter(channel_gain=0.08, channel_bias=0.03, contrast=0.1, noise_std=0.02),
)

TARGET_DOMAINS: tuple[DomainSpec, ...] = (
    DomainSpec(name="fog", style=StyleParams(fog_strength=0.5)),
    DomainSpec(name="night", style=StyleParams(channel_gain=(0.3, 0.3, 0.45), gamma=1.8)),
    DomainSpec(name="warm", style=StyleParams(channel_gain=(1.3, 1.0, 0.7))),
)


def _shape_mask(shape: str, size: int, rng: np.random.Generator) -> np.ndarray:
    """Binary H×W mask of one shape at a random position and scale."""
    radius = rng.uniform(0.22, 0.36) * size
    cx, cy = rng.uniform(radius, size - radius, size=2)
    mask = Image.new("L", (size, size), 0)
    draw = ImageDraw.Draw(mask)
    box = (cx - radius, cy - radius, cx + radius, cy + radius)
    if shape == "disk":
        draw.ellipse(box, fill=255)
    elif shape == "square":
        side = radius * 0.85
        draw.rectangle((cx - side, cy - side, cx + side, cy + side), fill=255)
    elif shape == "triangle":
        draw.regular_polygon((cx, cy, radius), n_sides=3, rotation=rng.uniform(0, 120), fill=255)
    elif shape == "cross":
        arm = radius * 0.35
        draw.rectangle((cx - radius, cy - arm, cx + radius, cy + arm), fill=255)
        draw.rectangle((cx - arm, cy - radius, cx + arm, cy + radius), fill=255)
    else:
        raise ValueError(f"unknown shape {shape!r}")
    return np.asarray(mask, dtype=np.float64) / 255.0


def _canvas(label: int, size: int, rng: np.random.Generator) -> np.ndarray:
    # gray textured background, identical in every channel
    level = rng.uniform(0.2, 0.45)
    texture = gaussian_filter(rng.normal(0.0, 0.08, size=(size, size)), sigma=1.5)
    background = np.clip(level + texture, 0.0, 1.0)
    color = rng.uniform(0.55, 0.95, size=3)
    mask = _shape_mask(SHAPES[label], size, rng)
    canvas = background[None] * (1.0 - mask[None]) + color[:, None, None] * mask[None]
    return np.clip(canvas, 0.0, 1.0)


def generate_content(
    n: int, seed: int, size: int = IMAGE_SIZE
) -> tuple[np.ndarray, np.ndarray]:
    """Generate ``n`` style-free canvases with one shape each.

    Labels are assigned round-robin (i mod 4), so classes are balanced within ±1.

    Returns:
        Tuple of (N×3×H×W float64 canvases in [0, 1], N int64 labels).

    Raises:
        ValueError: If ``n < 1`` or ``size`` is too small to draw on.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if size < 8:
        raise ValueError(f"image size must be >= 8, got {size}")
    labels = np.arange(n, dtype=np.int64) % NUM_CLASSES
    canvases = np.stack([_canvas(int(labels[i]), size, item_rng(seed, i)) for i in range(n)])
    return canvases, labels


def apply_style(image: np.ndarray, params: StyleParams, rng: np.random.Generator) -> np.ndarray:
    """Render a canvas under a photometric style.

    Order: gamma, contrast about 0.5, per-channel gain and bias, fog blend toward
    white, additive gaussian noise, clip to [0, 1]. Steps at their identity value
    are skipped, so the identity style returns the input unchanged.
    """
    out = np.asarray(image, dtype=np.float64)
    if params.gamma != 1.0:
        out = np.power(out, params.gamma)
    if params.contrast != 1.0:
        out = (out - 0.5) * params.contrast + 0.5
    if params.channel_gain != (1.0, 1.0, 1.0) or params.channel_bias != (0.0, 0.0, 0.0):
        gain = np.asarray(params.channel_gain)[:, None, None]
        bias = np.asarray(params.channel_bias)[:, None, None]
        out = out * gain + bias
    if params.fog_strength:
        out = (1.0 - params.fog_strength) * out + params.fog_strength
    if params.noise_std:
        out = out + rng.normal(0.0, params.noise_std, size=out.shape)
    return np.clip(out, 0.0, 1.0)


def render_domain(
    canvases: np.ndarray,
    labels: np.ndarray,
    content_ids: np.ndarray,
    domain: DomainSpec,
    seed: int,
) -> ImageSet:
    """Style every canvas with a per-image jittered draw of ``domain``."""
    style_seed = derive_seed(seed, f"style:{domain.name}")
    images = np.empty(canvases.shape, dtype=np.float32)
    for i, canvas in enumerate(canvases):
        rng = item_rng(style_seed, int(content_ids[i]))
        images[i] = apply_style(canvas, domain.sample_style(rng), rng)
    return ImageSet(domain=domain.name, images=images, labels=labels, content_ids=content_ids)


def make_benchmark(
    seed: int,
    train_size: int = 2000,
    val_size: int = 400,
    image_size: int = IMAGE_SIZE,
    source: DomainSpec = SOURCE_DOMAIN,
    targets: tuple[DomainSpec, ...] = TARGET_DOMAINS,
) -> Benchmark:
    """Build source train/val and one paired validation set per target domain.

    Target sets reuse the source validation canvases, so source and targets share
    labels and content ids index for index.

    Raises:
        ValueError: On non-positive sizes or duplicate domain names.
    """
    names = [source.name, *(t.name for t in targets)]
    if len(names) != len(set(names)):
        raise ValueError(f"domain names must be unique, got {names}")
    train_canvases, train_labels = generate_content(
        train_size, derive_seed(seed, "content:train"), image_size
    )
    val_canvases, val_labels = generate_content(
        val_size, derive_seed(seed, "content:val"), image_size
    )
    train_ids = np.arange(train_size, dtype=np.int64)
    val_ids = np.arange(train_size, train_size + val_size, dtype=np.int64)

    benchmark = Benchmark(
        source_train=render_domain(train_canvases, train_labels, train_ids, source, seed),
        source_val=render_domain(val_canvases, val_labels, val_ids, source, seed),
        targets={
            target.name: render_domain(val_canvases, val_labels, val_ids, target, seed)
            for target in targets
        },
    )
    logger.info(
        "Benchmark generated",
        extra={
            "seed": seed,
            "train_size": train_size,
            "val_size": val_size,
            "targets": list(benchmark.targets),
        },
    )
    return benchmark
