"""Class-conditional 3D nodule in-painting GAN and malignancy classifier harness."""

import torch  # noqa: F401  loads libtorch before the extension

from ._core import (
    FormatError,
    IoError,
    ValidationError,
    auc,
    derive_seed,
    inverse_frequency_weights,
    load_volume,
    make_spherical_mask,
    metrics_from_scores,
    normalize_hu,
    read_manifest,
    run,
    save_volume,
)

__all__ = [
    "FormatError",
    "IoError",
    "ValidationError",
    "auc",
    "derive_seed",
    "inverse_frequency_weights",
    "load_volume",
    "make_spherical_mask",
    "metrics_from_scores",
    "normalize_hu",
    "read_manifest",
    "run",
    "save_volume",
]
