"""Machine-learning-corrected mean curvature for 3D level sets."""

from ._core import (
    MlpModel,
    PreprocessStats,
    ease,
    generate_std_packets,
    negative_normalize,
    rand_linspace,
    read_dataset_meta,
    read_dataset_rows,
    reorient_standard,
    sha256_file,
    sphere_baseline,
)

__all__ = [
    "MlpModel",
    "PreprocessStats",
    "ease",
    "generate_std_packets",
    "negative_normalize",
    "rand_linspace",
    "read_dataset_meta",
    "read_dataset_rows",
    "reorient_standard",
    "sha256_file",
    "sphere_baseline",
]
