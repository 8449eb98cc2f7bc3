"""Streaming, mergeable density sketches.

Compress a stream of d-dimensional points into a fixed-size summary that
answers point-wise density queries and generates synthetic samples
approximately following the data distribution. Includes exact brute-force
references and a statistical evaluation harness.
"""

from .countsketch import CountEstimate, CountSketch
from .errors import DSketchError, FormatError, MergeError
from .oracle import (
    ExactHistogram,
    density_star_exact,
    density_star_many,
    nhat,
    sampling_density_many,
    tv_gap,
)
from .partition import AlignedGrid, BinId, LshGrid, RegularGrid, new_lsh
from .sketch import DensitySketch
from .synthetic import GaussianMixture, single_gaussian
from .topbins import TopBins

__version__ = "0.1.0"

__all__ = [
    "AlignedGrid",
    "BinId",
    "CountEstimate",
    "CountSketch",
    "DensitySketch",
    "DSketchError",
    "ExactHistogram",
    "FormatError",
    "GaussianMixture",
    "LshGrid",
    "MergeError",
    "RegularGrid",
    "TopBins",
    "density_star_exact",
    "density_star_many",
    "new_lsh",
    "nhat",
    "sampling_density_many",
    "single_gaussian",
    "tv_gap",
    "__version__",
]
