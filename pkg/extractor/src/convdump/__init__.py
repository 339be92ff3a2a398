"""Pre-ReLU convolutional activation extraction to OVAC streams."""

from .extract import (
    ExtractionSummary,
    ManifestEntry,
    extract_to,
    extract_to_file,
    iter_records,
    read_manifest,
)
from .ovac import ActivationRecord, write_file, write_stream
from .resnet import (
    CAPTURE_POINTS,
    DEFAULT_LAYERS,
    ConvLayer,
    build_network,
    capture_modules,
    enumerate_conv_layers,
)

__version__ = "0.1.0"

__all__ = [
    "ActivationRecord",
    "CAPTURE_POINTS",
    "ConvLayer",
    "DEFAULT_LAYERS",
    "ExtractionSummary",
    "ManifestEntry",
    "build_network",
    "capture_modules",
    "enumerate_conv_layers",
    "extract_to",
    "extract_to_file",
    "iter_records",
    "read_manifest",
    "write_file",
    "write_stream",
]
