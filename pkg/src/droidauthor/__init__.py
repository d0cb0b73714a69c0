"""Two-phase authorship analysis for mobile apps.

Phase one decouples an app into per-author modules over its package
relation graph; phase two fingerprints the leading author's primary module
with stylometric features and classifies it against known authors.
"""

__version__ = "0.1.0"

from .bundle import AppBundle, PackageName, parse_bundle, validate, write_bundle
from .clustering import AuthorshipPartition, DecoupleConfig, decouple
from .graph import PackageRelationGraph, build_graph
from .pipeline import PipelineConfig, crossvalidate, predict_bundles, train_model

__all__ = [
    "AppBundle",
    "AuthorshipPartition",
    "DecoupleConfig",
    "PackageName",
    "PackageRelationGraph",
    "PipelineConfig",
    "build_graph",
    "crossvalidate",
    "decouple",
    "parse_bundle",
    "predict_bundles",
    "train_model",
    "validate",
    "write_bundle",
]
