"""Compositional Hierarchy of Parts: hierarchical shape vocabularies and spectral shape retrieval."""

from ._chop import (
    ChopError,
    InferenceGraph,
    ShapeDescriptor,
    ShapeImage,
    TrainingResult,
    Vocabulary,
    bullseye,
    descriptor,
    distance,
    infer,
    infer_all,
    inference_from_json,
    load_dataset,
    load_image,
    load_vocabulary,
    rank_all,
    shareability,
    top_k,
    train,
    vocabulary_from_json,
)

__all__ = [
    "ChopError",
    "InferenceGraph",
    "ShapeDescriptor",
    "ShapeImage",
    "TrainingResult",
    "Vocabulary",
    "bullseye",
    "descriptor",
    "distance",
    "infer",
    "infer_all",
    "inference_from_json",
    "load_dataset",
    "load_image",
    "load_vocabulary",
    "rank_all",
    "shareability",
    "top_k",
    "train",
    "vocabulary_from_json",
]
