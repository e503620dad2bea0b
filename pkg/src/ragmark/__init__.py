"""ragmark: build, version and score retrieval-augmented-generation benchmarks.

The package covers the whole lifecycle: turning a document corpus into a
knowledge graph, sampling typed subgraphs into question-answer pairs,
filtering them through a five-stage cascade, packaging immutable versioned
dataset splits, and scoring submissions both locally and through an
evaluation service with an approval-gated results ledger.
"""
from .sampling import QuestionType

__version__ = "0.1.0"

__all__ = ["QuestionType", "__version__"]
