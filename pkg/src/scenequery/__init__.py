"""Story-line scene query harness.

A formal query language over a closed vocabulary, a temporal-spatial scene
knowledge base, a first-order query engine with on-demand spatial predicates,
a gated HTTP evaluation server with scoring, a story-line suite generator,
and a deterministic synthetic scene generator.
"""

from .ontology import Ontology, PredicateDef, default_ontology, load_ontology
from .kb import KnowledgeBase, ingest_annotations
from .engine import StoryContext, answer_query, evaluate_polar, resolve_definition
from .generator import GenConfig, generate_suite
from .suite import EvaluationSuite, load_suite, write_suite
from .scoring import ScoreReport, compute_report

__version__ = "0.1.0"

__all__ = [
    "EvaluationSuite",
    "GenConfig",
    "KnowledgeBase",
    "Ontology",
    "PredicateDef",
    "ScoreReport",
    "StoryContext",
    "answer_query",
    "compute_report",
    "default_ontology",
    "evaluate_polar",
    "generate_suite",
    "ingest_annotations",
    "load_ontology",
    "load_suite",
    "resolve_definition",
    "write_suite",
    "__version__",
]
