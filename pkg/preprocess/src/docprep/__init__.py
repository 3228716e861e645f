"""Raw labeled text -> parsed-document interchange files (tokens with
document-level ids, within-sentence dependencies, one root per sentence)."""

from .backends import ChainParser, SpacyParser, get_backend
from .corpus import parse_corpus, parse_document
from .validate import validate_output

__version__ = "0.1.0"
__all__ = ["ChainParser", "SpacyParser", "get_backend", "parse_corpus",
           "parse_document", "validate_output"]
