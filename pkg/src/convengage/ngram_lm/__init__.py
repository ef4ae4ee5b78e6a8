"""Kneser-Ney n-gram language model used for the brand-post novelty score."""

from .counts import MAX_ORDER, NGramCounts, count_ngrams
from .io import ModelFormatError, dumps, load_model, loads, read_arpa, save_model, write_arpa
from .model import UNK, KNModel, PerplexityScore, estimate, log_prob, modified_kn_discounts, perplexity

__all__ = [
    "MAX_ORDER",
    "NGramCounts",
    "count_ngrams",
    "ModelFormatError",
    "dumps",
    "loads",
    "load_model",
    "save_model",
    "read_arpa",
    "write_arpa",
    "UNK",
    "KNModel",
    "PerplexityScore",
    "estimate",
    "log_prob",
    "modified_kn_discounts",
    "perplexity",
]
