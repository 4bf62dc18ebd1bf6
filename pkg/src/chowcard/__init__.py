"""Chow-Liu tree Bayesian networks for per-relation selectivity estimation."""

from .relation import Attribute, Column, Relation, Schema, bernoulli_sample, ingest_csv, load_schema
from .histogram import EndBiasedHistogram, build_end_biased, histogram_prob
from .chowliu import TreeStructure, learn_structure, mutual_information
from .bayesnet import BayesNet, build_network, extract_steiner, variable_eliminate
from .query import Query, parse_query
from .estimators import BuildConfig, ModelStore, build_store, estimate_cardinality

__version__ = "0.1.0"
