"""Hybrid information-gain filter and binary swarm / GA wrapper feature selection."""

from .classify import Evaluator, FitnessFunction, FitnessSpec, fitness
from .dataset import DataError, Dataset, apply_mask, load_csv, min_max_scale, stratified_kfold
from .gasearch import GaParams, run_ga
from .igfilter import IgRanking, rank_and_filter
from .pipeline import ExperimentConfig, Method, generate_synthetic, run_experiment
from .swarm import SwarmParams, Variant

__all__ = [
    "DataError", "Dataset", "Evaluator", "ExperimentConfig", "FitnessFunction", "FitnessSpec",
    "GaParams", "IgRanking", "Method", "SwarmParams", "Variant", "apply_mask", "fitness",
    "generate_synthetic", "load_csv", "min_max_scale", "rank_and_filter", "run_experiment",
    "run_ga", "stratified_kfold",
]
__version__ = "0.1.0"
