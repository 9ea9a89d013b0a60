"""Hellinger localization and identity testing for discrete Bayesian networks."""

from .bn_core import (
    BayesNet,
    Dag,
    DenseDistribution,
    SampleSet,
    empirical_counts,
    joint_distribution,
    marginal,
    sample,
    topological_order,
)
from .decomposition import (
    Block,
    DecompositionReport,
    Factorization,
    decompose,
    localize,
    neighborhood_factorization,
)
from .divergences import (
    DivergenceKind,
    all_divergences,
    bernoulli_hellinger_bound,
    hellinger_sq,
    kl,
    total_variation,
)
from .errors import BNIdentityError, InsufficientSamplesWarning
from .gof_product import GofConfig, ProductModel, ThresholdMode, gof_product
from .harness import ExperimentSpec, GeneratorSpec, generate_instance, run_experiment
from .subtest import Decision, SubtestConfig, hellinger_subtest, required_samples
from .testers import TesterConfig, Verdict, test_known_structure, test_two_trees, test_unknown_structure
from .tree_order import Tree, dependent_set, order_two_trees, two_tree_factorization

__version__ = "0.1.0"

__all__ = [
    "all_divergences",
    "BayesNet",
    "bernoulli_hellinger_bound",
    "Block",
    "BNIdentityError",
    "Dag",
    "Decision",
    "decompose",
    "DecompositionReport",
    "DenseDistribution",
    "dependent_set",
    "DivergenceKind",
    "empirical_counts",
    "ExperimentSpec",
    "Factorization",
    "generate_instance",
    "GeneratorSpec",
    "gof_product",
    "GofConfig",
    "hellinger_sq",
    "hellinger_subtest",
    "InsufficientSamplesWarning",
    "joint_distribution",
    "kl",
    "localize",
    "marginal",
    "neighborhood_factorization",
    "order_two_trees",
    "ProductModel",
    "required_samples",
    "run_experiment",
    "sample",
    "SampleSet",
    "SubtestConfig",
    "test_known_structure",
    "test_two_trees",
    "test_unknown_structure",
    "TesterConfig",
    "ThresholdMode",
    "topological_order",
    "total_variation",
    "Tree",
    "two_tree_factorization",
    "Verdict",
]
