"""Instance files, synthetic generation and experiment drivers."""
from .experiment import ExperimentReport, evaluate_instance, run_experiment, run_scaling
from .io import (ParseError, fixture_instance, instance_from_dict, instance_to_dict,
                 load_embeddings, load_instance, save_embeddings, save_instance)
from .synthetic import SyntheticConfig, derive_radii, generate_synthetic
