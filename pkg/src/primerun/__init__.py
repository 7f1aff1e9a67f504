"""Prime running functions, prime walks and the sieved Cramer model."""

from .bias import BiasVector, FactoredModulus, bias_vector, parse_modulus, primorial
from .cramer import CramerModel, expected_phi_tilde, expected_w, run_trials, sample_sequence
from .errors import ArgumentError, PrimeRunError, ResourceError, SamplingExhaustedError
from .primes import ResidueClass, iter_prime_chunks, next_prime, prime_floor, sieve_range
from .running import (
    RunningTable,
    race,
    rescaled_bias,
    reversed_running_table,
    run_path,
    running_table,
    running_value,
    walk_path,
)

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "BiasVector",
    "CramerModel",
    "FactoredModulus",
    "PrimeRunError",
    "ResidueClass",
    "ResourceError",
    "RunningTable",
    "SamplingExhaustedError",
    "bias_vector",
    "expected_phi_tilde",
    "expected_w",
    "iter_prime_chunks",
    "next_prime",
    "parse_modulus",
    "prime_floor",
    "primorial",
    "race",
    "rescaled_bias",
    "reversed_running_table",
    "run_path",
    "run_trials",
    "running_table",
    "running_value",
    "sample_sequence",
    "sieve_range",
    "walk_path",
]
