"""Classical sampling of qudit circuits whose states, gates and measurements
have nonnegative discrete Wigner functions."""

from .channels import (
    ChannelSpec,
    StochasticKernel,
    apply_kernel_full,
    choi_from_channel,
    clifford_kernel,
    kernel_from_choi,
    partial_transpose_out,
    validate_kernel,
)
from .circuit import Circuit, WignerProgram, audit, compile_to_wigner, load_circuit, parse_circuit, serialize_circuit
from .measurements import outcome_distribution_at, povm_wigner_table
from .oracle import compare_distributions, dense_simulate, robustness_experiment, wigner_chain_distribution
from .phase_space import WignerTensor, inverse_wigner_transform, overlap, wigner_transform
from .sampler import SampleStream, inverse_transform_sample, sample_run, sample_shots

__version__ = "0.1.0"

__all__ = [
    "ChannelSpec",
    "Circuit",
    "SampleStream",
    "StochasticKernel",
    "WignerProgram",
    "WignerTensor",
    "apply_kernel_full",
    "audit",
    "choi_from_channel",
    "clifford_kernel",
    "compare_distributions",
    "compile_to_wigner",
    "dense_simulate",
    "inverse_transform_sample",
    "inverse_wigner_transform",
    "kernel_from_choi",
    "load_circuit",
    "outcome_distribution_at",
    "overlap",
    "parse_circuit",
    "partial_transpose_out",
    "povm_wigner_table",
    "robustness_experiment",
    "sample_run",
    "sample_shots",
    "serialize_circuit",
    "validate_kernel",
    "wigner_chain_distribution",
    "wigner_transform",
]
