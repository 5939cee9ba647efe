"""Cryptographic verification of sampling devices via hidden parities.

A verifier hides secret bit strings inside a diagonal X-basis program whose
output distribution carries a known parity bias for each secret.  A device
that truly runs the program reproduces those biases; the verifier checks
them from samples alone, and the secrets stay off the wire.
"""

from .bitlin import (
    SPAN_CAP,
    BitMatrix,
    BitVector,
    add_column,
    column_space_basis,
    dot,
    enumerate_span,
    nullspace_basis,
    rank,
    span_weights,
    walsh_hadamard,
)
from .errors import (
    AngleError,
    CapacityError,
    ConstructionError,
    DimensionError,
    IqpError,
    ParseError,
    ProtocolError,
    ValidationError,
)
from .evaluators import (
    STATEVECTOR_CAP,
    Backend,
    CorrelationResult,
    DistributionTable,
    all_correlations,
    correlation_clifford,
    correlation_diagonal,
    correlation_statevector,
    correlation_subspace,
    evaluate,
    mc_sample_count,
    output_distribution,
    sample_outputs,
)
from .experiments import (
    ExperimentReport,
    exp_anticoncentration,
    exp_fig1a,
    exp_fig1b,
    exp_parseval,
    parse_report,
)
from .keygen import (
    ConstructionSpec,
    ScrambleOp,
    SearchOutcome,
    add_redundant_rows,
    build_challenge,
    random_2local,
    random_program,
    random_scramble_ops,
    scramble,
    search_main_part,
    swap_column_ops,
)
from .model import (
    PI_OVER_8,
    Angle,
    IqpProgram,
    Partition,
    SecretKey,
    bias_from_correlation,
    hamiltonian_text,
    parse_key,
    parse_program,
    partition,
    serialize_key,
    serialize_program,
)
from .protocol import (
    MAX_MESSAGE_BYTES,
    ChallengeMsg,
    ProverServer,
    SamplesMsg,
    SecretVerdict,
    VerdictReport,
    WeakSignalWarning,
    acceptance_threshold,
    judge,
    prover_honest,
    prover_leak,
    prover_uniform,
    request,
    run_verification,
)

__version__ = "0.1.0"
