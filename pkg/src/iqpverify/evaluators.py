"""Correlation-function evaluators for X-programs.

Every backend computes (or estimates) the same quantity for a program and a
secret string s: the expectation of the Z-product observable picked out by s
over the program's output distribution.  The redundant rows (even parity
against s) never contribute, which is what the faster backends exploit:

* statevector      exact, any angles, 2**n work
* diagonal exact   exact, any angles, 2**n work but only main rows
* diagonal mc      unbiased sampling estimate, polynomial work
* subspace         exact closed form when all main angles are equal
* clifford         exact stabilizer amplitude when main angles are w*pi/8
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bitlin import BitVector, BitMatrix, SPAN_CAP, column_space_basis, span_weights, walsh_hadamard
from .chform import CHForm
from .errors import AngleError, CapacityError, DimensionError, ValidationError
from .model import IqpProgram, partition

__all__ = [
    "Backend",
    "CorrelationResult",
    "DistributionTable",
    "STATEVECTOR_CAP",
    "output_distribution",
    "correlation_statevector",
    "all_correlations",
    "correlation_diagonal",
    "mc_sample_count",
    "correlation_subspace",
    "correlation_clifford",
    "sample_outputs",
    "evaluate",
]

# Dense 2**n arrays above this many qubits are refused.
STATEVECTOR_CAP = 24


class Backend(str, Enum):
    STATEVECTOR = "statevector"
    DIAGONAL_EXACT = "diagonal_exact"
    DIAGONAL_MC = "diagonal_mc"
    SUBSPACE = "subspace"
    CLIFFORD = "clifford"


@dataclass(frozen=True)
class CorrelationResult:
    """One evaluated correlation value plus how it was obtained.

    ``error_bound`` is 0 for the exact backends; for the Monte-Carlo backend
    it is the Hoeffding radius at the requested confidence.  ``g`` is only
    set by the clifford backend (|value| = 2**(-g/2)); ``samples_used`` only
    by the Monte-Carlo backend.
    """

    value: float
    backend: Backend
    error_bound: float = 0.0
    g: int | None = None
    samples_used: int | None = None


@dataclass(eq=False)
class DistributionTable:
    """Full output distribution of a program over all 2**n bit strings."""

    n: int
    probs: np.ndarray

    def __post_init__(self):
        if self.probs.shape != (1 << self.n,):
            raise DimensionError(
                f"distribution for n={self.n} needs {1 << self.n} entries"
            )
        if np.any(self.probs < -1e-12):
            raise ValidationError("negative probability entry")
        total = float(self.probs.sum())
        if abs(total - 1.0) > 1e-10:
            raise ValidationError(f"probabilities sum to {total}, not 1")


def _check_cap(n: int):
    if n > STATEVECTOR_CAP:
        raise CapacityError(f"n={n} exceeds dense cap {STATEVECTOR_CAP}")


def _check_secret(program: IqpProgram, s: BitVector):
    if len(s) != program.n:
        raise DimensionError(f"secret has {len(s)} bits, program has {program.n}")


def _parity_profile(n: int, mask: int) -> np.ndarray:
    """Parity of x & mask for every x in 0..2**n-1, as a float sign array."""
    xs = np.arange(1 << n, dtype=np.uint64)
    par = np.bitwise_count(xs & np.uint64(mask)) & 1
    return 1.0 - 2.0 * par.astype(np.float64)


def output_distribution(program: IqpProgram) -> DistributionTable:
    """Exact output distribution via phase accumulation plus one transform.

    In the X eigenbasis the program only attaches a phase to each basis
    state, so the amplitudes are the Walsh-Hadamard transform of those
    phases, scaled by 2**-n.
    """
    n = program.n
    _check_cap(n)
    phases = np.zeros(1 << n, dtype=np.float64)
    for row, angle in zip(program.chi.rows, program.angles):
        phases += angle.radians * _parity_profile(n, row.bits)
    amplitudes = walsh_hadamard(np.exp(1j * phases)) / (1 << n)
    return DistributionTable(n, np.abs(amplitudes) ** 2)


def correlation_statevector(program: IqpProgram, s: BitVector) -> CorrelationResult:
    """Exact correlation from the full output distribution."""
    _check_secret(program, s)
    table = output_distribution(program)
    signs = _parity_profile(program.n, s.bits)
    return CorrelationResult(float(table.probs @ signs), Backend.STATEVECTOR)


def all_correlations(program: IqpProgram) -> np.ndarray:
    """Correlation values for every one of the 2**n secrets at once.

    Entry s of the result is the correlation for secret s; entry 0 is 1.
    """
    table = output_distribution(program)
    return walsh_hadamard(table.probs)


def _main_rows(program: IqpProgram, s: BitVector):
    part = partition(program, s)
    return [(program.chi.row(i), program.angles[i]) for i in part.main_rows]


def mc_sample_count(epsilon: float, delta: float) -> int:
    """Samples needed so the Monte-Carlo mean is within epsilon w.p. 1-delta.

    Hoeffding for terms in [-1, 1]: T = ceil((2/epsilon^2) * ln(2/delta)).
    """
    if not 0 < epsilon:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    if not 0 < delta < 1:
        raise ValidationError(f"delta must be in (0, 1), got {delta}")
    return math.ceil(2.0 / (epsilon * epsilon) * math.log(2.0 / delta))


def _mc_error_bound(samples: int, delta: float) -> float:
    return math.sqrt(2.0 * math.log(2.0 / delta) / samples)


def correlation_diagonal(
    program: IqpProgram,
    s: BitVector,
    *,
    samples: int | None = None,
    rng: np.random.Generator | None = None,
    delta: float = 0.05,
) -> CorrelationResult:
    """Correlation via the diagonal picture: only main rows enter.

    Each output x contributes cos(sum over main rows of 2*theta*(-1)^(row.x)).
    With ``samples=None`` the average runs over all 2**n strings (exact, cap
    applies).  With ``samples=T`` it is a Monte-Carlo average over T uniform
    strings; ``rng`` is then required and ``error_bound`` reports the
    Hoeffding radius at confidence 1-delta.
    """
    _check_secret(program, s)
    mains = _main_rows(program, s)
    if samples is None:
        n = program.n
        _check_cap(n)
        omega = np.zeros(1 << n, dtype=np.float64)
        for row, angle in mains:
            omega += 2.0 * angle.radians * _parity_profile(n, row.bits)
        return CorrelationResult(float(np.cos(omega).mean()), Backend.DIAGONAL_EXACT)
    if samples < 1:
        raise ValidationError(f"sample count must be positive, got {samples}")
    if rng is None:
        raise ValidationError("monte-carlo mode needs an explicit rng")
    omega = np.zeros(samples, dtype=np.float64)
    n = program.n
    if n <= 63:
        xs = rng.integers(0, 1 << n, size=samples, dtype=np.uint64)
        for row, angle in mains:
            par = np.bitwise_count(xs & np.uint64(row.bits)) & 1
            omega += 2.0 * angle.radians * (1.0 - 2.0 * par.astype(np.float64))
    else:
        words = [rng.integers(0, 1 << 32, size=samples, dtype=np.uint64) for _ in range((n + 31) // 32)]
        xs_int = [
            sum(int(w[i]) << (32 * k) for k, w in enumerate(words)) & ((1 << n) - 1)
            for i in range(samples)
        ]
        for row, angle in mains:
            signs = np.array(
                [1.0 - 2.0 * ((x & row.bits).bit_count() & 1) for x in xs_int]
            )
            omega += 2.0 * angle.radians * signs
    value = float(np.cos(omega).mean())
    return CorrelationResult(
        value,
        Backend.DIAGONAL_MC,
        error_bound=_mc_error_bound(samples, delta),
        samples_used=samples,
    )


def correlation_subspace(program: IqpProgram, s: BitVector) -> CorrelationResult:
    """Closed form when every main row shares one angle theta.

    With q main rows whose column space has dimension d, the value is
    2**-d * sum over the column-space elements c of cos(2*theta*(q - 2*|c|)).
    Exact, and independent of which basis the enumeration happens to pick.
    """
    _check_secret(program, s)
    mains = _main_rows(program, s)
    q = len(mains)
    if q == 0:
        return CorrelationResult(1.0, Backend.SUBSPACE)
    theta = mains[0][1]
    for _, angle in mains[1:]:
        if angle != theta:
            raise AngleError("subspace backend needs one shared main-part angle")
    sub = BitMatrix([row for row, _ in mains], cols=program.n)
    basis = column_space_basis(sub)
    d = len(basis)
    if d > SPAN_CAP:
        raise CapacityError(f"column-space dimension {d} exceeds cap {SPAN_CAP}")
    weights = span_weights(basis, length=q)
    hist = np.bincount(weights, minlength=q + 1)
    two_theta = 2.0 * theta.radians
    total = 0.0
    for k in range(q + 1):
        if hist[k]:
            total += float(hist[k]) * math.cos(two_theta * (q - 2 * k))
    return CorrelationResult(total / (1 << d), Backend.SUBSPACE)


def correlation_clifford(program: IqpProgram, s: BitVector) -> CorrelationResult:
    """Exact stabilizer amplitude when every main angle is a multiple of pi/8.

    Each main row becomes a diagonal eighth-root rotation: a CX ladder onto
    one support qubit conjugating a single-qubit S power, with the scalar
    eighth-root phase tracked separately.  The final amplitude is exact, so
    |value| is exactly 0 or 2**(-g/2) and g is reported.
    """
    _check_secret(program, s)
    mains = _main_rows(program, s)
    st = CHForm.plus(program.n)
    for row, angle in mains:
        w = angle.multiple_of_pi8()
        if w is None:
            raise AngleError(f"main-part angle {angle} is not a multiple of pi/8")
        st.scale_eighth_root(w)
        k = (-w) % 4
        if k:
            support = row.support()
            target = support[0]
            for j in support[1:]:
                st.apply_cx(j, target)
            st.apply_s(target, k)
            for j in support[1:]:
                st.apply_cx(j, target)
    for q in range(program.n):
        st.apply_h(q)
    amp = st.amplitude_zero_exact()
    if amp is None:
        return CorrelationResult(0.0, Backend.CLIFFORD, g=None)
    phase8, r2 = amp
    if phase8 not in (0, 4):  # pragma: no cover - the value is a real expectation
        raise AssertionError(f"non-real amplitude phase {phase8}")
    g = -r2
    assert 0 <= g <= program.n, g
    value = 2.0 ** (r2 / 2.0)
    return CorrelationResult(value if phase8 == 0 else -value, Backend.CLIFFORD, g=g)


def sample_outputs(
    program: IqpProgram, count: int, rng: np.random.Generator
) -> list[BitVector]:
    """Draw output strings from the exact distribution (cumulative table)."""
    if count < 1:
        raise ValidationError(f"sample count must be positive, got {count}")
    table = output_distribution(program)
    cumulative = np.cumsum(table.probs)
    draws = rng.random(count)
    indices = np.searchsorted(cumulative, draws, side="right")
    np.clip(indices, 0, (1 << program.n) - 1, out=indices)
    return [BitVector(program.n, int(i)) for i in indices]


def evaluate(
    program: IqpProgram,
    s: BitVector,
    backend: Backend | str,
    *,
    samples: int | None = None,
    rng: np.random.Generator | None = None,
    delta: float = 0.05,
) -> CorrelationResult:
    """Dispatch to one backend by name."""
    backend = Backend(backend)
    if backend is Backend.DIAGONAL_MC:
        if samples is None:
            raise ValidationError("the mc backend needs an explicit sample count")
        return correlation_diagonal(program, s, samples=samples, rng=rng, delta=delta)
    if samples is not None or rng is not None:
        raise ValidationError(
            f"samples/rng only apply to the mc backend, not {backend.value}"
        )
    if backend is Backend.STATEVECTOR:
        return correlation_statevector(program, s)
    if backend is Backend.DIAGONAL_EXACT:
        return correlation_diagonal(program, s)
    if backend is Backend.SUBSPACE:
        return correlation_subspace(program, s)
    return correlation_clifford(program, s)
