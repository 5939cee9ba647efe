"""Challenge construction: random ensembles, main-part search, scrambling.

A challenge hides one or more secret strings inside an X-program.  Rows with
odd parity against a secret pin its correlation value; extra rows orthogonal
to every secret pad the program; column additions then scramble matrix and
secrets together without moving any correlation value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bitlin import BitMatrix, BitVector, add_column, nullspace_basis
from .errors import CapacityError, ConstructionError, DimensionError, ValidationError
from .evaluators import CorrelationResult, correlation_clifford
from .model import Angle, IqpProgram, PI_OVER_8, SecretKey

__all__ = [
    "ScrambleOp",
    "ConstructionSpec",
    "SearchOutcome",
    "random_program",
    "random_2local",
    "search_main_part",
    "add_redundant_rows",
    "random_scramble_ops",
    "swap_column_ops",
    "scramble",
    "build_challenge",
]

_SEARCH_WEIGHT_CAP = 16
DEFAULT_SCRAMBLE_FACTOR = 20


@dataclass(frozen=True)
class ScrambleOp:
    """One column addition: column dst ^= column src (secret: src ^= dst)."""

    src: int
    dst: int

    def __post_init__(self):
        if self.src < 0 or self.dst < 0:
            raise ValidationError("column indices must be non-negative")
        if self.src == self.dst:
            raise ValidationError("scramble op needs two distinct columns")


@dataclass(frozen=True)
class ConstructionSpec:
    """Parameters for :func:`build_challenge`."""

    n: int
    secrets: int = 1
    weight: int = 2
    target: float = 0.7
    budget: int = 200
    redundant_rows: int = 8
    scramble_ops: int | None = None  # None means 20 * n
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("n must be at least 1")
        if self.secrets < 1:
            raise ValidationError("need at least one secret")
        if self.weight < 1:
            raise ValidationError("secret weight must be at least 1")
        if not 0.0 < self.target <= 1.0:
            raise ValidationError(f"target {self.target} outside (0, 1]")
        if self.budget < 1:
            raise ValidationError("search budget must be at least 1")
        if self.redundant_rows < 0:
            raise ValidationError("redundant row count must be non-negative")
        if self.scramble_ops is not None and self.scramble_ops < 0:
            raise ValidationError("scramble op count must be non-negative")


@dataclass(frozen=True)
class SearchOutcome:
    """Result of a main-part search on a support window."""

    rows: tuple[BitVector, ...]
    secret: BitVector
    result: CorrelationResult
    target_met: bool


def _random_nonzero_bits(n: int, rng: np.random.Generator) -> int:
    if n <= 63:
        return int(rng.integers(1, 1 << n, dtype=np.uint64))
    while True:
        bits = 0
        for k in range(0, n, 32):
            width = min(32, n - k)
            bits |= int(rng.integers(0, 1 << width)) << k
        if bits:
            return bits


def _row_angle(angle_policy: str | Angle, rng: np.random.Generator) -> Angle:
    if isinstance(angle_policy, Angle):
        return angle_policy
    if angle_policy == "pi8":
        return PI_OVER_8
    if angle_policy == "uniform-pi8":
        return Angle(int(rng.integers(0, 8)), 8)
    raise ValidationError(f"unknown angle policy {angle_policy!r}")


def random_program(
    n: int,
    m: int,
    angle_policy: str | Angle = "pi8",
    rng: np.random.Generator | None = None,
) -> IqpProgram:
    """Program with m rows drawn uniformly from the nonzero n-bit strings.

    ``angle_policy`` is "pi8" (every row pi/8), "uniform-pi8" (independent
    uniform multiples w*pi/8, w in 0..7) or a fixed :class:`Angle` shared by
    every row.
    """
    if rng is None:
        raise ValidationError("random_program needs an explicit rng")
    if n < 1 or m < 0:
        raise ValidationError(f"bad shape n={n}, m={m}")
    rows = [BitVector(n, _random_nonzero_bits(n, rng)) for _ in range(m)]
    angles = tuple(_row_angle(angle_policy, rng) for _ in range(m))
    return IqpProgram(BitMatrix(rows, cols=n), angles)


def random_2local(n: int, rng: np.random.Generator) -> IqpProgram:
    """Random two-local ensemble: X_iX_j and X_i rows with angles w*pi/8.

    Coefficients w are uniform in 0..7 and rows whose coefficient lands on 0
    are omitted, so the program (possibly empty) holds only acting rows.
    """
    if n < 1:
        raise ValidationError("n must be at least 1")
    rows: list[BitVector] = []
    angles: list[Angle] = []
    for i in range(n):
        for j in range(i + 1, n):
            w = int(rng.integers(0, 8))
            if w:
                rows.append(BitVector(n, (1 << i) | (1 << j)))
                angles.append(Angle(w, 8))
    for i in range(n):
        w = int(rng.integers(0, 8))
        if w:
            rows.append(BitVector(n, 1 << i))
            angles.append(Angle(w, 8))
    return IqpProgram(BitMatrix(rows, cols=n), tuple(angles))


def search_main_part(
    weight: int, target: float, budget: int, rng: np.random.Generator
) -> SearchOutcome:
    """Search for a main part on ``weight`` qubits with a large exact value.

    Candidate rows live on the window and have odd parity against the
    window's all-ones secret, so every candidate row stays in the main part.
    Returns the first candidate set reaching ``target`` in absolute value,
    otherwise the best seen within ``budget`` attempts (``target_met`` False).
    """
    if weight < 1:
        raise ValidationError("weight must be at least 1")
    if weight > _SEARCH_WEIGHT_CAP:
        raise CapacityError(f"search weight {weight} exceeds cap {_SEARCH_WEIGHT_CAP}")
    if not 0.0 < target <= 1.0:
        raise ValidationError(f"target {target} outside (0, 1]")
    if budget < 1:
        raise ValidationError("budget must be at least 1")
    secret = BitVector(weight, (1 << weight) - 1)
    pool = [bits for bits in range(1, 1 << weight) if bits.bit_count() & 1]
    best: SearchOutcome | None = None
    for _ in range(budget):
        size = int(rng.integers(1, len(pool) + 1))
        picks = sorted(rng.choice(len(pool), size=size, replace=False).tolist())
        rows = tuple(BitVector(weight, pool[i]) for i in picks)
        program = IqpProgram(BitMatrix(rows, cols=weight), (PI_OVER_8,) * len(rows))
        result = correlation_clifford(program, secret)
        if best is None or abs(result.value) > abs(best.result.value):
            best = SearchOutcome(rows, secret, result, abs(result.value) >= target)
        if abs(result.value) >= target:
            return best
    return best


def add_redundant_rows(
    program: IqpProgram,
    secrets: Sequence[BitVector],
    count: int,
    rng: np.random.Generator,
    angle: Angle | None = None,
) -> IqpProgram:
    """Append ``count`` random nonzero rows orthogonal to every secret.

    Appended rows default to the program's shared angle (pi/8 when angles
    are mixed); either way they cannot move any secret's correlation value.
    """
    if count < 0:
        raise ValidationError("count must be non-negative")
    if not secrets:
        raise ValidationError("need at least one secret")
    for s in secrets:
        if len(s) != program.n:
            raise DimensionError("secret length differs from program width")
    if count == 0:
        return program
    basis = nullspace_basis(BitMatrix(list(secrets), cols=program.n))
    if not basis:
        raise ConstructionError("no nonzero row is orthogonal to every secret")
    if angle is None:
        angle = program.uniform_angle() or PI_OVER_8
    rows = list(program.chi.rows)
    angles = list(program.angles)
    for _ in range(count):
        bits = 0
        while bits == 0:
            coeffs = rng.integers(0, 2, size=len(basis))
            bits = 0
            for c, b in zip(coeffs, basis):
                if c:
                    bits ^= b.bits
        rows.append(BitVector(program.n, bits))
        angles.append(angle)
    return IqpProgram(BitMatrix(rows, cols=program.n), tuple(angles))


def random_scramble_ops(n: int, count: int, rng: np.random.Generator) -> list[ScrambleOp]:
    """Uniform random distinct (src, dst) column-addition ops."""
    if n < 2:
        raise ValidationError("scrambling needs at least two columns")
    ops = []
    for _ in range(count):
        src = int(rng.integers(0, n))
        dst = int(rng.integers(0, n - 1))
        if dst >= src:
            dst += 1
        ops.append(ScrambleOp(src, dst))
    return ops


def swap_column_ops(a: int, b: int) -> list[ScrambleOp]:
    """A column swap expressed as three additions (xor-swap), so callers who
    want permutations can feed these to :func:`scramble` directly."""
    return [ScrambleOp(a, b), ScrambleOp(b, a), ScrambleOp(a, b)]


def scramble(
    program: IqpProgram, secrets: Sequence[BitVector], ops: Sequence[ScrambleOp]
) -> tuple[IqpProgram, tuple[BitVector, ...]]:
    """Apply column additions to the program and the matched secret updates.

    Op (src, dst) adds column src into column dst and adds secret entry dst
    into entry src, which preserves every row-secret parity -- and therefore
    every correlation value.  Applying the same ops twice is the identity.
    """
    for s in secrets:
        if len(s) != program.n:
            raise DimensionError("secret length differs from program width")
    chi = program.chi
    secret_bits = [s.bits for s in secrets]
    n = program.n
    for op in ops:
        if op.src >= n or op.dst >= n:
            raise DimensionError(f"op ({op.src}, {op.dst}) outside {n} columns")
        chi = add_column(chi, op.src, op.dst)
        secret_bits = [
            bits ^ (((bits >> op.dst) & 1) << op.src) for bits in secret_bits
        ]
    return (
        IqpProgram(chi, program.angles),
        tuple(BitVector(n, bits) for bits in secret_bits),
    )


def build_challenge(spec: ConstructionSpec) -> tuple[IqpProgram, SecretKey]:
    """Assemble a scrambled challenge program and its secret key.

    Secrets sit on disjoint weight-w windows; each window gets a searched
    main part at angle pi/8, then orthogonal padding rows, a row shuffle and
    a column scramble.  Expected values are recorded exactly before the
    shuffling and re-checked afterwards.
    """
    rng = np.random.default_rng(spec.seed)
    if spec.secrets * spec.weight > spec.n:
        raise ConstructionError(
            f"{spec.secrets} disjoint windows of weight {spec.weight} "
            f"do not fit in {spec.n} qubits"
        )
    rows: list[BitVector] = []
    angles: list[Angle] = []
    secrets: list[BitVector] = []
    expected: list[float] = []
    meta: list[str] = []
    for k in range(spec.secrets):
        outcome = search_main_part(spec.weight, spec.target, spec.budget, rng)
        if not outcome.target_met:
            raise ConstructionError(
                f"window {k}: best |value| {abs(outcome.result.value):.6f} "
                f"below target {spec.target} after {spec.budget} attempts",
                best=outcome,
            )
        offset = k * spec.weight
        for row in outcome.rows:
            rows.append(BitVector(spec.n, row.bits << offset))
            angles.append(PI_OVER_8)
        secrets.append(BitVector(spec.n, ((1 << spec.weight) - 1) << offset))
        expected.append(outcome.result.value)
        meta.append(f"secret {k}: backend=clifford g={outcome.result.g}")
    program = IqpProgram(BitMatrix(rows, cols=spec.n), tuple(angles))
    program = add_redundant_rows(program, secrets, spec.redundant_rows, rng)
    order = rng.permutation(program.m)
    program = IqpProgram(
        BitMatrix([program.chi.row(int(i)) for i in order], cols=spec.n),
        tuple(program.angles[int(i)] for i in order),
    )
    op_count = spec.scramble_ops
    if op_count is None:
        op_count = DEFAULT_SCRAMBLE_FACTOR * spec.n
    if op_count and spec.n >= 2:
        ops = random_scramble_ops(spec.n, op_count, rng)
        program, secrets = scramble(program, secrets, ops)
    for k, (s, e) in enumerate(zip(secrets, expected)):
        check = correlation_clifford(program, s)
        if abs(check.value - e) > 1e-9:  # pragma: no cover - scramble is exact
            raise AssertionError(f"secret {k}: value moved {e} -> {check.value}")
    return program, SecretKey(tuple(secrets), tuple(expected), tuple(meta))
