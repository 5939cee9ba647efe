"""Independent reference implementations used only by the tests.

Everything here is deliberately naive: dense vectors, explicit gate action,
no shared code paths with the package (no Walsh-Hadamard trick, no phase
tableau).  Values produced here were frozen first and the package is tested
against them, not the other way round.
"""

from __future__ import annotations

import numpy as np

from iqpverify.bitlin import BitVector
from iqpverify.model import IqpProgram


def dense_program_state(program: IqpProgram) -> np.ndarray:
    """Amplitudes of prod_p e^{i theta_p X_p} |0...0> in the Z basis.

    Each factor is applied as cos(theta) I + i sin(theta) X_mask, pairing
    index z with z XOR mask.
    """
    n = program.n
    state = np.zeros(1 << n, dtype=np.complex128)
    state[0] = 1.0
    idx = np.arange(1 << n)
    for row, angle in zip(program.chi.rows, program.angles):
        theta = angle.radians
        partner = idx ^ row.bits
        state = np.cos(theta) * state + 1j * np.sin(theta) * state[partner]
    return state


def dense_distribution(program: IqpProgram) -> np.ndarray:
    amps = dense_program_state(program)
    return np.abs(amps) ** 2


def dense_correlation(program: IqpProgram, s: BitVector) -> float:
    probs = dense_distribution(program)
    idx = np.arange(probs.size)
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & s.bits) & 1)
    return float(np.dot(probs, signs))


# -- dense Clifford gates (for validating the stabilizer representation) ----


def gate_h(state: np.ndarray, q: int) -> np.ndarray:
    idx = np.arange(state.size)
    low = state[idx & ~(1 << q)]
    high = state[idx | (1 << q)]
    sign = 1.0 - 2.0 * ((idx >> q) & 1)
    return (low + sign * high) / np.sqrt(2.0)


def gate_s_power(state: np.ndarray, q: int, power: int) -> np.ndarray:
    idx = np.arange(state.size)
    phase = 1j ** (power % 4)
    return np.where((idx >> q) & 1, phase * state, state)


def gate_cx(state: np.ndarray, c: int, t: int) -> np.ndarray:
    idx = np.arange(state.size)
    src = np.where((idx >> c) & 1, idx ^ (1 << t), idx)
    return state[src]


def gate_cz(state: np.ndarray, c: int, t: int) -> np.ndarray:
    idx = np.arange(state.size)
    both = ((idx >> c) & 1) & ((idx >> t) & 1)
    return np.where(both, -state, state)


def brute_force_span(basis: list[BitVector]) -> set[int]:
    """All XOR combinations of the basis vectors, as plain ints."""
    out = {0}
    for b in basis:
        out |= {v ^ b.bits for v in out}
    return out
