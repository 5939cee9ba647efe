"""Phase-exact stabilizer simulation in canonical form.

Tracks a state  |psi> = omega * U_C * U_H * |s>  where

* ``omega``  is an exact scalar  e^(i*pi/4*phase8) * 2^(sqrt2/2),
* ``U_C``    is a control-type Clifford (products of CX, CZ, S) described by
  how it conjugates single-qubit Paulis:
      U_C^† X_p U_C = i^gamma[p] * X^F[p] * Z^M[p]
      U_C^† Z_p U_C = Z^G[p]
  (Pauli words are written, per qubit, with the X factor left of the Z
  factor; F, M, G are bit masks),
* ``U_H``    is a layer of Hadamards on the qubits in mask ``v``,
* ``|s>``    is a computational basis state.

Control-type gates fix |0...0>, so amplitudes of the stored state are exact
eighth roots of unity times integer powers of sqrt(2) -- which is what lets
the caller read off magnitudes 2^(-g/2) without floating-point rounding.
Supported gates are S, CZ, CX and H; X and Y are never needed here because
diagonal rotations decompose into CX ladders and S powers.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError

__all__ = ["CHForm", "PHASE8_UNIT"]

PHASE8_UNIT = complex(np.exp(1j * np.pi / 4))


class CHForm:
    """Mutable stabilizer state with exact global scalar."""

    __slots__ = ("n", "F", "M", "G", "gamma", "v", "s", "phase8", "sqrt2")

    def __init__(self, n: int, *, plus: bool = False):
        if n < 1:
            raise DimensionError("need at least one qubit")
        self.n = n
        self.F = [1 << p for p in range(n)]
        self.M = [0] * n
        self.G = [1 << p for p in range(n)]
        self.gamma = [0] * n
        self.v = (1 << n) - 1 if plus else 0
        self.s = 0
        self.phase8 = 0
        self.sqrt2 = 0

    @classmethod
    def zero(cls, n: int) -> CHForm:
        """|0...0>"""
        return cls(n)

    @classmethod
    def plus(cls, n: int) -> CHForm:
        """|+...+>"""
        return cls(n, plus=True)

    @property
    def _mask(self) -> int:
        return (1 << self.n) - 1

    def _check(self, *qubits: int):
        for q in qubits:
            if not 0 <= q < self.n:
                raise DimensionError(f"qubit {q} outside 0..{self.n - 1}")

    def scale_eighth_root(self, k: int):
        """Multiply the state by e^(i*pi/4*k)."""
        self.phase8 = (self.phase8 + k) % 8

    # -- gate application (multiplies U_C on the left) ----------------------

    def apply_s(self, q: int, power: int = 1):
        """S^power on qubit q.  power=2 is Z, power=3 is S-dagger."""
        self._check(q)
        k = power % 4
        if k == 0:
            return
        self.gamma[q] = (self.gamma[q] + 3 * k) % 4
        if k & 1:
            self.M[q] ^= self.G[q]

    def apply_cz(self, c: int, t: int):
        self._check(c, t)
        if c == t:
            raise DimensionError("CZ needs two distinct qubits")
        self.M[c] ^= self.G[t]
        self.M[t] ^= self.G[c]

    def apply_cx(self, c: int, t: int):
        self._check(c, t)
        if c == t:
            raise DimensionError("CX needs two distinct qubits")
        self.gamma[c] = (
            self.gamma[c] + self.gamma[t] + 2 * ((self.M[c] & self.F[t]).bit_count() & 1)
        ) % 4
        self.F[c] ^= self.F[t]
        self.M[c] ^= self.M[t]
        self.G[t] ^= self.G[c]

    # -- right multiplication (gates sliding out of the H layer) ------------

    def _rmul_cx(self, c: int, t: int):
        for p in range(self.n):
            self.F[p] ^= ((self.F[p] >> c) & 1) << t
            self.M[p] ^= ((self.M[p] >> t) & 1) << c
            self.G[p] ^= ((self.G[p] >> t) & 1) << c

    def _rmul_cz(self, c: int, t: int):
        for p in range(self.n):
            fc = (self.F[p] >> c) & 1
            ft = (self.F[p] >> t) & 1
            if fc:
                self.M[p] ^= 1 << t
            if ft:
                self.M[p] ^= 1 << c
            if fc and ft:
                self.gamma[p] = (self.gamma[p] + 2) % 4

    def _rmul_s(self, q: int, power: int):
        k = power % 4
        if k == 0:
            return
        for p in range(self.n):
            if (self.F[p] >> q) & 1:
                self.gamma[p] = (self.gamma[p] + 3 * k) % 4
                if k & 1:
                    self.M[p] ^= 1 << q

    # -- the Hadamard update -------------------------------------------------

    def _scale_sum(self, ka: int, kb: int):
        """Multiply the state by (i^ka + i^kb) / sqrt(2)."""
        d = (kb - ka) % 4
        if d == 0:
            self.phase8 = (self.phase8 + 2 * ka) % 8
            self.sqrt2 += 1
        elif d == 1:
            self.phase8 = (self.phase8 + 2 * ka + 1) % 8
        elif d == 3:
            self.phase8 = (self.phase8 + 2 * ka + 7) % 8
        else:  # pragma: no cover - would mean the state vanished
            raise AssertionError("unitary update annihilated the state")

    def apply_h(self, a: int):
        self._check(a)
        mask = self._mask
        nv = self.v ^ mask
        Fq, Mq, Gq = self.F[a], self.M[a], self.G[a]
        # Push U_C^† X_a U_C and U_C^† Z_a U_C through the H layer onto |s>.
        t_vec = (Mq & self.v) | (Fq & nv)
        b1 = (Fq & self.v) | (Mq & nv)
        ka = (
            self.gamma[a]
            + 2 * ((Fq & Mq & self.v).bit_count() & 1)
            + 2 * ((b1 & self.s).bit_count() & 1)
        ) % 4
        t = self.s ^ t_vec
        u = self.s ^ (Gq & self.v)
        kb = 2 * (((Gq & nv) & self.s).bit_count() & 1) % 4
        if t == u:
            self._scale_sum(ka, kb)
            self.s = t
            return
        # Superposition of two distinct basis states: collapse the pair onto
        # a single pivot qubit, sliding the collapse gates into U_C.
        delta = (kb - ka) % 4
        self.phase8 = (self.phase8 + 2 * ka) % 8
        e = t ^ u
        low_free = e & nv
        if low_free:
            q0 = (low_free & -low_free).bit_length() - 1
            pivot_h = False
        else:
            q0 = (e & -e).bit_length() - 1
            pivot_h = True
        e_rest = e ^ (1 << q0)
        j = e_rest
        while j:
            jq = (j & -j).bit_length() - 1
            j &= j - 1
            if pivot_h:
                self._rmul_cx(jq, q0)  # H on both sides turns CX around
            elif (self.v >> jq) & 1:
                self._rmul_cz(q0, jq)  # H on the target turns CX into CZ
            else:
                self._rmul_cx(q0, jq)
        if (t >> q0) & 1:
            t ^= e_rest
            self.phase8 = (self.phase8 + 2 * delta) % 8
            dpp = (-delta) % 4
        else:
            dpp = delta
        z = t & ~(1 << q0)
        if not pivot_h:
            if dpp:
                self._rmul_s(q0, dpp)
            self.v |= 1 << q0
            self.s = z
        elif dpp == 0:
            self.v ^= 1 << q0
            self.s = z
        elif dpp == 2:
            self.v ^= 1 << q0
            self.s = z | (1 << q0)
        else:
            # H S^d H = e^(+-i*pi/4) * S^(-d) * H, so one S power stays behind.
            self.phase8 = (self.phase8 + (1 if dpp == 1 else 7)) % 8
            self._rmul_s(q0, 4 - dpp)
            self.s = z

    # -- readout -------------------------------------------------------------

    def amplitude_zero_exact(self) -> tuple[int, int] | None:
        """<0...0|psi> as (phase8, sqrt2) with value e^(i*pi/4*phase8)*2^(sqrt2/2).

        Returns None when the amplitude is exactly zero.
        """
        nv = self.v ^ self._mask
        if self.s & nv:
            return None
        return (self.phase8 % 8, self.sqrt2 - self.v.bit_count())

    def amplitude(self, x: int) -> complex:
        """<x|psi> as a complex float (test and debug aid)."""
        if x >> self.n:
            raise DimensionError(f"basis index {x} outside {self.n} qubits")
        g_acc, f_acc, m_acc = 0, 0, 0
        j = x
        while j:
            p = (j & -j).bit_length() - 1
            j &= j - 1
            g_acc = (g_acc + self.gamma[p] + 2 * ((m_acc & self.F[p]).bit_count() & 1)) % 4
            f_acc ^= self.F[p]
            m_acc ^= self.M[p]
        nv = self.v ^ self._mask
        if (f_acc & nv) != (self.s & nv):
            return 0j
        sign = -1.0 if (f_acc & self.s & self.v).bit_count() & 1 else 1.0
        value = PHASE8_UNIT ** self.phase8 * (1j) ** ((-g_acc) % 4) * sign
        return value * 2.0 ** ((self.sqrt2 - self.v.bit_count()) / 2.0)

    def state_vector(self) -> np.ndarray:
        """Dense 2^n amplitude array (small n only; test and debug aid)."""
        return np.array([self.amplitude(x) for x in range(1 << self.n)], dtype=complex)
