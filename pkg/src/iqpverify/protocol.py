"""Single-round verification over TCP.

One exchange per connection, newline-delimited JSON.  The verifier connects,
sends a challenge (matrix rows, angles, sample count), reads back sample bit
strings and judges them locally against its secret key.  No secret string or
expected value ever goes on the wire; a verdict is only sent back when the
verifier explicitly opts in.

Message shapes::

    {"type": "challenge", "session": ..., "n": ..., "rows": [...],
     "angles": [[num, den], ...], "t": ...}
    {"type": "samples", "session": ..., "bits": ["0101...", ...]}
    {"type": "error", "code": ..., "detail": ...}
    {"type": "verdict", "session": ..., "accept": ..., ...}   (opt-in only)
"""

from __future__ import annotations

import json
import logging
import math
import socket
import socketserver
import threading
import uuid
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bitlin import BitMatrix, BitVector, dot
from .errors import ProtocolError, ValidationError
from .evaluators import STATEVECTOR_CAP, sample_outputs
from .model import Angle, IqpProgram, SecretKey

__all__ = [
    "MAX_MESSAGE_BYTES",
    "ChallengeMsg",
    "SamplesMsg",
    "SecretVerdict",
    "VerdictReport",
    "WeakSignalWarning",
    "acceptance_threshold",
    "judge",
    "prover_honest",
    "prover_uniform",
    "prover_leak",
    "ProverServer",
    "request",
    "run_verification",
]

log = logging.getLogger(__name__)

MAX_MESSAGE_BYTES = 64 * 1024 * 1024
_RECV_CHUNK = 1 << 16


class WeakSignalWarning(UserWarning):
    """An expected value sits too close to zero for the chosen threshold."""


# ---------------------------------------------------------------------------
# messages


def _encode(payload: dict) -> bytes:
    return json.dumps(payload, separators=(",", ":")).encode("ascii") + b"\n"


def _recv_line(sock: socket.socket) -> bytes:
    """Read one newline-terminated line; bytes past the newline are ignored."""
    buf = bytearray()
    while True:
        try:
            chunk = sock.recv(_RECV_CHUNK)
        except TimeoutError:
            raise ProtocolError("timeout", "peer sent no complete line in time")
        if not chunk:
            if buf:
                raise ProtocolError("closed", "connection closed mid-line")
            raise ProtocolError("closed", "connection closed before any data")
        buf += chunk
        if len(buf) > MAX_MESSAGE_BYTES:
            raise ProtocolError(
                "too-large", f"line exceeds {MAX_MESSAGE_BYTES} bytes"
            )
        if b"\n" in chunk:
            break
    line, _, _ = bytes(buf).partition(b"\n")
    return line


def _decode_line(line: bytes) -> dict:
    try:
        payload = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError("bad-json", f"undecodable message: {exc}")
    if not isinstance(payload, dict):
        raise ProtocolError("bad-json", "message is not a JSON object")
    return payload


def _require_session(payload: dict) -> str:
    session = payload.get("session")
    if not isinstance(session, str) or not session:
        raise ProtocolError("bad-session", "session must be a non-empty string")
    return session


@dataclass(frozen=True)
class ChallengeMsg:
    """Verifier-to-prover challenge: the program plus a sample count."""

    session: str
    n: int
    rows: tuple[str, ...]
    angles: tuple[tuple[int, int], ...]
    samples_requested: int

    @classmethod
    def from_program(
        cls, program: IqpProgram, samples: int, session: str | None = None
    ) -> "ChallengeMsg":
        if samples < 1:
            raise ValidationError("must request at least one sample")
        return cls(
            session=session or uuid.uuid4().hex,
            n=program.n,
            rows=tuple(row.to01() for row in program.chi.rows),
            angles=tuple((a.num, a.den) for a in program.angles),
            samples_requested=samples,
        )

    @classmethod
    def from_payload(cls, payload: dict) -> "ChallengeMsg":
        if payload.get("type") != "challenge":
            raise ProtocolError("bad-type", f"expected challenge, got {payload.get('type')!r}")
        session = _require_session(payload)
        n = payload.get("n")
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ProtocolError("bad-n", "n must be a positive integer")
        rows = payload.get("rows")
        if not isinstance(rows, list) or not rows:
            raise ProtocolError("bad-row", "rows must be a non-empty list")
        for r in rows:
            if not isinstance(r, str) or len(r) != n or set(r) - {"0", "1"}:
                raise ProtocolError("bad-row", f"bad row {r!r} for n={n}")
            if "1" not in r:
                raise ProtocolError("bad-row", "all-zero row")
        angles = payload.get("angles")
        if not isinstance(angles, list) or len(angles) != len(rows):
            raise ProtocolError("bad-angle", "need one [num, den] pair per row")
        pairs = []
        for a in angles:
            if (
                not isinstance(a, list)
                or len(a) != 2
                or not all(isinstance(x, int) and not isinstance(x, bool) for x in a)
            ):
                raise ProtocolError("bad-angle", f"bad angle entry {a!r}")
            if a[1] <= 0:
                raise ProtocolError("bad-angle", f"denominator {a[1]} not positive")
            pairs.append((a[0], a[1]))
        t = payload.get("t")
        if not isinstance(t, int) or isinstance(t, bool) or t < 1:
            raise ProtocolError("bad-count", "t must be a positive integer")
        return cls(session, n, tuple(rows), tuple(pairs), t)

    def to_payload(self) -> dict:
        return {
            "type": "challenge",
            "session": self.session,
            "n": self.n,
            "rows": list(self.rows),
            "angles": [[num, den] for num, den in self.angles],
            "t": self.samples_requested,
        }

    def encode(self) -> bytes:
        return _encode(self.to_payload())

    def to_program(self) -> IqpProgram:
        rows = [BitVector.from_string(r) for r in self.rows]
        angles = tuple(Angle(num, den) for num, den in self.angles)
        return IqpProgram(BitMatrix(rows, cols=self.n), angles)


@dataclass(frozen=True)
class SamplesMsg:
    """Prover-to-verifier reply: one bit string per requested sample."""

    session: str
    bits: tuple[str, ...]

    @classmethod
    def from_payload(cls, payload: dict) -> "SamplesMsg":
        if payload.get("type") != "samples":
            raise ProtocolError("bad-type", f"expected samples, got {payload.get('type')!r}")
        session = _require_session(payload)
        bits = payload.get("bits")
        if not isinstance(bits, list) or not bits:
            raise ProtocolError("bad-bits", "bits must be a non-empty list")
        for b in bits:
            if not isinstance(b, str) or not b or set(b) - {"0", "1"}:
                raise ProtocolError("bad-bits", f"bad sample {b!r}")
        return cls(session, tuple(bits))

    def to_payload(self) -> dict:
        return {"type": "samples", "session": self.session, "bits": list(self.bits)}

    def encode(self) -> bytes:
        return _encode(self.to_payload())

    def check_against(self, challenge: ChallengeMsg) -> None:
        """Reject structurally wrong replies before any judging happens."""
        if self.session != challenge.session:
            raise ProtocolError(
                "bad-session",
                f"reply session {self.session!r} != {challenge.session!r}",
            )
        if len(self.bits) != challenge.samples_requested:
            raise ProtocolError(
                "count-mismatch",
                f"got {len(self.bits)} samples, requested {challenge.samples_requested}",
            )
        for b in self.bits:
            if len(b) != challenge.n:
                raise ProtocolError(
                    "bad-bits", f"sample length {len(b)} != n={challenge.n}"
                )

    def to_vectors(self, n: int) -> list[BitVector]:
        return [BitVector.from_string(b) for b in self.bits]


def _encode_error(exc: ProtocolError) -> bytes:
    return _encode({"type": "error", "code": exc.code, "detail": exc.detail})


# ---------------------------------------------------------------------------
# judging


@dataclass(frozen=True)
class SecretVerdict:
    """Per-secret outcome of judging a batch of samples."""

    expected: float
    observed: float
    deviation: float
    passed: bool


@dataclass(frozen=True)
class VerdictReport:
    per_secret: tuple[SecretVerdict, ...]
    accept: bool
    samples_used: int
    epsilon: float

    def to_payload(self, session: str) -> dict:
        return {
            "type": "verdict",
            "session": session,
            "accept": self.accept,
            "epsilon": self.epsilon,
            "samples": self.samples_used,
            "per_secret": [
                {
                    "expected": v.expected,
                    "observed": v.observed,
                    "deviation": v.deviation,
                    "passed": v.passed,
                }
                for v in self.per_secret
            ],
        }


def acceptance_threshold(key: SecretKey, delta: float, samples: int) -> float:
    """Deviation allowance sqrt(2 ln(2K/delta) / T) for K secrets, T samples.

    A union bound over the K per-secret checks keeps the total false-reject
    probability of an honest device below delta.  Warns when an expected
    value is so small that the pass band around it covers zero twice over.
    """
    if not 0.0 < delta < 1.0:
        raise ValidationError(f"delta {delta} outside (0, 1)")
    if samples < 1:
        raise ValidationError("need at least one sample")
    eps = math.sqrt(2.0 * math.log(2.0 * key.count / delta) / samples)
    for k, e in enumerate(key.expected):
        if abs(e) < 2.0 * eps:
            warnings.warn(
                f"secret {k}: |expected|={abs(e):.4f} is below twice the "
                f"threshold {eps:.4f}; the check has little power",
                WeakSignalWarning,
                stacklevel=2,
            )
    return eps


def judge(
    key: SecretKey, samples: Sequence[BitVector], epsilon: float
) -> VerdictReport:
    """Compare empirical parity correlations against the key's expectations.

    For each secret s the observed value is the sample mean of (-1)^(s.x);
    the batch is accepted only if every secret's deviation from its expected
    value is at most ``epsilon``.
    """
    if not samples:
        raise ValidationError("cannot judge an empty batch")
    if epsilon <= 0.0:
        raise ValidationError("epsilon must be positive")
    for x in samples:
        if len(x) != key.n:
            raise ValidationError(f"sample length {len(x)} != key n={key.n}")
    total = len(samples)
    verdicts = []
    for s, expected in zip(key.secrets, key.expected):
        agree = sum(1 for x in samples if not dot(s, x))
        observed = (2 * agree - total) / total
        deviation = abs(observed - expected)
        verdicts.append(
            SecretVerdict(expected, observed, deviation, deviation <= epsilon)
        )
    return VerdictReport(
        per_secret=tuple(verdicts),
        accept=all(v.passed for v in verdicts),
        samples_used=total,
        epsilon=epsilon,
    )


# ---------------------------------------------------------------------------
# provers


def prover_honest(
    challenge: ChallengeMsg,
    rng: np.random.Generator,
    cap: int = STATEVECTOR_CAP,
) -> SamplesMsg:
    """Simulate the program exactly and sample its output distribution."""
    if challenge.n > cap:
        raise ProtocolError(
            "capacity", f"cannot simulate n={challenge.n} (cap {cap})"
        )
    program = challenge.to_program()
    draws = sample_outputs(program, challenge.samples_requested, rng)
    return SamplesMsg(challenge.session, tuple(x.to01() for x in draws))


def prover_uniform(
    challenge: ChallengeMsg, rng: np.random.Generator
) -> SamplesMsg:
    """Ignore the program and return uniform random bit strings."""
    table = rng.integers(0, 2, size=(challenge.samples_requested, challenge.n))
    bits = tuple("".join("1" if b else "0" for b in row) for row in table)
    return SamplesMsg(challenge.session, bits)


def prover_leak(
    challenge: ChallengeMsg,
    leaked: SecretKey,
    rng: np.random.Generator,
) -> SamplesMsg:
    """Cheat using one leaked secret: match its parity bias and nothing else.

    Each sample is uniform conditioned on the parity against the leaked
    secret, taken orthogonal with probability (1 + expected) / 2.  With a
    single hidden secret this reproduces the judged statistic exactly; it
    cannot satisfy two independent secrets at once, which is what
    multi-secret challenges exploit.
    """
    if leaked.count != 1:
        raise ProtocolError(
            "unsupported", "leak prover plays exactly one leaked secret"
        )
    s = leaked.secrets[0]
    if len(s) != challenge.n:
        raise ProtocolError(
            "bad-n", f"leaked secret has {len(s)} bits, challenge n={challenge.n}"
        )
    if s.is_zero():
        raise ProtocolError("unsupported", "leaked secret has empty support")
    p_orth = (1.0 + leaked.expected[0]) / 2.0
    n = challenge.n
    t = challenge.samples_requested
    flip = 1 << s.support()[0]
    want_orth = rng.random(size=t) < p_orth
    if n <= 63:
        draws = rng.integers(0, 1 << n, size=t, dtype=np.uint64)
        masked = np.bitwise_and(draws, np.uint64(s.bits))
        parity = np.bitwise_count(masked).astype(np.int64) & 1
        fix = parity == want_orth.astype(np.int64)
        draws = np.where(fix, np.bitwise_xor(draws, np.uint64(flip)), draws)
        values = [int(v) for v in draws]
    else:
        values = []
        for orth in want_orth:
            x = 0
            for k in range(0, n, 32):
                width = min(32, n - k)
                x |= int(rng.integers(0, 1 << width)) << k
            if ((x & s.bits).bit_count() & 1) == (1 if orth else 0):
                x ^= flip
            values.append(x)
    bits = tuple(BitVector(n, v).to01() for v in values)
    return SamplesMsg(challenge.session, bits)


# ---------------------------------------------------------------------------
# transport

_PROVER_BUILTINS = {"honest", "uniform", "leak"}


class ProverServer:
    """Threaded TCP prover.  One challenge per connection, stateless.

    Each connection gets its own rng stream derived from (seed, index), so a
    fixed seed gives reproducible batches regardless of arrival order.  After
    replying, the handler waits briefly for an optional verdict line (sent
    only by verifiers running with verdict reveal switched on) and records it.
    """

    def __init__(
        self,
        address: tuple[str, int] = ("127.0.0.1", 0),
        prover: str = "honest",
        leaked_key: SecretKey | None = None,
        seed: int = 0,
        timeout: float = 30.0,
        cap: int = STATEVECTOR_CAP,
    ):
        if prover not in _PROVER_BUILTINS:
            raise ValidationError(f"unknown prover {prover!r}")
        if prover == "leak" and leaked_key is None:
            raise ValidationError("leak prover needs a leaked key")
        self._prover_name = prover
        self._leaked_key = leaked_key
        self._seed = seed
        self._timeout = timeout
        self._cap = cap
        self._counter = 0
        self._lock = threading.Lock()
        self.verdicts: list[dict] = []
        outer = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self):
                outer._handle(self.request)

        self._tcp = socketserver.ThreadingTCPServer(
            address, Handler, bind_and_activate=True
        )
        self._tcp.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._tcp.server_address[:2]
        return host, port

    def _next_stream(self) -> int:
        with self._lock:
            idx = self._counter
            self._counter += 1
        return idx

    def _run_prover(self, challenge: ChallengeMsg, idx: int) -> SamplesMsg:
        rng = np.random.default_rng([self._seed, idx])
        if self._prover_name == "honest":
            return prover_honest(challenge, rng, cap=self._cap)
        if self._prover_name == "uniform":
            return prover_uniform(challenge, rng)
        return prover_leak(challenge, self._leaked_key, rng)

    def _handle(self, sock: socket.socket) -> None:
        sock.settimeout(self._timeout)
        idx = self._next_stream()
        try:
            try:
                payload = _decode_line(_recv_line(sock))
                challenge = ChallengeMsg.from_payload(payload)
                reply = self._run_prover(challenge, idx)
            except ProtocolError as exc:
                log.info("connection %d: %s (%s)", idx, exc.code, exc.detail)
                sock.sendall(_encode_error(exc))
                return
            except Exception as exc:  # noqa: BLE001 - report, never crash the server
                log.exception("connection %d: internal failure", idx)
                sock.sendall(_encode_error(ProtocolError("internal", str(exc))))
                return
            sock.sendall(reply.encode())
            log.info(
                "connection %d: served %d samples (n=%d)",
                idx,
                len(reply.bits),
                challenge.n,
            )
            self._await_verdict(sock, idx)
        except OSError:
            log.info("connection %d: transport dropped", idx)

    def _await_verdict(self, sock: socket.socket, idx: int) -> None:
        try:
            line = _recv_line(sock)
        except (ProtocolError, OSError):
            return
        try:
            payload = _decode_line(line)
        except ProtocolError:
            return
        if payload.get("type") == "verdict":
            with self._lock:
                self.verdicts.append(payload)
            log.info(
                "connection %d: verifier revealed verdict accept=%s",
                idx,
                payload.get("accept"),
            )

    def start(self) -> "ProverServer":
        self._thread = threading.Thread(
            target=self._tcp.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
        )
        self._thread.start()
        return self

    def close(self) -> None:
        self._tcp.shutdown()
        self._tcp.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    def __enter__(self) -> "ProverServer":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.close()


def _exchange(
    sock: socket.socket, challenge: ChallengeMsg
) -> SamplesMsg:
    sock.sendall(challenge.encode())
    payload = _decode_line(_recv_line(sock))
    if payload.get("type") == "error":
        raise ProtocolError(
            str(payload.get("code", "unknown")), str(payload.get("detail", ""))
        )
    reply = SamplesMsg.from_payload(payload)
    reply.check_against(challenge)
    return reply


def request(
    address: tuple[str, int],
    program: IqpProgram,
    samples: int,
    timeout: float = 30.0,
    session: str | None = None,
) -> SamplesMsg:
    """Fetch one batch of samples for ``program`` from a remote prover."""
    challenge = ChallengeMsg.from_program(program, samples, session)
    with socket.create_connection(address, timeout=timeout) as sock:
        sock.settimeout(timeout)
        return _exchange(sock, challenge)


def run_verification(
    address: tuple[str, int],
    program: IqpProgram,
    key: SecretKey,
    samples: int,
    delta: float = 0.05,
    timeout: float = 30.0,
    reveal_verdict: bool = False,
    session: str | None = None,
) -> VerdictReport:
    """One full verification round against a remote prover.

    Sends the challenge, validates the reply shape, judges locally with the
    union-bound threshold for ``delta``, and keeps the verdict to itself
    unless ``reveal_verdict`` is set (a demo affordance: revealing verdicts
    hands a cheating prover a feedback bit per round).
    """
    challenge = ChallengeMsg.from_program(program, samples, session)
    epsilon = acceptance_threshold(key, delta, samples)
    with socket.create_connection(address, timeout=timeout) as sock:
        sock.settimeout(timeout)
        reply = _exchange(sock, challenge)
        report = judge(key, reply.to_vectors(program.n), epsilon)
        if reveal_verdict:
            sock.sendall(_encode(report.to_payload(challenge.session)))
    return report
