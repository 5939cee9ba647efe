"""Command-line interface.

Exit codes: 0 success (verify: accept), 1 verify reject, 2 usage error,
3 runtime failure (bad file, unreachable prover, capacity, ...).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Sequence

import numpy as np

from . import experiments
from .errors import IqpError
from .evaluators import Backend, evaluate, sample_outputs
from .keygen import ConstructionSpec, build_challenge, random_scramble_ops, scramble
from .model import (
    parse_key,
    parse_program,
    serialize_key,
    serialize_program,
)
from .protocol import ProverServer, run_verification

_BACKENDS = {
    "statevector": Backend.STATEVECTOR,
    "diagonal": Backend.DIAGONAL_EXACT,
    "mc": Backend.DIAGONAL_MC,
    "subspace": Backend.SUBSPACE,
    "clifford": Backend.CLIFFORD,
}


def _seed_or_random(seed: int | None) -> int:
    if seed is not None:
        return seed
    return int.from_bytes(os.urandom(8), "little")


def _load_program(path: str):
    with open(path, "r", encoding="ascii") as fh:
        return parse_program(fh.read())


def _load_key(path: str):
    with open(path, "r", encoding="ascii") as fh:
        return parse_key(fh.read())


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)


def _parse_address(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise IqpError(f"address {text!r} is not host:port")
    try:
        return host, int(port)
    except ValueError:
        raise IqpError(f"address {text!r} has a non-integer port")


def _parse_n_list(text: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.replace(",", " ").split()]
    except ValueError:
        raise IqpError(f"cannot parse n list {text!r}")
    if not values:
        raise IqpError("empty n list")
    return values


# ---------------------------------------------------------------------------
# subcommands


def _cmd_keygen(args) -> int:
    spec = ConstructionSpec(
        n=args.n,
        secrets=args.secrets,
        weight=args.weight,
        target=args.target,
        budget=args.budget,
        redundant_rows=args.redundant,
        scramble_ops=args.scramble_ops,
        seed=_seed_or_random(args.seed),
    )
    program, key = build_challenge(spec)
    _write_text(args.out, serialize_program(program))
    _write_text(args.key_out, serialize_key(key))
    print(
        f"challenge: n={program.n} m={program.m} secrets={key.count} "
        f"expected={' '.join(repr(e) for e in key.expected)}",
        file=sys.stderr,
    )
    return 0


def _cmd_scramble(args) -> int:
    program = _load_program(args.program)
    key = _load_key(args.key)
    rng = np.random.default_rng(_seed_or_random(args.seed))
    count = args.ops if args.ops is not None else 20 * program.n
    ops = random_scramble_ops(program.n, count, rng)
    scrambled, secrets = scramble(program, key.secrets, ops)
    new_key = type(key)(secrets, key.expected, key.meta)
    _write_text(args.out, serialize_program(scrambled))
    _write_text(args.key_out, serialize_key(new_key))
    print(f"applied {len(ops)} column ops", file=sys.stderr)
    return 0


def _cmd_eval(args) -> int:
    program = _load_program(args.program)
    if (args.secret is None) == (args.key is None):
        raise IqpError("give exactly one of --secret or --key")
    if args.secret is not None:
        from .bitlin import BitVector

        secret = BitVector.from_string(args.secret)
    else:
        key = _load_key(args.key)
        if not 0 <= args.index < key.count:
            raise IqpError(f"--index {args.index} outside 0..{key.count - 1}")
        secret = key.secrets[args.index]
    backend = _BACKENDS[args.backend]
    rng = None
    samples = None
    if backend is Backend.DIAGONAL_MC:
        rng = np.random.default_rng(_seed_or_random(args.seed))
        samples = args.samples
    result = evaluate(
        program, secret, backend, samples=samples, rng=rng, delta=args.delta
    )
    print(f"value {result.value!r}")
    print(f"backend {result.backend.value}")
    print(f"error_bound {result.error_bound!r}")
    if result.g is not None:
        print(f"g {result.g}")
    if result.samples_used is not None:
        print(f"samples {result.samples_used}")
    return 0


def _cmd_sample(args) -> int:
    program = _load_program(args.program)
    rng = np.random.default_rng(_seed_or_random(args.seed))
    draws = sample_outputs(program, args.count, rng)
    _write_text(args.out, "".join(x.to01() + "\n" for x in draws))
    return 0


def _cmd_serve(args) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    leaked = _load_key(args.leak_key) if args.leak_key else None
    host, port = _parse_address(args.bind)
    server = ProverServer(
        address=(host, port),
        prover=args.prover,
        leaked_key=leaked,
        seed=_seed_or_random(args.seed),
        timeout=args.timeout,
    )
    bound_host, bound_port = server.address
    print(f"serving {args.prover} prover on {bound_host}:{bound_port}", flush=True)
    server.start()
    try:
        while True:
            server._thread.join(timeout=1.0)
    except KeyboardInterrupt:
        pass
    finally:
        server.close()
    return 0


def _cmd_verify(args) -> int:
    program = _load_program(args.program)
    key = _load_key(args.key)
    report = run_verification(
        _parse_address(args.address),
        program,
        key,
        args.samples,
        delta=args.delta,
        timeout=args.timeout,
        reveal_verdict=args.reveal_verdict,
    )
    for k, v in enumerate(report.per_secret):
        status = "pass" if v.passed else "FAIL"
        print(
            f"secret {k}: expected={v.expected:+.6f} observed={v.observed:+.6f} "
            f"deviation={v.deviation:.6f} {status}"
        )
    print(f"threshold {report.epsilon:.6f} over {report.samples_used} samples")
    print(f"verdict {'accept' if report.accept else 'reject'}")
    return 0 if report.accept else 1


def _cmd_exp_fig1a(args) -> int:
    report = experiments.exp_fig1a(
        _parse_n_list(args.n), args.count, _seed_or_random(args.seed)
    )
    _write_text(args.out, report.to_csv())
    return 0


def _cmd_exp_fig1b(args) -> int:
    report = experiments.exp_fig1b(args.count, args.n, _seed_or_random(args.seed))
    _write_text(args.out, report.to_csv())
    return 0


def _cmd_exp_anticoncentration(args) -> int:
    report = experiments.exp_anticoncentration(
        _parse_n_list(args.n),
        args.circuits,
        args.secrets_per_circuit,
        _seed_or_random(args.seed),
    )
    _write_text(args.out, report.to_csv())
    return 0


def _cmd_exp_parseval(args) -> int:
    report = experiments.exp_parseval(
        args.n, args.instances, _seed_or_random(args.seed)
    )
    _write_text(args.out, report.to_csv())
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="rng seed (default: random)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iqp-verify",
        description="Hidden-parity verification of sampling devices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="construct a scrambled challenge and key")
    p.add_argument("--n", type=int, required=True, help="qubit count")
    p.add_argument("--secrets", type=int, default=1)
    p.add_argument("--weight", type=int, default=2, help="secret support weight")
    p.add_argument("--target", type=float, default=0.7, help="minimum |value|")
    p.add_argument("--budget", type=int, default=200, help="search attempts")
    p.add_argument("--redundant", type=int, default=8, help="padding row count")
    p.add_argument(
        "--scramble-ops", type=int, default=None, help="column ops (default 20*n)"
    )
    _add_seed(p)
    p.add_argument("--out", required=True, help="program file ('-' for stdout)")
    p.add_argument("--key-out", required=True, help="key file ('-' for stdout)")
    p.set_defaults(fn=_cmd_keygen)

    p = sub.add_parser("scramble", help="re-scramble an existing challenge")
    p.add_argument("--program", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--ops", type=int, default=None, help="column ops (default 20*n)")
    _add_seed(p)
    p.add_argument("--out", required=True)
    p.add_argument("--key-out", required=True)
    p.set_defaults(fn=_cmd_scramble)

    p = sub.add_parser("eval", help="compute one correlation value")
    p.add_argument("--program", required=True)
    p.add_argument("--secret", default=None, help="bit string, e.g. 1100")
    p.add_argument("--key", default=None, help="key file instead of --secret")
    p.add_argument("--index", type=int, default=0, help="secret index in the key")
    p.add_argument("--backend", choices=sorted(_BACKENDS), default="statevector")
    p.add_argument(
        "--samples", type=int, default=None, help="mc sample count (mc backend)"
    )
    p.add_argument("--delta", type=float, default=0.05, help="mc failure budget")
    _add_seed(p)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("sample", help="draw output strings from a program")
    p.add_argument("--program", required=True)
    p.add_argument("--count", type=int, required=True)
    _add_seed(p)
    p.add_argument("--out", default=None, help="default: stdout")
    p.set_defaults(fn=_cmd_sample)

    p = sub.add_parser("serve", help="run a prover server")
    p.add_argument("--bind", default="127.0.0.1:0", help="host:port (port 0 = any)")
    p.add_argument(
        "--prover", choices=["honest", "uniform", "leak"], default="honest"
    )
    p.add_argument("--leak-key", default=None, help="key file for the leak prover")
    p.add_argument("--timeout", type=float, default=30.0)
    _add_seed(p)
    p.set_defaults(fn=_cmd_serve)

    p = sub.add_parser("verify", help="challenge a remote prover and judge")
    p.add_argument("--address", required=True, help="host:port of the prover")
    p.add_argument("--program", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument(
        "--reveal-verdict",
        action="store_true",
        help="send the verdict back to the prover (demo only; leaks one bit)",
    )
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("exp-fig1a", help="level fractions vs n (pi/8 ensemble)")
    p.add_argument("--n", required=True, help="list, e.g. '2,3,4' or '2 3 4'")
    p.add_argument("--count", type=int, default=1000)
    _add_seed(p)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_exp_fig1a)

    p = sub.add_parser("exp-fig1b", help="level histogram at fixed n")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--count", type=int, default=500)
    _add_seed(p)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_exp_fig1b)

    p = sub.add_parser(
        "exp-anticoncentration", help="second moment and tails, two-local ensemble"
    )
    p.add_argument("--n", required=True, help="list, e.g. '6,8,10'")
    p.add_argument("--circuits", type=int, default=2000)
    p.add_argument("--secrets-per-circuit", type=int, default=1)
    _add_seed(p)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_exp_anticoncentration)

    p = sub.add_parser("exp-parseval", help="collision identity check")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--instances", type=int, default=50)
    _add_seed(p)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_exp_parseval)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except IqpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())
