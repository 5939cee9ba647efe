"""Challenge construction and scrambling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iqpverify.bitlin import BitMatrix, BitVector, dot
from iqpverify.errors import ConstructionError, ValidationError
from iqpverify.evaluators import correlation_statevector
from iqpverify.keygen import (
    ConstructionSpec,
    ScrambleOp,
    add_redundant_rows,
    build_challenge,
    random_2local,
    random_program,
    random_scramble_ops,
    scramble,
    search_main_part,
    swap_column_ops,
)
from iqpverify.model import PI_OVER_8, Angle, IqpProgram

SQRT_HALF = 2**-0.5


class TestRandomEnsembles:
    def test_random_program_shape_and_determinism(self):
        a = random_program(6, 9, "pi8", np.random.default_rng(3))
        b = random_program(6, 9, "pi8", np.random.default_rng(3))
        assert a == b
        assert a.n == 6 and a.m == 9
        assert a.uniform_angle() == PI_OVER_8

    def test_uniform_pi8_policy(self):
        p = random_program(5, 40, "uniform-pi8", np.random.default_rng(0))
        assert all(a.multiple_of_pi8() is not None for a in p.angles)
        assert len({a.num for a in p.angles}) > 1  # actually varies

    def test_fixed_angle_policy(self):
        p = random_program(4, 3, Angle(1, 3), np.random.default_rng(0))
        assert p.uniform_angle() == Angle(1, 3)

    def test_unknown_policy(self):
        with pytest.raises(ValidationError):
            random_program(4, 3, "bogus", np.random.default_rng(0))

    def test_rng_is_required(self):
        with pytest.raises(ValidationError):
            random_program(4, 3)

    def test_two_local_rows(self):
        p = random_2local(6, np.random.default_rng(1))
        assert p.n == 6 and p.m >= 1
        for row, angle in zip(p.chi.rows, p.angles):
            assert row.weight() in (1, 2)
            assert angle.multiple_of_pi8() in range(1, 8)  # zero rows omitted
        assert p.m <= 6 * 7 // 2  # pairs plus singles

    def test_two_local_determinism(self):
        a = random_2local(5, np.random.default_rng(9))
        b = random_2local(5, np.random.default_rng(9))
        assert a == b


class TestSearch:
    def test_weight_one_hits_sqrt_half(self):
        out = search_main_part(1, 0.7, 10, np.random.default_rng(0))
        assert out.target_met
        assert out.result.value == pytest.approx(SQRT_HALF, abs=1e-12)
        assert out.result.g == 1
        assert out.rows == (BitVector.from_string("1"),)

    def test_weight_two_cannot_beat_sqrt_half(self):
        out = search_main_part(2, 0.99, 50, np.random.default_rng(0))
        assert not out.target_met
        assert abs(out.result.value) == pytest.approx(SQRT_HALF, abs=1e-12)

    def test_weight_two_meets_moderate_target(self):
        out = search_main_part(2, 0.7, 50, np.random.default_rng(0))
        assert out.target_met
        assert abs(out.result.value) >= 0.7

    def test_rows_have_odd_overlap_with_secret(self):
        out = search_main_part(3, 0.5, 30, np.random.default_rng(5))
        assert out.secret == BitVector.from_string("111")
        for row in out.rows:
            assert dot(row, out.secret) == 1

    def test_deterministic(self):
        a = search_main_part(3, 0.7, 30, np.random.default_rng(11))
        b = search_main_part(3, 0.7, 30, np.random.default_rng(11))
        assert a == b

    def test_validation(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValidationError):
            search_main_part(0, 0.5, 10, rng)
        with pytest.raises(ValidationError):
            search_main_part(2, 0.0, 10, rng)
        with pytest.raises(ValidationError):
            search_main_part(2, 0.5, 0, rng)


class TestRedundantRows:
    def test_appended_rows_are_orthogonal(self):
        rng = np.random.default_rng(4)
        program = random_program(6, 4, "pi8", rng)
        secrets = [BitVector.from_string("110000"), BitVector.from_string("001100")]
        grown = add_redundant_rows(program, secrets, 10, rng)
        assert grown.m == 14
        assert grown.chi.rows[:4] == program.chi.rows
        for row in grown.chi.rows[4:]:
            assert not row.is_zero()
            assert all(dot(row, s) == 0 for s in secrets)
            # angle matches the program's shared angle
        assert grown.angles[4:] == (PI_OVER_8,) * 10

    def test_values_do_not_move(self):
        rng = np.random.default_rng(8)
        program = random_program(7, 5, "uniform-pi8", rng)
        s = BitVector.from_string("1010000")
        before = correlation_statevector(program, s).value
        grown = add_redundant_rows(program, [s], 12, rng)
        after = correlation_statevector(grown, s).value
        assert after == pytest.approx(before, abs=1e-12)

    def test_full_rank_secrets_rejected(self):
        rng = np.random.default_rng(0)
        program = random_program(2, 2, "pi8", rng)
        secrets = [BitVector.from_string("10"), BitVector.from_string("01")]
        with pytest.raises(ConstructionError):
            add_redundant_rows(program, secrets, 1, rng)

    def test_explicit_angle(self):
        rng = np.random.default_rng(2)
        program = random_program(4, 2, "pi8", rng)
        grown = add_redundant_rows(
            program, [BitVector.from_string("1100")], 3, rng, angle=Angle(1, 4)
        )
        assert grown.angles[2:] == (Angle(1, 4),) * 3

    def test_zero_count_is_identity(self):
        rng = np.random.default_rng(2)
        program = random_program(4, 2, "pi8", rng)
        assert add_redundant_rows(program, [BitVector(4, 3)], 0, rng) == program


class TestScramble:
    def test_worked_example(self):
        program = IqpProgram(
            BitMatrix.from_strings(["1100", "0101"]), (PI_OVER_8,) * 2
        )
        scrambled, secrets = scramble(
            program, [BitVector.from_string("0010")], [ScrambleOp(0, 2)]
        )
        assert scrambled.chi == BitMatrix.from_strings(["1110", "0101"])
        assert secrets == (BitVector.from_string("1010"),)

    def test_op_validation(self):
        with pytest.raises(ValidationError):
            ScrambleOp(1, 1)
        with pytest.raises(ValidationError):
            ScrambleOp(-1, 0)

    @settings(max_examples=60, deadline=None)
    @given(
        st.integers(2, 10),
        st.integers(1, 6),
        st.integers(1, 3),
        st.integers(0, 40),
        st.integers(0, 2**32 - 1),
    )
    def test_parities_preserved(self, n, m, k, op_count, seed):
        rng = np.random.default_rng(seed)
        program = random_program(n, m, "pi8", rng)
        secrets = [BitVector(n, int(rng.integers(0, 1 << n))) for _ in range(k)]
        ops = random_scramble_ops(n, op_count, rng)
        scrambled, new_secrets = scramble(program, secrets, ops)
        for s_old, s_new in zip(secrets, new_secrets):
            for r_old, r_new in zip(program.chi.rows, scrambled.chi.rows):
                assert dot(r_old, s_old) == dot(r_new, s_new)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 8), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_replay_is_involution(self, n, m, seed):
        rng = np.random.default_rng(seed)
        program = random_program(n, m, "pi8", rng)
        s = BitVector(n, int(rng.integers(0, 1 << n)))
        ops = random_scramble_ops(n, 15, rng)
        undo = ops + list(reversed(ops))
        back, secrets = scramble(program, [s], undo)
        assert back == program and secrets == (s,)

    def test_swap_column_ops(self):
        program = IqpProgram(
            BitMatrix.from_strings(["100", "010", "110"]), (PI_OVER_8,) * 3
        )
        s = BitVector.from_string("101")
        swapped, secrets = scramble(program, [s], swap_column_ops(0, 2))
        assert swapped.chi == BitMatrix.from_strings(["001", "010", "011"])
        assert secrets == (BitVector.from_string("101"),)

        s2 = BitVector.from_string("100")
        _, secrets2 = scramble(program, [s2], swap_column_ops(0, 2))
        assert secrets2 == (BitVector.from_string("001"),)

    def test_scramble_ops_need_two_columns(self):
        with pytest.raises(ValidationError):
            random_scramble_ops(1, 3, np.random.default_rng(0))


class TestBuildChallenge:
    def test_deterministic(self):
        spec = ConstructionSpec(n=9, secrets=2, weight=2, seed=13)
        a_prog, a_key = build_challenge(spec)
        b_prog, b_key = build_challenge(spec)
        assert a_prog == b_prog
        assert a_key == b_key

    def test_key_matches_program(self):
        spec = ConstructionSpec(n=8, secrets=2, weight=2, redundant_rows=5, seed=3)
        program, key = build_challenge(spec)
        assert key.count == 2
        for s, e in zip(key.secrets, key.expected):
            assert abs(e) >= spec.target
            got = correlation_statevector(program, s).value
            assert got == pytest.approx(e, abs=1e-9)

    def test_windows_must_fit(self):
        with pytest.raises(ConstructionError):
            build_challenge(ConstructionSpec(n=3, secrets=2, weight=2, seed=0))

    def test_unreachable_target_reports_best(self):
        spec = ConstructionSpec(n=4, secrets=1, weight=2, target=0.9, budget=25, seed=0)
        with pytest.raises(ConstructionError) as err:
            build_challenge(spec)
        best = err.value.best
        assert best is not None and not best.target_met
        assert abs(best.result.value) == pytest.approx(SQRT_HALF, abs=1e-12)

    def test_scramble_disabled(self):
        spec = ConstructionSpec(n=6, secrets=1, weight=2, scramble_ops=0, seed=5)
        program, key = build_challenge(spec)
        # without scrambling the secret is still the raw window
        assert key.secrets[0] == BitVector.from_string("110000")

    def test_secret_count_and_distinctness(self):
        spec = ConstructionSpec(n=12, secrets=3, weight=2, seed=21)
        _, key = build_challenge(spec)
        assert key.count == 3
        assert len(set(key.secrets)) == 3
        assert all(not s.is_zero() for s in key.secrets)

    def test_meta_records_backend(self):
        _, key = build_challenge(ConstructionSpec(n=6, seed=2))
        assert any("clifford" in line for line in key.meta)

    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            ConstructionSpec(n=0)
        with pytest.raises(ValidationError):
            ConstructionSpec(n=4, target=1.5)
        with pytest.raises(ValidationError):
            ConstructionSpec(n=4, scramble_ops=-1)
