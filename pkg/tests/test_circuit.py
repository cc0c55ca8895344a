import math

import numpy as np
import pytest

from stochdd import dd
from stochdd.circuit import BUILTINS, Circuit, GateOp, generate_ghz, generate_qft, validate
from stochdd.errors import CircuitValidationError, InvalidArgumentError
from stochdd.oracle import DenseState, dense_run

from _helpers import dd_run

R2 = 1 / math.sqrt(2)


def test_ghz_ops():
    c = generate_ghz(3)
    assert c.ops == (
        GateOp("H", targets=(0,)),
        GateOp("CX", targets=(1,), controls=(0,)),
        GateOp("CX", targets=(2,), controls=(1,)),
    )


@pytest.mark.parametrize("n,expected", [(1, [R2, R2]), (2, [R2, 0, 0, R2])])
def test_ghz_small_states(n, expected):
    np.testing.assert_allclose(dd.to_vector(dd_run(generate_ghz(n))), expected, atol=1e-15)


def test_ghz4_amplitudes():
    s = dd_run(generate_ghz(4))
    for b in range(16):
        bits = format(b, "04b")
        want = R2 if bits in ("0000", "1111") else 0
        assert abs(dd.amplitude(s, bits) - want) < 1e-12


@pytest.mark.parametrize("gen", [generate_ghz, generate_qft])
def test_generators_reject_zero(gen):
    with pytest.raises(InvalidArgumentError):
        gen(0)


def test_qft1_is_hadamard():
    assert generate_qft(1).ops == (GateOp("H", targets=(0,)),)


def test_qft_of_zero_is_uniform():
    np.testing.assert_allclose(dd.to_vector(dd_run(generate_qft(3))), np.full(8, 1 / math.sqrt(8)), atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 5, 6])
def test_qft_matches_dft(n):
    """QFT|b> = N^-1/2 sum_k exp(2 pi i b k / N) |k>, checked on every basis input."""
    circ = generate_qft(n)
    size = 1 << n
    k = np.arange(size)
    arena = dd.Arena()
    ops = [dd.gate_matrix(o.kind, o.params, o.targets, o.controls, n, arena) for o in circ.ops]
    for b in range(size):
        s = dd.make_basis_state(n, format(b, f"0{n}b"), arena)
        for m in ops:
            s = dd.apply_matrix(m, s)
        np.testing.assert_allclose(dd.to_vector(s), np.exp(2j * np.pi * b * k / size) / math.sqrt(size), atol=1e-10)


@pytest.mark.parametrize("name", sorted(BUILTINS))
@pytest.mark.parametrize("n", [1, 4, 7])
def test_generators_preserve_norm(name, n):
    assert dd.norm_squared(dd_run(BUILTINS[name](n))) == pytest.approx(1, abs=1e-10)


def test_validate_examples():
    assert validate(generate_ghz(3)) == []
    problems = validate(Circuit(2, [GateOp("CX", targets=(0,), controls=(0,))]))
    assert any("overlap" in p for p in problems)
    problems = validate(Circuit(3, [GateOp("X", targets=(5,))]))
    assert any("out of range" in p for p in problems)


def test_validate_reports_every_violation():
    c = Circuit(
        2,
        [
            GateOp("RX", targets=(0,)),
            GateOp("FOO", targets=(0,)),
            GateOp("CCX", targets=(0,), controls=(1,)),
            GateOp("MEASURE", targets=(0,)),
            GateOp("H", targets=(1,)),
            GateOp("RZ", (math.inf,), targets=(1,)),
        ],
    )
    problems = validate(c)
    assert len(problems) >= 6
    with pytest.raises(CircuitValidationError) as info:
        c.check()
    assert info.value.violations == problems


def test_trailing_measure_block_is_valid():
    ops = list(generate_ghz(2).ops) + [GateOp("MEASURE", targets=(0,)), GateOp("MEASURE", targets=(1,))]
    assert validate(Circuit(2, ops)) == []


def test_dense_oracle_agrees_on_generators():
    for n in range(1, 8):
        for gen in (generate_ghz, generate_qft):
            c = gen(n)
            np.testing.assert_allclose(dd.to_vector(dd_run(c)), dense_run(c).amplitudes, atol=1e-10)
    assert isinstance(dense_run(generate_ghz(2)), DenseState)
