import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochdd import dd
from stochdd.circuit import Circuit, GateOp, generate_ghz
from stochdd.errors import InvalidArgumentError, NumericDegeneracyError
from stochdd.noise import (
    NoiseSpec,
    apply_amplitude_damping,
    apply_depolarizing,
    apply_phase_flip,
    damping_kraus,
    decay_probability,
    insert_noise,
    noise_sites,
)
from stochdd.sampler import Runner

from _helpers import random_vector

R2 = 1 / math.sqrt(2)


def bell(arena=None):
    return dd.from_vector([R2, 0, 0, R2], arena)


class CountingRng(random.Random):
    def __init__(self, seed):
        super().__init__(seed)
        self.draws = 0

    def random(self):
        self.draws += 1
        return super().random()


def within_3sigma(count, trials, p):
    return abs(count / trials - p) <= 3 * math.sqrt(p * (1 - p) / trials)


# -- spec ------------------------------------------------------------------------


def test_noise_spec_validation():
    with pytest.raises(InvalidArgumentError):
        NoiseSpec(p_depol=1.5)
    with pytest.raises(InvalidArgumentError):
        NoiseSpec(p_flip=-0.1)
    with pytest.raises(InvalidArgumentError):
        NoiseSpec(policy="everything")
    assert NoiseSpec().as_dict() == {"p_depol": 0.001, "p_damp": 0.002, "p_flip": 0.001, "policy": "operands-only"}
    assert NoiseSpec.noiseless().is_noiseless


def test_site_order_operands_only():
    gate = GateOp("CX", targets=(1,), controls=(0,))
    assert noise_sites(NoiseSpec(), 0, gate, 3) == [
        ("depol", 0), ("damp", 0), ("flip", 0), ("depol", 1), ("damp", 1), ("flip", 1),
    ]


def test_site_order_all_qubits():
    gate = GateOp("H", targets=(1,))
    sites = noise_sites(NoiseSpec(policy="all-qubits-per-step"), 0, gate, 3)
    assert sites == [("depol", 1), ("damp", 1), ("flip", 1), ("damp", 0), ("flip", 0), ("damp", 2), ("flip", 2)]


def test_ghz2_damping_opportunities():
    spec = NoiseSpec(0, 0.3, 0)
    c = generate_ghz(2)
    sites = [s for i, op in enumerate(c.ops) for s in noise_sites(spec, i, op, 2)]
    assert sites == [("damp", 0), ("damp", 0), ("damp", 1)]


def test_filters_restrict_sites():
    spec = NoiseSpec(0.1, 0, 0, op_filter={1}, qubit_filter={0})
    c = generate_ghz(3)
    assert noise_sites(spec, 0, c.ops[0], 3) == []
    assert noise_sites(spec, 1, c.ops[1], 3) == [("depol", 0)]
    assert noise_sites(spec, 2, c.ops[2], 3) == []


# -- depolarizing ----------------------------------------------------------------


def test_depolarizing_zero_is_identity_and_draws_nothing():
    s = bell()
    rng = CountingRng(0)
    assert apply_depolarizing(s, 0, 0.0, rng).root == s.root
    assert rng.draws == 0


def test_depolarizing_branch_frequencies():
    p, trials = 0.2, 10**5
    s = bell()
    rng = random.Random(4)
    counts = dict.fromkeys("IXYZ", 0)
    for _ in range(trials):
        trace = []
        out = apply_depolarizing(s, 0, p, rng, trace)
        kind = trace[0][2] if trace else "I"
        counts[kind] += 1
        assert dd.norm_squared(out) == pytest.approx(1, abs=1e-10)
    assert within_3sigma(counts["I"], trials, 1 - p + p / 4)
    for k in "XYZ":
        assert within_3sigma(counts[k], trials, p / 4)


def test_depolarizing_average_channel_on_one_qubit():
    """Averaged |psi><psi| over trajectories matches (1-p) rho + p I/2."""
    p, trials = 0.3, 10**5
    arena = dd.Arena()
    psi = np.array([math.cos(0.6), math.sin(0.6) * np.exp(0.9j)])
    s = dd.from_vector(psi, arena)
    rng = random.Random(9)
    samples = np.empty((trials, 3))
    for j in range(trials):
        v = dd.to_vector(apply_depolarizing(s, 0, p, rng))
        samples[j] = (abs(v[0]) ** 2, (v[0] * v[1].conjugate()).real, (v[0] * v[1].conjugate()).imag)
    rho = np.outer(psi, psi.conj())
    want_rho = (1 - p) * rho + p * np.eye(2) / 2
    want = (want_rho[0, 0].real, want_rho[0, 1].real, want_rho[0, 1].imag)
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / math.sqrt(trials)
    assert np.all(np.abs(mean - want) <= 3 * se)


# -- phase flip --------------------------------------------------------------------


def test_phase_flip_examples():
    plus = dd.from_vector([R2, R2])
    np.testing.assert_allclose(dd.to_vector(apply_phase_flip(plus, 0, 1.0, random.Random(0))), [R2, -R2], atol=1e-15)
    assert apply_phase_flip(plus, 0, 0.0, random.Random(0)).root == plus.root
    zero = dd.make_basis_state(1)
    for seed in range(20):
        out = apply_phase_flip(zero, 0, 0.5, random.Random(seed))
        np.testing.assert_allclose(np.abs(dd.to_vector(out)) ** 2, [1, 0])


# -- amplitude damping -------------------------------------------------------------


def test_damping_branches_on_bell():
    p = 0.2
    arena = dd.Arena()
    s = bell(arena)
    assert decay_probability(s, 0, p) == pytest.approx(p / 2, abs=1e-12)

    class Fixed:
        def __init__(self, u):
            self.u = u

        def random(self):
            return self.u

    decayed = apply_amplitude_damping(s, 0, p, Fixed(0.0))
    np.testing.assert_allclose(dd.to_vector(decayed), [0, 1, 0, 0], atol=1e-12)
    survivor = apply_amplitude_damping(s, 0, p, Fixed(0.99))
    want = [1 / math.sqrt(2 - p), 0, 0, math.sqrt(1 - p) / math.sqrt(2 - p)]
    np.testing.assert_allclose(dd.to_vector(survivor), want, atol=1e-10)


def test_damping_frequency_on_bell():
    p, trials = 0.2, 10**5
    s = bell()
    rng = random.Random(21)
    fired = 0
    for _ in range(trials):
        trace = []
        apply_amplitude_damping(s, 0, p, rng, trace)
        fired += bool(trace)
    assert within_3sigma(fired, trials, p / 2)


def test_damping_ground_state_untouched_but_draws():
    s = dd.make_basis_state(1)
    rng = CountingRng(0)
    assert apply_amplitude_damping(s, 0, 0.7, rng).root == s.root
    assert rng.draws == 1


def test_damping_excited_state():
    s = dd.make_basis_state(1, "1")
    assert decay_probability(s, 0, 0.3) == pytest.approx(0.3)
    hits = {tuple(np.abs(dd.to_vector(apply_amplitude_damping(s, 0, 0.3, random.Random(k))))) for k in range(50)}
    assert hits == {(1.0, 0.0), (0.0, 1.0)}


def test_damping_rejects_out_of_range_probability():
    s = dd.scale(dd.make_basis_state(1, "1"), 2)
    with pytest.raises(NumericDegeneracyError):
        apply_amplitude_damping(s, 0, 1.0, random.Random(0))


def test_kraus_completeness():
    for p in (0.0, 0.2, 0.75, 1.0):
        k = damping_kraus(p, 1, 2, dd.Arena())
        a0, a1 = dd.to_matrix(k.a0), dd.to_matrix(k.a1)
        np.testing.assert_allclose(a0.conj().T @ a0 + a1.conj().T @ a1, np.eye(4), atol=1e-10)


# -- invariants --------------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.sampled_from(["depol", "damp", "flip"]),
    st.floats(0, 1),
    st.integers(0, 2),
)
def test_channels_keep_states_normalized(seed, channel, p, qubit):
    s = dd.from_vector(random_vector(np.random.default_rng(seed), 3))
    fn = {"depol": apply_depolarizing, "damp": apply_amplitude_damping, "flip": apply_phase_flip}[channel]
    out = fn(s, qubit, p, random.Random(seed))
    assert dd.norm_squared(out) == pytest.approx(1, abs=1e-10)
    assert dd.is_normalized(out)


def test_channels_check_qubit_range():
    with pytest.raises(InvalidArgumentError):
        apply_phase_flip(bell(), 2, 0.1, random.Random(0))


def test_insert_noise_zero_spec_is_identity():
    s = bell()
    rng = CountingRng(0)
    out = insert_noise(s, GateOp("CX", targets=(1,), controls=(0,)), NoiseSpec.noiseless(), rng)
    assert out.root == s.root and rng.draws == 0


def test_insert_noise_is_deterministic():
    s = dd.from_vector(random_vector(np.random.default_rng(0), 3))
    gate = GateOp("CCX", targets=(2,), controls=(0, 1))
    spec = NoiseSpec(0.3, 0.4, 0.3)
    runs = []
    for _ in range(2):
        trace = []
        out = insert_noise(s, gate, spec, random.Random(77), trace)
        runs.append((out.root, trace))
    assert runs[0] == runs[1]


def _event_rate(gate, trials, seed=0):
    c = Circuit(1, [gate])
    r = Runner(c, NoiseSpec())
    return sum(r.run(j, seed).error_event_count > 0 for j in range(trials)) / trials


def test_any_event_probability_on_excited_qubit():
    """After X the qubit is |1>, so damping fires with its nominal rate."""
    trials = 2 * 10**5
    want = 1 - 0.999 * 0.998 * 0.999
    assert abs(_event_rate(GateOp("X", targets=(0,)), trials) - want) <= 3 * math.sqrt(want / trials)


def test_any_event_probability_after_h():
    """On |+> (any Pauli keeps P(1) = 1/2) the decay branch has weight p_damp/2."""
    trials = 2 * 10**5
    want = 1 - 0.999 * (1 - 0.002 / 2) * 0.999
    assert abs(_event_rate(GateOp("H", targets=(0,)), trials) - want) <= 3 * math.sqrt(want / trials)
