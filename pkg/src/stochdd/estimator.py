"""scikit-learn style wrapper: circuits in, property estimates out.

``fit`` only validates the hyper-parameters and freezes the noise model and
sampling plan; there is nothing to learn. ``transform`` simulates every
circuit and returns one row of estimates per circuit, so the simulator can
sit at the front of a :class:`sklearn.pipeline.Pipeline`.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .circuit import Circuit
from .errors import InvalidArgumentError
from .noise import DEFAULT_P_DAMP, DEFAULT_P_DEPOL, DEFAULT_P_FLIP, NoiseSpec
from .qasm import parse_qasm
from .sampler import PropertySpec, SamplingPlan, plan_samples, run_ensemble


def as_circuit(x) -> Circuit:
    """Accept a :class:`Circuit` or OpenQASM 2.0 source text."""
    if isinstance(x, Circuit):
        return x.check()
    if isinstance(x, str):
        return parse_qasm(x).check()
    raise InvalidArgumentError(f"expected a Circuit or OpenQASM text, got {type(x).__name__}")


class StochasticSimulator(TransformerMixin, BaseEstimator):
    """Monte-Carlo noisy simulation of each input circuit.

    ``properties`` is a list of basis bitstrings whose outcome probabilities
    are estimated; ``None`` means every basis outcome (small registers only).
    ``shots`` overrides the run count derived from
    ``(num_properties, epsilon, delta)``.
    """

    def __init__(
        self,
        p_depol: float = DEFAULT_P_DEPOL,
        p_damp: float = DEFAULT_P_DAMP,
        p_flip: float = DEFAULT_P_FLIP,
        policy: str = "operands-only",
        epsilon: float = 0.01,
        delta: float = 0.05,
        num_properties: int = 1000,
        shots: int | None = None,
        properties: Sequence[str] | None = None,
        workers: int = 1,
        seed: int = 0,
    ):
        self.p_depol = p_depol
        self.p_damp = p_damp
        self.p_flip = p_flip
        self.policy = policy
        self.epsilon = epsilon
        self.delta = delta
        self.num_properties = num_properties
        self.shots = shots
        self.properties = properties
        self.workers = workers
        self.seed = seed

    def fit(self, X=None, y=None):
        self.noise_spec_ = NoiseSpec(self.p_depol, self.p_damp, self.p_flip, policy=self.policy, rng_seed=self.seed)
        plan = plan_samples(self.num_properties, self.epsilon, self.delta)
        if self.shots is not None:
            plan = SamplingPlan(plan.num_properties, plan.epsilon, plan.delta, int(self.shots))
        self.plan_ = plan
        if self.workers < 1:
            raise InvalidArgumentError("workers must be >= 1")
        if X is not None:
            self.n_qubits_ = {as_circuit(c).num_qubits for c in X}
        return self

    def _props(self, n):
        bits = self.properties
        if bits is None:
            if n > 12:
                raise InvalidArgumentError("properties=None expands to 2^n outcomes; pass bitstrings for n > 12")
            bits = [format(b, f"0{n}b") for b in range(1 << n)]
        return [PropertySpec.outcome(b) for b in bits]

    def transform(self, X) -> np.ndarray:
        """Estimates, shape ``(len(X), number of properties)``."""
        check_is_fitted(self, ["noise_spec_", "plan_"])
        circuits = [as_circuit(c) for c in X]
        rows, self.aggregates_ = [], []
        for c in circuits:
            agg = run_ensemble(
                c, self.noise_spec_, self.plan_, self._props(c.num_qubits), workers=self.workers, base_seed=self.seed
            )
            self.aggregates_.append(agg)
            rows.append(agg.estimates)
        if len({len(r) for r in rows}) > 1:
            raise InvalidArgumentError("circuits of different widths give ragged rows; pass explicit properties")
        return np.asarray(rows, dtype=float)
