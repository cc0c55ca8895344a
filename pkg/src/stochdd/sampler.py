"""Monte-Carlo orchestration over independent noisy runs.

A run starts from ``|0...0>``, applies every gate followed by its noise
channels, evaluates each quadratic property ``|<w|psi>|^2`` exactly on the
sampled final state and finally draws one measurement outcome for the
histogram.

Reproducibility contract: run ``j`` is seeded from ``(base_seed, j)`` only,
and it always starts from the same decision-diagram table state (a snapshot
taken after the circuit's gate operators were built). Its result therefore
does not depend on which worker executes it or what ran before. Runs are
handed to workers by static striding over the run index and merged in index
order with exactly rounded sums, so the aggregate is bit-identical for any
worker count.
"""

from __future__ import annotations

import math
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import dd
from .circuit import Circuit
from .errors import InvalidArgumentError, RunError, StochDDError
from .noise import CHANNELS, NoiseSpec, apply_site, damping_kraus, decay_probability, noise_sites

_MASK64 = (1 << 64) - 1

# Unique-table size that triggers a mark-and-sweep between gates.
GC_THRESHOLD = 250_000


def plan_count(num_properties: int, epsilon: float, delta: float) -> int:
    """ceil(ln(2L/delta) / (2 epsilon)^2)."""
    return max(1, math.ceil(math.log(2 * num_properties / delta) / (4 * epsilon * epsilon)))


@dataclass(frozen=True)
class SamplingPlan:
    num_properties: int = 1000
    epsilon: float = 0.01
    delta: float = 0.05
    num_runs: int = 0

    def __post_init__(self):
        if self.num_runs == 0:
            object.__setattr__(self, "num_runs", plan_count(self.num_properties, self.epsilon, self.delta))
        if self.num_runs < 1:
            raise InvalidArgumentError("num_runs must be >= 1")

    def hoeffding_halfwidth(self, runs: int | None = None) -> float:
        """Accuracy guaranteed by Hoeffding plus a union bound for ``runs`` samples."""
        m = self.num_runs if runs is None else runs
        return math.sqrt(math.log(2 * self.num_properties / self.delta) / (2 * m))


def plan_samples(num_properties: int, epsilon: float, delta: float) -> SamplingPlan:
    """Number of runs so that all ``num_properties`` estimates are ``epsilon``-close w.p. 1-delta."""
    if int(num_properties) != num_properties or num_properties < 1:
        raise InvalidArgumentError(f"number of properties must be a positive integer, got {num_properties}")
    for name, v in (("epsilon", epsilon), ("delta", delta)):
        if not 0.0 < v < 1.0:
            raise InvalidArgumentError(f"{name} must lie in (0, 1), got {v}")
    return SamplingPlan(int(num_properties), float(epsilon), float(delta))


@dataclass(frozen=True)
class PropertySpec:
    """A quadratic property: basis-outcome probability (bitstring) or fidelity (state)."""

    label: str
    target: str | dd.StateDD

    @classmethod
    def outcome(cls, bits: str) -> "PropertySpec":
        return cls(f"P({bits})", bits)

    @classmethod
    def fidelity(cls, label: str, state: dd.StateDD) -> "PropertySpec":
        n2 = dd.norm_squared(state)
        if abs(n2 - 1) > 1e-9:
            raise InvalidArgumentError(f"reference state for {label!r} is not normalised (|w|^2={n2})")
        return cls(label, state)


@dataclass(frozen=True)
class RunResult:
    run_index: int
    measured_bits: str
    property_values: tuple[float, ...]
    error_event_count: int


@dataclass
class Aggregate:
    histogram: dict[str, int]
    labels: list[str]
    estimates: list[float]
    stderr: list[float | None]
    num_runs: int
    seed: int
    plan: SamplingPlan
    wall_time: float = 0.0
    workers: int = 1
    circuit_name: str = ""
    num_qubits: int = 0
    noise: dict = field(default_factory=dict)
    error_events: int = 0

    def same_result(self, other: "Aggregate") -> bool:
        """Equality ignoring wall time and worker count."""
        keys = ("histogram", "labels", "estimates", "stderr", "num_runs", "seed", "plan", "error_events")
        return all(getattr(self, k) == getattr(other, k) for k in keys)


def run_seed(base_seed: int, run_index: int) -> int:
    """64-bit avalanche mix (splitmix64 finaliser) of base seed and run index."""

    def mix(z):
        z = (z + 0x9E3779B97F4A7C15) & _MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    return mix(mix(base_seed & _MASK64) ^ (run_index & _MASK64))


class _Pushback:
    """Random stream that hands out ``first`` once before deferring to ``rng``."""

    __slots__ = ("first", "rng")

    def __init__(self, first, rng):
        self.first = first
        self.rng = rng

    def random(self):
        if self.first is None:
            return self.rng.random()
        u, self.first = self.first, None
        return u


class Runner:
    """Executes runs of one (circuit, noise, properties) job in a private arena.

    Most noisy runs see no error event at all, and the rest share an
    event-free prefix. At setup we therefore walk the event-free trajectory
    once and store, for every noise site, the state in front of it and the
    probability that the site fires. A run draws its uniforms against those
    thresholds and only starts doing diagram work at its first event, which
    is replayed from the stored state with the same uniform. The draw
    sequence is exactly that of running every channel from the start.
    """

    # stop recording the event-free prefix once the arena holds this many nodes
    PREFIX_NODE_CAP = 200_000

    def __init__(self, circuit: Circuit, spec: NoiseSpec, properties: Sequence[PropertySpec] = ()):
        self.circuit = circuit
        self.spec = spec
        self.properties = list(properties)
        n = circuit.num_qubits
        for prop in self.properties:
            if isinstance(prop.target, str):
                dd._check_bits(prop.target, n)
            elif prop.target.num_qubits != n:
                raise InvalidArgumentError(f"property {prop.label!r} has the wrong qubit count")
        self.arena = dd.Arena()
        # (gate operator, noise sites) per unitary op
        self.steps = [
            (
                dd.gate_matrix(op.kind, op.params, op.targets, op.controls, n, self.arena),
                noise_sites(spec, i, op, n),
            )
            for i, op in enumerate(circuit.ops)
            if op.is_unitary
        ]
        # operators the channels may need, built before the snapshot so runs reuse them
        for q in sorted({q for _, sites in self.steps for _, q in sites}):
            if spec.p_damp > 0:
                damping_kraus(spec.p_damp, q, n, self.arena)
            if spec.p_depol > 0:
                for kind in ("X", "Y", "Z"):
                    dd.gate_matrix(kind, (), (q,), (), n, self.arena)
            elif spec.p_flip > 0:
                dd.gate_matrix("Z", (), (q,), (), n, self.arena)
        self._initial = dd.make_basis_state(n, arena=self.arena)
        self._build_prefix()
        self._snapshot = self.arena.snapshot()
        self._dirty = False
        self._clean_values = None

    def _build_prefix(self):
        """Record ``(threshold, state before the site, step, site)`` along the event-free path."""
        spec = self.spec
        self._prefix = []
        state = self._initial
        self._prefix_complete = False
        for s, (mat, sites) in enumerate(self.steps):
            if self.arena.num_nodes > self.PREFIX_NODE_CAP:
                self._resume = (s, -1, state)
                return
            state = dd.apply_matrix(mat, state)
            for j, (channel, q) in enumerate(sites):
                if channel == "damp":
                    thr = decay_probability(state, q, spec.p_damp)
                else:
                    thr = getattr(spec, CHANNELS[channel][1])
                self._prefix.append((thr, state, s, j))
                if channel != "damp" or thr == 0.0:
                    continue
                if thr >= 1.0:
                    # the survivor branch is impossible, every run fires here
                    self._resume = (s, j + 1, None)
                    return
                kraus = damping_kraus(spec.p_damp, q, state.num_qubits, self.arena)
                state = dd.scale(dd.apply_matrix(kraus.a1, state), 1 / math.sqrt(1 - thr))
        self._resume = (len(self.steps), -1, state)
        self._prefix_complete = True

    def _properties(self, state):
        values = []
        for prop in self.properties:
            if isinstance(prop.target, str):
                v = abs(dd.amplitude(state, prop.target)) ** 2
            else:
                v = abs(dd.inner_product(prop.target, state)) ** 2
            values.append(v)
        return tuple(values)

    def _continue(self, state, step, site, rng, trace):
        """Run from ``(step, site)``; ``site`` -1 means the step's gate is still pending."""
        spec = self.spec
        for s in range(step, len(self.steps)):
            mat, sites = self.steps[s]
            if s > step or site < 0:
                state = dd.apply_matrix(mat, state)
                site = 0
            for channel, q in sites[site:]:
                state = apply_site(state, channel, q, spec, rng, trace)
            if self.arena.num_nodes > GC_THRESHOLD:
                roots = [state.root, self._initial.root] + [e[1].root for e in self._prefix]
                self.arena.collect(roots)
        return state

    def run(self, run_index: int, base_seed: int) -> RunResult:
        rng = random.Random(run_seed(base_seed, run_index))
        draw = rng.random
        fired = None
        for k, entry in enumerate(self._prefix):
            u = draw()
            if u < entry[0]:
                fired = (k, u)
                break
        if fired is None and self._prefix_complete:
            if self._clean_values is None:
                self._clean_values = self._properties(self._resume[2])
            bits = dd.measure_all(self._resume[2], rng)
            return RunResult(run_index, bits, self._clean_values, 0)

        if self._dirty:
            self.arena.restore(self._snapshot)
        self._dirty = True
        trace = []
        if fired is None:
            step, site, state = self._resume
        else:
            k, u = fired
            _, state, step, site = self._prefix[k]
            channel, q = self.steps[step][1][site]
            state = apply_site(state, channel, q, self.spec, _Pushback(u, rng), trace)
            site += 1
        state = self._continue(state, step, site, rng, trace)
        values = self._properties(state)
        bits = dd.measure_all(state, rng)
        return RunResult(run_index, bits, values, len(trace))


def run_once(
    circuit: Circuit,
    spec: NoiseSpec,
    properties: Sequence[PropertySpec],
    run_index: int,
    base_seed: int,
) -> RunResult:
    """One stochastic trajectory; identical inputs give an identical result."""
    circuit.check()
    return Runner(circuit, spec, properties).run(run_index, base_seed)


# -- parallel execution --------------------------------------------------------

_WORKER_RUNNER: Runner | None = None


def _init_worker(circuit, spec, properties):
    global _WORKER_RUNNER
    _WORKER_RUNNER = Runner(circuit, spec, properties)


def _run_block(indices, base_seed, runner=None):
    runner = runner or _WORKER_RUNNER
    out = []
    for j in indices:
        try:
            out.append(runner.run(j, base_seed))
        except Exception as exc:  # noqa: BLE001 - re-raised with the run index
            raise RunError(j, exc) from exc
    return out


def _blocks(num_runs, workers, block_size):
    """Static striding: worker ``w`` owns runs ``w, w+W, ...``, cut into blocks."""
    for w in range(workers):
        mine = list(range(w, num_runs, workers))
        for k in range(0, len(mine), block_size):
            yield mine[k : k + block_size]


def default_workers() -> int:
    env = os.environ.get("SIM_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidArgumentError(f"SIM_WORKERS must be an integer, got {env!r}") from None
    return 1


def run_ensemble(
    circuit: Circuit,
    spec: NoiseSpec,
    plan: SamplingPlan,
    properties: Sequence[PropertySpec] = (),
    workers: int = 1,
    base_seed: int = 0,
    progress: Callable[[int, int], None] | None = None,
    block_size: int = 250,
) -> Aggregate:
    """Execute ``plan.num_runs`` independent runs and merge them deterministically."""
    if workers < 1:
        raise InvalidArgumentError("workers must be >= 1")
    circuit.check()
    properties = list(properties)
    total = plan.num_runs
    start = time.perf_counter()
    results: list[RunResult] = []
    done = 0
    if workers == 1:
        runner = Runner(circuit, spec, properties)
        for block in _blocks(total, 1, block_size):
            results.extend(_run_block(block, base_seed, runner))
            done += len(block)
            if progress:
                progress(done, total)
    else:
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_worker, initargs=(circuit, spec, properties)
        ) as pool:
            futures = [pool.submit(_run_block, b, base_seed) for b in _blocks(total, workers, block_size)]
            try:
                for fut in futures:
                    chunk = fut.result()
                    results.extend(chunk)
                    done += len(chunk)
                    if progress:
                        progress(done, total)
            except BaseException:
                for fut in futures:
                    fut.cancel()
                raise
    results.sort(key=lambda r: r.run_index)
    agg = aggregate(results, [p.label for p in properties], plan, base_seed)
    agg.wall_time = time.perf_counter() - start
    agg.workers = workers
    agg.circuit_name = circuit.name
    agg.num_qubits = circuit.num_qubits
    agg.noise = spec.as_dict()
    return agg


def aggregate(results: Sequence[RunResult], labels: Sequence[str], plan: SamplingPlan, seed: int) -> Aggregate:
    """Merge run results; sums are exactly rounded so input order never matters."""
    m = len(results)
    histogram: dict[str, int] = {}
    for r in results:
        histogram[r.measured_bits] = histogram.get(r.measured_bits, 0) + 1
    estimates, errs = [], []
    for k in range(len(labels)):
        vals = [r.property_values[k] for r in results]
        mean = math.fsum(vals) / m if m else float("nan")
        estimates.append(mean)
        if m >= 2:
            var = math.fsum((v - mean) ** 2 for v in vals) / (m - 1)
            errs.append(math.sqrt(var / m))
        else:
            errs.append(None)
    return Aggregate(
        histogram=dict(sorted(histogram.items())),
        labels=list(labels),
        estimates=estimates,
        stderr=errs,
        num_runs=m,
        seed=seed,
        plan=plan,
        error_events=sum(r.error_event_count for r in results),
    )


@dataclass(frozen=True)
class ErrorBar:
    label: str
    hoeffding_halfwidth: float
    stderr: float
    note: str


def estimate_error_bars(agg: Aggregate) -> list[ErrorBar]:
    """Hoeffding half-width (union bound over the plan's L) next to the empirical stderr."""
    if agg.num_runs < 2:
        raise InvalidArgumentError("error bars need at least two runs")
    hw = agg.plan.hoeffding_halfwidth(agg.num_runs)
    out = []
    for label, se in zip(agg.labels, agg.stderr):
        note = (
            f"holds for all {agg.plan.num_properties} properties simultaneously "
            f"with probability >= {1 - agg.plan.delta:g}"
        )
        out.append(ErrorBar(label, hw, se, note))
    return out


__all__ = [
    "Aggregate",
    "ErrorBar",
    "PropertySpec",
    "RunResult",
    "Runner",
    "SamplingPlan",
    "StochDDError",
    "aggregate",
    "estimate_error_bars",
    "plan_samples",
    "run_ensemble",
    "run_once",
    "run_seed",
]
