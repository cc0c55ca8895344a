"""Command-line front end: ``stochdd --builtin ghz --qubits 8 --shots 1000``.

Exit codes: 0 success, 2 bad flags, 3 circuit parse/validation error,
4 runtime failure (including a failed ``--verify``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from . import dd
from .circuit import BUILTINS, Circuit
from .errors import CircuitValidationError, InvalidArgumentError, StochDDError
from .noise import DEFAULT_P_DAMP, DEFAULT_P_DEPOL, DEFAULT_P_FLIP, POLICIES, NoiseSpec
from .oracle import dense_run
from .qasm import QasmError, load_qasm
from .sampler import Aggregate, PropertySpec, SamplingPlan, default_workers, plan_samples, run_ensemble

log = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_RUNTIME = 4

VERIFY_TOL = 1e-8
# --all-basis expands to 2^n properties
MAX_ALL_BASIS_QUBITS = 12


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stochdd", description="Stochastic noisy quantum-circuit simulation on decision diagrams.")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", choices=sorted(BUILTINS), help="generated benchmark circuit")
    src.add_argument("--circuit", metavar="FILE", help="OpenQASM 2.0 file")
    p.add_argument("--qubits", type=int, help="register size for --builtin")

    p.add_argument("--p-depol", type=float, default=DEFAULT_P_DEPOL)
    p.add_argument("--p-damp", type=float, default=DEFAULT_P_DAMP)
    p.add_argument("--p-flip", type=float, default=DEFAULT_P_FLIP)
    p.add_argument("--policy", choices=POLICIES, default="operands-only")

    p.add_argument("--eps", type=float, default=0.01, help="accuracy per property")
    p.add_argument("--delta", type=float, default=0.05, help="failure probability over all properties")
    p.add_argument("--num-properties", type=int, default=1000, help="L used to size the run count")
    p.add_argument("--shots", type=int, help="explicit number of runs M (overrides --eps/--delta sizing)")

    p.add_argument("--workers", type=int, default=None, help="worker processes (default: $SIM_WORKERS or 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--property", action="append", default=[], metavar="BITS", help="estimate P(BITS); repeatable")
    p.add_argument("--all-basis", action="store_true", help="estimate every basis-outcome probability")

    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", metavar="FILE", help="write the result here instead of stdout")
    p.add_argument("--reproducible", action="store_true", help="null out wall time and worker count")
    p.add_argument("--progress", action="store_true", help="report completed runs on stderr")

    p.add_argument("--verify", action="store_true", help="check the noiseless DD state against the dense oracle")
    p.add_argument("--qubits-max", type=int, default=10, help="largest register --verify accepts")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


# -- output --------------------------------------------------------------------


def _num(x):
    if x is None:
        return "null"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if not math.isfinite(x):
        return "null"
    text = format(float(x), ".17g")
    return text if any(c in text for c in ".e") else text + ".0"


def _dump(obj) -> str:
    """JSON with sorted keys and every float at 17 significant digits."""
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_dump(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_dump(v) for v in obj) + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    return _num(obj)


def result_document(agg: Aggregate, reproducible: bool = False) -> dict:
    hw = agg.plan.hoeffding_halfwidth(agg.num_runs)
    return {
        "circuit": agg.circuit_name,
        "n": agg.num_qubits,
        "M": agg.num_runs,
        "noise": dict(agg.noise),
        "seed": agg.seed,
        "workers": None if reproducible else agg.workers,
        "histogram": dict(agg.histogram),
        "estimates": [
            {"label": label, "value": v, "hoeffding_halfwidth": hw, "stderr": se}
            for label, v, se in zip(agg.labels, agg.estimates, agg.stderr)
        ],
        "plan": {
            "num_properties": agg.plan.num_properties,
            "epsilon": agg.plan.epsilon,
            "delta": agg.plan.delta,
        },
        "error_events": agg.error_events,
        "wall_time_s": None if reproducible else agg.wall_time,
    }


def emit_result(agg: Aggregate, fmt: str = "json", reproducible: bool = False) -> str:
    """Render ``agg`` as a JSON or CSV document."""
    doc = result_document(agg, reproducible)
    if fmt == "json":
        return _dump(doc) + "\n"
    if fmt != "csv":
        raise InvalidArgumentError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "key", "value", "hoeffding_halfwidth", "stderr"])
    for key in ("circuit", "n", "M", "seed", "workers", "wall_time_s", "error_events"):
        w.writerow(["meta", key, _num(doc[key]) if not isinstance(doc[key], str) else doc[key], "", ""])
    for key, v in sorted(doc["noise"].items()):
        w.writerow(["noise", key, v if isinstance(v, str) else _num(v), "", ""])
    for bits, count in doc["histogram"].items():
        w.writerow(["histogram", bits, count, "", ""])
    for e in doc["estimates"]:
        w.writerow(["estimate", e["label"], _num(e["value"]), _num(e["hoeffding_halfwidth"]), _num(e["stderr"])])
    return buf.getvalue()


def load_result(text: str) -> Aggregate:
    """Inverse of the JSON form of :func:`emit_result`."""
    doc = json.loads(text)
    plan = doc["plan"]
    return Aggregate(
        histogram=dict(doc["histogram"]),
        labels=[e["label"] for e in doc["estimates"]],
        estimates=[e["value"] for e in doc["estimates"]],
        stderr=[e["stderr"] for e in doc["estimates"]],
        num_runs=doc["M"],
        seed=doc["seed"],
        plan=SamplingPlan(plan["num_properties"], plan["epsilon"], plan["delta"], doc["M"]),
        wall_time=doc["wall_time_s"] or 0.0,
        workers=doc["workers"] or 1,
        circuit_name=doc["circuit"],
        num_qubits=doc["n"],
        noise=doc["noise"],
        error_events=doc["error_events"],
    )


# -- commands ------------------------------------------------------------------


def _load_circuit(args) -> Circuit:
    if args.builtin:
        if args.qubits is None:
            raise _UsageError("--builtin needs --qubits")
        if args.qubits < 1:
            raise _UsageError("--qubits must be >= 1")
        return BUILTINS[args.builtin](args.qubits)
    if args.qubits is not None:
        log.info("--qubits ignored for --circuit input")
    return load_qasm(args.circuit)


def verify(circuit: Circuit, qubits_max: int = 10) -> float:
    """Largest amplitude difference between the noiseless DD run and the dense oracle."""
    n = circuit.num_qubits
    if n > qubits_max:
        raise InvalidArgumentError(f"--verify limited to {qubits_max} qubits, circuit has {n}")
    arena = dd.Arena()
    state = dd.make_basis_state(n, arena=arena)
    for op in circuit.gate_ops:
        state = dd.apply_matrix(dd.gate_matrix(op.kind, op.params, op.targets, op.controls, n, arena), state)
    return float(np.max(np.abs(dd.to_vector(state) - dense_run(circuit).amplitudes)))


def _properties(args, n):
    props = []
    for bits in args.property:
        if len(bits) != n or set(bits) - {"0", "1"}:
            raise _UsageError(f"--property {bits!r} is not a {n}-bit string")
        props.append(PropertySpec.outcome(bits))
    if args.all_basis:
        if n > MAX_ALL_BASIS_QUBITS:
            raise _UsageError(f"--all-basis needs n <= {MAX_ALL_BASIS_QUBITS}")
        props += [PropertySpec.outcome(format(b, f"0{n}b")) for b in range(1 << n)]
    return props


def _run(args, out) -> int:
    circuit = _load_circuit(args).check()
    n = circuit.num_qubits
    if args.verify:
        err = verify(circuit, args.qubits_max)
        ok = err <= VERIFY_TOL
        out.write(_dump({"circuit": circuit.name, "n": n, "max_abs_error": err, "tolerance": VERIFY_TOL, "ok": ok}) + "\n")
        if not ok:
            print(f"stochdd: verify failed, max |DD - dense| = {err:.3e}", file=sys.stderr)
            return EXIT_RUNTIME
        return 0

    try:
        spec = NoiseSpec(args.p_depol, args.p_damp, args.p_flip, policy=args.policy, rng_seed=args.seed)
        plan = plan_samples(args.num_properties, args.eps, args.delta)
        if args.shots is not None:
            if args.shots < 1:
                raise InvalidArgumentError("--shots must be >= 1")
            plan = SamplingPlan(plan.num_properties, plan.epsilon, plan.delta, args.shots)
        workers = default_workers() if args.workers is None else args.workers
        if workers < 1:
            raise InvalidArgumentError("--workers must be >= 1")
    except InvalidArgumentError as exc:
        raise _UsageError(str(exc)) from None
    props = _properties(args, n)

    progress = None
    if args.progress:

        def progress(done, total):
            print(f"\rruns {done}/{total}", end="" if done < total else "\n", file=sys.stderr, flush=True)

    log.info("%s: n=%d, M=%d, workers=%d", circuit.name, n, plan.num_runs, workers)
    agg = run_ensemble(circuit, spec, plan, props, workers=workers, base_seed=args.seed, progress=progress)
    out.write(emit_result(agg, args.format, args.reproducible))
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"stochdd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out = sys.stdout
    try:
        if args.out:
            out = open(args.out, "w", encoding="utf-8")
        return _run(args, out)
    except _UsageError as exc:
        print(f"stochdd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QasmError, CircuitValidationError, OSError) as exc:
        print(f"stochdd: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StochDDError as exc:
        print(f"stochdd: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    finally:
        if out is not sys.stdout:
            out.close()


if __name__ == "__main__":
    sys.exit(main())
