"""``qselector`` command line.

Exit codes: 0 success, 1 input error (unreadable file, syntax or validation
error, bad flag), 2 runtime protocol error, 3 internal assertion failure
(including a failed acceptance check).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from . import device as dev
from . import dsl
from . import efficiency as eff
from . import hilbert as hs
from . import reports
from . import selector as sel
from .protocols import engine as eng
from .protocols import library as lib
from .protocols import references as refs

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME, EXIT_INTERNAL = 0, 1, 2, 3
DEFAULT_SEED = 0
DEFAULT_SHOTS = 10_000


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_device(path, n_qubits):
    if path:
        try:
            return dev.load_device(path)
        except OSError as exc:
            raise InputError(f"{path}: {exc.strerror or exc}") from None
        except dev.ConfigurationError as exc:
            raise InputError(f"{path}: {exc}") from None
    if n_qubits is None:
        raise InputError("an empty program needs --device")
    return dev.default_device(n_qubits)


# -- run ---------------------------------------------------------------------------

def execute(*, source, program_path, device, mode, model, seed, shots):
    """Parse, validate and run; returns the report dict.  Raises InputError or runtime errors."""
    started = time.perf_counter()
    if mode == "sample" and shots < 1:
        raise InputError(f"--shots must be at least 1, got {shots}")
    try:
        program = dsl.parse(source)
    except dsl.DSLSyntaxError as exc:
        raise InputError(f"{program_path}: {exc}") from None
    if device is None:
        device = _load_device(None, program.n_qubits)
    diagnostics = dsl.validate(program, device, model=model)
    for d in diagnostics:
        if d.severity != "error":
            print(f"{program_path}: {d}", file=sys.stderr)
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors:
        raise InputError("\n".join(f"{program_path}: {d}" for d in errors))
    result = dsl.interpret(program, device, mode=mode, shots=shots, seed=seed, model=model, check=False,
                           name=Path(program_path).stem)
    return reports.build_run_report(source=source, program_path=program_path, device=device, mode=mode,
                                    model=model, seed=seed, shots=shots if mode == "sample" else None,
                                    result=result, started=started)


def cmd_run(args) -> int:
    if args.from_report:
        try:
            report = json.loads(Path(args.from_report).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise InputError(f"{args.from_report}: {exc}") from None
        try:
            new = reports.rerun(report, execute)
        except (KeyError, TypeError, ValueError, dev.ConfigurationError) as exc:
            raise InputError(f"{args.from_report}: malformed report ({exc})") from None
    else:
        if not args.file:
            raise InputError("run needs a .qsp file or --from-report")
        try:
            source = Path(args.file).read_bytes()
        except OSError as exc:
            raise InputError(f"{args.file}: {exc.strerror or exc}") from None
        try:
            text = source.decode("utf-8")
        except UnicodeDecodeError:
            # let the parser locate the bad byte
            text = source
        device = _load_device(args.device, None) if args.device else None
        new = execute(source=text, program_path=args.file, device=device, mode=args.mode, model=args.model,
                      seed=args.seed, shots=args.shots)
    _emit(reports.dumps(new), args.out)
    for line in new.get("fidelities", []):
        if not line["passed"]:
            print(f"assert_state {line['reference']} failed on {line['leaf']}: fidelity {line['fidelity']!r}",
                  file=sys.stderr)
    if new["success_probability"] <= 0:
        print("no accepted leaf: every path aborted", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


# -- demo --------------------------------------------------------------------------

def _table(rows, headers) -> str:
    cells = [[str(h) for h in headers]] + [[c if isinstance(c, str) else f"{c:.12g}" for c in r] for r in rows]
    widths = [max(len(r[k]) for r in cells) for k in range(len(headers))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells) + "\n"


def demo_bell() -> str:
    rows = []
    out = []
    for initial in ("00", "01"):
        r = lib.run_bell_prep(initial, "flux_only")
        leaf = r.success_leaf
        target = refs.REFERENCES[r.info["target"]]
        f = target.fidelity(leaf.state)
        f_frame = hs.fidelity(hs.apply_frame(leaf.state, r.info["pauli_frame"]), target.state)
        rows.append([f"|{initial}>", r.success_probability, r.info["stated_success_probability"],
                     r.info["entropy"], f, str(r.info["pauli_frame"]), f_frame])
    out.append(_table(rows, ["input", "success", "stated", "entropy_ebit", "fidelity_direct",
                             "pauli_frame", "fidelity_framed"]))
    both = lib.run_bell_prep("00", "both")
    out.append(f"reverse-both success (no second projection): {both.success_probability:.12g}\n")
    out.append("note: enumeration gives 1/2 for the two-round pair selection; the stated value is 1/3.\n"
               "      |00> yields (|00>-|11>)/sqrt2, one Pauli X away from (|01>-|10>)/sqrt2.\n")
    return "".join(out)


def demo_cnot() -> str:
    from .acceptance import cnot_fidelity_table

    rows = [[r["input"], r["leaf"], r["probability"], r["fidelity"]] for r in cnot_fidelity_table()]
    worst = min(r[3] for r in rows)
    if worst < 1 - 1e-9:
        raise lib.InternalAssertionError(f"CNOT fidelity {worst!r} below 1 - 1e-9")
    text = _table(rows, ["input(c,t)", "leaf", "probability", "fidelity"])
    text += (f"ancilla starts in |+>; flip the target on outcome {lib.CNOT_FLIP_OUTCOME!r}, "
             f"then apply {lib.CNOT_PHASE_CORRECTION[0]} to the control\n")
    return text


def demo_cluster4() -> str:
    r = lib.run_cluster4()
    rows = []
    for leaf in r.tree.accepted_leaves():
        for a in leaf.assertions:
            rows.append([leaf.path[-1], leaf.probability, a.reference, a.fidelity])
            if not a.passed:
                raise lib.InternalAssertionError(f"{a.reference} fidelity {a.fidelity!r} on {leaf.path}")
    text = _table(rows, ["leaf", "probability", "reference", "fidelity"])
    text += f"success probability: {r.success_probability:.12g}\n"
    text += f"four-qubit frame (positions on qubits 1,2,4,5): {refs.CLUSTER_FRAME_4}\n"
    t0 = time.perf_counter()
    witness = hs.local_clifford_equivalent(refs.CLUSTER4, refs.CLUSTER_CANONICAL)
    elapsed = time.perf_counter() - t0
    if witness is None:
        raise lib.InternalAssertionError("no local-Clifford witness to the canonical cluster form")
    names = [_clifford_name(u) for u in witness]
    text += f"local-Clifford witness to (|0000>+|0011>+|1100>-|1111>)/2: {names} ({elapsed:.3f} s)\n"
    return text


def _clifford_name(u) -> str:
    # shortest word in H and S that equals u up to phase
    import itertools

    import numpy as np

    for length in range(0, 6):
        for word in itertools.product("HS", repeat=length):
            m = np.eye(2, dtype=complex)
            for g in word:
                m = hs.GATES[g] @ m
            k = np.flatnonzero(np.abs(u.reshape(-1)) > 1e-9)[0]
            phase = u.reshape(-1)[k] / m.reshape(-1)[k] if abs(m.reshape(-1)[k]) > 1e-9 else None
            if phase is not None and np.allclose(m * phase, u, atol=1e-9):
                return "".join(reversed(word)) or "I"
    return "?"


DEMOS = {"bell": demo_bell, "cnot": demo_cnot, "cluster4": demo_cluster4}


def cmd_demo(args) -> int:
    sys.stdout.write(DEMOS[args.name]())
    return EXIT_OK


# -- scaling, partition, check -------------------------------------------------------

def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def cmd_scaling(args) -> int:
    if args.trials < 0:
        raise InputError("--trials must be non-negative")
    try:
        model = eff.GrowthModel(args.p, args.pair_cost)
        rows = eff.scaling_table(args.N, model, trials=args.trials, seed=args.seed, base_size=args.base_size)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit(eff.scaling_tsv(rows), args.out)
    return EXIT_OK


def cmd_partition(args) -> int:
    device = _load_device(args.device, None)
    try:
        bias = dsl.evaluate(dsl.parse_expression(args.bias), dsl.device_constants(device))
        part = sel.partition(device, bias, args.model)
    except (dsl.DSLSyntaxError, dsl.EvaluationError) as exc:
        raise InputError(f"--bias: {exc}") from None
    except sel.DegenerateThresholdError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_RUNTIME
    _emit(part.dump_tsv(), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    from .acceptance import run_all

    results = run_all()
    for r in results:
        print(r.line())
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_INTERNAL if failed else EXIT_OK


# -- entry point -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qselector", description="Quantum-state selector protocols: run, demo, scaling, check.")
    p.add_argument("--version", action="version", version=f"qselector {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a .qsp protocol file")
    r.add_argument("file", nargs="?")
    r.add_argument("--device", help="device config file (default: fixture device sized from the header)")
    r.add_argument("--mode", choices=("enumerate", "sample"), default="enumerate")
    r.add_argument("--shots", type=int, default=DEFAULT_SHOTS)
    r.add_argument("--seed", type=int, default=DEFAULT_SEED)
    r.add_argument("--model", choices=sel.MODELS, default="exact")
    r.add_argument("--out", help="write the JSON report here instead of stdout")
    r.add_argument("--from-report", help="re-run the inputs echoed in an earlier report")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("demo", help="run a built-in protocol and print a summary")
    d.add_argument("name", choices=sorted(DEMOS))
    d.set_defaults(func=cmd_demo)

    s = sub.add_parser("scaling", help="block-doubling scaling table (TSV)")
    s.add_argument("--p", type=float, required=True, help="combination success probability")
    s.add_argument("--N", type=_int_list, default=[4, 8, 16, 32, 64], help="comma-separated target sizes")
    s.add_argument("--trials", type=int, default=0, help="Monte Carlo trials per size (0 = analytic only)")
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--base-size", type=int, choices=(1, 2), default=1)
    s.add_argument("--pair-cost", type=float, default=1.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_scaling)

    q = sub.add_parser("partition", help="quiet/switch classification of every sign string (TSV)")
    q.add_argument("--device", required=True)
    q.add_argument("--bias", required=True, help="bias expression, e.g. 'IT0 - (Ic1 + Ic2) / 2'")
    q.add_argument("--model", choices=sel.MODELS, default="exact")
    q.add_argument("--out")
    q.set_defaults(func=cmd_partition)

    c = sub.add_parser("check", help="run the acceptance suite")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors exit 1, --help and --version exit 0
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (eng.ProtocolRuntimeError, hs.BranchImpossibleError, dsl.EvaluationError, sel.DegenerateThresholdError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (lib.InternalAssertionError, AssertionError) as exc:
        print(f"internal assertion failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
