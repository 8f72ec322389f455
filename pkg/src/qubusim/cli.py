"""Command-line front end.

Subcommands: `gate` (named gate demos on small inputs), `run` (JSON circuit
programs), `sweep` (parameter sweeps to CSV/JSON), `decompose` (unitary to
Reck mesh), `fig2` (detector-model data files), `verify` (golden-state
comparisons).  Same config and seed give byte-identical JSON output.

Exit codes: 0 ok, 1 usage, 2 numeric/validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis as an
from . import pipelines as pl
from . import synthesis as syn
from .gates import (
    GateError,
    c_path,
    c_path2,
    c_path3,
    disentangler,
    entangler1,
    entangler2,
    entangler3,
    entangler4,
    inject_plus,
    merging,
    merging_n,
    parity_gate,
)
from .state import (
    HybridState,
    StateError,
    fidelity,
    polarization_state,
    state_from_dict,
    state_to_dict,
)

DEFAULTS = {
    "alpha": math.sqrt(4000.0),
    "theta": 0.05,
    "gamma": 100.0,
    "eta": 0.95,
    "theta_probe": 0.05,
    "seed": 0,
}

GATE_NAMES = (
    "parity", "cpath", "cpath2", "cpath3", "disentangler",
    "entangler1", "entangler2", "entangler3", "entangler4",
    "merging", "merging-n", "two-qubit", "multi-qubit",
    "toffoli", "cn-u1", "cn-uk", "to-qudit", "from-qudit", "teleport",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# input parsing
# ---------------------------------------------------------------------------


def parse_state_spec(spec: str, n_photons: int, seed: int) -> HybridState:
    """Basis string ("HVH"), JSON coefficient list, or "haar[:seed]"."""
    ids = [str(i + 1) for i in range(n_photons)]
    paths = [f"t{i + 1}" for i in range(n_photons)]
    photons = list(zip(ids, paths))
    if spec.startswith("haar"):
        parts = spec.split(":")
        use_seed = int(parts[1]) if len(parts) > 1 else seed
        rng = np.random.default_rng(use_seed)
        z = rng.standard_normal(2**n_photons) + 1j * rng.standard_normal(2**n_photons)
        return polarization_state(z / np.linalg.norm(z), photons)
    if all(ch in "HV" for ch in spec) and spec:
        if len(spec) != n_photons:
            raise StateError(f"basis string {spec!r} needs {n_photons} letters")
        idx = int("".join("1" if ch == "V" else "0" for ch in spec), 2)
        coeffs = [0.0] * 2**n_photons
        coeffs[idx] = 1.0
        return polarization_state(coeffs, photons)
    coeffs = json.loads(spec)
    vals = [complex(c[0], c[1]) if isinstance(c, list) else complex(c) for c in coeffs]
    if len(vals) != 2**n_photons:
        raise StateError(f"need {2**n_photons} coefficients, got {len(vals)}")
    return polarization_state(vals, photons)


def parse_unitary_spec(spec: str, dim: int | None = None) -> np.ndarray:
    """"cnot" | "qft:N" | "hadamard4" | "haar:seed[:N]" | JSON matrix | file path."""
    if spec == "cnot":
        return np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
    if spec == "identity":
        return np.eye(dim or 4, dtype=complex)
    if spec == "hadamard4":
        return syn.HADAMARD4.copy()
    if spec.startswith("qft:"):
        return syn.qft_matrix(int(spec.split(":")[1]))
    if spec.startswith("haar:"):
        parts = spec.split(":")
        seed = int(parts[1])
        n = int(parts[2]) if len(parts) > 2 else (dim or 4)
        return syn.random_haar_unitary(n, seed)
    if Path(spec).exists():
        data = json.loads(Path(spec).read_text())
    else:
        data = json.loads(spec)
    return _matrix_from_json(data)


def _matrix_from_json(data) -> np.ndarray:
    if isinstance(data, dict):
        if "haar" in data:
            n, seed = data["haar"]
            return syn.random_haar_unitary(int(n), int(seed))
        if "qft" in data:
            return syn.qft_matrix(int(data["qft"]))
        data = data["matrix"]
    rows = []
    for row in data:
        rows.append([complex(c[0], c[1]) if isinstance(c, list) else complex(c) for c in row])
    return np.array(rows, dtype=complex)


def _matrix_to_json(u: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in u]


def _emit(payload, fmt: str, out: str | None) -> None:
    if fmt == "json":
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        rows = payload if isinstance(payload, list) else [payload]
        buf = io.StringIO()
        keys = sorted({k for r in rows for k in r})
        w = csv.DictWriter(buf, fieldnames=keys)
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k, "") for k in keys})
        text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# gate demos
# ---------------------------------------------------------------------------


def _demo_input_size(name: str) -> int:
    return {
        "parity": 2, "cpath": 2, "disentangler": 2, "entangler1": 2,
        "entangler2": 2, "merging": 2, "two-qubit": 2, "cn-u1": 3,
        "cpath2": 3, "cpath3": 3, "entangler3": 3, "entangler4": 3,
        "merging-n": 3, "multi-qubit": 3, "toffoli": 3, "cn-uk": 3,
        "to-qudit": 3, "from-qudit": 3, "teleport": 2,
    }[name]


def run_gate_demo(name: str, state: HybridState, args) -> tuple[HybridState, object]:
    """Each gate demo wires the minimal canonical pipeline around the gate."""
    alpha, theta = args.alpha, args.theta
    ids = list(state.registry.photons)

    if name == "parity":
        return parity_gate(state, ids[0], ids[1], alpha, theta)
    if name == "cpath":
        return c_path(state, ids[0], ids[1], alpha, theta)
    if name == "disentangler":
        out, rep0 = c_path(state, ids[0], ids[1], alpha, theta)
        out, rep = disentangler(out, ids[0], ids[1], v_rails=rep0.extras["rails"][1:])
        return out, rep
    if name == "cpath2":
        out, rep = c_path(state, ids[1], ids[2], alpha, theta)
        rails = list(rep.extras["rails"])
        out, rep = disentangler(out, ids[1], ids[2], v_rails=rails[1:])
        return c_path2(out, ids[0], ids[2], rails, alpha, theta)
    if name == "cpath3":
        out, rep = c_path(state, ids[0], ids[1], alpha, theta)
        return c_path3(out, ids[1], rep.extras["rails"], ids[2], alpha, theta)
    if name == "entangler1":
        out, rep = c_path(state, ids[0], ids[1], alpha, theta)
        out, anc, _ = inject_plus(out)
        return entangler1(out, ids[1], rep.extras["rails"], anc, alpha, theta)
    if name == "entangler2":
        out, rep = pl.to_qudit_circuit(state, ids, alpha, theta)
        rails = rep.extras["rails"]
        return entangler2(out, ids[0], ids[1], (rails[0], rails[1]), alpha, theta)
    if name in ("entangler3", "entangler4"):
        out, rep = pl.to_qudit_circuit(state, ids, alpha, theta)
        rails = list(rep.extras["rails"])
        if name == "entangler3":
            return entangler3(out, ids[0], ids[2], rails[:2], rails[2:], alpha, theta)
        out, anc, _ = inject_plus(out)
        return entangler4(out, anc, ids[2], rails, alpha, theta)
    if name == "merging":
        out, rep = c_path(state, ids[0], ids[1], alpha, theta)
        out, anc, _ = inject_plus(out)
        return merging(
            out, ids[1], rep.extras["rails"], anc, [(ids[0], None)], alpha, theta,
            keep_recycled=False,
        )
    if name == "merging-n":
        out, rep = pl.to_qudit_circuit(state, ids, alpha, theta)
        rails = list(rep.extras["rails"])
        out, rep2 = entangler3(out, ids[0], ids[2], rails[:2], rails[2:], alpha, theta)
        out, rep3 = entangler3(out, ids[1], ids[2], rails[::2], rails[1::2], alpha, theta)
        out, anc, _ = inject_plus(out)
        return merging_n(
            out, ids[2], rails, anc, [(ids[0], None), (ids[1], None)], alpha, theta,
            interference=args.interference, keep_recycled=False,
        )
    if name == "to-qudit":
        return pl.to_qudit_circuit(state, ids, alpha, theta)
    if name == "teleport":
        return pl.to_qudit_teleport(state, ids, alpha, theta)
    if name == "from-qudit":
        out, rep = pl.to_qudit_circuit(state, ids, alpha, theta)
        return pl.from_qudit(
            out, ids[-1], ids[:-1], list(rep.extras["rails"]), alpha, theta,
            interference=args.interference,
        )
    if name == "two-qubit":
        u = parse_unitary_spec(args.unitary or "cnot", 4)
        return pl.two_qubit_gate(state, ids[0], ids[1], u, alpha, theta)
    if name == "multi-qubit":
        u = parse_unitary_spec(args.unitary or f"haar:{args.seed}:8", 2 ** len(ids))
        return pl.multi_qubit_gate(state, ids, u, alpha, theta, args.interference)
    if name == "toffoli":
        return pl.toffoli(state, ids[:-1], ids[-1], alpha, theta, layout=args.layout)
    if name == "cn-u1":
        u = parse_unitary_spec(args.unitary or "haar:0:2", 2)
        return pl.cn_u1(state, ids[:-1], ids[-1], u, alpha, theta, layout=args.layout)
    if name == "cn-uk":
        k = args.targets
        u = parse_unitary_spec(args.unitary or f"haar:{args.seed}:{2**k}", 2**k)
        return pl.cn_uk(state, ids[:-k], ids[-k:], u, alpha, theta)
    raise UsageError(f"unknown gate {name!r}")


def cmd_gate(args) -> int:
    n = args.photons or _demo_input_size(args.name)
    state = parse_state_spec(args.input, n, args.seed)
    out, report = run_gate_demo(args.name, state, args)
    payload = {
        "gate": args.name,
        "input": args.input,
        "seed": args.seed,
        "report": report.to_dict(),
        "state": state_to_dict(out),
    }
    _emit(payload, "json", args.out)
    return 0


# ---------------------------------------------------------------------------
# circuit programs
# ---------------------------------------------------------------------------


def run_program(program: dict) -> dict:
    photons = program["photons"]
    ids = [p["id"] for p in photons]
    pairs = [(p["id"], p["path"]) for p in photons]
    if "coeffs" in program:
        coeffs = [
            complex(c[0], c[1]) if isinstance(c, list) else complex(c)
            for c in program["coeffs"]
        ]
        state = polarization_state(coeffs, pairs)
    else:
        n = len(photons)
        coeffs = np.zeros(2**n, dtype=complex)
        single = []
        for p in photons:
            spec = p.get("state", "H")
            if spec == "H":
                single.append(np.array([1, 0], dtype=complex))
            elif spec == "V":
                single.append(np.array([0, 1], dtype=complex))
            elif spec == "+":
                single.append(np.array([1, 1], dtype=complex) / math.sqrt(2))
            elif spec == "-":
                single.append(np.array([1, -1], dtype=complex) / math.sqrt(2))
            else:
                single.append(
                    np.array([complex(c[0], c[1]) for c in spec], dtype=complex)
                )
        vec = single[0]
        for v in single[1:]:
            vec = np.kron(vec, v)
        state = polarization_state(vec, pairs)

    alpha = program.get("alpha", DEFAULTS["alpha"])
    theta = program.get("theta", DEFAULTS["theta"])
    reports = []
    rails_memo: dict[str, list[str]] = {}
    for step in program.get("gates", []):
        gate = step["gate"].replace("-", "_")
        a = step.get("alpha", alpha)
        t = step.get("theta", theta)
        if gate == "parity":
            state, rep = parity_gate(state, *step["photons"], a, t)
        elif gate == "cpath" or gate == "c_path":
            state, rep = c_path(state, step["control"], step["target"], a, t)
        elif gate == "to_qudit":
            state, rep = pl.to_qudit_circuit(state, step["photons"], a, t)
            rails_memo[rep.extras["carrier"]] = list(rep.extras["rails"])
        elif gate == "teleport":
            state, rep = pl.to_qudit_teleport(state, step["photons"], a, t)
            rails_memo[rep.extras["carrier"]] = list(rep.extras["rails"])
        elif gate == "from_qudit":
            qudit = step["qudit"]
            rails = step.get("rails") or rails_memo[qudit]
            state, rep = pl.from_qudit(state, qudit, step["companions"], rails, a, t)
        elif gate == "two_qubit":
            u = _matrix_from_json(step["unitary"]) if not isinstance(step["unitary"], str) else parse_unitary_spec(step["unitary"], 4)
            state, rep = pl.two_qubit_gate(state, *step["photons"], u, a, t)
        elif gate == "multi_qubit":
            u = _matrix_from_json(step["unitary"]) if not isinstance(step["unitary"], str) else parse_unitary_spec(step["unitary"])
            state, rep = pl.multi_qubit_gate(state, step["photons"], u, a, t)
        elif gate == "toffoli":
            state, rep = pl.toffoli(state, step["controls"], step["target"], a, t)
        elif gate == "cn_u1":
            u = parse_unitary_spec(step["unitary"], 2) if isinstance(step["unitary"], str) else _matrix_from_json(step["unitary"])
            state, rep = pl.cn_u1(state, step["controls"], step["target"], u, a, t)
        elif gate == "cn_uk":
            u = parse_unitary_spec(step["unitary"]) if isinstance(step["unitary"], str) else _matrix_from_json(step["unitary"])
            state, rep = pl.cn_uk(state, step["controls"], step["targets"], u, a, t)
        elif gate == "element":
            from . import elements as el

            op = el.ElementOp(
                step["kind"],
                tuple(sorted(step.get("targets", {}).items())),
                step.get("parameter", 0.0),
            )
            state = el.apply_element(state, op)
            rep = None
        else:
            raise UsageError(f"unknown program gate {step['gate']!r}")
        if rep is not None:
            reports.append(rep.to_dict())
    return {"reports": reports, "final_state": state_to_dict(state)}


def cmd_run(args) -> int:
    program = json.loads(Path(args.program).read_text())
    result = run_program(program)
    _emit(result, "json", args.out)
    return 0


# ---------------------------------------------------------------------------
# other subcommands
# ---------------------------------------------------------------------------


def cmd_sweep(args) -> int:
    spec_data = json.loads(Path(args.spec).read_text())
    spec = an.SweepSpec(
        quantity=spec_data["quantity"],
        grid=spec_data["grid"],
        fixed=spec_data.get("fixed", {}),
    )
    rows = an.run_sweep(spec)
    _emit(rows, args.format, args.out)
    return 0


def cmd_decompose(args) -> int:
    u = parse_unitary_spec(args.matrix)
    mesh = syn.reck_decompose(u)
    err = float(np.max(np.abs(mesh.matrix() - u)))
    payload = {"mesh": mesh.to_dict(), "reconstruction_error": err}
    _emit(payload, "json", args.out)
    return 0


def cmd_fig2(args) -> int:
    data = an.fig2_data(args.gamma, args.theta_probe, args.beta2)
    prefix = args.out_prefix
    Path(f"{prefix}a.csv").write_text(an.pmf_to_csv(data.signal_n, data.signal_pmf))
    for k, (ns, pmf) in enumerate(data.peak_pmfs, start=1):
        Path(f"{prefix}b_k{k}.csv").write_text(an.pmf_to_csv(ns, pmf))
    summary = {
        "beta2": data.beta2,
        "gamma": data.gamma,
        "theta_probe": data.theta_probe,
        "dominant_range": [data.dominant_lo, data.dominant_hi],
        "dominant_count": data.dominant_count,
        "peak_means": data.peak_means,
        "files": [f"{prefix}a.csv"] + [f"{prefix}b_k{k}.csv" for k in range(1, 5)],
    }
    _emit(summary, "json", args.out)
    return 0


def cmd_verify(args) -> int:
    golden = sorted(Path(args.golden_dir).glob("*.json"))
    if not golden:
        print(f"no golden cases under {args.golden_dir}")
        return 2
    failures = 0
    for case_path in golden:
        case = json.loads(case_path.read_text())
        tol = case.get("tolerance", 1e-8)
        try:
            result = run_program(case["program"])
            got = state_from_dict(result["final_state"])
            want = state_from_dict(case["expected_state"])
            fid = fidelity(got, want)
            ok = fid >= 1.0 - tol
        except Exception as exc:  # report, keep going
            print(f"FAIL {case_path.name}: {exc}")
            failures += 1
            continue
        print(f"{'PASS' if ok else 'FAIL'} {case_path.name}: fidelity={fid:.12f}")
        failures += 0 if ok else 1
    print(f"{len(golden) - failures}/{len(golden)} golden cases passed")
    return 0 if failures == 0 else 2


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    p = _Parser(prog="qubusim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--alpha", type=float, default=DEFAULTS["alpha"])
        sp.add_argument("--theta", type=float, default=DEFAULTS["theta"])
        sp.add_argument("--beta2", type=float, default=None,
                        help="set alpha from |beta|^2 = 2 alpha^2 sin^2(theta)")
        sp.add_argument("--gamma", type=float, default=DEFAULTS["gamma"])
        sp.add_argument("--eta", type=float, default=DEFAULTS["eta"])
        sp.add_argument("--theta-probe", type=float, default=DEFAULTS["theta_probe"])
        sp.add_argument("--seed", type=int, default=DEFAULTS["seed"])
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--out", default=None)

    g = sub.add_parser("gate", help="run a named gate demo")
    g.add_argument("name", choices=GATE_NAMES)
    g.add_argument("--input", default="haar:0",
                   help='basis string "HVH", JSON coefficients, or haar[:seed]')
    g.add_argument("--photons", type=int, default=None)
    g.add_argument("--unitary", default=None)
    g.add_argument("--targets", type=int, default=1, help="target count for cn-uk")
    g.add_argument("--layout", choices=("split", "compact"), default="split")
    g.add_argument("--interference", choices=("qft", "hadamard4"), default="qft")
    common(g)
    g.set_defaults(fn=cmd_gate)

    r = sub.add_parser("run", help="execute a JSON circuit program")
    r.add_argument("program")
    common(r)
    r.set_defaults(fn=cmd_run)

    s = sub.add_parser("sweep", help="evaluate a sweep spec file")
    s.add_argument("spec")
    common(s)
    s.set_defaults(fn=cmd_sweep)

    d = sub.add_parser("decompose", help="Reck-decompose a unitary")
    d.add_argument("matrix", help="JSON matrix/file, haar:seed:N, or qft:N")
    common(d)
    d.set_defaults(fn=cmd_decompose)

    f = sub.add_parser("fig2", help="emit detector-model data files")
    f.add_argument("--beta2", type=float, default=20.0)
    f.add_argument("--out-prefix", default="fig2_")
    f.add_argument("--gamma", type=float, default=DEFAULTS["gamma"])
    f.add_argument("--theta-probe", type=float, default=DEFAULTS["theta_probe"])
    f.add_argument("--out", default=None)
    f.set_defaults(fn=cmd_fig2)

    v = sub.add_parser("verify", help="compare against golden state snapshots")
    v.add_argument("golden_dir")
    v.set_defaults(fn=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    if getattr(args, "beta2", None) is not None and args.command != "fig2":
        args.alpha = an.alpha_for_beta2(args.beta2, args.theta)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (GateError, StateError, an.AnalysisError, syn.SynthesisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (json.JSONDecodeError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
