"""End-to-end procedures: multi-photon → single-photon-qudit transforms, their
inverses, and the full logic gates built from them.

Basis ordering is lexicographic with H < V and photon 1 most significant
throughout; a qudit photon's rails are kept in that bit order.  Pipelines run
each composite gate on its representative outcome (every gate has already
validated determinism over all of its own outcomes), aggregate the gate
reports, and dispose of recycled photons before returning.

Desk-scale cap: at most four logical photons per transform; the rail count
doubles per photon and nothing here tries to be clever about it.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

import numpy as np

from . import elements as el
from . import synthesis as syn
from .detection import BELL_CORRECTIONS, bell_outcomes
from .gates import (
    DEFAULT_ALPHA,
    DEFAULT_THETA,
    AGREEMENT_TOL,
    GateError,
    GateReport,
    OutcomeEntry,
    Resources,
    c_path,
    c_path2,
    c_path3,
    disentangler,
    entangler2,
    entangler3,
    inject_plus,
    merging,
    merging_n,
)
from .state import (
    H,
    V,
    Branch,
    HybridState,
    bell_state,
    fidelity,
    plus_photon,
    remove_photon,
    tensor,
)

MAX_PHOTONS = 4

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)


class PipelineError(GateError):
    pass


def _require_product_qubits(s: HybridState, photons: Sequence[str]) -> None:
    for pid in photons:
        if len(s.photon_paths_in_use(pid)) != 1:
            raise PipelineError(f"photon {pid!r} must start single-path")


# ---------------------------------------------------------------------------
# multi-photon -> single-photon qudit (circuit-based)
# ---------------------------------------------------------------------------


def to_qudit_circuit(
    s: HybridState,
    photons: Sequence[str],
    alpha: float = DEFAULT_ALPHA,
    theta: float = DEFAULT_THETA,
) -> tuple[HybridState, GateReport]:
    """Map an n-photon polarization state onto the n-th photon's 2^{n−1} rails.

    Iterates C-path (last control) then C-path-2 stages, each followed by a
    Disentangler, consuming no ancillas: n−1 C-path-family gates and n−1
    Disentanglers total.  Companions exit in |+⟩; the report's extras carry
    the bit-ordered rail list and the carrier photon.
    """
    photons = list(photons)
    n = len(photons)
    if n < 2:
        raise PipelineError("need at least two photons")
    if n > MAX_PHOTONS:
        raise PipelineError(f"desk-scale cap is {MAX_PHOTONS} photons")
    _require_product_qubits(s, photons)
    carrier = photons[-1]
    report = GateReport("to_qudit_circuit", gates=Counter({"to_qudit_circuit": 1}))

    out, rep = c_path(s, photons[-2], carrier, alpha, theta)
    report.absorb(rep)
    rails = list(rep.extras["rails"])
    out, rep = disentangler(out, photons[-2], carrier, v_rails=rails[1:])
    report.absorb(rep)

    for m in range(n - 3, -1, -1):
        out, rep = c_path2(out, photons[m], carrier, rails, alpha, theta)
        report.absorb(rep)
        fresh = list(rep.extras["rails"][len(rails) :])
        rails = rails + fresh  # originals then fresh: new bit is MSB
        out, rep = disentangler(out, photons[m], carrier, v_rails=fresh)
        report.absorb(rep)

    report.extras.update({"rails": tuple(rails), "carrier": carrier})
    return out, report


# ---------------------------------------------------------------------------
# teleportation variant
# ---------------------------------------------------------------------------


def _bell_feedforward_sbit(
    rails: Sequence[str], bit: int, n_bits: int, carrier: str, kind: str
) -> list[el.ElementOp]:
    """σx/σz on one switch-state bit of a rail-encoded qudit."""
    ops = []
    if kind == "x":
        for j in range(len(rails)):
            if not (j >> (n_bits - 1 - bit)) & 1:
                ops.append(
                    el.op(
                        "PathSwitch",
                        photon=carrier,
                        path_a=rails[j],
                        path_b=rails[j | (1 << (n_bits - 1 - bit))],
                    )
                )
    elif kind == "z":
        for j in range(len(rails)):
            if (j >> (n_bits - 1 - bit)) & 1:
                ops.append(el.op("PolPhase", math.pi, photon=carrier, path=rails[j], pol=None))
    return ops


def to_qudit_teleport(
    s: HybridState,
    photons: Sequence[str],
    alpha: float = DEFAULT_ALPHA,
    theta: float = DEFAULT_THETA,
    ancillas: dict | None = None,
    agreement_tol: float = AGREEMENT_TOL,
) -> tuple[HybridState, GateReport]:
    """Teleport n polarization qubits onto one Bell-pair photon's rails.

    Ancillas: one Bell pair |Φ⁺⟩ plus n−1 photons in |+⟩ (auto-built when not
    given as {"bell": ((id, path), (id, path)), "plus": [(id, path), ...]}).
    Each |+⟩ ancilla controls the Bell photon's paths through a C-path /
    C-path-2 gate, then Bell measurements on (input_i, ancilla_i) pairs are
    enumerated and the I/σx/−iσy/σz corrections are fed forward; all 4ⁿ
    outcome combinations land on the same state.
    """
    photons = list(photons)
    n = len(photons)
    if n < 2:
        raise PipelineError("need at least two photons")
    if n > MAX_PHOTONS:
        raise PipelineError(f"desk-scale cap is {MAX_PHOTONS} photons")
    _require_product_qubits(s, photons)
    report = GateReport("to_qudit_teleport", gates=Counter({"to_qudit_teleport": 1}))

    reg = s.registry
    if ancillas is None:
        plus_ids = []
        work = s
        for i in range(n - 1):
            work, pid, _ = inject_plus(work)
            plus_ids.append(pid)
        m1 = work.registry.fresh_photon("bellA")
        p1 = work.registry.fresh_path("bA")
        m2 = work.registry.fresh_photon("bellB")
        p2_ = work.registry.fresh_path("bB")
        work = tensor(work, bell_state("phi+", (m1, p1), (m2, p2_)))
    else:
        try:
            (m1, p1), (m2, p2_) = ancillas["bell"]
            plus_spec = list(ancillas["plus"])
        except (KeyError, TypeError, ValueError) as exc:
            raise PipelineError(f"wrong ancilla inventory: {exc}") from exc
        if len(plus_spec) != n - 1:
            raise PipelineError(
                f"wrong ancilla inventory: need {n - 1} |+⟩ photons, got {len(plus_spec)}"
            )
        work = tensor(s, bell_state("phi+", (m1, p1), (m2, p2_)))
        plus_ids = []
        for pid, path in plus_spec:
            work = tensor(work, plus_photon(pid, path))
            plus_ids.append(pid)
    report.resources.add(Resources(ancilla_photons=n + 1))

    # ancilla q_1 controls first (its bit is most significant); later splits
    # interleave so earlier bits stay more significant
    out, rep = c_path(work, plus_ids[0], m1, alpha, theta)
    report.absorb(rep)
    rails = list(rep.extras["rails"])
    for i in range(1, n - 1):
        out, rep = c_path2(out, plus_ids[i], m1, rails, alpha, theta)
        report.absorb(rep)
        all_rails = rep.extras["rails"]
        fresh = list(all_rails[len(rails) :])
        rails = [r for pair in zip(rails, fresh) for r in pair]

    # Bell measurements with feed-forward, enumerated pair by pair
    n_bits = n - 1
    pairs = [(photons[i], plus_ids[i], ("sbit", i)) for i in range(n - 1)]
    pairs.append((photons[-1], m2, ("pol", None)))
    for pid_in, pid_anc, (target_kind, bit) in pairs:
        records = bell_outcomes(out, pid_in, pid_anc)
        corrected = []
        for rec in records:
            ops = []
            for gate_kind in BELL_CORRECTIONS[rec.value]:
                if target_kind == "pol":
                    kind = "WavePlateX" if gate_kind == "x" else "WavePlateZ"
                    ops.append(el.op(kind, photon=m1, path=None))
                else:
                    ops.extend(_bell_feedforward_sbit(rails, bit, n_bits, m1, gate_kind))
            corrected.append((rec.value, rec.probability, el.apply_elements(rec.collapsed, ops)))
        _, _, ref = max(corrected, key=lambda t: t[1])
        outcomes, min_fid, success = [], 1.0, 0.0
        for value, p, st in corrected:
            f = fidelity(st, ref)
            outcomes.append(OutcomeEntry("bell", value, p, f))
            min_fid = min(min_fid, f)
            if f >= 1.0 - agreement_tol:
                success += p
        stage = GateReport(
            f"bell({pid_in},{pid_anc})",
            success_probability=success,
            min_fidelity=min_fid,
            outcomes=outcomes,
            resources=Resources(detections=1),
        )
        report.absorb(stage)
        out = ref

    report.extras.update({"rails": tuple(rails), "carrier": m1})
    return out, report


# ---------------------------------------------------------------------------
# inverse transform
# ---------------------------------------------------------------------------


def from_qudit(
    s: HybridState,
    qudit: str,
    companions: Sequence[str],
    rails: Sequence[str],
    alpha: float = DEFAULT_ALPHA,
    theta: float = DEFAULT_THETA,
    interference: str = "qft",
    ancilla: str | None = None,
) -> tuple[HybridState, GateReport]:
    """Inverse of to_qudit_circuit: re-entangle companions, then merge rails.

    rails must be in bit order (first companion = most significant bit).  The
    merged photon comes out on a fresh |+⟩ ancilla; the report's extras name
    the carrier.  Round trip with to_qudit_circuit is the identity.
    """
    companions = list(companions)
    rails = list(rails)
    n = len(companions) + 1
    if len(rails) != 2 ** (n - 1):
        raise PipelineError(f"need {2 ** (n - 1)} rails for {n - 1} companions")
    report = GateReport("from_qudit", gates=Counter({"from_qudit": 1}))
    out = s
    q = n - 1
    for m, comp in enumerate(companions):
        rails_a = [r for j, r in enumerate(rails) if not (j >> (q - 1 - m)) & 1]
        rails_b = [r for j, r in enumerate(rails) if (j >> (q - 1 - m)) & 1]
        if n == 2:
            out, rep = entangler2(out, comp, qudit, (rails_a[0], rails_b[0]), alpha, theta)
        else:
            out, rep = entangler3(out, comp, qudit, rails_a, rails_b, alpha, theta)
        report.absorb(rep)

    out, anc_id, _ = inject_plus(out, ancilla)
    report.resources.add(Resources(ancilla_photons=1))
    merge_companions = [(c, None) for c in companions]
    if n == 2:
        out, rep = merging(
            out, qudit, (rails[0], rails[1]), anc_id, merge_companions, alpha, theta,
            keep_recycled=False,
        )
    else:
        out, rep = merging_n(
            out, qudit, rails, anc_id, merge_companions, alpha, theta,
            interference=interference, keep_recycled=False,
        )
    report.absorb(rep)
    report.extras.update({"carrier": anc_id})
    return out, report


# ---------------------------------------------------------------------------
# general two-qubit / multi-qubit gates
# ---------------------------------------------------------------------------


def _fan_out_all_h(
    s: HybridState, qudit: str, rails: Sequence[str]
) -> tuple[HybridState, list[str], list[str]]:
    """PBS each rail into (H stays, V to fresh rail) and flip the V rails.

    Returns (state, 2N all-H rails in lexicographic order, the fresh rails).
    """
    out = s
    wide = []
    fresh_rails = []
    for r in rails:
        fresh = out.registry.fresh_path(r + "v")
        out = el.pbs(out, qudit, r, r, fresh)
        out = el.wave_plate(out, qudit, fresh, "x")
        wide.extend([r, fresh])
        fresh_rails.append(fresh)
    return out, wide, fresh_rails


def _fan_in(s: HybridState, qudit: str, rails: Sequence[str], fresh: Sequence[str]) -> HybridState:
    out = s
    for r, f in zip(rails, fresh):
        out = el.wave_plate(out, qudit, f, "x")
        out = el.pbs_merge(out, qudit, r, f, r)
        out = HybridState(out.registry.without_path(qudit, f), out.branches)
    return out


def two_qubit_gate(
    s: HybridState,
    photon1: str,
    photon2: str,
    u: np.ndarray,
    alpha: float = DEFAULT_ALPHA,
    theta: float = DEFAULT_THETA,
) -> tuple[HybridState, GateReport]:
    """Any U(4) on two polarization qubits, via the single-photon qudit detour.

    Transform to a 4-rail qudit, run the Reck mesh of U, transform back with
    an Entangler-2 and a Merging gate.  The report's extras give the output
    photon order (the second logical qubit exits on the Merging ancilla).
    """
    u = syn.check_unitary(np.asarray(u, dtype=complex))
    if u.shape != (4, 4):
        raise PipelineError("two_qubit_gate needs a 4x4 unitary")
    report = GateReport("two_qubit_gate", gates=Counter({"two_qubit_gate": 1}))

    out, rep = to_qudit_circuit(s, [photon1, photon2], alpha, theta)
    report.absorb(rep)
    rails = list(rep.extras["rails"])

    out, wide, fresh = _fan_out_all_h(out, photon2, rails)
    mesh = syn.reck_decompose(u)
    out = syn.mesh_apply(out, photon2, wide, mesh)
    report.gates.update({"lomi": 1})
    out = _fan_in(out, photon2, rails, fresh)

    out, rep = entangler2(out, photon1, photon2, (rails[0], rails[1]), alpha, theta)
    report.absorb(rep)
    out, anc_id, _ = inject_plus(out)
    report.resources.add(Resources(ancilla_photons=1))
    out, rep = merging(
        out, photon2, (rails[0], rails[1]), anc_id, [(photon1, None)], alpha, theta,
        keep_recycled=False,
    )
    report.absorb(rep)
    report.extras.update({"photon_order": (photon1, anc_id)})
    return out, report


def multi_qubit_gate(
    s: HybridState,
    photons: Sequence[str],
    u: np.ndarray,
    alpha: float = DEFAULT_ALPHA,
    theta: float = DEFAULT_THETA,
    interference: str = "qft",
) -> tuple[HybridState, GateReport]:
    """Any U(2ⁿ) on n polarization qubits (n ≤ 4), lexicographic H/V basis.

    n−1 C-path-family gates map the state onto one photon's 2^{n−1} rails, a
    2ⁿ-port Reck mesh applies U, n−1 Entangler-3 re-entangle the companions,
    and a Merging-n gate (second LOMI: QFT or the σz-only Hadamard variant)
    folds the rails onto one ancilla.
    """
    photons = list(photons)
    n = len(photons)
    u = syn.check_unitary(np.asarray(u, dtype=complex))
    if u.shape != (2**n, 2**n):
        raise PipelineError(f"need a {2**n}x{2**n} unitary for {n} photons")
    if n == 2:
        return two_qubit_gate(s, photons[0], photons[1], u, alpha, theta)
    if n > MAX_PHOTONS:
        raise PipelineError(f"desk-scale cap is {MAX_PHOTONS} photons")
    report = GateReport("multi_qubit_gate", gates=Counter({"multi_qubit_gate": 1}))
    qudit = photons[-1]

    out, rep = to_qudit_circuit(s, photons, alpha, theta)
    report.absorb(rep)
    rails = list(rep.extras["rails"])

    out, wide, fresh = _fan_out_all_h(out, qudit, rails)
    mesh = syn.reck_decompose(u)
    out = syn.mesh_apply(out, qudit, wide, mesh)
    report.gates.update({"lomi": 1})
    out = _fan_in(out, qudit, rails, fresh)

    companions = photons[:-1]
    q = n - 1
    for m, comp in enumerate(companions):
        rails_a = [r for j, r in enumerate(rails) if not (j >> (q - 1 - m)) & 1]
        rails_b = [r for j, r in enumerate(rails) if (j >> (q - 1 - m)) & 1]
        out, rep = entangler3(out, comp, qudit, rails_a, rails_b, alpha, theta)
        report.absorb(rep)

    out, anc_id, _ = inject_plus(out)
    report.resources.add(Resources(ancilla_photons=1))
    out, rep = merging_n(
        out, qudit, rails, anc_id, [(c, None) for c in companions], alpha, theta,
        interference=interference, keep_recycled=False,
    )
    report.absorb(rep)
    report.extras.update({"photon_order": tuple(companions) + (anc_id,)})
    return out, report


# ---------------------------------------------------------------------------
# multi-control gates
# ---------------------------------------------------------------------------


def _control_chain(
    s: HybridState,
    controls: Sequence[str],
    report: GateReport,
    alpha: float,
    theta: float,
    layout: str,
) -> tuple[HybridState, list[tuple[str, str]]]:
    """Split controls C2..Cn pairwise: each photon's second rail carries the
    all-V-so-far component.  Returns the (first, second) rails per split photon.
    """
    out = s
    rails: list[tuple[str, str]] = []
    out, rep = c_path(out, controls[0], controls[1], alpha, theta)
    report.absorb(rep)
    rails.append(rep.extras["rails"])
    for k in range(1, len(controls) - 1):
        use_layout = layout if k == 1 else "split"
        witness = None
        if use_layout == "compact":
            c1_path = out.photon_paths_in_use(controls[0])[0]
            witness = (controls[0], c1_path, H)
        out, rep = c_path3(
            out, controls[k], rails[-1], controls[k + 1], alpha, theta,
            layout=use_layout, witness=witness,
        )
        report.absorb(rep)
        rails.append(rep.extras["rails"])
    return out, rails


def _merge_chain(
    out: HybridState,
    controls: Sequence[str],
    control_rails: list[tuple[str, str]],
    recycled: str,
    recycled_sign: str,
    report: GateReport,
    alpha: float,
    theta: float,
) -> tuple[HybridState, dict]:
    """Merge split controls back, last to first, recycling the detected photon."""
    carriers = {}
    anc = recycled
    sign = recycled_sign
    for k in range(len(controls) - 1, 0, -1):
        if sign == "-":
            out = el.wave_plate(out, anc, None, "z")
        companion = (controls[k - 1], None) if k == 1 else (controls[k - 1], control_rails[k - 2][1])
        out, rep = merging(
            out, controls[k], control_rails[k - 1], anc, [companion], alpha, theta,
            keep_recycled=True,
        )
        report.absorb(rep)
        carriers[controls[k]] = anc
        anc, sign = controls[k], rep.extras["recycled_sign"]
    out = remove_photon(out, anc)
    return out, carriers


def cn_u1(
    s: HybridState,
    controls: Sequence[str],
    target: str,
    u1: np.ndarray,
    alpha: float = DEFAULT_ALPHA,
    theta: float = DEFAULT_THETA,
    layout: str = "split",
) -> tuple[HybridState, GateReport]:
    """C^n(U1): U1 hits the target only when every control is |V⟩.

    One C-path plus n−1 C-path-3 gates route each photon to two rails, U1
    (wave plates) acts on the target's all-V rail alone, and n Merging gates
    fold everything back, recycling one ancilla photon throughout.  The
    extras map each logical qubit to its carrier photon.
    """
    controls = list(controls)
    n = len(controls)
    if n < 1:
        raise PipelineError("need at least one control")
    if n + 1 > MAX_PHOTONS:
        raise PipelineError(f"desk-scale cap is {MAX_PHOTONS} photons")
    u1 = syn.check_unitary(np.asarray(u1, dtype=complex))
    if u1.shape != (2, 2):
        raise PipelineError("U1 must be 2x2")
    _require_product_qubits(s, controls + [target])
    report = GateReport("cn_u1", gates=Counter({"cn_u1": 1}))

    if n == 1:
        out, rep = c_path(s, controls[0], target, alpha, theta)
        report.absorb(rep)
        t_rails = rep.extras["rails"]
        control_rails = []
        witness_companion = (controls[0], None)
    else:
        out, control_rails = _control_chain(s, controls, report, alpha, theta, layout)
        out, rep = c_path3(
            out, controls[-1], control_rails[-1], target, alpha, theta,
            layout=layout if n == 2 else "split",
            witness=(controls[0], s.photon_paths_in_use(controls[0])[0], H)
            if layout == "compact" and n == 2
            else None,
        )
        report.absorb(rep)
        t_rails = rep.extras["rails"]
        witness_companion = (controls[-1], control_rails[-1][1])

    if np.allclose(u1, SIGMA_X):
        out = el.wave_plate(out, target, t_rails[1], "x")
    else:
        out = el.pol_unitary(out, target, t_rails[1], u1)

    out, anc_id, _ = inject_plus(out)
    report.resources.add(Resources(ancilla_photons=1))
    out, rep = merging(
        out, target, t_rails, anc_id, [witness_companion], alpha, theta, keep_recycled=True
    )
    report.absorb(rep)
    carriers = {target: anc_id}
    if n == 1:
        if rep.extras["recycled_sign"] == "-":
            out = el.wave_plate(out, target, None, "z")
        out = remove_photon(out, target)
        carriers[controls[0]] = controls[0]
    else:
        out, chain_carriers = _merge_chain(
            out, controls, control_rails, target, rep.extras["recycled_sign"],
            report, alpha, theta,
        )
        carriers.update(chain_carriers)
        carriers[controls[0]] = controls[0]
    order = tuple(carriers[c] for c in controls) + (carriers[target],)
    report.extras.update({"photon_order": order, "carriers": carriers})
    return out, report


def toffoli(
    s: HybridState,
    controls: Sequence[str],
    target: str,
    alpha: float = DEFAULT_ALPHA,
    theta: float = DEFAULT_THETA,
    layout: str = "split",
) -> tuple[HybridState, GateReport]:
    """C^n(σx): flips the target iff every control is |V⟩."""
    out, report = cn_u1(s, controls, target, SIGMA_X, alpha, theta, layout)
    report.gate = "toffoli"
    report.gates.update({"toffoli": 1})
    return out, report


def _conditional_pol_unitary(
    s: HybridState, targets: Sequence[str], active_rails: Sequence[str], u: np.ndarray
) -> HybridState:
    """Apply U on the joint polarization of the targets, only in branches where
    every target sits on its active rail.  Explicitly idealized block unitary
    (the couplings that would realize it gate-by-gate are not constructed)."""
    k = len(targets)
    groups: dict[tuple, dict[int, complex]] = {}
    passive = []
    for br in s.branches:
        slots = {t[0]: (t[1], t[2]) for t in br.photons}
        if all(slots[t][0] == active_rails[i] for i, t in enumerate(targets)):
            rest = tuple(sorted((q, p, pol) for q, p, pol in br.photons if q not in targets))
            idx = 0
            for t in targets:
                idx = (idx << 1) | (1 if slots[t][1] == V else 0)
            groups.setdefault((rest, br.qubus), {})[idx] = (
                groups.setdefault((rest, br.qubus), {}).get(idx, 0) + br.amplitude
            )
        else:
            passive.append(br)
    out = list(passive)
    for (rest, qubus), amps in groups.items():
        vec = np.zeros(2**k, dtype=complex)
        for idx, a in amps.items():
            vec[idx] = a
        vec = u @ vec
        for idx in range(2**k):
            if abs(vec[idx]) < 1e-300:
                continue
            slots = tuple(
                (t, active_rails[i], V if (idx >> (k - 1 - i)) & 1 else H)
                for i, t in enumerate(targets)
            )
            out.append(Branch(vec[idx], tuple(sorted(rest + slots)), qubus))
    return HybridState(s.registry, out).canonical()


def cn_uk(
    s: HybridState,
    controls: Sequence[str],
    targets: Sequence[str],
    uk: np.ndarray,
    alpha: float = DEFAULT_ALPHA,
    theta: float = DEFAULT_THETA,
) -> tuple[HybridState, GateReport]:
    """C^n(U_k): a k-qubit unitary on the targets when every control is |V⟩.

    The control chain, target routing and every Merging gate use the real
    coupling machinery; for k ≥ 2 the conditional U_k itself is applied as an
    explicit block unitary on the routed rails (k = 1 falls back to cn_u1's
    fully physical wave plates).
    """
    controls, targets = list(controls), list(targets)
    if len(targets) == 1:
        return cn_u1(s, controls, targets[0], uk, alpha, theta)
    n, k = len(controls), len(targets)
    if n + k > MAX_PHOTONS:
        raise PipelineError(f"desk-scale cap is {MAX_PHOTONS} photons")
    uk = syn.check_unitary(np.asarray(uk, dtype=complex))
    if uk.shape != (2**k, 2**k):
        raise PipelineError(f"U_k must be {2**k}x{2**k}")
    _require_product_qubits(s, controls + targets)
    report = GateReport("cn_uk", gates=Counter({"cn_uk": 1}))

    # every target is routed off the same control: its all-V rail (or, for a
    # single control, its polarization directly)
    target_rails = []
    if n == 1:
        out = s
        control_rails: list[tuple[str, str]] = []
        flag = (controls[0], None)
        for t in targets:
            out, rep = c_path(out, controls[0], t, alpha, theta)
            report.absorb(rep)
            target_rails.append(rep.extras["rails"])
    else:
        out, control_rails = _control_chain(s, controls, report, alpha, theta, "split")
        flag = (controls[-1], control_rails[-1][1])
        for t in targets:
            out, rep = c_path3(out, controls[-1], control_rails[-1], t, alpha, theta)
            report.absorb(rep)
            target_rails.append(rep.extras["rails"])

    active = [rails[1] for rails in target_rails]
    out = _conditional_pol_unitary(out, targets, active, uk)
    report.extras["idealized_uk"] = True

    carriers = {}
    out, anc_id, _ = inject_plus(out)
    report.resources.add(Resources(ancilla_photons=1))
    anc, sign = anc_id, "+"
    for i in range(k - 1, -1, -1):
        if sign == "-":
            out = el.wave_plate(out, anc, None, "z")
        out, rep = merging(
            out, targets[i], target_rails[i], anc, [flag], alpha, theta,
            keep_recycled=True,
        )
        report.absorb(rep)
        carriers[targets[i]] = anc
        anc, sign = targets[i], rep.extras["recycled_sign"]

    if n == 1:
        if sign == "-":
            out = el.wave_plate(out, anc, None, "z")
        out = remove_photon(out, anc)
        carriers[controls[0]] = controls[0]
    else:
        out, chain_carriers = _merge_chain(
            out, controls, control_rails, anc, sign, report, alpha, theta
        )
        carriers.update(chain_carriers)
        carriers[controls[0]] = controls[0]
    order = tuple(carriers[c] for c in controls) + tuple(carriers[t] for t in targets)
    report.extras.update({"photon_order": order, "carriers": carriers})
    return out, report
