"""Quantitative studies: parity-gate error probability, QND peak separation,
photon-number distributions, and parameter sweeps.

Two routes to the error probability are kept deliberately independent: the
closed-form asymptotic estimate and the exact sum over the Fock outcomes of
the difference port weighted by the no-click probability of the probe.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .detection import poisson_overlap, probe_peak_mean
from .numerics import default_fock_cutoff, poisson_pmf
from .state import random_polarization_state
from .gates import parity_gate


class AnalysisError(ValueError):
    pass


def beta_squared(alpha: float, theta: float) -> float:
    """|β|² = 2 α² sin²θ: mean photon number of the measured difference port."""
    return 2.0 * alpha**2 * math.sin(theta) ** 2


def alpha_for_beta2(beta2: float, theta: float) -> float:
    return math.sqrt(beta2 / (2.0 * math.sin(theta) ** 2))


def error_probability_formula(
    alpha: float, theta: float, gamma: float, eta: float, theta_probe: float
) -> float:
    """Closed-form estimate exp{−2(1−e^{−ηγ²θ_p²/2}) α² sin²θ} for θ ≪ 1."""
    if alpha < 0 or gamma < 0 or not 0.0 <= eta <= 1.0:
        raise AnalysisError("parameters must be positive with eta in [0, 1]")
    damp = 1.0 - math.exp(-0.5 * eta * gamma**2 * theta_probe**2)
    return math.exp(-2.0 * damp * alpha**2 * math.sin(theta) ** 2)


def error_probability_direct(
    alpha: float,
    theta: float,
    gamma: float,
    eta: float,
    theta_probe: float,
    cutoff: int | None = None,
) -> float:
    """Exact ‖Σ_n ⟨n|±β⟩ Π₀^{1/2} |(γe^{inθ_p}−γ)/√2⟩‖².

    The cross terms vanish on the orthogonal |n⟩, leaving
    Σ_n Poisson(|β|²; n) · e^{−η μ_n} with μ_n = 2γ² sin²(nθ_p/2).
    """
    if alpha < 0 or gamma < 0 or not 0.0 <= eta <= 1.0:
        raise AnalysisError("parameters must be positive with eta in [0, 1]")
    b2 = beta_squared(alpha, theta)
    if cutoff is None:
        cutoff = default_fock_cutoff(b2)
    mass = math.fsum(poisson_pmf(b2, n) for n in range(cutoff + 1))
    if 1.0 - mass > 1e-14:
        raise AnalysisError(
            f"cutoff {cutoff} leaves Poisson tail {1.0 - mass:.3e} > 1e-14"
        )
    return math.fsum(
        poisson_pmf(b2, n) * math.exp(-eta * probe_peak_mean(gamma, theta_probe, n))
        for n in range(cutoff + 1)
    )


def peak_overlap(gamma: float, theta_probe: float, k1: int, k2: int) -> float:
    """Σ_n min(Poisson(μ_{k1}), Poisson(μ_{k2})) for two probe readout peaks."""
    if k1 == k2:
        raise AnalysisError("peak overlap of a peak with itself")
    mu1 = probe_peak_mean(gamma, theta_probe, k1)
    mu2 = probe_peak_mean(gamma, theta_probe, k2)
    return poisson_overlap(mu1, mu2)


@dataclass
class Fig2Data:
    """Photon-number data for the two detector-model panels.

    signal: Poisson pmf of the measured beam at |β|²; the dominant range is
    every n whose pmf clears `dominance` × the peak value; dominance has no
    canonical definition, so the count is reported, never asserted.  peaks: the probe
    difference-port pmfs for k = 1..4.
    """

    beta2: float
    gamma: float
    theta_probe: float
    signal_n: np.ndarray
    signal_pmf: np.ndarray
    dominant_lo: int
    dominant_hi: int
    dominant_count: int
    peak_means: list[float]
    peak_pmfs: list[tuple[np.ndarray, np.ndarray]] = field(repr=False)


def fig2_data(
    gamma: float, theta_probe: float, beta2: float, dominance: float = 1e-4
) -> Fig2Data:
    cutoff = default_fock_cutoff(beta2)
    ns = np.arange(cutoff + 1)
    pmf = np.array([poisson_pmf(beta2, int(n)) for n in ns])
    thr = dominance * pmf.max()
    dominant = np.nonzero(pmf >= thr)[0]
    means = [probe_peak_mean(gamma, theta_probe, k) for k in range(1, 5)]
    peaks = []
    for mu in means:
        c = default_fock_cutoff(mu)
        kn = np.arange(c + 1)
        peaks.append((kn, np.array([poisson_pmf(mu, int(n)) for n in kn])))
    return Fig2Data(
        beta2=beta2,
        gamma=gamma,
        theta_probe=theta_probe,
        signal_n=ns,
        signal_pmf=pmf,
        dominant_lo=int(dominant[0]),
        dominant_hi=int(dominant[-1]),
        dominant_count=int(dominant.size),
        peak_means=means,
        peak_pmfs=peaks,
    )


def pmf_to_csv(ns: Sequence[int], probs: Sequence[float]) -> str:
    """Two-column (n, probability) CSV with a header row."""
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["n", "probability"])
    for n, p in zip(ns, probs):
        w.writerow([int(n), repr(float(p))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

QUANTITIES = ("P_E_formula", "P_E_direct", "peak_overlap", "gate_fidelity", "pmf")

_DEFAULTS = {
    "alpha": math.sqrt(4000.0),
    "theta": 0.05,
    "gamma": 100.0,
    "eta": 0.95,
    "theta_probe": 0.05,
    "k1": 1,
    "k2": 2,
    "beta2": None,
    "state_seed": 0,
}


@dataclass(frozen=True)
class SweepSpec:
    """A quantity evaluated over the Cartesian grid (row order = grid order)."""

    quantity: str
    grid: dict
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise AnalysisError(f"unknown sweep quantity {self.quantity!r}")
        if not self.grid or any(len(v) == 0 for v in self.grid.values()):
            raise AnalysisError("sweep grid must be non-empty")
        for key in (*self.grid, *self.fixed):
            if key not in _DEFAULTS:
                raise AnalysisError(f"unknown sweep parameter {key!r}")


def _resolve(params: dict) -> dict:
    p = dict(_DEFAULTS)
    p.update(params)
    if p["beta2"] is not None:
        p["alpha"] = alpha_for_beta2(p["beta2"], p["theta"])
    return p


def _gate_fidelity(p: dict) -> float:
    """Probability-weighted parity-gate outcome fidelity on a fixed Haar input."""
    s = random_polarization_state(2, int(p["state_seed"]))
    _, report = parity_gate(s, "1", "2", p["alpha"], p["theta"])
    return math.fsum(o.probability * o.fidelity for o in report.outcomes) / math.fsum(
        o.probability for o in report.outcomes
    )


def run_sweep(spec: SweepSpec) -> list[dict]:
    """Evaluate the grid; one row per point (plus one row per n for pmf)."""
    keys = list(spec.grid.keys())
    rows = []
    for values in itertools.product(*(spec.grid[k] for k in keys)):
        point = dict(zip(keys, values))
        params = _resolve({**spec.fixed, **point})
        try:
            if spec.quantity == "P_E_formula":
                out = {
                    "value": error_probability_formula(
                        params["alpha"], params["theta"], params["gamma"],
                        params["eta"], params["theta_probe"],
                    )
                }
            elif spec.quantity == "P_E_direct":
                out = {
                    "value": error_probability_direct(
                        params["alpha"], params["theta"], params["gamma"],
                        params["eta"], params["theta_probe"],
                    )
                }
            elif spec.quantity == "peak_overlap":
                out = {
                    "value": peak_overlap(
                        params["gamma"], params["theta_probe"],
                        int(params["k1"]), int(params["k2"]),
                    )
                }
            elif spec.quantity == "gate_fidelity":
                out = {"value": _gate_fidelity(params)}
            else:  # pmf
                b2 = params["beta2"]
                if b2 is None:
                    b2 = beta_squared(params["alpha"], params["theta"])
                cutoff = default_fock_cutoff(b2)
                out = {
                    "pmf": [
                        {"n": n, "probability": poisson_pmf(b2, n)}
                        for n in range(cutoff + 1)
                    ]
                }
        except Exception as exc:
            raise AnalysisError(f"sweep point {point} failed: {exc}") from exc
        if "pmf" in out:
            for entry in out["pmf"]:
                rows.append({**point, **entry})
        else:
            rows.append({**point, **out})
    return rows
