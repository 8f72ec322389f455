"""Small numeric helpers shared by detection and analysis.

Fock overlaps are evaluated in the log domain with lgamma so photon numbers
up to a few hundred never overflow.
"""

from __future__ import annotations

import cmath
import math

import numpy as np


def fock_amplitude(n: int, alpha: complex) -> complex:
    """⟨n|α⟩ = e^{−|α|²/2} αⁿ/√(n!), exact for α = 0."""
    if n < 0:
        raise ValueError("n must be >= 0")
    a2 = alpha.real**2 + alpha.imag**2
    if a2 == 0.0:
        return 1.0 + 0.0j if n == 0 else 0.0 + 0.0j
    log_mag = -0.5 * a2 + 0.5 * n * math.log(a2) - 0.5 * math.lgamma(n + 1)
    phase = n * cmath.phase(alpha)
    return cmath.exp(complex(log_mag, phase))


def poisson_pmf(mu: float, n: int) -> float:
    """Poisson probability mass, log-domain; pmf(0, 0) = 1."""
    if mu < 0:
        raise ValueError("mu must be >= 0")
    if mu == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(-mu + n * math.log(mu) - math.lgamma(n + 1))


def poisson_pmf_array(mu: float, n_max: int) -> np.ndarray:
    return np.array([poisson_pmf(mu, n) for n in range(n_max + 1)])


def default_fock_cutoff(mean: float) -> int:
    """Mean + 12√mean keeps the Poisson tail below ~1e-12."""
    return int(math.ceil(mean + 12.0 * math.sqrt(max(mean, 1.0)) + 10))
