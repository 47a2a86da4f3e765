"""Measurement-noise models for projected pairs and the derived noise level.

The default model perturbs the first row of each matrix with independent
Gaussians and imputes the rest from the Hermitian-Toeplitz structure,
matching how the entries would be measured.  A bounded-estimator sampler
simulates per-entry Monte Carlo readout, and a concentration estimate maps
per-entry statistics to a spectral-norm scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundViolation, InvalidInput
from .linalg import HermitianMatrix, spectral_norm, toeplitz_hermitian

__all__ = [
    "NoiseSpec",
    "NoiseLevel",
    "toeplitz_gaussian_noise",
    "dense_gaussian_hermitian",
    "monte_carlo_estimate",
    "spectral_noise_level",
    "concentration_bound",
]


@dataclass(frozen=True)
class NoiseSpec:
    """How to corrupt a projected pair.

    ``model`` is ``"toeplitz-gaussian"``, ``"dense-gaussian"`` or
    ``"monte-carlo"``; ``sigma`` the Gaussian entry scale; ``m``/``bound``
    the per-entry sample count and estimator bound of the Monte Carlo
    model.
    """

    model: str = "toeplitz-gaussian"
    sigma: float = 0.0
    m: int = 1
    bound: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.model not in ("toeplitz-gaussian", "dense-gaussian", "monte-carlo"):
            raise InvalidInput(f"unknown noise model {self.model!r}")
        if self.sigma < 0.0:
            raise InvalidInput("sigma must be nonnegative")
        if self.m < 1 or self.bound <= 0.0:
            raise InvalidInput("need m >= 1 and bound > 0")


@dataclass(frozen=True)
class NoiseLevel:
    """Spectral-norm sizes of the two perturbations and their combination
    eta = sqrt(eta_h^2 + eta_s^2)."""

    eta_h: float
    eta_s: float
    eta: float


def toeplitz_gaussian_noise(
    n: int, sigma: float, rng: np.random.Generator
) -> HermitianMatrix:
    """Hermitian-Toeplitz Gaussian perturbation of dimension n.

    The lag-0 entry is real N(0, sigma^2); lags 1..n-1 are complex with
    independent real and imaginary parts N(0, sigma^2/2), so every entry
    has second moment sigma^2.  Remaining entries are imputed.
    """
    if n < 1:
        raise InvalidInput("n must be at least 1")
    row = np.zeros(n, dtype=complex)
    row[0] = rng.normal(0.0, sigma)
    if n > 1:
        half = sigma / np.sqrt(2.0)
        row[1:] = rng.normal(0.0, half, n - 1) + 1j * rng.normal(0.0, half, n - 1)
    return toeplitz_hermitian(row)


def dense_gaussian_hermitian(
    n: int, sigma: float, rng: np.random.Generator
) -> HermitianMatrix:
    """sigma * (G + G^T)/2 for a real standard Gaussian G; real symmetric."""
    if n < 1:
        raise InvalidInput("n must be at least 1")
    g = rng.standard_normal((n, n))
    return HermitianMatrix(sigma * (g + g.T) / 2)


def monte_carlo_estimate(
    first_row, m: int, bound: float, rng: np.random.Generator
) -> np.ndarray:
    """Bounded-estimator readout of a Hermitian-Toeplitz first row.

    Each real and imaginary part x (|x| <= bound required) is replaced by
    the mean of m i.i.d. +-bound draws with matching mean, i.e. the
    estimator is unbiased, bounded, and has variance (bound^2 - x^2)/m.
    The lag-0 entry stays exactly real so the imputed matrix remains
    Hermitian-Toeplitz.
    """
    row = np.asarray(first_row, dtype=complex)
    if row.ndim != 1 or row.size < 1:
        raise InvalidInput(f"first row must be a nonempty vector, got {row.shape}")
    if m < 1 or bound <= 0.0:
        raise InvalidInput("need m >= 1 and bound > 0")
    if np.abs(row.real).max() > bound or np.abs(row.imag).max() > bound:
        raise BoundViolation(
            f"entry magnitude exceeds the estimator bound {bound:.3e}"
        )
    if abs(row[0].imag) != 0.0:
        raise InvalidInput("lag-0 entry of a Hermitian-Toeplitz row must be real")

    def estimate(x: np.ndarray) -> np.ndarray:
        p = (1.0 + x / bound) / 2.0
        hits = rng.binomial(m, p)
        return bound * (2.0 * hits / m - 1.0)

    out = estimate(row.real).astype(complex)
    if row.size > 1:
        out[1:] += 1j * estimate(row.imag[1:])
    return out


def spectral_noise_level(delta_h, delta_s) -> NoiseLevel:
    """Combined noise level of a pair of perturbations."""
    eta_h = spectral_norm(delta_h)
    eta_s = spectral_norm(delta_s)
    return NoiseLevel(eta_h=eta_h, eta_s=eta_s, eta=float(np.hypot(eta_h, eta_s)))


def concentration_bound(bound: float, n: int, m: int, c: float = 2.0) -> float:
    """Spectral-norm scale c * B * sqrt(n log n / m) of an imputed matrix
    whose first-row entries average m bounded estimators.

    An order-of-magnitude estimate with an explicit constant, not a
    certified bound.
    """
    if n < 1 or m < 1:
        raise InvalidInput("need n >= 1 and m >= 1")
    return c * bound * float(np.sqrt(n * np.log(max(n, 2)) / m))
