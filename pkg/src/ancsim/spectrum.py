"""Frequency-domain analysis of the regressor.

The regressor u is the secondary path driven by the held reference, so its
transform factors as F(jw) H0(jw) Xd(e^{jwh}) with H0 the hold response.
Folding the squared magnitude over all aliases of the sampling frequency
gives a 2 pi / h periodic energy density S(w). Its peak bounds every
eigenvalue any realized Gram matrix can have, which turns into the usable
step-size range (0, 2 / sup S) for descent on the quadratic problem. The
module also checks the Gram/spectrum consistency: Gram entries are inverse
transforms of S over one period of frequencies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adaptive import WienerProblem
from .statespace import (
    ContinuousStateSpace,
    DimensionError,
    PlantSpecificationError,
    freq_response_grid,
)

__all__ = [
    "SpectralBound",
    "ParsevalReport",
    "zoh_frequency_response",
    "dtft",
    "u_spectrum",
    "spectral_bound",
    "parseval_check",
]


def zoh_frequency_response(omegas, h: float) -> np.ndarray:
    """Frequency response of the zero-order hold, (1 - e^{-jwh}) / (jw).

    Evaluated in product form so w = 0 gives exactly h. Zeros fall at the
    nonzero multiples of the sampling frequency 2 pi / h.
    """
    om = np.asarray(omegas, dtype=float)
    return h * np.exp(-0.5j * om * h) * np.sinc(om * h / (2.0 * np.pi))


def dtft(samples, omegas, h: float) -> np.ndarray:
    """Transform of a sampled sequence: sum_n x[n] e^{-j w n h}."""
    x = np.asarray(samples, dtype=float).reshape(-1)
    om = np.asarray(omegas, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("empty sample record")
    phases = np.exp(-1j * np.outer(om, np.arange(x.size) * h))
    return phases @ x


def u_spectrum(
    secondary: ContinuousStateSpace,
    xd_spectrum,
    omegas,
    h: float,
) -> np.ndarray:
    """Continuous-time transform of the regressor at the given frequencies.

    ``xd_spectrum`` is the value of the reference sequence transform at the
    same frequencies (scalar or array broadcastable against ``omegas``).
    """
    if not secondary.is_siso:
        raise DimensionError("regressor spectrum expects a SISO secondary path")
    om = np.asarray(omegas, dtype=float).ravel()
    resp = freq_response_grid(secondary, om)[:, 0, 0]
    return resp * zoh_frequency_response(om, h) * np.asarray(xd_spectrum)


@dataclass(frozen=True)
class SpectralBound:
    """Aliased energy density of the regressor over one frequency period.

    ``values[i]`` is S at ``omegas[i]``; ``peak`` its maximum; ``mu_limit``
    the resulting usable step-size bound 2 / peak (inf when the record is
    silent). The grid uses cell midpoints over (-pi/h, pi/h), so summing
    values * spacing is a midpoint quadrature of the period integral.
    """

    omegas: np.ndarray
    values: np.ndarray
    peak: float
    mu_limit: float
    h: float
    n_alias: int

    @property
    def spacing(self) -> float:
        return float(self.omegas[1] - self.omegas[0])


def spectral_bound(
    secondary: ContinuousStateSpace,
    xd_samples,
    h: float,
    grid_size: int = 4096,
    n_alias: int = 64,
) -> SpectralBound:
    """Evaluate the aliased energy density on a frequency grid.

    S(w) = (1/h) |Xd(e^{jwh})|^2 * sum_k |F H0 (j(w + 2 pi k / h))|^2 with
    the alias sum truncated at ``n_alias``. Requires a strictly proper
    secondary path (a feedthrough term would make the alias sum diverge).
    """
    if not secondary.is_siso:
        raise DimensionError("spectral bound expects a SISO secondary path")
    if not secondary.is_strictly_proper:
        raise PlantSpecificationError(
            "spectral bound requires a strictly proper secondary path"
        )
    if not h > 0.0:
        raise ValueError(f"period must be positive, got {h}")
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    if n_alias < 0:
        raise ValueError("n_alias must be nonnegative")

    spacing = 2.0 * np.pi / h / grid_size
    om = -np.pi / h + (np.arange(grid_size) + 0.5) * spacing
    xd = dtft(xd_samples, om, h)

    folded = np.zeros(grid_size)
    for k in range(-n_alias, n_alias + 1):
        omk = om + 2.0 * np.pi * k / h
        resp = freq_response_grid(secondary, omk)[:, 0, 0]
        resp *= zoh_frequency_response(omk, h)
        folded += np.abs(resp) ** 2
    values = np.abs(xd) ** 2 / h * folded

    peak = float(values.max())
    mu_limit = float("inf") if peak == 0.0 else 2.0 / peak
    return SpectralBound(
        omegas=om,
        values=values,
        peak=peak,
        mu_limit=mu_limit,
        h=float(h),
        n_alias=int(n_alias),
    )


@dataclass(frozen=True)
class ParsevalReport:
    """Comparison of Gram entries against inverse transforms of S.

    ``phi_spectral[k, l]`` is (h / 2 pi) int S(w) cos(w (k-l) h) dw over one
    frequency period (midpoint rule on the bound's grid). Deviations are
    reported for the leading entry and entrywise against the Gram scale.
    """

    phi_spectral: np.ndarray
    entry00_rel: float
    max_abs_deviation: float
    scale_rel_deviation: float


def parseval_check(problem: WienerProblem, bound: SpectralBound) -> ParsevalReport:
    """Check the recorded Gram matrix against the spectrum integral."""
    n = problem.n_taps
    weight = bound.h / (2.0 * np.pi) * bound.spacing
    lag_vals = np.empty(n)
    for m in range(n):
        lag_vals[m] = weight * float(bound.values @ np.cos(bound.omegas * m * bound.h))
    phi_s = np.empty((n, n))
    for k in range(n):
        for l in range(n):
            phi_s[k, l] = lag_vals[abs(k - l)]

    diff = np.abs(phi_s - problem.Phi)
    scale = max(float(np.abs(problem.Phi).max()), 1e-300)
    entry00 = abs(problem.Phi[0, 0])
    entry00_rel = float(diff[0, 0] / entry00) if entry00 > 0.0 else float(diff[0, 0] > 0.0)
    return ParsevalReport(
        phi_spectral=phi_s,
        entry00_rel=entry00_rel,
        max_abs_deviation=float(diff.max()),
        scale_rel_deviation=float(diff.max() / scale),
    )
