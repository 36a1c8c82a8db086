"""Spectral amplitude assembly and the delay-time correlation function.

The spectral amplitude at two-photon detuning delta is

    A(delta) = kappa_bar * sinc(rho_c_bar + rho_m_bar)
               * exp(i (rho_c_bar + rho_m_bar)) * B(delta)

and the two-photon correlation function is the squared continuous Fourier
transform G2(tau) = | (1/2pi) Integral[ A(delta) exp(-i delta tau) ] |^2.

The transform is a trapezoid-weighted DFT with an explicit
exp(-i delta_min tau) phase factor, not a bare FFT, so the tau = 0 origin
and the 1/2pi normalization are exact for the sampled amplitude.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridOverflowError, ParameterError
from .kernels import (ANALYTIC, QuadratureSpec, complex_sinc, etalon_response,
                      kappa_bar, rho_c_bar, rho_m_bar)
from .params import SystemParams

MIN_GRID_POINTS = 2**14
# |A| at the grid edge must fall below this fraction of the peak |A|
EDGE_DECAY = 1e-6
MAX_WIDENINGS = 3


@dataclass(frozen=True)
class DetuningGrid:
    """Uniform, zero-symmetric two-photon-detuning grid (units of Gamma)."""

    delta_min: float
    delta_max: float
    n_points: int

    def __post_init__(self):
        if self.delta_min != -self.delta_max or not self.delta_max > 0:
            raise ParameterError("grid must be symmetric about delta = 0")
        n = self.n_points
        if n < MIN_GRID_POINTS or (n & (n - 1)) != 0:
            raise ParameterError(
                f"n_points must be a power of two >= {MIN_GRID_POINTS}")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.delta_min, self.delta_max, self.n_points)

    @property
    def spacing(self) -> float:
        return 2.0 * self.delta_max / (self.n_points - 1)

    def widened(self) -> "DetuningGrid":
        """Double the span and the point count (same spacing class)."""
        return DetuningGrid(2.0 * self.delta_min, 2.0 * self.delta_max,
                            2 * self.n_points)


def _next_pow2(n):
    return 1 << max(int(n) - 1, 1).bit_length()


def auto_grid(params: SystemParams) -> DetuningGrid:
    """Size the detuning grid from the sharpest spectral feature.

    The span is max(20 Gamma, 5 Gamma_e), wide enough that the quartic
    etalon roll-off dominates the edges.  The spacing resolves
    min(gamma_dec, Gamma_e/100) with at least 4 samples: the narrowest
    structure in A(delta) sits on the ground-state-decoherence scale,
    two orders below Gamma, and a grid tied to Gamma alone would alias it.
    A gamma_dec of exactly 0 is excluded from the minimum (the etalon
    scale then rules).
    """
    delta_max = max(20.0 * params.gamma_natural, 5.0 * params.gamma_etalon)
    candidates = [params.gamma_etalon / 100.0]
    if params.gamma_dec > 0.0:
        candidates.append(params.gamma_dec)
    spacing = min(candidates) / 4.0
    n = max(MIN_GRID_POINTS, _next_pow2(math.ceil(2.0 * delta_max / spacing)))
    return DetuningGrid(-delta_max, delta_max, n)


@dataclass(frozen=True)
class SpectralAmplitude:
    """A(delta) sampled on a detuning grid, with the generating params."""

    grid: DetuningGrid
    amplitude: np.ndarray
    params: SystemParams

    @property
    def peak_magnitude(self) -> float:
        return float(np.max(np.abs(self.amplitude)))


def amplitude_at(delta, params: SystemParams,
                 quad: QuadratureSpec = ANALYTIC):
    """The integrand A(delta) itself, at arbitrary detunings.

    Accepts scalars or arrays on the analytic path; the quadrature paths
    are scalar-only (they exist as oracles, not for production sampling).
    """
    rho = rho_c_bar(delta, params, quad) + rho_m_bar(delta, params, quad)
    kap = kappa_bar(delta, params, quad)
    return (kap * complex_sinc(rho) * np.exp(1j * rho)
            * etalon_response(delta, params.gamma_etalon))


def sample_spectral_amplitude(params: SystemParams,
                              grid_hint: DetuningGrid | None = None,
                              quad: QuadratureSpec = ANALYTIC) -> SpectralAmplitude:
    """Sample A(delta), widening the grid until the edges have decayed.

    Starts from ``grid_hint`` or the auto-sized grid and doubles the span
    (keeping the spacing class) until |A| at both edges is below 1e-6 of
    the peak, giving up after 3 widenings.  A pump-free amplitude is
    identically zero and returned as-is.
    """
    grid = grid_hint if grid_hint is not None else auto_grid(params)
    for _ in range(MAX_WIDENINGS + 1):
        delta = grid.values
        amp = amplitude_at(delta, params, quad)
        peak = float(np.max(np.abs(amp)))
        if peak == 0.0:
            return SpectralAmplitude(grid, amp, params)
        edge = max(abs(amp[0]), abs(amp[-1]))
        if edge <= EDGE_DECAY * peak:
            return SpectralAmplitude(grid, amp, params)
        grid = grid.widened()
    raise GridOverflowError(
        f"spectral amplitude does not decay below {EDGE_DECAY:.0e} of its "
        f"peak within {MAX_WIDENINGS} grid widenings")


@dataclass(frozen=True)
class WavePacket:
    """G2 on a uniform delay-time grid (tau in 1/Gamma, g2 arbitrary units)."""

    tau: np.ndarray
    g2: np.ndarray
    params: SystemParams

    @property
    def spacing(self) -> float:
        return float(self.tau[1] - self.tau[0])


def wave_packet(sa: SpectralAmplitude, oversample: int = 2) -> WavePacket:
    """Transform the spectral amplitude to the delay-time domain.

    ``oversample`` zero-pads the DFT by that factor to refine the tau
    sampling below the Nyquist step pi/delta_max.  The tau grid spans one
    full period 2 pi/spacing, which exceeds any wave-packet support by
    orders of magnitude, so Parseval holds on it to rounding error.
    """
    if oversample < 1 or (oversample & (oversample - 1)) != 0:
        raise ParameterError("oversample must be a power of two >= 1")
    grid = sa.grid
    delta = grid.values
    d_delta = grid.spacing
    n = grid.n_points
    m = n * oversample

    weighted = sa.amplitude.astype(complex).copy()
    weighted[0] *= 0.5
    weighted[-1] *= 0.5
    padded = np.zeros(m, dtype=complex)
    padded[:n] = weighted

    raw = np.fft.fft(padded)
    # tau_k = 2 pi k/(M d_delta), wrapped to +-half period; the DFT kernel
    # exp(-i j d_delta tau_k) is unchanged by the wrap, the phase factor
    # below is not and must use the physical tau
    tau = 2.0 * np.pi * np.fft.fftfreq(m, d=d_delta)
    g = (d_delta / (2.0 * np.pi)) * np.exp(-1j * grid.delta_min * tau) * raw
    order = np.argsort(tau, kind="stable")
    return WavePacket(tau[order], np.abs(g[order]) ** 2, sa.params)


def biphoton_spectrum(sa: SpectralAmplitude) -> np.ndarray:
    """|A(delta)|^2 over the grid, normalized to unit peak."""
    power = np.abs(sa.amplitude) ** 2
    peak = float(np.max(power))
    if peak == 0.0:
        raise ParameterError("empty spectrum: amplitude is identically zero")
    return power / peak
