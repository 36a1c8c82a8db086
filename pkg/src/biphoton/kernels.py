"""Doppler-averaged response kernels of the biphoton source.

Three complex response functions of the two-photon detuning delta drive
the spectral amplitude:

* ``kappa_bar``  -- cross-coupling between the signal and probe photons
  (the four-wave-mixing gain),
* ``rho_c_bar``  -- probe self-response of the coherently prepared atoms
  (the EIT medium),
* ``rho_m_bar``  -- probe self-response of the impurity atoms, which act
  as bare two-level absorbers.

Each is a thermal average over the Doppler shift omega_D with the Gaussian
weight exp(-omega_D^2/Gamma_D^2)/(sqrt(pi) Gamma_D).  Because every
integrand is a rational function of omega_D with simple poles off the real
axis, the average reduces exactly to one or two evaluations of the
Gaussian pole integral J (a Faddeeva evaluation); that is the
``faddeeva_analytic`` path.  Two brute-force quadrature paths over a
truncated support (``dense_trapezoid`` and ``adaptive_panels``) serve as
independent oracles.

Sign convention: all three responses enter the amplitude through
sinc(rho) * exp(i rho), so a *positive* imaginary part attenuates the
probe.  rho_m_bar is written in that absorbing convention (its imaginary
part is strictly positive for all real delta), which is also the two-level
limit (Omega_c -> 0) of rho_c_bar.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ParameterError
from .faddeeva import SQRT_PI, gaussian_pole_integral
from .params import SystemParams

METHOD_ANALYTIC = "faddeeva_analytic"
METHOD_TRAPEZOID = "dense_trapezoid"
METHOD_ADAPTIVE = "adaptive_panels"
_METHODS = (METHOD_ANALYTIC, METHOD_ADAPTIVE, METHOD_TRAPEZOID)

# |delta + i*gamma_dec| below this is treated as exactly on two-photon
# resonance with gamma_dec = 0; keeps the pole Omega_c^2/(4q) finite.
_Q_FLOOR = 1e-200
# relative pole separation below which the partial-fraction split of
# kappa_bar loses accuracy and the quadrature fallback is used instead
_POLE_MERGE_RTOL = 1e-9


@dataclass(frozen=True)
class QuadratureSpec:
    """How to evaluate the Doppler averages.

    ``support_halfwidth`` truncates the Gaussian integral at that many
    Doppler widths; the default 8 leaves a tail mass below 1e-27, far
    under every tolerance used in the package.
    """

    method: str = METHOD_ANALYTIC
    panel_tolerance: float = 1e-10
    trapezoid_points: int = 1_000_000
    support_halfwidth: float = 8.0
    max_panels: int = 20_000

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ParameterError(f"unknown quadrature method {self.method!r}")
        if not self.panel_tolerance > 0:
            raise ParameterError("panel_tolerance must be positive")
        if self.trapezoid_points < 1000:
            raise ParameterError("trapezoid_points must be >= 1000")
        if self.support_halfwidth < 6:
            raise ParameterError("support_halfwidth must be >= 6")
        if self.max_panels < 16:
            raise ParameterError("max_panels must be >= 16")


ANALYTIC = QuadratureSpec()
ORACLE = QuadratureSpec(method=METHOD_TRAPEZOID)


def etalon_response(delta, gamma_etalon):
    """Squared-Lorentzian transmission of the combined filter etalons.

    B(delta) = (1 + 4 delta^2 / Gamma_e^2)^-2, bounded in (0, 1], even in
    delta and monotone decreasing in |delta|.
    """
    if not gamma_etalon > 0:
        raise ParameterError("gamma_etalon must be positive")
    delta = np.asarray(delta, dtype=float)
    out = (1.0 / (1.0 + 4.0 * delta**2 / gamma_etalon**2)) ** 2
    return float(out) if out.ndim == 0 else out


_SINC_SERIES_CUTOFF = 1e-4


def complex_sinc(z):
    """sin(z)/z for complex z with the removable singularity filled in.

    Below |z| = 1e-4 the Taylor series 1 - z^2/6 + z^4/120 is used; its
    truncation error there is ~1e-29, so the two branches agree to well
    under 1e-12 across the switchover.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    small = np.abs(z) < _SINC_SERIES_CUTOFF
    if np.any(small):
        zs2 = z[small] ** 2
        out[small] = 1.0 - zs2 / 6.0 + zs2**2 / 120.0
    if np.any(~small):
        zb = z[~small]
        out[~small] = np.sin(zb) / zb
    return complex(out[0]) if scalar else out


def doppler_average(integrand, params: SystemParams, quad: QuadratureSpec):
    """Gaussian-weighted average of ``integrand(omega_D)`` by quadrature.

    Integrates exp(-w^2/Gamma_D^2)/(sqrt(pi) Gamma_D) * integrand(w) over
    w in [-h*Gamma_D, +h*Gamma_D].  ``integrand`` must accept numpy
    arrays.  Summation order is fixed, so results are bit-identical for a
    fixed spec.  The analytic method is not meaningful here and raises.
    """
    gd = params.gamma_doppler
    half = quad.support_halfwidth * gd

    def weighted(w):
        return np.exp(-(w / gd) ** 2) / (SQRT_PI * gd) * integrand(w)

    if quad.method == METHOD_TRAPEZOID:
        w = np.linspace(-half, half, quad.trapezoid_points)
        return complex(np.trapezoid(weighted(w), w))
    if quad.method == METHOD_ADAPTIVE:
        return _adaptive_panels(weighted, -half, half,
                                quad.panel_tolerance, quad.max_panels)
    raise ParameterError(
        "doppler_average requires a quadrature method, not faddeeva_analytic")


def _adaptive_panels(f, a, b, rel_tol, max_panels):
    """Adaptive Simpson quadrature for a complex vector-callable integrand.

    Left-to-right recursion with Richardson acceptance, so panel order and
    the final sum are deterministic.  Raises ConvergenceError carrying the
    worst panel estimate if the budget runs out.
    """
    # seed scale for the relative tolerance from a coarse pass
    xs = np.linspace(a, b, 33)
    scale = float(np.max(np.abs(f(xs)))) * (b - a)
    if scale == 0.0:
        scale = 1.0
    tol = rel_tol * scale

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    total = 0.0 + 0.0j
    worst = 0.0
    panels = 0
    # explicit stack, rightmost pushed first so traversal is left-to-right
    m0 = 0.5 * (a + b)
    fa, fm, fb = (complex(f(np.array([x]))[0]) for x in (a, m0, b))
    stack = [(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol)]
    while stack:
        x0, x2, f0, f1, f2, s_whole, tol_here = stack.pop()
        xm = 0.5 * (x0 + x2)
        xl = 0.5 * (x0 + xm)
        xr = 0.5 * (xm + x2)
        fl, fr = (complex(f(np.array([x]))[0]) for x in (xl, xr))
        s_left = simpson(x0, xm, f0, fl, f1)
        s_right = simpson(xm, x2, f1, fr, f2)
        err = abs(s_left + s_right - s_whole)
        panels += 1
        if panels > max_panels:
            raise ConvergenceError(
                "adaptive quadrature exceeded its panel budget",
                achieved_tolerance=max(worst, err / 15.0) / scale)
        if err <= 15.0 * tol_here or (x2 - x0) < 1e-12 * (b - a):
            total += s_left + s_right + (s_left + s_right - s_whole) / 15.0
            worst = max(worst, err / 15.0)
        else:
            # push right first so the left half is processed next
            stack.append((xm, x2, f1, fr, f2, s_right, tol_here / 2.0))
            stack.append((x0, xm, f0, fl, f1, s_left, tol_here / 2.0))
    return complex(total)


# ---------------------------------------------------------------------------
# integrands (shared by the oracle paths; also document the model)

def _rho_m_integrand(delta, p: SystemParams):
    """Impurity (two-level) response before Doppler averaging, absorbing sign."""
    g = p.gamma_natural

    def f(w):
        return -g / (4.0 * (delta + p.delta_c + w + 0.5j * g))

    return f


def _rho_c_integrand(delta, p: SystemParams):
    """EIT response before Doppler averaging.

    For Omega_c = 0 the (delta + i gamma) factor cancels exactly against
    the denominator, leaving the two-level form; the cancelled form is
    used there so delta = gamma_dec = 0 stays finite.
    """
    g = p.gamma_natural
    q = delta + 1j * p.gamma_dec

    if p.omega_c == 0.0:
        def f(w):
            return -g / (4.0 * (delta + p.delta_c + w + 0.5j * g))
    else:
        def f(w):
            denom = p.omega_c**2 - 4.0 * q * (delta + p.delta_c + w + 0.5j * g)
            return q * g / denom

    return f


def _kappa_integrand(delta, p: SystemParams):
    """Signal-probe cross-coupling before Doppler averaging."""
    g = p.gamma_natural
    q = delta + 1j * p.gamma_dec

    def f(w):
        pump = p.omega_p / (p.delta_p + w + 0.5j * g)
        denom = p.omega_c**2 - 4.0 * q * (delta + p.delta_c + w + 0.5j * g)
        return pump * p.omega_c * g / denom

    return f


# ---------------------------------------------------------------------------
# analytic reductions

def _as_delta_array(delta):
    arr = np.asarray(delta, dtype=float)
    return arr.ndim == 0, np.atleast_1d(arr)


def rho_m_bar(delta, params: SystemParams, quad: QuadratureSpec = ANALYTIC):
    """Doppler-averaged impurity response at two-photon detuning ``delta``.

    Prefactor b*alpha/2 on the averaged two-level line; the imaginary part
    is strictly positive (pure absorber).  The analytic path accepts
    arrays of delta; the quadrature paths are scalar.
    """
    if quad.method != METHOD_ANALYTIC:
        pref = params.b * params.alpha / 2.0
        return pref * doppler_average(_rho_m_integrand(float(delta), params),
                                      params, quad)
    scalar, d = _as_delta_array(delta)
    g = params.gamma_natural
    pole = d + params.delta_c + 0.5j * g
    pref = params.b * params.alpha / 2.0
    out = -pref * g / (4.0 * params.gamma_doppler) * \
        gaussian_pole_integral(-pole / params.gamma_doppler)
    return complex(out[0]) if scalar else out


def rho_c_bar(delta, params: SystemParams, quad: QuadratureSpec = ANALYTIC):
    """Doppler-averaged EIT response at two-photon detuning ``delta``.

    The denominator is linear in the Doppler shift, so the average is a
    single Gaussian pole integral at omega_0 = Omega_c^2/(4 q) - P with
    q = delta + i gamma_dec and P = delta + Delta_c + i Gamma/2.  On exact
    two-photon resonance with gamma_dec = 0 the response vanishes (or, if
    Omega_c = 0 as well, reduces to the two-level line).
    """
    if quad.method != METHOD_ANALYTIC:
        pref = (1.0 - params.b) * params.alpha / 2.0
        return pref * doppler_average(_rho_c_integrand(float(delta), params),
                                      params, quad)
    scalar, d = _as_delta_array(delta)
    g = params.gamma_natural
    gd = params.gamma_doppler
    pref = (1.0 - params.b) * params.alpha * g / (8.0 * gd)
    q = d + 1j * params.gamma_dec
    p_pole = d + params.delta_c + 0.5j * g

    out = np.zeros(d.shape, dtype=complex)
    degenerate = np.abs(q) <= _Q_FLOOR
    regular = ~degenerate
    if np.any(regular):
        omega0 = params.omega_c**2 / (4.0 * q[regular]) - p_pole[regular]
        out[regular] = -pref * gaussian_pole_integral(omega0 / gd)
    if np.any(degenerate) and params.omega_c == 0.0:
        # cancelled two-level limit of the q -> 0, Omega_c = 0 case
        out[degenerate] = -pref * gaussian_pole_integral(-p_pole[degenerate] / gd)
    # degenerate with Omega_c != 0: numerator q kills the response -> 0
    return complex(out[0]) if scalar else out


def kappa_bar(delta, params: SystemParams, quad: QuadratureSpec = ANALYTIC):
    """Doppler-averaged signal-probe cross-coupling at detuning ``delta``.

    Two simple poles in the Doppler shift (pump line at
    omega_1 = -Delta_p - i Gamma/2 and the coupling-dressed pole omega_0);
    partial fractions reduce the average to two Gaussian pole integrals.
    Near-coincident poles fall back to the dense-trapezoid quadrature.
    """
    if quad.method != METHOD_ANALYTIC:
        pref = (1.0 - params.b) * params.alpha / 4.0
        return pref * doppler_average(_kappa_integrand(float(delta), params),
                                      params, quad)
    scalar, d = _as_delta_array(delta)
    g = params.gamma_natural
    gd = params.gamma_doppler
    out = np.zeros(d.shape, dtype=complex)
    if params.omega_p == 0.0 or params.omega_c == 0.0:
        return complex(out[0]) if scalar else out

    q = d + 1j * params.gamma_dec
    p_pole = d + params.delta_c + 0.5j * g
    omega1 = -params.delta_p - 0.5j * g
    # the pump pole does not move with delta; one scalar evaluation
    j1 = complex(gaussian_pole_integral(omega1 / gd))

    degenerate = np.abs(q) <= _Q_FLOOR
    regular = ~degenerate
    if np.any(degenerate):
        # coupling factor is the constant Gamma/Omega_c on resonance
        pref0 = (1.0 - params.b) * params.alpha / 4.0 * \
            params.omega_p * g / params.omega_c
        out[degenerate] = pref0 * j1 / gd
    if np.any(regular):
        qr = q[regular]
        omega0 = params.omega_c**2 / (4.0 * qr) - p_pole[regular]
        sep = np.abs(omega1 - omega0)
        merged = sep < _POLE_MERGE_RTOL * np.maximum(
            1.0, np.maximum(np.abs(omega1), np.abs(omega0)))
        pref = -(1.0 - params.b) * params.alpha * \
            params.omega_p * params.omega_c * g / (16.0 * qr)
        j0 = gaussian_pole_integral(np.where(merged, 1j, omega0) / gd)
        sep_safe = np.where(merged, 1.0, omega1 - omega0)
        vals = pref * (j1 - j0) / sep_safe / gd
        if np.any(merged):
            fallback = QuadratureSpec(method=METHOD_TRAPEZOID)
            idx = np.flatnonzero(regular)[merged]
            dd = d[idx]
            vals = np.array(vals)
            vals[merged] = [kappa_bar(float(x), params, fallback) for x in dd]
        out[regular] = vals
    return complex(out[0]) if scalar else out
