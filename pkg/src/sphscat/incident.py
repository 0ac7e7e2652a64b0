"""Incident fields: plane waves, point sources, and the transient wavelet.

Modal forcing enters the boundary system through the expansion coefficients
F_n^(1), F_n^(2) of the incident pressure and its radial derivative on the
outermost surface.  Plane waves have closed-form coefficients; point-source
coefficients are integrals over v = cos(theta) evaluated by adaptive
Gauss-Kronrod quadrature.

All evaluation happens in the canonical frame in which the wave travels
along +x3; arbitrary directions are handled by rotating field points into
this frame (see fieldeval).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.integrate import quad

from .specfun import legendre_table, radial_basis, radial_derivative

Amplitude = Union[complex, float, Callable[[float], complex]]

MAX_QUAD_PANELS = 2000


class QuadratureFailure(RuntimeError):
    """Adaptive quadrature hit its subdivision limit before the tolerance."""


def direction_vector(theta_s: float, phi_s: float) -> np.ndarray:
    """Unit propagation direction d_s for source angles (theta_s, phi_s).

    The source sits at x_s = -r_s * d_s; theta_s = pi gives a wave
    traveling along +x3.
    """
    return -np.array([
        math.sin(theta_s) * math.cos(phi_s),
        math.sin(theta_s) * math.sin(phi_s),
        math.cos(theta_s),
    ])


@dataclass(frozen=True)
class PlaneWave:
    """Plane wave with spectrum amplitude P_inc(omega) (Pa)."""

    amplitude: Amplitude = 1.0
    theta_s: float = math.pi
    phi_s: float = 0.0

    def amplitude_at(self, omega: float) -> complex:
        return complex(self.amplitude(omega)) if callable(self.amplitude) \
            else complex(self.amplitude)

    @property
    def direction(self) -> np.ndarray:
        return direction_vector(self.theta_s, self.phi_s)

    # canonical-frame field values ---------------------------------------

    def pressure(self, omega, k, r, cos_theta, p_inc=None):
        p = self.amplitude_at(omega) if p_inc is None else p_inc
        return p * np.exp(1j * k * r * cos_theta)

    def radial_derivative(self, omega, k, r, cos_theta, p_inc=None):
        return 1j * k * cos_theta * self.pressure(omega, k, r, cos_theta, p_inc)


@dataclass(frozen=True)
class PointSource:
    """Monopole at radius source_radius in the direction (theta_s, phi_s)."""

    source_radius: float
    amplitude: Amplitude = 1.0
    theta_s: float = math.pi
    phi_s: float = 0.0

    def __post_init__(self):
        if self.source_radius <= 0.0:
            raise ValueError("source radius must be positive")

    def amplitude_at(self, omega: float) -> complex:
        return complex(self.amplitude(omega)) if callable(self.amplitude) \
            else complex(self.amplitude)

    @property
    def direction(self) -> np.ndarray:
        return direction_vector(self.theta_s, self.phi_s)

    def _distance(self, r, cos_theta):
        rs = self.source_radius
        return np.sqrt(r * r + 2.0 * rs * r * cos_theta + rs * rs)

    def pressure(self, omega, k, r, cos_theta, p_inc=None):
        p = self.amplitude_at(omega) if p_inc is None else p_inc
        rs = self.source_radius
        d = self._distance(r, cos_theta)
        # e^{ikd} = e^{ik rs} e^{ik(d - rs)} with the difference formed
        # stably; keeps the huge common phase factor exact.
        delta = (r * r + 2.0 * rs * r * cos_theta) / (d + rs)
        return p * rs / d * np.exp(1j * k * rs) * np.exp(1j * k * delta)

    def radial_derivative(self, omega, k, r, cos_theta, p_inc=None):
        d = self._distance(r, cos_theta)
        dd_dr = (r + self.source_radius * cos_theta) / d
        return self.pressure(omega, k, r, cos_theta, p_inc) \
            * (1j * k - 1.0 / d) * dd_dr


IncidentField = Union[PlaneWave, PointSource]


# ---------------------------------------------------------------------------
# Modal forcing coefficients
# ---------------------------------------------------------------------------

def plane_wave_coeffs(n: int, k1: float, r01: float, p_inc: complex = 1.0):
    """F_n^(1) = P (2n+1) i^n j_n(k1 R01), F_n^(2) = P (2n+1) i^n k1 j_n'."""
    basis = radial_basis(k1 * r01, "first", n)
    f1 = p_inc * (2 * n + 1) * 1j**n * basis.values[n]
    f2 = p_inc * (2 * n + 1) * 1j**n * k1 * radial_derivative(basis, n)
    return f1, f2


def plane_wave_coeff_table(n_max: int, k1: float, r01: float,
                           p_inc: complex = 1.0):
    """Vector of (F^(1), F^(2)) for n = 0..n_max in one basis evaluation."""
    basis = radial_basis(k1 * r01, "first", n_max)
    n = np.arange(n_max + 1)
    phase = p_inc * (2 * n + 1) * 1j**n
    jn = basis.values[:-1]
    djn = n / basis.argument * jn - basis.values[1:]
    return phase * jn, phase * k1 * djn


def _complex_quad(func, tol: float, panels: int):
    """Integrate a complex integrand over [-1, 1] panel by panel.

    A result flagged only as roundoff-limited is accepted when its error
    estimate still meets the tolerance budget; exhausting the subdivision
    limit raises QuadratureFailure.
    """
    edges = np.linspace(-1.0, 1.0, panels + 1)
    limit = max(50, MAX_QUAD_PANELS // panels)
    total = 0.0 + 0.0j
    for a, b in zip(edges[:-1], edges[1:]):
        for part, proj in (("real", np.real), ("imag", np.imag)):
            res = quad(lambda v: proj(func(v)), a, b, epsabs=1e-3 * tol,
                       epsrel=tol, limit=limit, full_output=1)
            value, abserr = res[0], res[1]
            if len(res) > 3:
                ok = abserr <= max(10.0 * 1e-3 * tol,
                                   100.0 * tol * max(1.0, abs(value)))
                if not ok or "subdivisions" in res[3]:
                    raise QuadratureFailure(
                        f"{part} part on [{a}, {b}]: {res[3]}")
            total += value if part == "real" else 1j * value
    return total


def point_source_coeffs(n: int, k1: float, r01: float, r_s: float,
                        p_inc: complex = 1.0, tol: float = 1e-12,
                        panels: int = 1):
    """Point-source forcing coefficients by adaptive quadrature.

    Both integrands carry the distance q(v) = sqrt(R01^2 + 2 r_s R01 v +
    r_s^2); the common phase e^{i k1 r_s} is factored out analytically so
    the oscillatory part depends only on q - r_s, which is formed without
    cancellation.  21-point Gauss-Kronrod panels are subdivided adaptively
    to relative tolerance ``tol`` with at most MAX_QUAD_PANELS panels.

    Raises:
        QuadratureFailure: subdivision limit reached before the tolerance.
    """
    if r_s <= r01:
        raise ValueError("point source must lie outside the scatterer")
    if n < 0:
        raise ValueError("mode index must be >= 0")
    scale = 0.5 * (2 * n + 1) * r_s

    def q_of(v):
        return math.sqrt(r01 * r01 + 2.0 * r_s * r01 * v + r_s * r_s)

    def delta_of(v, q):
        return (r01 * r01 + 2.0 * r_s * r01 * v) / (q + r_s)

    def legendre_at(v):
        return legendre_table(v, n).p[n]

    def f1_integrand(v):
        q = q_of(v)
        return scale * np.exp(1j * k1 * delta_of(v, q)) / q * legendre_at(v)

    def f2_integrand(v):
        q = q_of(v)
        return scale * (r01 + r_s * v) * np.exp(1j * k1 * delta_of(v, q)) \
            / q**3 * (1j * k1 * q - 1.0) * legendre_at(v)

    phase = p_inc * np.exp(1j * k1 * r_s)
    f1 = phase * _complex_quad(f1_integrand, tol, panels)
    f2 = phase * _complex_quad(f2_integrand, tol, panels)
    return f1, f2


def incident_coeff_table(field: IncidentField, n_max: int, k1: float,
                         r01: float, omega: float, tol: float = 1e-12):
    """Forcing coefficient arrays (F^(1)[n], F^(2)[n]) for n = 0..n_max."""
    p_inc = field.amplitude_at(omega)
    if isinstance(field, PlaneWave):
        return plane_wave_coeff_table(n_max, k1, r01, p_inc)
    f1 = np.empty(n_max + 1, dtype=complex)
    f2 = np.empty(n_max + 1, dtype=complex)
    for n in range(n_max + 1):
        f1[n], f2[n] = point_source_coeffs(n, k1, r01, field.source_radius,
                                           p_inc, tol=tol)
    return f1, f2


# ---------------------------------------------------------------------------
# Transient wavelet
# ---------------------------------------------------------------------------

_WAVELET_NORM = 4.0 / (3.0 * math.sqrt(3.0))


@dataclass(frozen=True)
class Wavelet:
    """Compactly supported pulse on [0, 1/f_c] with center frequency f_c."""

    center_frequency: float

    def __post_init__(self):
        if self.center_frequency <= 0.0:
            raise ValueError("center frequency must be positive")

    @property
    def omega_c(self) -> float:
        return 2.0 * math.pi * self.center_frequency

    def wavenumber(self, sound_speed: float) -> float:
        return self.omega_c / sound_speed

    def time(self, t):
        return wavelet_time(t, self.center_frequency)

    def spectrum(self, omega):
        return wavelet_spectrum(omega, self.center_frequency)


def wavelet_time(t, f_c: float):
    """(4/(3 sqrt 3)) [sin(w_c t) - sin(2 w_c t)/2] on 0 < t < 1/f_c, else 0."""
    t = np.asarray(t, dtype=float)
    w = 2.0 * math.pi * f_c
    inside = (t > 0.0) & (t < 1.0 / f_c)
    val = _WAVELET_NORM * (np.sin(w * t) - 0.5 * np.sin(2.0 * w * t))
    return np.where(inside, val, 0.0)[()]


def wavelet_spectrum(omega, f_c: float):
    """Analytic spectrum of the wavelet under the e^{+i omega t} transform.

    Values at the removable singularities omega = +-w_c, +-2 w_c come from
    the limit of the generic branch; a window of 1e-9 w_c around them routes
    through that closed form to avoid 0/0 cancellation.
    """
    w = np.asarray(omega, dtype=float)
    wc = 2.0 * math.pi * f_c
    sing = np.minimum(np.abs(np.abs(w) - wc), np.abs(np.abs(w) - 2.0 * wc))
    near = sing <= 1e-9 * wc

    out = np.empty(np.shape(w), dtype=complex)
    generic = ~near
    wg = np.where(generic, w, 3.0 * wc)  # placeholder keeps denominators alive
    num = (4.0 / math.sqrt(3.0)) * wc**3 * (1.0 - np.exp(2j * math.pi * wg / wc))
    den = (wg**2 - wc**2) * (wg**2 - 4.0 * wc**2)
    out[...] = np.where(generic, num / den, 0.0)
    if np.any(near):
        ws = np.where(near & (w != 0.0), w, wc)
        lim = -_WAVELET_NORM * (1j * math.pi / ws) * np.exp(1j * math.pi * ws / wc)
        out[...] = np.where(near, lim, out)
    return out[()]
