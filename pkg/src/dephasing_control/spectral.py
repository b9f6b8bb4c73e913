"""Closed-form kernels of zero-temperature pure dephasing with an Ohmic-like bath.

Units: hbar = 1 and the cutoff frequency is 1, so times are ``omega_c * t``
and frequencies are ``omega / omega_c``.

The family is parametrized by the Ohmicity ``s`` of the spectral density
``J(w) = w**s * exp(-w)``. For ``s > 2`` the dephasing rate becomes
temporarily negative, which is the non-Markovian regime the rest of the
package is concerned with.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .errors import DomainError, HorizonTooShortError, NoCrossingError

S_MIN = 1.0
S_MAX = 8.0
DEFAULT_HORIZON = 30.0


@dataclass(frozen=True)
class SpectralParams:
    """Ohmicity of the bath plus the Euler Gamma values the kernels need."""

    s: float
    gamma_s: float = field(init=False, repr=False)
    gamma_s_minus_1: float = field(init=False, repr=False)

    def __post_init__(self):
        s = float(self.s)
        if not math.isfinite(s) or not (S_MIN < s <= S_MAX):
            raise DomainError(f"Ohmicity s must satisfy {S_MIN} < s <= {S_MAX}, got {self.s!r}")
        object.__setattr__(self, "s", s)
        # math.gamma is accurate to a few ulp on (0, 8]
        object.__setattr__(self, "gamma_s", math.gamma(s))
        object.__setattr__(self, "gamma_s_minus_1", math.gamma(s - 1.0))

    @property
    def asymptotic_decoherence(self) -> float:
        """Limit of the decoherence function for t -> infinity, Gamma[s]/(s-1)."""
        return self.gamma_s_minus_1


@dataclass(frozen=True)
class KernelSample:
    t: float
    gamma: float
    big_gamma: float
    tilde_gamma: float


def _check_time(t, name="t"):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"{name} must be >= 0")
    return arr


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def spectral_density(omega, params: SpectralParams):
    """``omega**s * exp(-omega)``; accepts scalars or arrays."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0) or np.any(np.isnan(w)):
        raise DomainError("omega must be >= 0")
    return _scalar_or_array(w**params.s * np.exp(-w))


def decay_rate(t, params: SpectralParams):
    """Time-dependent dephasing rate gamma(t) = dGamma/dt.

    ``(1 + t^2)^(-s/2) * Gamma[s] * sin(s * arctan t)``
    """
    t = _check_time(t)
    s = params.s
    out = (1.0 + t * t) ** (-s / 2) * params.gamma_s * np.sin(s * np.arctan(t))
    return _scalar_or_array(out)


def decoherence_fn(t, params: SpectralParams):
    """Decoherence function Gamma(t); coherences decay as ``exp(-Gamma(t))``."""
    t = _check_time(t)
    s = params.s
    theta = np.arctan(t)
    bracket = 1.0 - (1.0 + t * t) ** (-s / 2) * (np.cos(s * theta) + t * np.sin(s * theta))
    return _scalar_or_array(params.gamma_s / (s - 1.0) * bracket)


def phase_fn(t, params: SpectralParams):
    """Phase generator tilde-Gamma(t) entering the controlled coherences.

    Equal to ``Integral J(w) sin(w t) / w^2 dw``, i.e.

        Gamma[s-1] * (1 + t^2)^(-s/2) * (sin(s arctan t) - t cos(s arctan t))

    The prefactor is ``Gamma[s-1]`` and the base is ``1 + t^2``. Both were
    fixed against the discretized-bath oracle in :mod:`dephasing_control.oracle`
    (see README, "Phase generator"); a prefactor of ``4 Gamma[s-1]`` or a base of
    ``1 - t^2`` disagrees with the exact microscopic evolution.
    """
    t = _check_time(t)
    s = params.s
    theta = np.arctan(t)
    out = (
        params.gamma_s_minus_1
        * (1.0 + t * t) ** (-s / 2)
        * (np.sin(s * theta) - t * np.cos(s * theta))
    )
    return _scalar_or_array(out)


def control_phase_y(t, t_pulse: float, params: SpectralParams):
    """Relative phase ``y = tG(t) - tG(t_pulse) - tG(t - t_pulse)`` after a pulse."""
    t = _check_time(t)
    if t_pulse < 0:
        raise DomainError("t_pulse must be >= 0")
    if np.any(t < t_pulse):
        raise DomainError("control phase is only defined for t >= t_pulse")
    out = phase_fn(t, params) - phase_fn(t_pulse, params) - phase_fn(t - t_pulse, params)
    return _scalar_or_array(out)


def rate_zero_crossings(params: SpectralParams) -> list[float]:
    """Positive times where the decay rate changes sign, in increasing order.

    The roots are ``tan(k pi / s)`` for ``k >= 1`` with ``k pi / s < pi / 2``.
    Each closed-form root is confirmed by bisection on a bracket that contains
    no other root.
    """
    s = params.s
    roots = []
    half_gap = math.pi / (2.0 * s)
    k = 1
    # k pi / s == pi / 2 (s = 4, 6, ...) is a tangency at infinity, not a root
    while k * math.pi / s < math.pi / 2 - 1e-12:
        theta = k * math.pi / s
        root = math.tan(theta)
        lo = math.tan(theta - half_gap)
        hi = math.tan(min(theta + half_gap, 0.5 * (theta + math.pi / 2)))
        found = bisect(lambda x: decay_rate(x, params), lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
        # dt/dtheta = 1 + t^2: far roots are only as sharp as arctan lets them be
        if abs(found - root) > 1e-12 * (1.0 + root * root):
            raise ArithmeticError(f"bisection disagrees with closed-form root {root} (got {found})")
        if abs(decay_rate(root, params)) >= 1e-12 * params.gamma_s:
            raise ArithmeticError(f"rate does not vanish at closed-form root {root}")
        roots.append(root)
        k += 1
    return roots


def horizon(params: SpectralParams, default_T: float = DEFAULT_HORIZON) -> tuple[float, float]:
    """Pick ``(T, t_tilde)`` for the two-leg protocol.

    ``t_tilde`` is the first sign change of the rate. ``T`` is the second sign
    change when there is one (s > 4); otherwise ``default_T``.
    """
    roots = rate_zero_crossings(params)
    if not roots:
        raise NoCrossingError(f"decay rate never turns negative for s={params.s}")
    t_tilde = roots[0]
    T = roots[1] if len(roots) > 1 else float(default_T)
    if t_tilde >= T:
        raise HorizonTooShortError(
            f"first sign change t={t_tilde:.6g} lies beyond the horizon T={T:.6g} (s={params.s})"
        )
    return T, t_tilde


def kernel_table(params: SpectralParams, times) -> list[KernelSample]:
    times = _check_time(times)
    g = np.atleast_1d(decay_rate(times, params))
    G = np.atleast_1d(decoherence_fn(times, params))
    tg = np.atleast_1d(phase_fn(times, params))
    return [
        KernelSample(float(t), float(a), float(b), float(c))
        for t, a, b, c in zip(np.atleast_1d(times), g, G, tg)
    ]
