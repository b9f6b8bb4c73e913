"""Brute-force discretized bath: an independent check of the closed forms.

The bath is replaced by ``N`` modes on a midpoint grid of ``(0, omega_max]``.
Every qubit basis state drags the bath through a product of coherent states,
so the reduced density matrix follows from coherent-state overlaps alone.

Branch labels follow the order "second segment, first segment": ``GE`` means
the bath was displaced as if the qubit were excited before the pulse and in
the ground state after it.

Displacements compose as ``D(a) D(b) = exp(i Im(a b*)) D(a + b)``. The phase
that appears here differs between branches and is exactly what produces the
relative phase ``y(t)`` of the controlled coherences; dropping it gives
wrong coherences.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .bloch import DensityMatrix2
from .errors import ConfigError, DomainError, InputError
from .spectral import SpectralParams, spectral_density

DEFAULT_MODES = 2000
DEFAULT_OMEGA_MAX = 50.0


class BranchLabel(enum.Enum):
    EE = "ee"
    GE = "ge"
    EG = "eg"
    GG = "gg"

    @property
    def after(self) -> int:
        """Sign of sigma_z during the second segment."""
        return 1 if self.value[0] == "e" else -1

    @property
    def before(self) -> int:
        """Sign of sigma_z during the first segment."""
        return 1 if self.value[1] == "e" else -1


@dataclass(frozen=True)
class DiscretizedEnv:
    params: SpectralParams
    omegas: np.ndarray
    couplings: np.ndarray
    omega_max: float

    @property
    def n_modes(self) -> int:
        return self.omegas.size


def build_env(
    params: SpectralParams, n_modes: int = DEFAULT_MODES, omega_max: float = DEFAULT_OMEGA_MAX
) -> DiscretizedEnv:
    """Midpoint grid with ``g_k^2 = J(w_k) dw / 4``.

    With this weight ``sum_k 4 g_k^2 (1 - cos w_k t) / w_k^2`` is a midpoint
    quadrature of the decoherence function.
    """
    if int(n_modes) != n_modes or n_modes < 1:
        raise ConfigError(f"n_modes must be a positive integer, got {n_modes!r}")
    if not (omega_max > 0):
        raise ConfigError(f"omega_max must be positive, got {omega_max!r}")
    dw = omega_max / n_modes
    w = (np.arange(int(n_modes)) + 0.5) * dw
    g = np.sqrt(np.asarray(spectral_density(w, params)) * dw / 4.0)
    return DiscretizedEnv(params, w, g, float(omega_max))


def displacement_amplitude(env: DiscretizedEnv, k: int, t: float) -> complex:
    """``xi_k(t) = 2 g_k (1 - exp(i w_k t)) / w_k``."""
    if t < 0:
        raise DomainError("t must be >= 0")
    w, g = env.omegas[k], env.couplings[k]
    return complex(2.0 * g * (1.0 - np.exp(1j * w * t)) / w)


def _xi(env: DiscretizedEnv, t: float) -> np.ndarray:
    return 2.0 * env.couplings * (1.0 - np.exp(1j * env.omegas * t)) / env.omegas


def branch_state_amplitudes(
    env: DiscretizedEnv, branch: BranchLabel, t: float, t_pulse: float
) -> tuple[np.ndarray, float]:
    """Per-mode coherent amplitudes of a branch and its accumulated phase.

    The branch state is ``exp(i phase) prod_k |alpha_k>``.
    """
    if t_pulse < 0:
        raise DomainError("t_pulse must be >= 0")
    if t < t_pulse:
        raise DomainError("branch states are defined for t >= t_pulse")
    xi_p = _xi(env, t_pulse)
    first = branch.before * xi_p / 2.0
    second = branch.after * (_xi(env, t) - xi_p) / 2.0
    phase = float(np.sum(np.imag(second * np.conj(first))))
    return first + second, phase


def branch_overlap_log(
    env: DiscretizedEnv, a: BranchLabel, b: BranchLabel, t: float, t_pulse: float
) -> complex:
    """``log <Psi_a|Psi_b>`` with the imaginary part left unwrapped."""
    alpha, pa = branch_state_amplitudes(env, a, t, t_pulse)
    beta, pb = branch_state_amplitudes(env, b, t, t_pulse)
    per_mode = -0.5 * np.abs(alpha) ** 2 - 0.5 * np.abs(beta) ** 2 + np.conj(alpha) * beta
    return complex(np.sum(per_mode)) + 1j * (pb - pa)


def branch_overlap(
    env: DiscretizedEnv, a: BranchLabel, b: BranchLabel, t: float, t_pulse: float
) -> complex:
    """Bath overlap ``<Psi_a|Psi_b>``; modulus never exceeds one."""
    return complex(np.exp(branch_overlap_log(env, a, b, t, t_pulse)))


def oracle_decoherence(env: DiscretizedEnv, t) -> np.ndarray | float:
    """Discrete ``sum_k 4 g_k^2 (1 - cos w_k t) / w_k^2``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    weight = 4.0 * env.couplings**2 / env.omegas**2
    out = (1.0 - np.cos(np.outer(t, env.omegas))) @ weight
    return float(out[0]) if out.size == 1 else out


def oracle_phase(env: DiscretizedEnv, t) -> np.ndarray | float:
    """Discrete ``sum_k 4 g_k^2 sin(w_k t) / w_k^2``, the counterpart of the phase generator."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    weight = 4.0 * env.couplings**2 / env.omegas**2
    out = np.sin(np.outer(t, env.omegas)) @ weight
    return float(out[0]) if out.size == 1 else out


def oracle_control_phase(env: DiscretizedEnv, t: float, t_pulse: float) -> float:
    """Relative phase of the coherence created by the pulse, read off ``<Psi_ee|Psi_ge>``."""
    return float(np.imag(branch_overlap_log(env, BranchLabel.EE, BranchLabel.GE, t, t_pulse)))


def _joint_components(c_e: complex, c_g: complex, phi: float):
    """Qubit amplitude and bath branch for each term of the joint state after the pulse."""
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    return {
        "e": ((c_e * c, BranchLabel.EE), (-c_g * s, BranchLabel.EG)),
        "g": ((c_e * s, BranchLabel.GE), (c_g * c, BranchLabel.GG)),
    }


def oracle_density_matrix(
    c_e: complex, c_g: complex, phi: float, t: float, t_pulse: float, env: DiscretizedEnv
) -> DensityMatrix2:
    """Reduced qubit state after free evolution, a y-rotation by ``phi`` at ``t_pulse``, free evolution to ``t``.

    ``rho_ij = sum_{a in i, b in j} amp_a conj(amp_b) <Psi_b|Psi_a>``. Passing
    ``t_pulse = t`` with ``phi = 0`` gives the uncontrolled state.
    """
    norm = abs(c_e) ** 2 + abs(c_g) ** 2
    if abs(norm - 1.0) > 1e-12:
        raise InputError(f"amplitudes must be normalized, |c_e|^2 + |c_g|^2 = {norm}")
    comps = _joint_components(c_e, c_g, phi)
    cache: dict[tuple[BranchLabel, BranchLabel], complex] = {}

    def ov(a, b):
        if (a, b) not in cache:
            cache[(a, b)] = branch_overlap(env, a, b, t, t_pulse)
        return cache[(a, b)]

    def element(i, j):
        return sum(ai * np.conj(aj) * ov(bj, bi) for ai, bi in comps[i] for aj, bj in comps[j])

    rho_ee = float(np.real(element("e", "e")))
    rho_eg = complex(element("e", "g"))
    return DensityMatrix2(rho_ee, rho_eg, rho_eg.conjugate(), 1.0 - rho_ee)


def amplitudes_from_bloch(theta: float, azimuth: float = 0.0) -> tuple[complex, complex]:
    """Pure-state amplitudes with ``rho_eg = c_e conj(c_g) = (rx - i ry) / 2``."""
    return complex(math.cos(theta / 2)), complex(math.sin(theta / 2) * np.exp(1j * azimuth))


def oracle_bloch(r0_theta: float, r0_azimuth: float, phi: float, t: float, t_pulse: float, env: DiscretizedEnv):
    c_e, c_g = amplitudes_from_bloch(r0_theta, r0_azimuth)
    return oracle_density_matrix(c_e, c_g, phi, t, t_pulse, env).to_bloch()
