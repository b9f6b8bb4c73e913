"""Single-pulse protocol that maximizes average coherence under a fixed dissipator.

The protocol has two legs of free evolution separated by one y-rotation at
the first sign change ``t_tilde`` of the rate. While the rate is positive
the state is parked away from the equator, where the purity flux is weak;
at ``t_tilde`` it is rotated onto the equator to profit from the
purity-increasing leg. The initial polar angle is fixed by requiring that
the trajectory starts and ends on the Bloch sphere.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import bisect

from .bloch import BlochVector, Trajectory
from .errors import (
    HorizonTooShortError,
    InfeasibleProtocolError,
    InputError,
    NoCrossingError,
)
from .maps import ControlProtocol, trajectory
from .spectral import DEFAULT_HORIZON, SpectralParams, decoherence_fn, horizon, rate_zero_crossings

DEFAULT_STEPS = 10_000


@dataclass
class OptimizationResult:
    s: float
    T: float
    t_tilde: float | None
    phi_in: float
    pulse_angle: float | None
    cbar_uncontrolled: float
    cbar_controlled: float | None
    cbar_controlled_microscopic: float | None
    feasible: bool
    final_norm: float | None = None
    final_coherence: float | None = None

    def as_row(self) -> dict:
        return asdict(self)

    @classmethod
    def csv_fields(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class GridSearchResult:
    phi_in: float
    pulse_time: float
    pulse_angle: float
    cbar: float
    post_pulse_rz: float
    n_evaluated: int


def average_coherence(traj: Trajectory, T: float) -> float:
    """Time average of the transverse Bloch length over ``[0, T]`` (trapezoid rule)."""
    t = traj.times
    if t[0] > 0 or t[-1] < T * (1 - 1e-12):
        raise InputError(f"trajectory covers [{t[0]}, {t[-1]}], need [0, {T}]")
    coh = np.hypot(traj.states[:, 0], traj.states[:, 1])
    keep = t <= T
    tk, ck = t[keep], coh[keep]
    if tk[-1] < T:
        tk = np.append(tk, T)
        ck = np.append(ck, np.interp(T, t, coh))
    return float(np.trapezoid(ck, tk) / T)


def _grid(T: float, steps: int) -> np.ndarray:
    return np.linspace(0.0, T, int(steps) + 1)


def uncontrolled_optimum(
    params: SpectralParams, T: float, steps: int = DEFAULT_STEPS
) -> OptimizationResult:
    """Best uncontrolled run: start on the equator.

    Coherence at every time is the initial coherence times ``exp(-Gamma(t))``,
    so the average is maximal for an equatorial pure state. ``feasible`` is
    False because no control protocol is involved.
    """
    if T <= 0:
        raise InputError("T must be positive")
    traj = trajectory(BlochVector(1.0, 0.0, 0.0), ControlProtocol(), _grid(T, steps), params, "uncontrolled")
    return OptimizationResult(
        s=params.s,
        T=float(T),
        t_tilde=None,
        phi_in=math.pi / 2,
        pulse_angle=None,
        cbar_uncontrolled=average_coherence(traj, T),
        cbar_controlled=None,
        cbar_controlled_microscopic=None,
        feasible=False,
    )


def initial_angle_from_decoherence(G_tilde: float, G_T: float) -> float:
    """Solve ``cos^2 p + sin^2 p exp(-2 G_tilde) = exp(2 (G_T - G_tilde))`` for ``p`` in [0, pi/2].

    Bisection runs on ``c = cos p`` so that small ``cos p`` (p close to pi/2,
    where the second leg amplifies errors most) keeps full relative precision.
    """
    target = math.exp(2.0 * (G_T - G_tilde))
    floor = math.exp(-2.0 * G_tilde)

    def f(c):
        return c * c + (1.0 - c * c) * floor - target

    lo, hi = f(0.0), f(1.0)
    if hi == 0.0:
        return 0.0
    if lo == 0.0:
        return math.pi / 2
    if lo > 0 or hi < 0:
        raise InfeasibleProtocolError(
            f"no initial angle reaches the sphere at T (Gamma(t~)={G_tilde}, Gamma(T)={G_T})"
        )
    c = bisect(f, 0.0, 1.0, xtol=1e-300, rtol=1e-15, maxiter=2000)
    return math.acos(c)


def solve_initial_angle(params: SpectralParams, T: float, t_tilde: float) -> float:
    """Initial polar angle for which the two-leg trajectory ends on the sphere.

    The first leg shrinks the state to length ``exp(Gamma(T) - Gamma(t_tilde))``;
    the pulse puts it on the equator, where the second leg stretches it back
    by ``exp(Gamma(t_tilde) - Gamma(T))``.
    """
    return initial_angle_from_decoherence(decoherence_fn(t_tilde, params), decoherence_fn(T, params))


def _resolve_horizon(params: SpectralParams, T: float | None, default_T: float) -> tuple[float, float]:
    if T is None:
        return horizon(params, default_T)
    roots = rate_zero_crossings(params)
    if not roots:
        raise NoCrossingError(f"decay rate never turns negative for s={params.s}")
    if roots[0] >= T:
        raise HorizonTooShortError(f"first sign change {roots[0]:.6g} is not before T={T}")
    return float(T), roots[0]


def equator_pulse_angle(state: BlochVector) -> float:
    """y-rotation angle that takes a state in the x-z half plane rx >= 0 onto +x."""
    return math.pi / 2 - state.polar_angle


def controlled_protocol(
    params: SpectralParams, T: float | None = None, default_T: float = DEFAULT_HORIZON
) -> tuple[float, ControlProtocol]:
    """``(phi_in, protocol)`` of the boundary-constrained two-leg protocol.

    Raises :class:`InfeasibleProtocolError` when the rate never turns
    negative before ``T``.
    """
    try:
        T, t_tilde = _resolve_horizon(params, T, default_T)
    except (NoCrossingError, HorizonTooShortError) as exc:
        raise InfeasibleProtocolError(str(exc)) from exc
    phi_in = solve_initial_angle(params, T, t_tilde)
    shrink = math.exp(-decoherence_fn(t_tilde, params))
    before = BlochVector(math.sin(phi_in) * shrink, 0.0, math.cos(phi_in))
    return phi_in, ControlProtocol.single(t_tilde, "y", equator_pulse_angle(before))


def protocol_average_coherence(
    params: SpectralParams,
    T: float,
    phi_in: float,
    protocol: ControlProtocol,
    mode: str = "fixed",
    steps: int = DEFAULT_STEPS,
) -> tuple[float, Trajectory]:
    r0 = BlochVector.from_polar(phi_in)
    traj = trajectory(r0, protocol, _grid(T, steps), params, mode)
    return average_coherence(traj, T), traj


def controlled_average_coherence(
    params: SpectralParams,
    T: float | None = None,
    default_T: float = DEFAULT_HORIZON,
    steps: int = DEFAULT_STEPS,
) -> OptimizationResult:
    """Average coherence of the two-leg protocol, next to the uncontrolled optimum.

    The protocol is evaluated under the fixed-dissipator propagator and, as a
    diagnostic, under the exact microscopic one.
    """
    try:
        phi_in, protocol = controlled_protocol(params, T, default_T)
    except InfeasibleProtocolError:
        return uncontrolled_optimum(params, default_T if T is None else T, steps)
    T_used, _ = _resolve_horizon(params, T, default_T)
    base = uncontrolled_optimum(params, T_used, steps)
    cbar, traj = protocol_average_coherence(params, T_used, phi_in, protocol, "fixed", steps)
    cbar_micro, _ = protocol_average_coherence(params, T_used, phi_in, protocol, "microscopic", steps)
    end = traj.state_at_index(-1)
    pulse = protocol.pulses[0]
    return OptimizationResult(
        s=params.s,
        T=T_used,
        t_tilde=pulse.time,
        phi_in=phi_in,
        pulse_angle=pulse.angle,
        cbar_uncontrolled=base.cbar_uncontrolled,
        cbar_controlled=cbar,
        cbar_controlled_microscopic=cbar_micro,
        feasible=True,
        final_norm=end.norm,
        final_coherence=math.hypot(end.rx, end.ry),
    )


def sweep(
    s_grid: Iterable[float],
    default_T: float = DEFAULT_HORIZON,
    steps: int = DEFAULT_STEPS,
) -> list[OptimizationResult]:
    """Optimal controlled and uncontrolled average coherence for each Ohmicity.

    Horizon: ``default_T`` for s <= 4, the second sign change of the rate for
    s > 4. Infeasible points are kept with ``feasible=False``.
    """
    return [
        controlled_average_coherence(SpectralParams(s), None, default_T, steps) for s in sorted(s_grid)
    ]


def horizon_sensitivity(
    params: SpectralParams, T_values: Sequence[float], steps: int = DEFAULT_STEPS
) -> list[OptimizationResult]:
    """Same protocol for several explicit horizons (trend report only)."""
    return [controlled_average_coherence(params, T, steps=steps) for T in T_values]


def _cumulative_decay(params: SpectralParams, T: float, extra: np.ndarray, steps: int):
    grid = np.unique(np.concatenate([_grid(T, steps), extra]))
    F = cumulative_trapezoid(np.exp(-np.asarray(decoherence_fn(grid, params))), grid, initial=0.0)
    return grid, F


def grid_search_verify(
    params: SpectralParams,
    T: float | None = None,
    resolution: int = 100,
    default_T: float = DEFAULT_HORIZON,
    steps: int = DEFAULT_STEPS,
) -> GridSearchResult:
    """Exhaustive search over one-pulse protocols in the x-z plane.

    Midpoint grids over the initial polar angle in (0, pi/2), the pulse time
    in (0, T) and the y-rotation angle in (0, pi). Candidates whose
    fixed-dissipator state leaves the ball at ``T`` are discarded; within a
    leg the length is largest at one of its ends, so ``T`` is the only
    point that needs checking.
    """
    if T is None:
        T, _ = horizon(params, default_T)
    n = int(resolution)
    if n < 1:
        raise InputError("resolution must be >= 1")
    thetas = (np.arange(n) + 0.5) * (math.pi / 2) / n
    taus = (np.arange(n) + 0.5) * T / n
    angles = (np.arange(n) + 0.5) * math.pi / n

    grid, F = _cumulative_decay(params, T, taus, steps)
    F_tau = F[np.searchsorted(grid, taus)]
    F_T = F[-1]
    G_tau = np.asarray(decoherence_fn(taus, params))
    G_T = decoherence_fn(T, params)

    th = thetas[:, None, None]
    ang = angles[None, None, :]
    x = np.sin(th) * np.exp(-G_tau)[None, :, None]
    z = np.cos(th)
    x_post = x * np.cos(ang) + z * np.sin(ang)
    z_post = z * np.cos(ang) - x * np.sin(ang)
    growth = np.exp(G_tau)[None, :, None]
    cbar = (np.sin(th) * F_tau[None, :, None] + np.abs(x_post) * growth * (F_T - F_tau)[None, :, None]) / T
    final_norm = np.sqrt((x_post * growth * math.exp(-G_T)) ** 2 + z_post**2)
    cbar = np.where(final_norm <= 1.0 + 1e-9, cbar, -np.inf)

    i, j, k = np.unravel_index(np.argmax(cbar), cbar.shape)
    return GridSearchResult(
        phi_in=float(thetas[i]),
        pulse_time=float(taus[j]),
        pulse_angle=float(angles[k]),
        cbar=float(cbar[i, j, k]),
        post_pulse_rz=float(z_post[i, j, k]),
        n_evaluated=n**3,
    )
