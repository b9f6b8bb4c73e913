"""Dynamical maps of the dephasing qubit with instantaneous control pulses.

Three propagators are provided:

``uncontrolled``
    the exact dephasing map, transverse components times ``exp(-Gamma(t))``.
``fixed``
    the phenomenological picture: the uncontrolled generator is kept after
    every pulse, so between pulses the transverse components pick up
    ``exp(-(Gamma(t) - Gamma(t_prev)))``. This factor exceeds one while the
    rate is negative and can push states out of the Bloch ball.
``microscopic``
    the exact system-plus-bath evolution with one y-pulse, in closed form.
    Besides the pulse-induced mixing of the populations into the
    coherences, the bath records a relative phase ``y(t)`` between the
    branches, which rotates the coherences and adds a state-independent
    ``ry`` offset (the exact controlled map is affine, not linear).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .bloch import BlochVector, Trajectory, rotation_matrix
from .errors import (
    ConfigError,
    DegenerateEllipsoidError,
    DomainError,
    UnsupportedProtocolError,
)
from .spectral import SpectralParams, control_phase_y, decoherence_fn

MODES = ("uncontrolled", "fixed", "microscopic")
CP_TOL = 1e-9


@dataclass(frozen=True)
class Pulse:
    time: float
    axis: str
    angle: float

    def __post_init__(self):
        if self.axis not in ("x", "y", "z"):
            raise ConfigError(f"pulse axis must be x, y or z, got {self.axis!r}")
        if not (math.isfinite(self.time) and self.time > 0):
            raise ConfigError(f"pulse time must be positive, got {self.time!r}")
        object.__setattr__(self, "time", float(self.time))
        object.__setattr__(self, "angle", float(self.angle))

    @property
    def matrix(self) -> np.ndarray:
        return rotation_matrix(self.axis, self.angle)


@dataclass(frozen=True)
class ControlProtocol:
    """Ordered sequence of instantaneous rotations."""

    pulses: tuple[Pulse, ...] = ()

    def __post_init__(self):
        pulses = tuple(self.pulses)
        times = [p.time for p in pulses]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("pulse times must be strictly increasing")
        object.__setattr__(self, "pulses", pulses)

    @classmethod
    def single(cls, time: float, axis: str, angle: float) -> "ControlProtocol":
        return cls((Pulse(time, axis, angle),))

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(p.time for p in self.pulses)

    def __len__(self):
        return len(self.pulses)


@dataclass(frozen=True)
class QubitMap:
    """Affine action ``r -> A r + b`` of a trace-preserving qubit map."""

    A: np.ndarray
    b: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float).reshape(3, 3)
        b = np.asarray(self.b, dtype=float).reshape(3)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def identity(cls) -> "QubitMap":
        return cls(np.eye(3))

    def apply(self, r):
        if isinstance(r, BlochVector):
            return BlochVector.from_array(self.A @ r.as_array() + self.b)
        r = np.asarray(r, dtype=float)
        return r @ self.A.T + self.b

    def then(self, other: "QubitMap") -> "QubitMap":
        """Map that applies ``self`` first and ``other`` second."""
        return QubitMap(other.A @ self.A, other.A @ self.b + other.b)

    def choi(self) -> np.ndarray:
        return choi_matrix(self)


class CpCheck(NamedTuple):
    is_cp: bool
    min_eigenvalue: float


@dataclass(frozen=True)
class AuditRow:
    t: float
    min_choi_eig: float
    max_bloch_norm: float


@dataclass
class CpAuditReport:
    min_choi_eigenvalue: float
    max_bloch_norm: float
    cp_violating: bool
    worst_time: float
    rows: list[AuditRow] = field(default_factory=list, repr=False)

    @property
    def verdict(self) -> str:
        return "CP-violating" if self.cp_violating else "CP"


# --- propagators -----------------------------------------------------------


def _dephasing(gamma_diff):
    """Diagonal Bloch action of exp(-gamma_diff) dephasing."""
    f = math.exp(-gamma_diff)
    return np.diag([f, f, 1.0])


def propagate_uncontrolled(r0: BlochVector, t: float, params: SpectralParams) -> BlochVector:
    f = math.exp(-decoherence_fn(t, params))
    return BlochVector(r0.rx * f, r0.ry * f, r0.rz)


def _sample_layout(protocol: ControlProtocol, times):
    """Insert pre/post sample pairs at pulse instants.

    Returns the sample times and, per sample, how many pulses have acted.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ConfigError("need a non-empty 1-d time grid")
    if np.any(np.diff(times) <= 0):
        raise ConfigError("time grid must be strictly increasing")
    if times[0] < 0:
        raise DomainError("times must be >= 0")
    pulse_t = np.asarray(protocol.times, dtype=float)
    inside = pulse_t[(pulse_t > times[0]) & (pulse_t <= times[-1])]
    regular = times[~np.isin(times, inside)]
    ts = np.sort(np.concatenate([regular, inside, inside]))
    # first sample of a repeated pair is the pre-pulse state
    is_pre = np.zeros(ts.size, dtype=bool)
    is_pre[:-1] = ts[1:] == ts[:-1]
    n_applied = np.where(
        is_pre,
        np.searchsorted(pulse_t, ts, side="left"),
        np.searchsorted(pulse_t, ts, side="right"),
    )
    return ts, n_applied


def _fixed_states(r0: np.ndarray, protocol: ControlProtocol, ts, n_applied, params):
    out = np.empty((ts.size, 3))
    r = r0.astype(float).copy()
    G_prev = 0.0
    for n in range(len(protocol) + 1):
        if n > 0:
            p = protocol.pulses[n - 1]
            G_p = decoherence_fn(p.time, params)
            r = p.matrix @ (_dephasing(G_p - G_prev) @ r)
            G_prev = G_p
        sel = n_applied == n
        if not np.any(sel):
            continue
        f = np.exp(-(np.asarray(decoherence_fn(ts[sel], params)) - G_prev))
        out[sel, 0] = r[0] * f
        out[sel, 1] = r[1] * f
        out[sel, 2] = r[2]
    return out


def _split_for_microscopic(protocol: ControlProtocol):
    y_idx = [i for i, p in enumerate(protocol.pulses) if p.axis == "y"]
    if any(p.axis == "x" for p in protocol.pulses) or len(y_idx) > 1:
        raise UnsupportedProtocolError(
            "exact propagation supports one y-pulse plus any number of z-pulses"
        )
    return y_idx[0] if y_idx else None


def microscopic_closed_form(r0: np.ndarray, phi: float, t_pulse: float, t, params: SpectralParams):
    """Exact Bloch vector(s) at ``t >= t_pulse`` after one y-rotation by ``phi``.

    ``r0`` is the initial Bloch vector (shape (3,)); ``t`` may be an array.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < t_pulse):
        raise DomainError("closed form only holds after the pulse")
    rx0, ry0, rz0 = (float(v) for v in r0)
    G_t = np.asarray(decoherence_fn(t, params))
    G_p = decoherence_fn(t_pulse, params)
    G_d = np.asarray(decoherence_fn(t - t_pulse, params))
    y = np.asarray(control_phase_y(t, t_pulse, params))
    c2, s2 = math.cos(phi / 2) ** 2, math.sin(phi / 2) ** 2
    decay_t = np.exp(-G_t)
    # exp(-G_t) * exp(2 (G_t - G_p - G_d)) without overflow
    crossed = np.exp(G_t - 2.0 * G_p - 2.0 * G_d)
    leg2 = math.sin(phi) * np.exp(-G_d)
    rx = rz0 * leg2 * np.cos(y) + rx0 * (c2 * decay_t - s2 * crossed)
    ry = leg2 * np.sin(y) + ry0 * (c2 * decay_t + s2 * crossed)
    rz = np.full_like(t, rz0 * math.cos(phi) - rx0 * math.sin(phi) * math.exp(-G_p))
    return np.column_stack([rx, ry, rz])


def _microscopic_states(r0: np.ndarray, protocol: ControlProtocol, ts, n_applied, params):
    k = _split_for_microscopic(protocol)
    out = np.empty((ts.size, 3))
    r0 = r0.astype(float)
    for n in np.unique(n_applied):
        sel = n_applied == n
        applied = protocol.pulses[:n]
        if k is None or n <= k:
            # z-rotations commute with pure dephasing
            R = np.eye(3)
            for p in applied:
                R = p.matrix @ R
            f = np.exp(-np.asarray(decoherence_fn(ts[sel], params)))
            base = np.column_stack([r0[0] * f, r0[1] * f, np.full(f.shape, r0[2])])
            out[sel] = base @ R.T
        else:
            pre = np.eye(3)
            for p in protocol.pulses[:k]:
                pre = p.matrix @ pre
            post = np.eye(3)
            for p in protocol.pulses[k + 1 : n]:
                post = p.matrix @ post
            ypulse = protocol.pulses[k]
            states = microscopic_closed_form(pre @ r0, ypulse.angle, ypulse.time, ts[sel], params)
            out[sel] = states @ post.T
    return out


def _states(r0, protocol, ts, n_applied, params, mode):
    r0 = r0.as_array() if isinstance(r0, BlochVector) else np.asarray(r0, dtype=float)
    if mode == "uncontrolled":
        return _fixed_states(r0, ControlProtocol(), ts, np.zeros_like(n_applied), params)
    if mode == "fixed":
        return _fixed_states(r0, protocol, ts, n_applied, params)
    if mode == "microscopic":
        return _microscopic_states(r0, protocol, ts, n_applied, params)
    raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")


def _propagate(r0, protocol, t, params, mode):
    if t < 0:
        raise DomainError("t must be >= 0")
    ts = np.array([float(t)])
    n = np.array([np.searchsorted(np.asarray(protocol.times), t, side="right")])
    return BlochVector.from_array(_states(r0, protocol, ts, n, params, mode)[0])


def propagate_fixed_dissipator(
    r0: BlochVector, protocol: ControlProtocol, t: float, params: SpectralParams
) -> BlochVector:
    """State at ``t`` with the uncontrolled generator kept fixed through the pulses.

    A pulse at exactly ``t`` is included. The result is not clamped: check
    ``.is_physical``.
    """
    return _propagate(r0, protocol, t, params, "fixed")


def propagate_microscopic(
    r0: BlochVector, protocol: ControlProtocol, t: float, params: SpectralParams
) -> BlochVector:
    """Exact state at ``t`` for one y-pulse (plus optional z-pulses)."""
    return _propagate(r0, protocol, t, params, "microscopic")


def propagate(r0, protocol, t, params, mode="fixed") -> BlochVector:
    return _propagate(r0, protocol, t, params, mode)


def trajectory(
    r0: BlochVector,
    protocol: ControlProtocol,
    times: Sequence[float],
    params: SpectralParams,
    mode: str = "fixed",
) -> Trajectory:
    """Sampled evolution; every pulse inside the grid contributes a pre/post pair."""
    if mode == "uncontrolled":
        protocol = ControlProtocol()
    ts, n_applied = _sample_layout(protocol, times)
    states = _states(r0, protocol, ts, n_applied, params, mode)
    inside = tuple(p for p in protocol.times if ts[0] < p <= ts[-1])
    return Trajectory(ts, states, pulse_times=inside)


# --- maps -------------------------------------------------------------------


def map_at(
    t: float,
    params: SpectralParams,
    protocol: ControlProtocol | None = None,
    mode: str = "uncontrolled",
) -> QubitMap:
    """Dynamical map from 0 to ``t`` as an affine Bloch action."""
    if t < 0:
        raise DomainError("t must be >= 0")
    protocol = protocol or ControlProtocol()
    if mode == "uncontrolled":
        return QubitMap(_dephasing(decoherence_fn(t, params)))
    if mode == "fixed":
        A = np.eye(3)
        G_prev = 0.0
        for p in protocol.pulses:
            if p.time > t:
                break
            G_p = decoherence_fn(p.time, params)
            A = p.matrix @ _dephasing(G_p - G_prev) @ A
            G_prev = G_p
        A = _dephasing(decoherence_fn(t, params) - G_prev) @ A
        return QubitMap(A)
    if mode == "microscopic":
        _split_for_microscopic(protocol)
        b = propagate_microscopic(BlochVector(0.0, 0.0, 0.0), protocol, t, params).as_array()
        cols = [
            propagate_microscopic(BlochVector.from_array(e), protocol, t, params).as_array() - b
            for e in np.eye(3)
        ]
        return QubitMap(np.column_stack(cols), b)
    raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")


def propagator_map(s_time: float, t_time: float, params: SpectralParams) -> QubitMap:
    """Intermediate uncontrolled propagator from ``s_time`` to ``t_time``."""
    if not (0 <= s_time <= t_time):
        raise DomainError("need 0 <= s_time <= t_time")
    return QubitMap(_dephasing(decoherence_fn(t_time, params) - decoherence_fn(s_time, params)))


_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def apply_to_operator(qmap: QubitMap, M: np.ndarray) -> np.ndarray:
    """Action of the map on an arbitrary 2x2 operator (linear extension)."""
    m0 = np.trace(M) / 2
    m = np.array([np.trace(P @ M) / 2 for P in _PAULI])
    out_vec = qmap.A @ m + m0 * qmap.b
    return m0 * np.eye(2) + sum(c * P for c, P in zip(out_vec, _PAULI))


def choi_matrix(qmap: QubitMap) -> np.ndarray:
    """Unit-trace Choi matrix ``1/2 sum_kl |k><l| (x) Phi(|k><l|)``."""
    C = np.zeros((4, 4), dtype=complex)
    for k in range(2):
        for l in range(2):
            E = np.zeros((2, 2), dtype=complex)
            E[k, l] = 1.0
            C[2 * k : 2 * k + 2, 2 * l : 2 * l + 2] = apply_to_operator(qmap, E) / 2
    return 0.5 * (C + C.conj().T)


def hermitian_eigvals(H: np.ndarray, tol: float = 1e-15, max_sweeps: int = 50) -> np.ndarray:
    """Eigenvalues of a small Hermitian matrix by cyclic complex Jacobi rotations.

    Each rotation first removes the phase of the pivot, then applies a real
    Givens rotation that annihilates it.
    """
    A = np.array(H, dtype=complex)
    n = A.shape[0]
    scale = max(np.abs(A).max(), 1e-300)
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        if np.sqrt(np.sum(np.abs(A[offdiag]) ** 2)) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = abs(apq)
                if mag <= 1e-3 * tol * scale:
                    continue
                phase = apq / mag
                app, aqq = A[p, p].real, A[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                G = np.eye(n, dtype=complex)
                G[p, p] = c
                G[q, q] = c
                G[p, q] = s * phase
                G[q, p] = -s * np.conj(phase)
                A = G.conj().T @ A @ G
    return np.sort(np.diag(A).real)


def is_cp(qmap: QubitMap, tol: float = CP_TOL) -> CpCheck:
    lam = float(hermitian_eigvals(choi_matrix(qmap))[0])
    return CpCheck(lam >= -tol, lam)


def intermediate_map_cp(s_time: float, t_time: float, params: SpectralParams, tol: float = CP_TOL) -> bool:
    """Whether the uncontrolled propagator between ``s_time`` and ``t_time`` is CP.

    For pure dephasing this holds iff ``Gamma(t_time) >= Gamma(s_time)``; the
    Choi eigenvalue at stake is ``(1 - exp(Gamma(s) - Gamma(t))) / 2``.
    """
    if not (0 <= s_time <= t_time):
        raise DomainError("need 0 <= s_time <= t_time")
    dG = decoherence_fn(t_time, params) - decoherence_fn(s_time, params)
    return (1.0 - math.exp(-dG)) / 2.0 >= -tol


def is_covariant(
    axis: str,
    params: SpectralParams,
    angle: float = math.pi / 2,
    times: Sequence[float] | None = None,
) -> bool:
    """Whether a rotation commutes with the uncontrolled map at all sampled times."""
    R = rotation_matrix(axis, angle)
    times = np.linspace(0.5, 10.0, 10) if times is None else times
    for t in times:
        D = _dephasing(decoherence_fn(t, params))
        if np.abs(R @ D - D @ R).max() > 1e-12:
            return False
    return True


def in_accessible_set(state: BlochVector, t: float, params: SpectralParams) -> bool:
    """Whether ``state`` is in the image of the Bloch ball under the uncontrolled map at ``t``."""
    f = math.exp(-decoherence_fn(t, params))
    if f == 0.0:
        raise DegenerateEllipsoidError(f"exp(-Gamma({t})) underflows; accessible set is the z-axis")
    return (state.rx / f) ** 2 + (state.ry / f) ** 2 + state.rz**2 <= 1.0 + 1e-12


def fibonacci_sphere(n: int = 256) -> np.ndarray:
    """Deterministic, nearly uniform unit vectors (golden-angle spiral)."""
    if n < 1:
        raise ConfigError("need at least one sample")
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    rho = np.sqrt(1.0 - z * z)
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def cp_audit(
    protocol: ControlProtocol,
    params: SpectralParams,
    T: float,
    time_steps: int = 1000,
    n_state_samples: int = 256,
    mode: str = "fixed",
    tol: float = CP_TOL,
) -> CpAuditReport:
    """Scan the controlled map over ``[0, T]`` for complete-positivity violations."""
    if time_steps < 1:
        raise ConfigError("time_steps must be >= 1")
    grid = np.linspace(0.0, T, int(time_steps) + 1)
    states = fibonacci_sphere(n_state_samples)
    rows = []
    for t in grid:
        qmap = map_at(float(t), params, protocol, mode=mode)
        lam = is_cp(qmap, tol).min_eigenvalue
        norms = np.linalg.norm(qmap.apply(states), axis=1)
        rows.append(AuditRow(float(t), lam, float(norms.max())))
    min_eig = min(r.min_choi_eig for r in rows)
    max_norm = max(r.max_bloch_norm for r in rows)
    worst = min(rows, key=lambda r: (r.min_choi_eig, -r.max_bloch_norm))
    violating = min_eig < -tol or max_norm > 1.0 + tol
    return CpAuditReport(min_eig, max_norm, violating, worst.t, rows)

