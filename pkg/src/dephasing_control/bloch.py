"""Bloch-vector algebra for a dephasing qubit.

Conventions
-----------
Basis ordering is ``(|e>, |g>)`` with ``sigma_z |e> = +|e>``. A state is
``rho = (I + r . sigma) / 2`` so that ``rho_eg = (rx - i ry) / 2`` and
``rz = rho_ee - rho_gg``. Rotations follow ``R_a(phi) = exp(-i phi sigma_a / 2)``;
``R_y(phi)`` takes the excited pole ``(0, 0, 1)`` to ``(sin phi, 0, cos phi)``.

The dephasing dissipator ``gamma/2 (sigma_z rho sigma_z - rho)`` acts on the
Bloch vector as ``r' = D r + d`` with ``D = diag(-gamma, -gamma, 0)``, ``d = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, InputError, SingularStateError
from .spectral import SpectralParams, decay_rate

PHYSICAL_TOL = 1e-9
DEGENERATE_NORM = 1e-9

_AXES = ("x", "y", "z")


@dataclass(frozen=True)
class BlochVector:
    rx: float
    ry: float
    rz: float

    @classmethod
    def from_array(cls, arr) -> "BlochVector":
        x, y, z = (float(v) for v in np.asarray(arr, dtype=float).reshape(3))
        return cls(x, y, z)

    @classmethod
    def from_polar(cls, theta: float, azimuth: float = 0.0, radius: float = 1.0) -> "BlochVector":
        return cls(
            radius * np.sin(theta) * np.cos(azimuth),
            radius * np.sin(theta) * np.sin(azimuth),
            radius * np.cos(theta),
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.rx, self.ry, self.rz], dtype=float)

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.rx**2 + self.ry**2 + self.rz**2))

    @property
    def is_physical(self) -> bool:
        """False when the vector lies outside the Bloch ball (audit paths only)."""
        return self.norm <= 1.0 + PHYSICAL_TOL

    @property
    def polar_angle(self) -> float:
        return float(np.arctan2(np.hypot(self.rx, self.ry), self.rz))


@dataclass(frozen=True)
class DensityMatrix2:
    rho_ee: complex
    rho_eg: complex
    rho_ge: complex
    rho_gg: complex

    @classmethod
    def from_bloch(cls, r: BlochVector) -> "DensityMatrix2":
        eg = complex(r.rx, -r.ry) / 2
        return cls((1 + r.rz) / 2, eg, eg.conjugate(), (1 - r.rz) / 2)

    @classmethod
    def from_amplitudes(cls, c_e: complex, c_g: complex) -> "DensityMatrix2":
        return cls(abs(c_e) ** 2, c_e * np.conj(c_g), c_g * np.conj(c_e), abs(c_g) ** 2)

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.rho_ee, self.rho_eg], [self.rho_ge, self.rho_gg]], dtype=complex)

    def to_bloch(self) -> BlochVector:
        return BlochVector(
            2 * float(np.real(self.rho_eg)),
            -2 * float(np.imag(self.rho_eg)),
            float(np.real(self.rho_ee - self.rho_gg)),
        )

    @property
    def trace(self) -> complex:
        return self.rho_ee + self.rho_gg

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.as_matrix())

    @property
    def is_physical(self) -> bool:
        return bool(self.eigenvalues().min() >= -PHYSICAL_TOL)


@dataclass
class Trajectory:
    """Time-ordered Bloch vectors.

    Instantaneous pulses are stored as two samples with the same time stamp
    (pre- and post-pulse). Those are the only places where a time may repeat.
    """

    times: np.ndarray
    states: np.ndarray
    pulse_times: tuple[float, ...] = field(default=())

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.times.ndim != 1 or self.states.shape != (self.times.size, 3):
            raise InputError("trajectory needs times of shape (n,) and states of shape (n, 3)")
        if self.times.size < 2:
            raise InputError("trajectory needs at least 2 samples")
        dt = np.diff(self.times)
        if np.any(dt < 0):
            raise InputError("trajectory times must be non-decreasing")
        repeated = self.times[1:][dt == 0]
        if repeated.size:
            if not self.pulse_times:
                self.pulse_times = tuple(float(t) for t in repeated)
            elif not np.all(np.isin(repeated, self.pulse_times)):
                raise InputError("repeated time stamps are only allowed at pulse instants")
        self.pulse_times = tuple(float(t) for t in self.pulse_times)

    def __len__(self):
        return self.times.size

    def __iter__(self):
        for t, r in zip(self.times, self.states):
            yield float(t), BlochVector.from_array(r)

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    @property
    def inside_ball(self) -> np.ndarray:
        return self.norms <= 1.0 + PHYSICAL_TOL

    def state_at_index(self, i: int) -> BlochVector:
        return BlochVector.from_array(self.states[i])


def purity(state: BlochVector) -> float:
    """Tr rho^2 = (|r|^2 + 1) / 2, unclamped."""
    return (state.rx**2 + state.ry**2 + state.rz**2 + 1.0) / 2.0


def coherence(state: BlochVector) -> float:
    """Transverse length sqrt(rx^2 + ry^2) = 2|rho_eg|; 1 on the equator of the sphere."""
    return float(np.hypot(state.rx, state.ry))


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """SO(3) matrix of ``exp(-i angle sigma_axis / 2)`` acting on Bloch vectors."""
    if axis not in _AXES:
        raise ConfigError(f"rotation axis must be one of {_AXES}, got {axis!r}")
    c, s = np.cos(angle), np.sin(angle)
    if axis == "x":
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)
    if axis == "y":
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)


def rotate(state: BlochVector, axis: str, angle: float) -> BlochVector:
    return BlochVector.from_array(rotation_matrix(axis, angle) @ state.as_array())


def dissipator_bloch_form(gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Affine Bloch generator ``(D, d)`` of the dephasing dissipator with rate ``gamma``.

    Uses the pairing ``D_ij = Tr[sigma_i Diss(sigma_j)] / 2`` so that ``r' = D r + d``.
    """
    D = np.diag([-gamma, -gamma, 0.0]).astype(float)
    return D, np.zeros(3)


def purity_flux(state: BlochVector, gamma: float) -> float:
    """Rate of change of |r|^2 / 2 driven by the dissipator: ``-gamma (rx^2 + ry^2)``."""
    return -gamma * (state.rx**2 + state.ry**2)


def purity_flux_from_generator(state: BlochVector, gamma: float) -> float:
    """Same quantity as :func:`purity_flux`, evaluated as ``r . (D r + d)``."""
    D, d = dissipator_bloch_form(gamma)
    r = state.as_array()
    return float(r @ (D @ r + d))


@dataclass(frozen=True)
class GridSpec:
    extent: float = 1.0
    resolution: int = 41
    plane: str = "xz"

    def __post_init__(self):
        if int(self.resolution) != self.resolution or self.resolution <= 0:
            raise ConfigError(f"grid resolution must be a positive integer, got {self.resolution!r}")
        if not (0 < self.extent <= 1):
            raise ConfigError(f"grid extent must lie in (0, 1], got {self.extent!r}")
        if self.plane != "xz":
            raise ConfigError(f"only the x-z plane is supported, got {self.plane!r}")

    def axis(self) -> np.ndarray:
        if self.resolution == 1:
            return np.zeros(1)
        return np.linspace(-self.extent, self.extent, int(self.resolution))


@dataclass(frozen=True)
class FluxSample:
    rx: float
    rz: float
    flux: float


def flux_field(grid: GridSpec, t: float, params: SpectralParams) -> list[FluxSample]:
    """Purity flux on the x-z disc at time ``t``.

    Rows run over ``rz`` (outer) and ``rx`` (inner); points with |r| > 1 are skipped.
    """
    gamma = decay_rate(t, params)
    axis = grid.axis()
    out = []
    for rz in axis:
        for rx in axis:
            if rx * rx + rz * rz > 1.0 + 1e-12:
                continue
            out.append(FluxSample(float(rx), float(rz), purity_flux(BlochVector(rx, 0.0, rz), gamma)))
    return out


LOPSIDED_RATIO = 1e-2


def _interior_indices(traj: Trajectory, min_norm: float = DEGENERATE_NORM) -> np.ndarray:
    t = traj.times
    idx = np.arange(1, t.size - 1)
    left, right = t[idx] - t[idx - 1], t[idx + 1] - t[idx]
    # a difference that straddles a pulse (repeated time) is meaningless, and one
    # squeezed against a pulse a hair away from a grid point is all roundoff
    ok = (left > 0) & (right > 0)
    ok &= np.minimum(left, right) >= LOPSIDED_RATIO * np.maximum(left, right)
    ok &= np.linalg.norm(traj.states[idx], axis=1) >= min_norm
    return idx[ok]


def _derivative(t: np.ndarray, f: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Three-point derivative at ``t[idx]``, second order on non-uniform grids too."""
    h1 = (t[idx] - t[idx - 1]).reshape((-1,) + (1,) * (f.ndim - 1))
    h2 = (t[idx + 1] - t[idx]).reshape(h1.shape)
    # written in differences so a constant signal gives exactly zero
    return (h1 * h1 * (f[idx + 1] - f[idx]) + h2 * h2 * (f[idx] - f[idx - 1])) / (h1 * h2 * (h1 + h2))


def admissibility_residual(traj: Trajectory, params: SpectralParams | None) -> float:
    """Largest violation of ``flux(r, t) = d/dt |r|^2 / 2`` over interior samples.

    The derivative is a three-point difference (central on uniform grids).
    Samples adjacent to pulse instants and samples with |r| < 1e-9 are skipped. ``params=None`` means no dissipator.
    Returns 0.0 when no sample survives the filter.
    """
    if len(traj) < 3:
        raise InputError("admissibility residual needs at least 3 samples")
    idx = _interior_indices(traj)
    if idx.size == 0:
        return 0.0
    t, r = traj.times, traj.states
    sq = np.einsum("ij,ij->i", r, r)
    dp = 0.5 * _derivative(t, sq, idx)
    gamma = decay_rate(t[idx], params) if params is not None else np.zeros(idx.size)
    flux = -gamma * (r[idx, 0] ** 2 + r[idx, 1] ** 2)
    return float(np.max(np.abs(flux - dp)))


def reconstruct_control_field(traj: Trajectory, params: SpectralParams | None):
    """Minimal-norm control field ``h`` reproducing the trajectory.

    Inverts ``r' = 2 h x r + D r`` with ``h`` perpendicular to ``r``:
    ``h = r x (r' - D r) / (2 |r|^2)``. Returns ``(times, fields)`` for the
    interior samples that are not adjacent to pulses.
    """
    if len(traj) < 3:
        raise InputError("control-field reconstruction needs at least 3 samples")
    t, r = traj.times, traj.states
    idx = _interior_indices(traj, min_norm=0.0)
    norms = np.linalg.norm(r[idx], axis=1)
    if np.any(norms < DEGENERATE_NORM):
        raise SingularStateError("trajectory passes through the centre of the Bloch ball")
    velocity = _derivative(t, r, idx)
    gamma = decay_rate(t[idx], params) if params is not None else np.zeros(idx.size)
    drift = np.column_stack([-gamma * r[idx, 0], -gamma * r[idx, 1], np.zeros(idx.size)])
    v = velocity - drift
    h = np.cross(r[idx], v) / (2.0 * norms[:, None] ** 2)
    return t[idx], h


def trajectory_from_states(times: Sequence[float], states: Iterable[BlochVector]) -> Trajectory:
    return Trajectory(np.asarray(times, dtype=float), np.array([s.as_array() for s in states]))
