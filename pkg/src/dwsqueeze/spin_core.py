"""Collective-spin basis, spin coherent states, operators and moments.

The atomic basis is the left/right Fock basis |k, N-k> with k the number
of atoms in the LEFT well, k = 0..N.  J_x is diagonal in this basis with
eigenvalue k - N/2; J_y and J_z are tridiagonal.  All constructors work
in the log domain so that N of a few thousand does not overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

# Resource guard: vectors are cheap but every downstream operation on a
# state is at least O(N^2) in time or memory.
MAX_ATOMS = 4096

_NORM_TOL = 1e-10
_VAR_FLAG = -1e-8


@dataclass(frozen=True)
class GroundExcitedAmplitudes:
    """Amplitudes (alpha, beta) of the excited/ground double-well modes."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        n = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {n!r}, expected 1")

    @property
    def rel_phase(self) -> float:
        """Relative phase arg(alpha) - arg(beta)."""
        return float(np.angle(self.alpha) - np.angle(self.beta))


@dataclass(frozen=True)
class BlochAngles:
    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError(f"theta = {self.theta} outside [0, pi]")
        if not 0.0 <= self.phi < 2.0 * np.pi:
            raise ValueError(f"phi = {self.phi} outside [0, 2*pi)")


@dataclass
class AtomState:
    """Normalized amplitude vector C_k over |k, N-k>, k = 0..N."""

    n_atoms: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.n_atoms + 1,):
            raise ValueError(
                f"amplitude vector has shape {self.amplitudes.shape}, "
                f"expected ({self.n_atoms + 1},)"
            )
        n = np.linalg.norm(self.amplitudes)
        if abs(n - 1.0) > _NORM_TOL:
            raise ValueError(f"state norm {n!r} deviates from 1 beyond {_NORM_TOL}")

    def pmf(self) -> np.ndarray:
        """Probability of finding k atoms in the left well."""
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class SpinMoments:
    jx_mean: float
    jy_mean: float
    jz_mean: float
    jx_var: float
    jy_var: float
    jz_var: float


def ge_to_lr_amplitudes(ge: GroundExcitedAmplitudes) -> tuple[complex, complex]:
    """Single-atom left/right amplitudes eta_l = (alpha+beta)/sqrt2, eta_r = (beta-alpha)/sqrt2."""
    rt2 = np.sqrt(2.0)
    return (ge.alpha + ge.beta) / rt2, (ge.beta - ge.alpha) / rt2


def bloch_to_ge(angles: BlochAngles) -> GroundExcitedAmplitudes:
    """Bloch-sphere parametrization alpha = sin(theta/2)e^{-i phi/2}, beta = cos(theta/2)e^{+i phi/2}."""
    half = angles.theta / 2.0
    return GroundExcitedAmplitudes(
        alpha=np.sin(half) * np.exp(-0.5j * angles.phi),
        beta=np.cos(half) * np.exp(0.5j * angles.phi),
    )


def _log_coherent_amplitudes(eta_l: complex, eta_r: complex, n_atoms: int):
    """Log magnitude and phase of binom(N,k)^(1/2) eta_l^k eta_r^(N-k)."""
    k = np.arange(n_atoms + 1)
    log_binom = 0.5 * (
        gammaln(n_atoms + 1) - gammaln(k + 1) - gammaln(n_atoms - k + 1)
    )
    # k*log|eta| with the 0*log(0) = 0 convention at the endpoints
    with np.errstate(divide="ignore", invalid="ignore"):
        log_l = np.where(k > 0, k * np.log(np.abs(eta_l)), 0.0)
        log_r = np.where(k < n_atoms, (n_atoms - k) * np.log(np.abs(eta_r)), 0.0)
    log_mag = log_binom + log_l + log_r
    phase = k * np.angle(eta_l) + (n_atoms - k) * np.angle(eta_r)
    return log_mag, phase


def build_spin_coherent(ge: GroundExcitedAmplitudes, n_atoms: int) -> AtomState:
    """Spin coherent state C_k = binom(N,k)^(1/2) eta_l^k eta_r^(N-k), normalized."""
    if n_atoms < 0:
        raise ValueError("n_atoms must be nonnegative")
    if n_atoms > MAX_ATOMS:
        raise ValueError(f"n_atoms = {n_atoms} exceeds capacity {MAX_ATOMS}")
    eta_l, eta_r = ge_to_lr_amplitudes(ge)
    log_mag, phase = _log_coherent_amplitudes(eta_l, eta_r, n_atoms)
    amp = np.exp(log_mag - log_mag.max()) * np.exp(1j * phase)
    amp /= np.linalg.norm(amp)
    return AtomState(n_atoms=n_atoms, amplitudes=amp)


@lru_cache(maxsize=16)
def _spin_matrices_cached(n_atoms: int):
    k = np.arange(n_atoms + 1, dtype=float)
    jx = np.diag(k - n_atoms / 2.0).astype(complex)
    # ladder factor between |k> and |k+1>
    s = np.sqrt((k[:-1] + 1.0) * (n_atoms - k[:-1])) / 2.0
    jy = np.zeros_like(jx)
    jz = np.zeros_like(jx)
    idx = np.arange(n_atoms)
    jy[idx + 1, idx] = -1j * s
    jy[idx, idx + 1] = 1j * s
    # subdiagonal sign fixed by requiring [Jx, Jy] = iJz with Jx = diag(k - N/2)
    jz[idx + 1, idx] = -s
    jz[idx, idx + 1] = -s
    jx.setflags(write=False)
    jy.setflags(write=False)
    jz.setflags(write=False)
    return jx, jy, jz


def spin_operator_matrices(n_atoms: int):
    """Matrices (J_x, J_y, J_z) in the left/right Fock basis.

    J_x = diag(k - N/2); J_y and J_z couple neighboring k with ladder
    factor sqrt((k+1)(N-k))/2.  The triple satisfies the su(2) algebra
    [J_x, J_y] = iJ_z (cyclic) and the Casimir (N/2)(N/2 + 1).
    """
    if n_atoms < 0:
        raise ValueError("n_atoms must be nonnegative")
    return _spin_matrices_cached(n_atoms)


def _clamp_variance(var: float) -> float:
    if var < _VAR_FLAG:
        raise ValueError(f"variance {var} below roundoff tolerance {_VAR_FLAG}")
    return max(var, 0.0)


def moments_from_state(state: AtomState) -> SpinMoments:
    """Means and variances of J_x, J_y, J_z for a pure state."""
    jx, jy, jz = spin_operator_matrices(state.n_atoms)
    psi = state.amplitudes
    out = []
    for op in (jx, jy, jz):
        op_psi = op @ psi
        mean = float(np.real(np.vdot(psi, op_psi)))
        second = float(np.real(np.vdot(op_psi, op_psi)))
        out.append((mean, _clamp_variance(second - mean**2)))
    (mx, vx), (my, vy), (mz, vz) = out
    return SpinMoments(mx, my, mz, vx, vy, vz)


def moments_from_density(rho: np.ndarray) -> SpinMoments:
    """Means and variances of J_x, J_y, J_z for a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    n_atoms = rho.shape[0] - 1
    if rho.shape != (n_atoms + 1, n_atoms + 1):
        raise ValueError("density matrix must be square")
    tr = np.trace(rho)
    if abs(tr - 1.0) > 1e-8:
        raise ValueError(f"trace {tr!r} deviates from 1")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-8:
        raise ValueError("density matrix is not Hermitian within tolerance")
    jx, jy, jz = spin_operator_matrices(n_atoms)
    out = []
    for op in (jx, jy, jz):
        m = op @ rho
        mean = float(np.real(np.trace(m)))
        second = float(np.real(np.trace(op @ m)))
        out.append((mean, _clamp_variance(second - mean**2)))
    (mx, vx), (my, vy), (mz, vz) = out
    return SpinMoments(mx, my, mz, vx, vy, vz)


def analytic_precession(
    ge: GroundExcitedAmplitudes, n_atoms: int, omega: float, t: float
) -> SpinMoments:
    """Closed-form moments of a spin coherent state precessing at frequency omega.

    The transverse mean rotates as (cos, sin)(omega*t - rel_phase) with
    radius N|alpha*beta|; J_z and its variance are constants of motion.
    """
    ab = abs(ge.alpha * ge.beta)
    ph = omega * t - ge.rel_phase
    n = float(n_atoms)
    return SpinMoments(
        jx_mean=n * ab * np.cos(ph),
        jy_mean=n * ab * np.sin(ph),
        jz_mean=n * (abs(ge.alpha) ** 2 - abs(ge.beta) ** 2) / 2.0,
        jx_var=n / 4.0 * (1.0 - 4.0 * ab**2 * np.cos(ph) ** 2),
        jy_var=n / 4.0 * (1.0 - 4.0 * ab**2 * np.sin(ph) ** 2),
        jz_var=n * ab**2,
    )
