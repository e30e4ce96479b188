"""Husimi Q function on a Bloch-sphere grid.

The overlap between the angular coherent state |theta, phi> and the
left/right Fock ket |k, N-k> is the conjugated spin-coherent amplitude
with single-atom arm amplitudes

    eta_l = (cos(theta/2) e^{+i phi/2} + sin(theta/2) e^{-i phi/2}) / sqrt2
    eta_r = (cos(theta/2) e^{+i phi/2} - sin(theta/2) e^{-i phi/2}) / sqrt2

The grid samples theta at cell centers, (i + 1/2) pi / n_theta, which
keeps the poles off the grid, and integrates with sin(theta) dtheta dphi
midpoint weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .spin_core import AtomState, BlochAngles, _log_coherent_amplitudes

MIN_GRID = 16


@dataclass
class QGrid:
    n_theta: int
    n_phi: int
    thetas: np.ndarray
    phis: np.ndarray
    values: np.ndarray
    weights: np.ndarray

    def quadrature_sum(self) -> float:
        """Discrete sphere integral of Q; 1 up to quadrature error."""
        return float(np.sum(self.values * self.weights))


def _eta_pair(theta, phi):
    a = np.sin(np.asarray(theta) / 2.0) * np.exp(-0.5j * np.asarray(phi))
    b = np.cos(np.asarray(theta) / 2.0) * np.exp(0.5j * np.asarray(phi))
    rt2 = np.sqrt(2.0)
    return (b + a) / rt2, (b - a) / rt2


def coherent_overlap_row(angles: BlochAngles, n_atoms: int) -> np.ndarray:
    """Vector <theta,phi|k,N-k> over k = 0..N, unit norm."""
    eta_l, eta_r = _eta_pair(angles.theta, angles.phi)
    log_mag, phase = _log_coherent_amplitudes(eta_l, eta_r, n_atoms)
    row = np.exp(log_mag) * np.exp(-1j * phase)
    return row / np.linalg.norm(row)


def q_pure(state: AtomState, angles: BlochAngles) -> float:
    """Q = (N+1)/(4 pi) |<theta,phi|psi>|^2."""
    row = coherent_overlap_row(angles, state.n_atoms)
    overlap = row @ state.amplitudes
    return float((state.n_atoms + 1) / (4.0 * np.pi) * np.abs(overlap) ** 2)


def q_mixed(rho: np.ndarray, angles: BlochAngles) -> float:
    """Q = (N+1)/(4 pi) <theta,phi|rho|theta,phi>, clamped at tiny negatives."""
    rho = np.asarray(rho, dtype=complex)
    n_atoms = rho.shape[0] - 1
    row = coherent_overlap_row(angles, n_atoms)
    val = float(np.real(row @ rho @ row.conj()))
    val *= (n_atoms + 1) / (4.0 * np.pi)
    if val < -1e-10:
        raise ValueError(f"Q value {val} below roundoff tolerance")
    return max(val, 0.0)


def _overlap_matrix(n_atoms: int, thetas: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """<theta_i, phi_j | k> stacked as (n_theta, n_phi, N+1), rows unit norm."""
    eta_l, eta_r = _eta_pair(thetas[:, None], phis[None, :])
    k = np.arange(n_atoms + 1)[None, None, :]
    log_binom = 0.5 * (
        gammaln(n_atoms + 1) - gammaln(k + 1) - gammaln(n_atoms - k + 1)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        log_l = k * np.log(np.abs(eta_l))[:, :, None]
        log_r = (n_atoms - k) * np.log(np.abs(eta_r))[:, :, None]
    # kill the 0*log(0) indeterminate forms at the k range edges
    log_l = np.where(k == 0, 0.0, log_l)
    log_r = np.where(k == n_atoms, 0.0, log_r)
    log_mag = log_binom + log_l + log_r
    phase = k * np.angle(eta_l)[:, :, None] + (n_atoms - k) * np.angle(eta_r)[:, :, None]
    rows = np.exp(log_mag) * np.exp(-1j * phase)
    rows /= np.linalg.norm(rows, axis=2, keepdims=True)
    return rows


def q_grid(source, n_theta: int, n_phi: int) -> QGrid:
    """Q sampled on the cell-centered (theta, phi) grid.

    source is either an AtomState or a trace-1 density matrix.
    """
    if n_theta < MIN_GRID or n_phi < MIN_GRID:
        raise ValueError(f"grid sizes must be >= {MIN_GRID}")
    thetas = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    phis = (np.arange(n_phi) + 0.5) * 2.0 * np.pi / n_phi
    if isinstance(source, AtomState):
        n_atoms = source.n_atoms
        rows = _overlap_matrix(n_atoms, thetas, phis)
        values = (n_atoms + 1) / (4.0 * np.pi) * np.abs(rows @ source.amplitudes) ** 2
    else:
        rho = np.asarray(source, dtype=complex)
        n_atoms = rho.shape[0] - 1
        rows = _overlap_matrix(n_atoms, thetas, phis)
        values = np.real(np.einsum("ijk,kl,ijl->ij", rows, rho, rows.conj()))
        values *= (n_atoms + 1) / (4.0 * np.pi)
        if values.min() < -1e-10:
            raise ValueError(f"Q grid value {values.min()} below roundoff tolerance")
        values = np.maximum(values, 0.0)
    weights = (
        np.sin(thetas)[:, None]
        * (np.pi / n_theta)
        * (2.0 * np.pi / n_phi)
        * np.ones((1, n_phi))
    )
    return QGrid(
        n_theta=n_theta,
        n_phi=n_phi,
        thetas=thetas,
        phis=phis,
        values=values,
        weights=weights,
    )
