"""Hybrid master equation with tunneling and dephasing.

The joint atom-light state is expanded as rho = sum_{kk'} rho_{kk'}
|k; a_{k,l}, a_{k,r}><k'; a_{k',l}, a_{k',r}| where the light amplitudes
a_{k,s}(t) follow the atoms analytically and only the atomic matrix
rho_{kk'} is integrated.  Tunneling couples neighboring k with the usual
ladder factors, weighted by the overlap of the displaced light states;
dephasing damps off-diagonals.

Detection enters at readout time: the two beamsplitter-output brackets
u_c(k) = (a_{k,l} + i a_{k,r})/sqrt2, u_d(k) = (i a_{k,l} + a_{k,r})/sqrt2
give a per-k amplitude factor whose outer product conditions rho.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .pure_measure import (
    PROB_FLOOR,
    DetectionOutcome,
    ImpossibleOutcomeError,
    LightPair,
)

DEPHASING_FORMS = ("lindblad", "literal")

HERM_TOL = 1e-9
TRACE_TOL = 1e-8


class IntegrationError(RuntimeError):
    """Raised when density-matrix invariants break during integration."""


@dataclass(frozen=True)
class ModelParams:
    n_atoms: int
    omega: float
    g: float
    gamma: float
    light: LightPair
    dephasing_form: str = "lindblad"

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError("n_atoms must be >= 1")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.dephasing_form not in DEPHASING_FORMS:
            raise ValueError(
                f"dephasing_form must be one of {DEPHASING_FORMS}, "
                f"got {self.dephasing_form!r}"
            )


@dataclass
class HybridState:
    """Atomic matrix rho_{kk'} at time t; light amplitudes are implicit."""

    rho: np.ndarray
    t: float

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        n = self.rho.shape[0]
        if self.rho.shape != (n, n):
            raise ValueError("rho must be square")

    def herm_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    def trace_error(self) -> float:
        return float(abs(np.trace(self.rho) - 1.0))

    def validate(self):
        he, te = self.herm_error(), self.trace_error()
        if he > HERM_TOL:
            raise IntegrationError(f"Hermiticity broken at t={self.t}: {he:.3e}")
        if te > TRACE_TOL:
            raise IntegrationError(f"trace drift at t={self.t}: {te:.3e}")
        d = np.diag(self.rho)
        if np.min(d.real) < -1e-10 or np.max(d.real) > 1.0 + 1e-10:
            raise IntegrationError(f"diagonal out of [0, 1] at t={self.t}")


@dataclass(frozen=True)
class TimeGrid:
    """Fixed-step grid; the step bound is checked against the generator scale."""

    t_max: float
    dt: float
    sample_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0 or self.t_max <= 0:
            raise ValueError("dt and t_max must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")

    def step_scale(self, params: ModelParams) -> float:
        return self.dt * max(
            abs(params.omega),
            abs(params.g) * params.n_atoms,
            params.gamma * params.n_atoms**2,
        )


def light_amplitudes(params: ModelParams, k, t: float):
    """Arm amplitudes dressed by the atom imbalance: a_l e^{-i(2k-N)gt/2}, a_r e^{+i...}."""
    k = np.asarray(k)
    if np.any(k < 0) or np.any(k > params.n_atoms):
        raise ValueError(f"k out of range 0..{params.n_atoms}")
    phase = (2.0 * k - params.n_atoms) * params.g * t / 2.0
    a_l = params.light.alpha_l * np.exp(-1j * phase)
    a_r = params.light.alpha_r * np.exp(1j * phase)
    if k.ndim == 0:
        return complex(a_l), complex(a_r)
    return a_l, a_r


def coherent_overlaps(params: ModelParams, t: float):
    """Light-state overlaps (ov_plus, ov_minus) between neighboring k sectors.

    ov_plus = <a_m|a_{m+1}> = e^{-(|a_l|^2+|a_r|^2)} e^{|a_l|^2 e^{-igt}} e^{|a_r|^2 e^{+igt}}
    and ov_minus is the conjugate-ordered <a_m|a_{m-1}>.  Both are
    independent of m: neighboring sectors differ by the same phase step.
    """
    il = abs(params.light.alpha_l) ** 2
    ir = abs(params.light.alpha_r) ** 2
    gt = params.g * t
    ov_plus = np.exp(-(il + ir)) * np.exp(il * np.exp(-1j * gt)) * np.exp(
        ir * np.exp(1j * gt)
    )
    ov_minus = np.exp(-(il + ir)) * np.exp(il * np.exp(1j * gt)) * np.exp(
        ir * np.exp(-1j * gt)
    )
    return complex(ov_plus), complex(ov_minus)


def _ladder(n_atoms: int) -> np.ndarray:
    m = np.arange(1, n_atoms + 1, dtype=float)
    return np.sqrt(m * (n_atoms - m + 1.0)) / 2.0


def rhs(params: ModelParams, rho: np.ndarray, t: float) -> np.ndarray:
    """Time derivative of rho_{kk'}.

    Four tunneling terms (row and column neighbors, each weighted by the
    matching light overlap) plus the dephasing damping of off-diagonals.
    Ladder factors vanish at the k = 0 and k = N edges, so boundary terms
    drop out by construction.
    """
    n = params.n_atoms
    om = params.omega
    s = _ladder(n)
    ov_plus, ov_minus = coherent_overlaps(params, t)
    d = np.zeros_like(rho)
    if om != 0.0:
        # row couplings: rho_{m-1,k'} enters row m, rho_{m+1,k'} enters row m
        d[1:, :] += 1j * om * s[:, None] * ov_minus * rho[:-1, :]
        d[:-1, :] += 1j * om * s[:, None] * ov_plus * rho[1:, :]
        # column couplings, conjugate-ordered overlaps
        d[:, 1:] -= 1j * om * s[None, :] * ov_plus * rho[:, :-1]
        d[:, :-1] -= 1j * om * s[None, :] * ov_minus * rho[:, 1:]
    if params.gamma != 0.0:
        m = np.arange(n + 1, dtype=float)
        diff = m[:, None] - m[None, :]
        if params.dephasing_form == "lindblad":
            d -= 0.5 * params.gamma * diff**2 * rho
        else:
            # printed damping, linear in (m - m'); not Hermiticity-preserving
            d -= params.gamma * diff * rho
    return d


def _rk4_step(params: ModelParams, rho: np.ndarray, t: float, dt: float) -> np.ndarray:
    k1 = rhs(params, rho, t)
    k2 = rhs(params, rho + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = rhs(params, rho + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = rhs(params, rho + dt * k3, t + dt)
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(
    params: ModelParams,
    rho0: np.ndarray,
    grid: TimeGrid,
    strict: bool = True,
) -> list[HybridState]:
    """Fixed-step RK4 trajectory, sampled every grid.sample_stride steps.

    The step count is rounded so the trajectory lands exactly on t_max.
    With strict=True the step-bound invariant is enforced up front and
    every emitted sample is validated (Hermiticity, trace, diagonal
    range); violations abort with the offending time in the message.
    The literal dephasing form breaks Hermiticity by construction, so
    validation only applies in lindblad mode.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    n_steps = max(1, int(round(grid.t_max / grid.dt)))
    dt = grid.t_max / n_steps
    if strict:
        eff = TimeGrid(grid.t_max, dt, grid.sample_stride).step_scale(params)
        if eff > 0.05 + 1e-12:
            raise ValueError(
                f"step bound violated: dt*max(omega, g*N, gamma*N^2) = {eff:.3f} > 0.05"
            )
    validate = strict and params.dephasing_form == "lindblad"
    samples = [HybridState(rho0.copy(), 0.0)]
    if validate:
        samples[0].validate()
    rho = rho0.copy()
    for step in range(1, n_steps + 1):
        t_prev = (step - 1) * dt
        rho = _rk4_step(params, rho, t_prev, dt)
        if step % grid.sample_stride == 0 or step == n_steps:
            sample = HybridState(rho.copy(), step * dt)
            if validate:
                sample.validate()
            samples.append(sample)
    return samples


def _log_detection_brackets(
    params: ModelParams, state: HybridState, outcome: DetectionOutcome
):
    """Per-k log magnitude and phase of the detection factor B(k).

    B(k) = e^{-(|a_l|^2+|a_r|^2)/2} u_c(k)^{n_c} u_d(k)^{n_d} / sqrt(n_c! n_d!)
    built from the beamsplitter brackets of the dressed arm amplitudes.
    """
    nc, nd = outcome.n_c, outcome.n_d
    k = np.arange(params.n_atoms + 1)
    a_l, a_r = light_amplitudes(params, k, state.t)
    u_c = (a_l + 1j * a_r) / np.sqrt(2.0)
    u_d = (1j * a_l + a_r) / np.sqrt(2.0)
    mag_c, mag_d = np.abs(u_c), np.abs(u_d)
    with np.errstate(divide="ignore"):
        term_c = np.where(nc > 0, nc * np.log(np.where(mag_c > 0, mag_c, 1.0)), 0.0)
        term_c = np.where((nc > 0) & (mag_c == 0), -np.inf, term_c)
        term_d = np.where(nd > 0, nd * np.log(np.where(mag_d > 0, mag_d, 1.0)), 0.0)
        term_d = np.where((nd > 0) & (mag_d == 0), -np.inf, term_d)
    log_mag = (
        -params.light.total_intensity / 2.0
        + term_c
        + term_d
        - 0.5 * (gammaln(nc + 1) + gammaln(nd + 1))
    )
    phase = nc * np.angle(u_c) + nd * np.angle(u_d)
    return log_mag, phase


def detection_probability_me(
    params: ModelParams, state: HybridState, outcome: DetectionOutcome
) -> float:
    """Probability of counting (n_c, n_d) on the recombined light."""
    log_mag, _ = _log_detection_brackets(params, state, outcome)
    shift = log_mag.max()
    weights = np.exp(2.0 * (log_mag - shift))
    raw = np.sum(np.diag(state.rho) * weights)
    if abs(raw.imag) > 1e-10 * max(abs(raw.real), 1.0):
        raise AssertionError(f"detection probability has imaginary residue {raw.imag}")
    return float(raw.real * np.exp(2.0 * shift))


def conditional_density(
    params: ModelParams, state: HybridState, outcome: DetectionOutcome
) -> np.ndarray:
    """Atomic density matrix conditioned on the photon-count pair.

    rho_{kk'} -> rho_{kk'} B(k) B(k')^* / P, computed with a joint log
    rescale so deep-tail outcomes stay finite.
    """
    log_mag, phase = _log_detection_brackets(params, state, outcome)
    prob = detection_probability_me(params, state, outcome)
    if prob < PROB_FLOOR:
        raise ImpossibleOutcomeError(
            f"unreachable outcome (n_c={outcome.n_c}, n_d={outcome.n_d}): "
            f"probability {prob:.3e}"
        )
    b = np.exp(log_mag - log_mag.max()) * np.exp(1j * phase)
    cond = state.rho * np.outer(b, b.conj())
    tr = np.trace(cond).real
    if tr <= 0:
        raise ImpossibleOutcomeError(
            f"unreachable outcome (n_c={outcome.n_c}, n_d={outcome.n_d})"
        )
    return cond / tr


def detection_pmf_grid_me(
    params: ModelParams, state: HybridState, n_max: int
) -> np.ndarray:
    """P(n_c, n_d) table over 0..n_max per detector for the hybrid state."""
    k = np.arange(params.n_atoms + 1)
    a_l, a_r = light_amplitudes(params, k, state.t)
    lam_c = np.abs((a_l + 1j * a_r) / np.sqrt(2.0)) ** 2
    lam_d = np.abs((1j * a_l + a_r) / np.sqrt(2.0)) ** 2
    n = np.arange(n_max + 1)

    def poisson_rows(lam):
        with np.errstate(divide="ignore"):
            log_p = (
                n[None, :] * np.log(np.where(lam > 0, lam, 1.0))[:, None]
                - lam[:, None]
                - gammaln(n + 1)[None, :]
            )
        rows = np.exp(log_p)
        zero = lam == 0
        if np.any(zero):
            rows[zero] = 0.0
            rows[zero, 0] = 1.0
        return rows

    p_k = np.diag(state.rho).real
    return np.einsum("k,kn,km->nm", p_k, poisson_rows(lam_c), poisson_rows(lam_d))
