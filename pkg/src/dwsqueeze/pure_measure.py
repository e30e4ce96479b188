"""Zero-tunneling measurement model and its Gaussian asymptotics.

While the light interacts with the atoms, each arm amplitude picks up a
phase proportional to the left/right atom-number imbalance.  After the
recombining beamsplitter, the two detector-port amplitudes depend on k
through cos/sin of gt(k - N/2).  Projecting the light on a photon-count
pair (n_c, n_d) multiplies the atomic amplitudes by a k-dependent factor
A_{n_c,n_d}(k), which is what squeezes the conditional distribution.

Everything combinatorial runs in the log domain; counts in the hundreds
and N of a few thousand stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .spin_core import AtomState, GroundExcitedAmplitudes, ge_to_lr_amplitudes

# Counts beyond this bound have no physical use here and make n*log(n)
# bookkeeping pointless; refuse instead of silently degrading.
MAX_COUNT = 10**6

# Conditional states on outcomes less likely than this are dominated by
# floating-point noise; treat them as unreachable.
PROB_FLOOR = 1e-280


class ImpossibleOutcomeError(ValueError):
    """Raised for outcomes with (numerically) zero detection probability."""


class AsymptoticsDomainError(ValueError):
    """Raised when an outcome lies outside the arcsin domain of the window formulas."""


@dataclass(frozen=True)
class LightPair:
    """Coherent amplitudes of the two interferometer arms."""

    alpha_l: complex
    alpha_r: complex

    def __post_init__(self):
        if not (np.isfinite(self.alpha_l) and np.isfinite(self.alpha_r)):
            raise ValueError("light amplitudes must be finite")

    @property
    def rel_phase(self) -> float:
        """Relative phase arg(alpha_l) - arg(alpha_r)."""
        return float(np.angle(self.alpha_l) - np.angle(self.alpha_r))

    @property
    def total_intensity(self) -> float:
        return float(abs(self.alpha_l) ** 2 + abs(self.alpha_r) ** 2)


@dataclass(frozen=True)
class DetectionOutcome:
    n_c: int
    n_d: int

    def __post_init__(self):
        if self.n_c < 0 or self.n_d < 0:
            raise ValueError("photon counts must be nonnegative")
        if self.n_c != int(self.n_c) or self.n_d != int(self.n_d):
            raise ValueError("photon counts must be integers")


@dataclass(frozen=True)
class InteractionSetting:
    """Atom-light coupling g and interaction time t; only the product matters."""

    g: float
    t: float

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("interaction time must be nonnegative")

    @property
    def gt(self) -> float:
        return self.g * self.t


@dataclass(frozen=True)
class GaussianWindow:
    """Peak/width parameters of the measurement window and conditional Gaussian.

    x0 is the window-peak offset from k = N/2 and big_x0 the inverse
    squared width of the detection window; sigma (a variance) and k0
    describe the conditional atom-number Gaussian.  Operations fill the
    part they compute and leave the rest None.
    """

    x0: float | None = None
    big_x0: float | None = None
    sigma: float | None = None
    k0: float | None = None

    def __post_init__(self):
        if self.big_x0 is not None and self.big_x0 < -1e-12:
            raise ValueError("big_x0 must be nonnegative")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be positive")


def port_amplitudes(
    light: LightPair, setting: InteractionSetting, k, n_atoms: int
):
    """Detector-port amplitudes (alpha_c, alpha_d) for imbalance index k.

    alpha_c(k) = (a_l + i a_r) cos[gt(k - N/2)] - (i a_l + a_r) sin[gt(k - N/2)]
    alpha_d(k) = (i a_l + a_r) cos[gt(k - N/2)] + (a_l + i a_r) sin[gt(k - N/2)]

    Accepts scalar or array k.  |alpha_c|^2 + |alpha_d|^2 is conserved.
    """
    k = np.asarray(k)
    if np.any(k < 0) or np.any(k > n_atoms):
        raise ValueError(f"k out of range 0..{n_atoms}")
    phase = setting.gt * (k - n_atoms / 2.0)
    c, s = np.cos(phase), np.sin(phase)
    al, ar = light.alpha_l, light.alpha_r
    alpha_c = (al + 1j * ar) * c - (1j * al + ar) * s
    alpha_d = (1j * al + ar) * c + (al + 1j * ar) * s
    if k.ndim == 0:
        return complex(alpha_c), complex(alpha_d)
    return alpha_c, alpha_d


def _log_detection_amplitudes(
    light: LightPair,
    setting: InteractionSetting,
    outcome: DetectionOutcome,
    n_atoms: int,
):
    """log|A(k)| and arg A(k) over the whole k range, vectorized."""
    nc, nd = outcome.n_c, outcome.n_d
    if nc > MAX_COUNT or nd > MAX_COUNT:
        raise OverflowError(f"counts exceed log-domain capacity {MAX_COUNT}")
    k = np.arange(n_atoms + 1)
    alpha_c, alpha_d = port_amplitudes(light, setting, k, n_atoms)
    mag_c = np.abs(alpha_c) / np.sqrt(2.0)
    mag_d = np.abs(alpha_d) / np.sqrt(2.0)
    with np.errstate(divide="ignore"):
        term_c = np.where(nc > 0, nc * np.log(np.where(mag_c > 0, mag_c, 1.0)), 0.0)
        term_c = np.where((nc > 0) & (mag_c == 0), -np.inf, term_c)
        term_d = np.where(nd > 0, nd * np.log(np.where(mag_d > 0, mag_d, 1.0)), 0.0)
        term_d = np.where((nd > 0) & (mag_d == 0), -np.inf, term_d)
    log_mag = (
        -light.total_intensity / 2.0
        + term_c
        + term_d
        - 0.5 * (gammaln(nc + 1) + gammaln(nd + 1))
    )
    phase = nc * np.angle(alpha_c) + nd * np.angle(alpha_d)
    return log_mag, phase


def detection_amplitude(
    light: LightPair,
    setting: InteractionSetting,
    outcome: DetectionOutcome,
    k: int,
    n_atoms: int,
) -> complex:
    """Amplitude factor A_{n_c,n_d}(k) multiplying C_k upon detection."""
    if not 0 <= k <= n_atoms:
        raise ValueError(f"k out of range 0..{n_atoms}")
    log_mag, phase = _log_detection_amplitudes(light, setting, outcome, n_atoms)
    return complex(np.exp(log_mag[k]) * np.exp(1j * phase[k]))


def detection_probability(
    state: AtomState,
    light: LightPair,
    setting: InteractionSetting,
    outcome: DetectionOutcome,
) -> float:
    """P(n_c, n_d) = sum_k |C_k|^2 |A_{n_c,n_d}(k)|^2."""
    log_mag, _ = _log_detection_amplitudes(light, setting, outcome, state.n_atoms)
    p = float(np.sum(state.pmf() * np.exp(2.0 * log_mag)))
    if p > 1.0 + 1e-10:
        raise AssertionError(f"detection probability {p} exceeds 1")
    return min(p, 1.0)


def conditional_state(
    state: AtomState,
    light: LightPair,
    setting: InteractionSetting,
    outcome: DetectionOutcome,
) -> AtomState:
    """Post-measurement state with amplitudes C_k A(k), renormalized.

    The phases of A(k) are kept; they carry the k-dependent rotation that
    shows up in the transverse spin moments.
    """
    log_mag, phase = _log_detection_amplitudes(light, setting, outcome, state.n_atoms)
    prob = detection_probability(state, light, setting, outcome)
    if prob < PROB_FLOOR:
        raise ImpossibleOutcomeError(
            f"impossible outcome (n_c={outcome.n_c}, n_d={outcome.n_d}): "
            f"probability {prob:.3e}"
        )
    amp = state.amplitudes * np.exp(log_mag - log_mag.max()) * np.exp(1j * phase)
    amp /= np.linalg.norm(amp)
    return AtomState(n_atoms=state.n_atoms, amplitudes=amp)


def most_probable_outcome(light: LightPair) -> DetectionOutcome:
    """Balanced outcome at the per-detector Poisson mean, ties rounded down."""
    mean = light.total_intensity / 2.0
    n = int(math.ceil(mean - 0.5))
    return DetectionOutcome(n_c=n, n_d=n)


def outcome_cutoff(light: LightPair) -> int:
    """Per-detector enumeration cap keeping the Poisson tail below 1e-6."""
    mean = light.total_intensity / 2.0
    return max(20, int(math.ceil(mean + 10.0 * math.sqrt(mean))))


def detection_pmf_grid(
    state: AtomState,
    light: LightPair,
    setting: InteractionSetting,
    n_max: int | None = None,
) -> np.ndarray:
    """Full P(n_c, n_d) table for 0 <= n_c, n_d <= n_max.

    Per k the two ports are independent Poissonians with means
    |alpha_c|^2/2 and |alpha_d|^2/2, so the table is a pmf mixture.
    """
    if n_max is None:
        n_max = outcome_cutoff(light)
    k = np.arange(state.n_atoms + 1)
    alpha_c, alpha_d = port_amplitudes(light, setting, k, state.n_atoms)
    lam_c = np.abs(alpha_c) ** 2 / 2.0
    lam_d = np.abs(alpha_d) ** 2 / 2.0
    n = np.arange(n_max + 1)

    def poisson_rows(lam):
        with np.errstate(divide="ignore", invalid="ignore"):
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

    pc = poisson_rows(lam_c)
    pd = poisson_rows(lam_d)
    return np.einsum("k,kn,km->nm", state.pmf(), pc, pd)


def gaussian_window(
    light: LightPair, setting: InteractionSetting, outcome: DetectionOutcome
) -> GaussianWindow:
    """Peak x0 and inverse-width X0 of the detection window in k space."""
    if setting.gt <= 0:
        raise ValueError("gaussian_window requires gt > 0")
    nc, nd = outcome.n_c, outcome.n_d
    if nc + nd == 0:
        raise AsymptoticsDomainError("window undefined for the vacuum outcome")
    s_tot = light.total_intensity
    cross = 2.0 * abs(light.alpha_l * light.alpha_r)
    if cross == 0:
        raise AsymptoticsDomainError("window undefined when one arm is dark")
    arg = (s_tot / cross) * (nc - nd) / (nc + nd)
    if abs(arg) > 1.0:
        raise AsymptoticsDomainError(
            f"outcome inconsistent with asymptotics: arcsin argument {arg}"
        )
    gt = setting.gt
    x0 = (light.rel_phase - math.asin(arg)) / (2.0 * gt)
    big = (
        gt**2
        * ((nc + nd) / (nc * nd if nc * nd > 0 else np.inf))
        * ((nc + nd) ** 2 * (cross / s_tot) ** 2 - (nd - nc) ** 2)
    )
    return GaussianWindow(x0=x0, big_x0=max(big, 0.0))


def _window_products(
    light: LightPair, setting: InteractionSetting, outcome: DetectionOutcome
):
    """(X0, X0*x0, X0*x0^2) evaluated stably, finite also at gt = 0.

    x0 carries a 1/gt and X0 a gt^2, so the products have smooth gt -> 0
    limits even where x0 alone diverges.
    """
    nc, nd = outcome.n_c, outcome.n_d
    s_tot = light.total_intensity
    cross = 2.0 * abs(light.alpha_l * light.alpha_r)
    if nc + nd == 0 or nc * nd == 0:
        return 0.0, 0.0, 0.0
    if cross == 0:
        raise AsymptoticsDomainError("window undefined when one arm is dark")
    arg = (s_tot / cross) * (nc - nd) / (nc + nd)
    if abs(arg) > 1.0:
        raise AsymptoticsDomainError(
            f"outcome inconsistent with asymptotics: arcsin argument {arg}"
        )
    half_angle = (light.rel_phase - math.asin(arg)) / 2.0  # = gt * x0
    kfac = ((nc + nd) / (nc * nd)) * (
        (nc + nd) ** 2 * (cross / s_tot) ** 2 - (nd - nc) ** 2
    )
    kfac = max(kfac, 0.0)
    gt = setting.gt
    return kfac * gt**2, kfac * gt * half_angle, kfac * half_angle**2


def conditional_gaussian(
    ge: GroundExcitedAmplitudes,
    n_atoms: int,
    light: LightPair,
    setting: InteractionSetting,
    outcome: DetectionOutcome,
):
    """Gaussian (variance sigma, peak k0) of the conditional pmf, plus its pdf.

    Valid in the many-photon regime; callers assert validity.  Reduces to
    the prior spin-coherent Gaussian at gt = 0 and to
    sigma = N|eta_l eta_r|^2 / (1 + 8 g^2 t^2 n_c N|eta_l eta_r|^2) for the
    balanced case.
    """
    eta_l, eta_r = ge_to_lr_amplitudes(ge)
    ee = abs(eta_l * eta_r) ** 2
    prior_peak = n_atoms * abs(eta_l) ** 2
    big_x0, big_x0_x0, _ = _window_products(light, setting, outcome)
    denom = n_atoms * ee * big_x0 + 1.0
    sigma = n_atoms * ee / denom
    k0 = (prior_peak + n_atoms * ee * (big_x0 * n_atoms / 2.0 + big_x0_x0)) / denom
    x0 = big_x0_x0 / big_x0 if big_x0 > 0 else None
    window = GaussianWindow(x0=x0, big_x0=big_x0, sigma=sigma, k0=k0)

    def pdf(k):
        k = np.asarray(k, dtype=float)
        return np.exp(-((k - k0) ** 2) / (2.0 * sigma)) / np.sqrt(2.0 * np.pi * sigma)

    return window, pdf


def approx_detection_probability(
    ge: GroundExcitedAmplitudes,
    n_atoms: int,
    light: LightPair,
    setting: InteractionSetting,
    outcome: DetectionOutcome,
) -> float:
    """Closed-form Gaussian approximation to P(n_c, n_d).

    Product of Stirling-approximated Poissonians times the overlap of the
    detection window with the prior atom distribution.
    """
    nc, nd = outcome.n_c, outcome.n_d
    if nc == 0 or nd == 0:
        raise ValueError("approximation requires n_c, n_d >= 1")
    eta_l, eta_r = ge_to_lr_amplitudes(ge)
    ee = abs(eta_l * eta_r) ** 2
    s_tot = light.total_intensity
    big_x0, big_x0_x0, big_x0_x0sq = _window_products(light, setting, outcome)
    denom = 1.0 + n_atoms * ee * big_x0
    centroid = n_atoms * (abs(eta_l) ** 2 - abs(eta_r) ** 2) / 2.0
    # X0*(x0 - centroid)^2 expanded so the gt -> 0 limit stays finite
    quad = big_x0_x0sq - 2.0 * centroid * big_x0_x0 + centroid**2 * big_x0
    log_p = (
        -0.5 * np.log(4.0 * np.pi**2 * nc * nd * denom)
        + (nc + nd) * np.log(s_tot / (nc + nd))
        + (nc + nd - s_tot)
        - quad / (2.0 * denom)
    )
    return float(np.exp(log_p))
