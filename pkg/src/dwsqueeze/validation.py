"""Independent oracles and cross-model equivalence checks.

The brute-force Fock-expansion oracle is deliberately built from nothing
but coherent-state Fock coefficients and an explicit two-mode
beamsplitter unitary, so it shares no math with the production detection
path.  It is exponential in the photon cutoff and only meant for small
instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .husimi import q_grid
from .master_eq import (
    HybridState,
    ModelParams,
    TimeGrid,
    conditional_density,
    integrate,
)
from .pure_measure import (
    DetectionOutcome,
    InteractionSetting,
    LightPair,
    conditional_gaussian,
    conditional_state,
    detection_pmf_grid,
    gaussian_window,
    most_probable_outcome,
    _log_detection_amplitudes,
)
from .spin_core import (
    AtomState,
    GroundExcitedAmplitudes,
    build_spin_coherent,
    ge_to_lr_amplitudes,
)

ORACLE_MAX_INTENSITY = 4.0
ORACLE_MAX_CUTOFF = 25
ORACLE_TAIL_TOL = 1e-10


class OracleInconclusiveError(RuntimeError):
    """Raised when an oracle cannot bound its own truncation error."""


@dataclass(frozen=True)
class OracleReport:
    name: str
    max_abs_error: float
    tolerance: float
    passed: bool
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.passed != (self.max_abs_error <= self.tolerance):
            raise ValueError("passed flag inconsistent with error/tolerance")

    @classmethod
    def make(cls, name: str, max_abs_error: float, tolerance: float, **context):
        return cls(
            name=name,
            max_abs_error=float(max_abs_error),
            tolerance=float(tolerance),
            passed=bool(max_abs_error <= tolerance),
            context=context,
        )


def _bs_unitary_amp(nl: int, nr: int, nc: int, nd: int) -> complex:
    """<n_c, n_d|U|n_l, n_r> for a_l+ -> (a_c+ + i a_d+)/sqrt2, a_r+ -> (i a_c+ + a_d+)/sqrt2."""
    if nl + nr != nc + nd:
        return 0.0
    tot = 0j
    for p in range(nl + 1):
        q = nc - p
        if q < 0 or q > nr:
            continue
        tot += math.comb(nl, p) * math.comb(nr, q) * 1j ** (nl - p) * 1j**q
    f = math.factorial
    return tot * math.sqrt(f(nc) * f(nd) / (f(nl) * f(nr))) / 2 ** ((nl + nr) / 2)


def _coherent_fock(mu: complex, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1)
    mag = abs(mu)
    if mag == 0:
        c = np.zeros(cutoff + 1, dtype=complex)
        c[0] = 1.0
        return c
    log_mag = -(mag**2) / 2.0 + n * math.log(mag) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(mu))


def fock_expansion_oracle(
    state: AtomState,
    light: LightPair,
    setting: InteractionSetting,
    outcome_cutoff: int,
) -> np.ndarray:
    """Detection pmf over 0..outcome_cutoff per detector, by brute force.

    Each arm's coherent state (dressed by the k-dependent phase) is
    expanded in the photon Fock basis, pushed through the beamsplitter
    unitary, and projected on |n_c, n_d>.  Photon number is conserved, so
    only n_l + n_r = n_c + n_d terms contribute.
    """
    mean = max(abs(light.alpha_l) ** 2, abs(light.alpha_r) ** 2)
    if mean > ORACLE_MAX_INTENSITY:
        raise ValueError(f"oracle limited to arm intensities <= {ORACLE_MAX_INTENSITY}")
    if outcome_cutoff > ORACLE_MAX_CUTOFF:
        raise ValueError(f"oracle limited to outcome cutoff <= {ORACLE_MAX_CUTOFF}")
    n_atoms = state.n_atoms
    fock_cutoff = max(
        2 * outcome_cutoff, int(math.ceil(mean + 12.0 * math.sqrt(max(mean, 1.0))))
    )
    pmf = np.zeros((outcome_cutoff + 1, outcome_cutoff + 1))
    p_k = state.pmf()
    for k in range(n_atoms + 1):
        phase = setting.gt * (k - n_atoms / 2.0)
        mu_l = light.alpha_l * np.exp(-1j * phase)
        mu_r = light.alpha_r * np.exp(1j * phase)
        cl = _coherent_fock(mu_l, fock_cutoff)
        cr = _coherent_fock(mu_r, fock_cutoff)
        tail = 2.0 - np.sum(np.abs(cl) ** 2) - np.sum(np.abs(cr) ** 2)
        if tail > ORACLE_TAIL_TOL:
            raise OracleInconclusiveError(
                f"Fock cutoff {fock_cutoff} leaves tail mass {tail:.2e}"
            )
        for n_c in range(outcome_cutoff + 1):
            for n_d in range(outcome_cutoff + 1):
                amp = 0j
                for n_l in range(min(n_c + n_d, fock_cutoff) + 1):
                    n_r = n_c + n_d - n_l
                    if n_r > fock_cutoff:
                        continue
                    amp += cl[n_l] * cr[n_r] * _bs_unitary_amp(n_l, n_r, n_c, n_d)
                pmf[n_c, n_d] += p_k[k] * abs(amp) ** 2
    return pmf


def fock_oracle_report(
    state: AtomState,
    light: LightPair,
    setting: InteractionSetting,
    outcome_cutoff: int,
    tolerance: float = 1e-8,
) -> OracleReport:
    """Compare the brute-force pmf against the production detection pmf."""
    oracle = fock_expansion_oracle(state, light, setting, outcome_cutoff)
    prod = detection_pmf_grid(state, light, setting, n_max=outcome_cutoff)
    err = float(np.max(np.abs(oracle - prod)))
    return OracleReport.make(
        "fock_expansion_vs_detection_pmf",
        err,
        tolerance,
        n_atoms=state.n_atoms,
        gt=setting.gt,
        outcome_cutoff=outcome_cutoff,
    )


def me_vs_pure_crosscheck(
    params: ModelParams,
    state: AtomState,
    outcome: DetectionOutcome,
    t: float,
    tolerance: float = 1e-8,
) -> OracleReport:
    """With tunneling and dephasing off, both models must condition identically.

    The hybrid equation has a vanishing generator at omega = gamma = 0, so
    the readout-time matrix is the initial projector; conditioning it must
    reproduce the pure conditional state's projector elementwise.
    """
    if params.omega != 0.0 or params.gamma != 0.0:
        raise ValueError("crosscheck requires omega = 0 and gamma = 0")
    rho0 = np.outer(state.amplitudes, state.amplitudes.conj())
    cond_me = conditional_density(params, HybridState(rho0, t), outcome)
    pure = conditional_state(
        state, params.light, InteractionSetting(g=params.g, t=t), outcome
    )
    proj = np.outer(pure.amplitudes, pure.amplitudes.conj())
    err = float(np.max(np.abs(cond_me - proj)))
    return OracleReport.make(
        "master_vs_pure_conditional",
        err,
        tolerance,
        n_atoms=params.n_atoms,
        gt=params.g * t,
        outcome=(outcome.n_c, outcome.n_d),
    )


def stirling_regime_check(
    ge: GroundExcitedAmplitudes,
    n_atoms: int,
    light: LightPair,
    setting: InteractionSetting,
    tolerance: float = 0.05,
) -> OracleReport:
    """Relative error of the Gaussian asymptotics in their central windows.

    Checks |C_k| against the Stirling Gaussian of the prior over +-3 prior
    sigma, and |A(k)| against the Gaussian detection window over +-3 sigma
    of the conditional posterior (the region the measurement actually
    weights), at the most probable outcome.
    """
    if n_atoms < 100:
        raise ValueError("asymptotic check requires n_atoms >= 100")
    outcome = most_probable_outcome(light)
    k = np.arange(n_atoms + 1)

    eta_l, eta_r = ge_to_lr_amplitudes(ge)
    var_prior = n_atoms * abs(eta_l) ** 2 * abs(eta_r) ** 2
    peak_prior = n_atoms * abs(eta_l) ** 2
    exact_c = np.abs(build_spin_coherent(ge, n_atoms).amplitudes)
    approx_c = (2.0 * np.pi * var_prior) ** -0.25 * np.exp(
        -((k - peak_prior) ** 2) / (4.0 * var_prior)
    )
    win_c = np.abs(k - peak_prior) <= 3.0 * np.sqrt(var_prior)
    err_c = float(np.max(np.abs(exact_c[win_c] - approx_c[win_c]) / approx_c[win_c]))

    window = gaussian_window(light, setting, outcome)
    nc, nd = outcome.n_c, outcome.n_d
    s_tot = light.total_intensity
    log_mag, _ = _log_detection_amplitudes(light, setting, outcome, n_atoms)
    exact_a = np.exp(log_mag)
    approx_a = (
        (s_tot / (nc + nd)) ** ((nc + nd) / 2.0)
        * np.exp((nc + nd - s_tot) / 2.0)
        * (4.0 * np.pi**2 * nc * nd) ** -0.25
        * np.exp(-window.big_x0 / 4.0 * (k - n_atoms / 2.0 - window.x0) ** 2)
    )
    cond_win, _ = conditional_gaussian(ge, n_atoms, light, setting, outcome)
    center_a = n_atoms / 2.0 + window.x0
    sigma_a = math.sqrt(cond_win.sigma)
    win_a = np.abs(k - center_a) <= 3.0 * sigma_a
    err_a = float(np.max(np.abs(exact_a[win_a] - approx_a[win_a]) / approx_a[win_a]))

    return OracleReport.make(
        "stirling_asymptotics",
        max(err_c, err_a),
        tolerance,
        amplitude_error=err_c,
        window_error=err_a,
        n_atoms=n_atoms,
        gt=setting.gt,
        outcome=(nc, nd),
    )


def _default_sweep_entries() -> list[dict]:
    omega = math.pi / 4.0
    entries = []
    for n in (2, 5, 30):
        g = 0.1 * omega / n
        entries.append(
            {
                "n_atoms": n,
                "omega": omega,
                "g": g,
                "gamma": 0.1 * g,
                "alpha": math.sqrt(0.001),
                "beta": math.sqrt(0.999),
                "alpha_l": 2.0,
                "alpha_r": 2.0,
                "t_max": 8.0 / omega,
                "dt": 0.02,
                "sample_stride": 20,
            }
        )
    return entries


def normalization_sweep(entries: list[dict] | None = None) -> list[OracleReport]:
    """Completeness, trace, Hermiticity and Q-normalization over a parameter matrix.

    Each entry is a flat parameter dict; defaults cover N in {2, 5, 30}
    with tunneling/coupling values at the squeezing operating point.
    Integrations run non-strict so that injected faults (for example an
    unstable dt) show up as failed reports instead of aborts.
    """
    if entries is None:
        entries = _default_sweep_entries()
    reports: list[OracleReport] = []
    for e in entries:
        n = e["n_atoms"]
        ge = GroundExcitedAmplitudes(e["alpha"], e["beta"])
        light = LightPair(e["alpha_l"], e["alpha_r"])
        state = build_spin_coherent(ge, n)
        tag = f"N={n}"

        gt = e["g"] * e["t_max"]
        grid_pmf = detection_pmf_grid(state, light, InteractionSetting(e["g"], e["t_max"]))
        reports.append(
            OracleReport.make(
                f"completeness[{tag}]",
                abs(1.0 - float(grid_pmf.sum())),
                1e-6,
                gt=gt,
            )
        )

        params = ModelParams(
            n_atoms=n,
            omega=e["omega"],
            g=e["g"],
            gamma=e["gamma"],
            light=light,
        )
        rho0 = np.outer(state.amplitudes, state.amplitudes.conj())
        grid = TimeGrid(e["t_max"], e["dt"], e["sample_stride"])
        with np.errstate(over="ignore", invalid="ignore"):
            samples = integrate(params, rho0, grid, strict=False)
        reports.append(
            OracleReport.make(
                f"trace_drift[{tag}]",
                max(s.trace_error() for s in samples),
                1e-8,
                dt=e["dt"],
            )
        )
        reports.append(
            OracleReport.make(
                f"hermiticity[{tag}]",
                max(s.herm_error() for s in samples),
                1e-9,
                dt=e["dt"],
            )
        )

        # a broken trajectory (injected fault) must fail this report, not
        # abort the sweep
        try:
            cond = conditional_density(params, samples[-1], most_probable_outcome(light))
            q_err = abs(1.0 - q_grid(cond, 128, 128).quadrature_sum())
        except Exception as exc:
            reports.append(
                OracleReport.make(
                    f"q_normalization[{tag}]", math.inf, 1e-3, error=str(exc)
                )
            )
        else:
            reports.append(
                OracleReport.make(
                    f"q_normalization[{tag}]", q_err, 1e-3, grid=(128, 128)
                )
            )
    return reports
