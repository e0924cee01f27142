"""Monte Carlo measurement simulation and method-of-moments estimation.

Shots are drawn from the exact outcome distribution by CDF inversion with
a seeded generator.  Common phase noise is sampled per shot and snapped
to a fine uniform grid so that the output distribution is built once per
distinct working point; the snap step is a negligible fraction of the
noise width and the snapped value is common to both interferometers, so
it cancels in the differential estimate exactly like the noise itself.
"""

from dataclasses import dataclass

import numpy as np

from sqswap.fock import SqswapError, build_basis, encode_phases
from sqswap.protocol import (
    fringe_kernel,
    prepare_input_state,
    separable_interferometers,
)


class NonNormalizedDistribution(SqswapError):
    """Probability table does not sum to one."""


class ZeroFringeAmplitude(SqswapError):
    """Fringe amplitude too small to invert."""


@dataclass
class NoiseConfig:
    """Noise, timing and sampling knobs of the Monte Carlo experiments."""

    sigma_pn: float = 0.0
    Lambda_pn: float = np.pi / 4
    gamma_LO: float = 1.0
    T: float = 0.1
    T_tot: float = 1.0
    omega_0: float = 1.0
    omega_A: float = 1.0
    omega_B: float = 1.0
    shots: int = 100_000
    seed: int = 42
    phase_grid_points: int = 201

    def __post_init__(self):
        if self.sigma_pn < 0:
            raise ValueError("sigma_pn must be >= 0")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.T <= 0 or self.T_tot <= 0:
            raise ValueError("T and T_tot must be positive")


@dataclass
class EstimateRecord:
    """One shot: detected occupations, half-differences, phase estimates."""

    outcome: tuple
    mu_A: float
    mu_B: float
    theta_est_A: float
    theta_est_B: float

    def __post_init__(self):
        na, nb, nc, nd = self.outcome
        if self.mu_A != (na - nb) / 2.0 or self.mu_B != (nc - nd) / 2.0:
            raise ValueError("half-differences inconsistent with the outcome")


@dataclass
class DifferentialResult:
    """Per-shot estimates and summary statistics of one noise setting."""

    theta_est_A: np.ndarray
    theta_est_B: np.ndarray
    mu_A: np.ndarray
    mu_B: np.ndarray
    outcomes: np.ndarray
    var_diff: float
    mean_diff: float
    cov_estimates: np.ndarray

    def records(self, limit=None):
        n = len(self.theta_est_A) if limit is None else min(limit, len(self.theta_est_A))
        return [
            EstimateRecord(
                outcome=tuple(int(v) for v in self.outcomes[i]),
                mu_A=float(self.mu_A[i]),
                mu_B=float(self.mu_B[i]),
                theta_est_A=float(self.theta_est_A[i]),
                theta_est_B=float(self.theta_est_B[i]),
            )
            for i in range(n)
        ]


def sample_shots(probabilities, shots, seed):
    """I.i.d. outcome indices by CDF inversion, reproducible per seed."""
    p = np.asarray(getattr(probabilities, "probabilities", probabilities), dtype=float)
    total = p.sum()
    if abs(total - 1.0) > 1e-8:
        raise NonNormalizedDistribution(f"probabilities sum to {total!r}")
    cdf = np.cumsum(p / total)
    rng = np.random.default_rng(seed)
    u = rng.random(shots)
    return np.searchsorted(cdf, u, side="right").clip(0, p.size - 1)


def _indices_from_uniforms(probabilities, uniforms):
    cdf = np.cumsum(probabilities)
    cdf /= cdf[-1]
    return np.searchsorted(cdf, uniforms, side="right").clip(0, probabilities.size - 1)


def invert_phases(mu_A, mu_B, input_moments):
    """Invert the mean fringe for each interferometer on the branch around pi/2.

    The output fringe of the simulated protocol is
    <Jz>_out = <Jz>_inp cos(theta) - <Jx>_inp sin(theta) = A cos(theta + gamma),
    so theta_est = -gamma + arccos(mu / A), with mu clamped to the fringe
    amplitude when a finite-sample fluctuation carries it outside.
    """
    est = []
    for mu, mz, mx in (
        (np.asarray(mu_A, dtype=float), input_moments.mz_a, input_moments.mx_a),
        (np.asarray(mu_B, dtype=float), input_moments.mz_b, input_moments.mx_b),
    ):
        amp = np.hypot(mz, mx)
        if amp < 1e-12:
            raise ZeroFringeAmplitude("fringe amplitude below 1e-12")
        # pick the monotone branch containing pi/2: mirror the fringe when
        # the mean spin points along -z so that gamma stays in [-pi/2, pi/2]
        sign = 1.0 if mz >= 0 else -1.0
        gamma = np.arctan2(sign * mx, sign * mz)
        est.append(-gamma + np.arccos(np.clip(sign * mu / amp, -1.0, 1.0)))
    return est[0], est[1]


def _snap_common_noise(rng, noise):
    """Per-shot Gaussian common phase, snapped onto a fine symmetric grid."""
    if noise.sigma_pn == 0.0:
        return np.zeros(noise.shots)
    phis = rng.normal(0.0, noise.sigma_pn, noise.shots)
    half_width = 4.5 * noise.sigma_pn
    step = 2 * half_width / (noise.phase_grid_points - 1)
    snapped = np.round(phis / step) * step
    return np.clip(snapped, -half_width, half_width)


class _MepeSampler:
    """Joint four-mode outcome sampler for the mode-entangled protocol."""

    def __init__(self, config, basis=None):
        self.basis = basis or build_basis(config.N)
        self.state_inp = prepare_input_state(config, self.basis)
        self.kernel = fringe_kernel(self.state_inp)
        occ = self.basis.occupations
        self._mu_a = 0.5 * (occ[:, 0] - occ[:, 1]).astype(float)
        self._mu_b = 0.5 * (occ[:, 2] - occ[:, 3]).astype(float)

    def sample(self, theta_A, theta_B, uniforms):
        out = encode_phases(self.state_inp, theta_A, theta_B)
        idx = _indices_from_uniforms(out.probabilities(), uniforms[:, 0])
        return self._mu_a[idx], self._mu_b[idx], self.basis.occupations[idx]


class _MsepSampler:
    """Product sampler for the two independent mode-separable interferometers."""

    def __init__(self, config):
        self.N = config.N
        self.side_a, self.side_b = separable_interferometers(config)
        sm_a = self.side_a.sector_moments()
        sm_b = self.side_b.sector_moments()
        w_a, w_b = self.side_a.weights, self.side_b.weights
        self.kernel = _InputMoments(
            mz_a=float(w_a @ sm_a[:, 0]),
            mx_a=float(w_a @ sm_a[:, 1]),
            mz_b=float(w_b @ sm_b[:, 0]),
            mx_b=float(w_b @ sm_b[:, 1]),
        )

    def sample(self, theta_A, theta_B, uniforms):
        mus = []
        metas = []
        for side, theta, u in (
            (self.side_a, theta_A, uniforms[:, 0]),
            (self.side_b, theta_B, uniforms[:, 1]),
        ):
            probs, meta = side.outcome_table(theta)
            idx = _indices_from_uniforms(probs, u)
            n, k = meta[idx, 0], meta[idx, 1]
            mus.append(k - n / 2.0)
            metas.append(np.column_stack([k, n - k]))
        occ = np.column_stack([metas[0], metas[1]])
        return mus[0], mus[1], occ


@dataclass
class _InputMoments:
    mz_a: float
    mx_a: float
    mz_b: float
    mx_b: float


def _run_shots(sampler, noise, phi_A, phi_B, offsets=(0.0, 0.0)):
    rng = np.random.default_rng(noise.seed)
    common = _snap_common_noise(rng, noise)
    uniforms = rng.random((noise.shots, 2))
    mu_a = np.empty(noise.shots)
    mu_b = np.empty(noise.shots)
    outcomes = np.empty((noise.shots, 4), dtype=np.int64)
    for phi in np.unique(common):
        sel = np.nonzero(common == phi)[0]
        a, b, occ = sampler.sample(
            phi_A + phi + offsets[0], phi_B + phi + offsets[1], uniforms[sel]
        )
        mu_a[sel], mu_b[sel], outcomes[sel] = a, b, occ
    est_a, est_b = invert_phases(mu_a, mu_b, sampler.kernel)
    diff = est_a - est_b
    cov = np.cov(est_a, est_b, ddof=1) if noise.shots > 1 else np.zeros((2, 2))
    return DifferentialResult(
        theta_est_A=est_a,
        theta_est_B=est_b,
        mu_A=mu_a,
        mu_B=mu_b,
        outcomes=outcomes,
        var_diff=float(np.var(diff, ddof=1)) if noise.shots > 1 else 0.0,
        mean_diff=float(np.mean(diff)),
        cov_estimates=cov,
    )


def differential_experiment(config, noise, phi_A=np.pi / 2, phi_B=np.pi / 2,
                            scheme="mepe", basis=None):
    """Repeated-shot differential phase estimation under common dephasing.

    Each shot draws one common phase, measures both interferometers at the
    shifted working points, estimates theta_A and theta_B separately, and
    records the difference.
    """
    sampler = _MepeSampler(config, basis) if scheme == "mepe" else _MsepSampler(config)
    return _run_shots(sampler, noise, phi_A, phi_B)


@dataclass
class ClockResult:
    """Fractional-frequency variance against interrogation time."""

    t: np.ndarray
    var_frac: np.ndarray
    var_sql: np.ndarray
    shots: int


def clock_experiment(config, noise, t_values=None, scheme="mepe", basis=None):
    """Differential clock comparison under common 1/f local-oscillator noise.

    Per Ramsey cycle the accumulated LO phase is a zero-mean Gaussian of
    width gamma_LO * T, common to both ensembles; the differential phase
    estimate divided by omega_0 T gives the fractional frequency, and
    averaging over T_tot / T cycles turns the per-cycle variance into
    Var / (omega_0^2 T T_tot).
    """
    if noise.omega_0 <= 0:
        raise ValueError("omega_0 must be positive")
    if t_values is None:
        t_values = np.geomspace(0.01, 1.0, 7) / noise.gamma_LO
    t_values = np.asarray(t_values, dtype=float)
    sampler = _MepeSampler(config, basis) if scheme == "mepe" else _MsepSampler(config)
    var_frac = np.empty(t_values.size)
    for i, t in enumerate(t_values):
        cycle_noise = NoiseConfig(
            sigma_pn=noise.gamma_LO * t,
            shots=noise.shots,
            seed=noise.seed + i,
            phase_grid_points=noise.phase_grid_points,
        )
        offsets = (-(noise.omega_A - noise.omega_0) * t, -(noise.omega_B - noise.omega_0) * t)
        res = _run_shots(sampler, cycle_noise, np.pi / 2, np.pi / 2, offsets)
        var_frac[i] = res.var_diff / (noise.omega_0**2 * t * noise.T_tot)
    var_sql = 4.0 / (noise.omega_0**2 * config.N * t_values * noise.T_tot)
    return ClockResult(t=t_values, var_frac=var_frac, var_sql=var_sql, shots=noise.shots)
