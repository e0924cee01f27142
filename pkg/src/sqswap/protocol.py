"""Full differential-interferometer pipelines and sensitivity metrics.

run_mepe composes split -> squeeze -> mode swap -> phase encoding and
evaluates the method-of-moments uncertainty of theta_A - theta_B from
exact output moments, with fringe slopes taken analytically from the
input-port moments.  A FringeKernel caches the handful of input-state
moments from which the uncertainty at any (theta_A, theta_B) follows in
closed form; grid quantities (bandwidth, average gain) are vectorized
over it.  run_separable simulates the mode-separable reference: each
interferometer is the exact binomial mixture over its pair total, so the
tau_S_A = tau_E, tau_S_B = 0 case reproduces run_mepe at theta_MS = 0 to
machine precision.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from sqswap.fock import (
    SqswapError,
    apply_mode_swap,
    build_basis,
    encode_phases,
    evolve_squeezing,
    jx_eigensystem,
    prepare_initial,
    tat_eigensystem,
)

# strictly-greater guard for the bandwidth counter: along theta_B = pi - theta_A
# the zero-squeezing gain is exactly 1 and cancellation noise grows like
# eps * cot^2 near the fringe edges, so the guard sits well above that
GAIN_EPS = 1e-7


class DegenerateWorkingPoint(SqswapError):
    """Fringe slope vanishes at the requested working point."""


class InvalidSplit(SqswapError):
    """Mode-separable variant needs an even atom number."""


@dataclass
class SensitivityReport:
    """Method-of-moments uncertainty budget of one protocol evaluation."""

    var_theta_A: float
    var_theta_B: float
    cov_AB: float
    slope_A: float
    slope_B: float
    var_diff: float
    gain: float
    sql: float


@dataclass
class FringeKernel:
    """Input-port moments that determine the output moments at any phases.

    With U = exp(-i theta Jy), Heisenberg evolution gives
    Jz(theta) = Jz cos(theta) - Jx sin(theta), so every Eq.-(4) ingredient
    at arbitrary (theta_A, theta_B) is a trig combination of these numbers.
    """

    N: int
    mz_a: float
    mx_a: float
    mz_b: float
    mx_b: float
    zz_a: float
    xx_a: float
    zx_a: float
    zz_b: float
    xx_b: float
    zx_b: float
    czz: float
    czx: float
    cxz: float
    cxx: float

    def output_moments(self, theta_A, theta_B):
        ca, sa = np.cos(theta_A), np.sin(theta_A)
        cb, sb = np.cos(theta_B), np.sin(theta_B)
        mean_a = ca * self.mz_a - sa * self.mx_a
        mean_b = cb * self.mz_b - sb * self.mx_b
        var_a = ca**2 * self.zz_a + sa**2 * self.xx_a - 2 * ca * sa * self.zx_a - mean_a**2
        var_b = cb**2 * self.zz_b + sb**2 * self.xx_b - 2 * cb * sb * self.zx_b - mean_b**2
        cov = (
            ca * cb * self.czz
            - ca * sb * self.czx
            - sa * cb * self.cxz
            + sa * sb * self.cxx
            - mean_a * mean_b
        )
        slope_a = -sa * self.mz_a - ca * self.mx_a
        slope_b = -sb * self.mz_b - cb * self.mx_b
        return var_a, var_b, cov, slope_a, slope_b

    def var_linear_combination(self, theta_A, theta_B, v_A, v_B):
        var_a, var_b, cov, slope_a, slope_b = self.output_moments(theta_A, theta_B)
        _check_slopes(slope_a, slope_b, v_A, v_B, self.N)
        return (
            v_A**2 * var_a / slope_a**2
            + v_B**2 * var_b / slope_b**2
            + 2 * v_A * v_B * cov / (slope_a * slope_b)
        )

    def var_diff(self, theta_A, theta_B):
        return self.var_linear_combination(theta_A, theta_B, 1.0, -1.0)

    def gain(self, theta_A, theta_B):
        return (4.0 / self.N) / self.var_diff(theta_A, theta_B)


def _check_slopes(slope_a, slope_b, v_A, v_B, N):
    scale = max(N / 4.0, 1.0)
    bad_a = v_A != 0.0 and np.any(np.abs(slope_a) < 1e-12 * scale)
    bad_b = v_B != 0.0 and np.any(np.abs(slope_b) < 1e-12 * scale)
    if bad_a or bad_b:
        raise DegenerateWorkingPoint("fringe slope vanishes at the working point")


def fringe_kernel(state_inp):
    """Collect the input-port moments feeding the closed-form sensitivity."""
    basis = state_inp.basis
    psi = state_inp.amplitudes
    dz_a = basis.half_diff("ab")
    dz_b = basis.half_diff("cd")
    vz_a = dz_a * psi
    vz_b = dz_b * psi
    vx_a = basis.operator("ab", "x").matrix @ psi
    vx_b = basis.operator("cd", "x").matrix @ psi

    def r(u, v):
        return float(np.real(np.vdot(u, v)))

    return FringeKernel(
        N=basis.N,
        mz_a=r(psi, vz_a),
        mx_a=r(psi, vx_a),
        mz_b=r(psi, vz_b),
        mx_b=r(psi, vx_b),
        zz_a=r(vz_a, vz_a),
        xx_a=r(vx_a, vx_a),
        zx_a=r(vz_a, vx_a),
        zz_b=r(vz_b, vz_b),
        xx_b=r(vx_b, vx_b),
        zx_b=r(vz_b, vx_b),
        czz=r(vz_a, vz_b),
        czx=r(vz_a, vx_b),
        cxz=r(vx_a, vz_b),
        cxx=r(vx_a, vx_b),
    )


def prepare_input_state(config, basis=None):
    """State at the two interferometers' input ports (after squeezing and MS)."""
    basis = basis or build_basis(config.N)
    psi = prepare_initial(basis)
    psi = evolve_squeezing(psi, config.generator, config.tau_E, config.nu_E)
    return apply_mode_swap(psi, config.theta_MS, config.phi_MS)


def run_mepe(config, basis=None):
    """Mode-entangled pipeline; returns (input state, output state, report)."""
    basis = basis or build_basis(config.N)
    state_inp = prepare_input_state(config, basis)
    state_out = encode_phases(state_inp, config.theta_A, config.theta_B)

    # exact output moments; Jz on each pair is diagonal in the Fock basis
    p = state_out.probabilities()
    dz_a = basis.half_diff("ab")
    dz_b = basis.half_diff("cd")
    mz_a = float(p @ dz_a)
    mz_b = float(p @ dz_b)
    var_a = float(p @ dz_a**2) - mz_a**2
    var_b = float(p @ dz_b**2) - mz_b**2
    cov = float(p @ (dz_a * dz_b)) - mz_a * mz_b

    # fringe slopes from the input-port moments
    psi_in = state_inp.amplitudes
    mzi_a = float(np.real(np.vdot(psi_in, dz_a * psi_in)))
    mzi_b = float(np.real(np.vdot(psi_in, dz_b * psi_in)))
    mxi_a = float(np.real(np.vdot(psi_in, basis.operator("ab", "x").matrix @ psi_in)))
    mxi_b = float(np.real(np.vdot(psi_in, basis.operator("cd", "x").matrix @ psi_in)))
    slope_a = -np.sin(config.theta_A) * mzi_a - np.cos(config.theta_A) * mxi_a
    slope_b = -np.sin(config.theta_B) * mzi_b - np.cos(config.theta_B) * mxi_b
    _check_slopes(slope_a, slope_b, 1.0, -1.0, config.N)

    report = _report_from_moments(config.N, var_a, var_b, cov, slope_a, slope_b)
    return state_inp, state_out, report


def _report_from_moments(N, var_a, var_b, cov, slope_a, slope_b):
    var_ta = var_a / slope_a**2
    var_tb = var_b / slope_b**2
    var_diff = var_ta + var_tb - 2 * cov / (slope_a * slope_b)
    sql = 4.0 / N
    return SensitivityReport(
        var_theta_A=var_ta,
        var_theta_B=var_tb,
        cov_AB=cov,
        slope_A=slope_a,
        slope_B=slope_b,
        var_diff=var_diff,
        gain=sql / var_diff,
        sql=sql,
    )


def sensitivity_linear_combination(state_inp, theta_A, theta_B, v_A, v_B):
    """Uncertainty of v_A theta_A + v_B theta_B from exact output moments."""
    return fringe_kernel(state_inp).var_linear_combination(theta_A, theta_B, v_A, v_B)


def midfringe_sensitivity(state_inp):
    """Variance of Jx_ab/<Jz_ab>_inp - Jx_cd/<Jz_cd>_inp on the input state."""
    basis = state_inp.basis
    psi = state_inp.amplitudes
    mz_a = float(np.real(np.vdot(psi, basis.half_diff("ab") * psi)))
    mz_b = float(np.real(np.vdot(psi, basis.half_diff("cd") * psi)))
    if min(abs(mz_a), abs(mz_b)) < 1e-12 * max(basis.N / 4.0, 1.0):
        raise DegenerateWorkingPoint("<Jz>_inp vanishes")
    v = (basis.operator("ab", "x").matrix @ psi) / mz_a - (
        basis.operator("cd", "x").matrix @ psi
    ) / mz_b
    mean = float(np.real(np.vdot(psi, v)))
    return float(np.real(np.vdot(v, v))) - mean**2


def bandwidth(config, grid_resolution=64, basis=None, kernel=None):
    """Fraction of the open (0, pi)^2 phase grid with gain above 1 (Eq.-13 style)."""
    if grid_resolution < 32:
        raise ValueError("grid_resolution must be >= 32")
    if kernel is None:
        kernel = fringe_kernel(prepare_input_state(config, basis))
    theta = (np.arange(grid_resolution) + 0.5) * np.pi / grid_resolution
    ta, tb = np.meshgrid(theta, theta, indexing="ij")
    gain = kernel.gain(ta, tb)
    return float(np.count_nonzero(gain > 1.0 + GAIN_EPS)) / gain.size


def average_gain(config, lambda_pn, n_points=201, basis=None, kernel=None):
    """Mean of the gain along the common-shift diagonal over [-Lambda, Lambda].

    The printed normalization (2 Lambda)^2 diverges as Lambda -> 0; the mean
    over the interval (division by 2 Lambda) reproduces the quoted limits.
    """
    if not 0 < lambda_pn <= np.pi / 2:
        raise ValueError("lambda_pn must be in (0, pi/2]")
    if kernel is None:
        kernel = fringe_kernel(prepare_input_state(config, basis))
    phi = (np.arange(n_points) + 0.5) / n_points * 2 * lambda_pn - lambda_pn
    return float(np.mean(kernel.gain(np.pi / 2 + phi, np.pi / 2 + phi)))


def spin_squeezing_xi2(state, pair="ab", total_n=None):
    """Wineland parameter (N/2) min_perp Var(J_perp) / <Jz>^2 on one pair.

    Assumes the mean spin of the pair points along z (true for every state
    of this protocol before phase encoding).
    """
    basis = state.basis
    psi = state.amplitudes
    n = total_n if total_n is not None else basis.N
    vx = basis.operator(pair, "x").matrix @ psi
    vy = basis.operator(pair, "y").matrix @ psi
    mx = float(np.real(np.vdot(psi, vx)))
    my = float(np.real(np.vdot(psi, vy)))
    mz = float(np.real(np.vdot(psi, basis.half_diff(pair) * psi)))
    cxx = float(np.real(np.vdot(vx, vx))) - mx**2
    cyy = float(np.real(np.vdot(vy, vy))) - my**2
    cxy = float(np.real(np.vdot(vx, vy))) - mx * my
    mid = 0.5 * (cxx + cyy)
    rad = np.hypot(0.5 * (cxx - cyy), cxy)
    return (n / 2.0) * (mid - rad) / mz**2


# ---------------------------------------------------------------------------
# mode-separable reference (two independent pair-basis interferometers)


class PairMixture:
    """One interferometer as a number-sector mixture of pair states.

    Sector n holds a normalized (n+1)-vector over the first pair mode's
    occupation, weighted by the binomial probability of drawing n atoms in
    the 50-50 split.  All protocol unitaries conserve n, so the mixture is
    exact: it is the reduced description of the four-mode state when the
    two interferometers are uncoupled.
    """

    def __init__(self, N, start_mode):
        self.N = N
        n = np.arange(N + 1)
        self.weights = np.exp(gammaln(N + 1) - gammaln(n + 1) - gammaln(N - n + 1) - N * np.log(2.0))
        self.vectors = []
        for sector in range(N + 1):
            v = np.zeros(sector + 1, dtype=complex)
            v[sector if start_mode == "first" else 0] = 1.0
            self.vectors.append(v)

    def phase_z(self, angle):
        if angle == 0.0:
            return self
        for n, v in enumerate(self.vectors):
            v *= np.exp(-1j * angle * (np.arange(n + 1) - n / 2.0))
        return self

    def _sector_apply(self, factors_of_n, eigsys=jx_eigensystem):
        for n in range(self.N + 1):
            w, vecs = eigsys(n)
            y = vecs.conj().T @ self.vectors[n]
            y *= factors_of_n(n, w)
            self.vectors[n] = vecs @ y
        return self

    def squeeze(self, generator, tau, nu):
        if tau != 0.0:
            if generator == "oat":
                self._sector_apply(lambda n, m: np.exp(-1j * tau * m**2))
            elif generator == "tat":
                self._sector_apply(lambda n, w: np.exp(-1j * tau * w), eigsys=tat_eigensystem)
            else:
                raise ValueError("generator must be 'oat' or 'tat'")
        return self.phase_z(nu)

    def sector_moments(self):
        """Per-sector first/second moments of (Jz, Jx): columns z, x, zz, xx, zx."""
        out = np.zeros((self.N + 1, 5))
        for n, v in enumerate(self.vectors):
            m = np.arange(n + 1) - n / 2.0
            vz = m * v
            k = np.arange(n)
            off = 0.5 * np.sqrt((k + 1.0) * (n - k))
            vx = np.zeros_like(v)
            if n:
                vx[1:] += off * v[:-1]
                vx[:-1] += off * v[1:]
            out[n, 0] = np.real(np.vdot(v, vz))
            out[n, 1] = np.real(np.vdot(v, vx))
            out[n, 2] = np.real(np.vdot(vz, vz))
            out[n, 3] = np.real(np.vdot(vx, vx))
            out[n, 4] = np.real(np.vdot(vz, vx))
        return out

    def transverse_covariance(self):
        """Aggregated covariance matrix of (Jx, Jy) over the mixture."""
        mx = my = xx = yy = xy = 0.0
        for n, v in enumerate(self.vectors):
            w = self.weights[n]
            k = np.arange(n)
            off = 0.5 * np.sqrt((k + 1.0) * (n - k))
            vx = np.zeros_like(v)
            vy = np.zeros_like(v)
            if n:
                vx[1:] += off * v[:-1]
                vx[:-1] += off * v[1:]
                vy[1:] += -1j * off * v[:-1]
                vy[:-1] += 1j * off * v[1:]
            mx += w * np.real(np.vdot(v, vx))
            my += w * np.real(np.vdot(v, vy))
            xx += w * np.real(np.vdot(vx, vx))
            yy += w * np.real(np.vdot(vy, vy))
            xy += w * np.real(np.vdot(vx, vy))
        return np.array([[xx - mx**2, xy - mx * my], [xy - mx * my, yy - my**2]])

    def optimal_orientation(self):
        """z-rotation angle minimizing the transverse variance of the state."""
        c = self.transverse_covariance()
        nu = 0.5 * np.arctan2(-2.0 * c[0, 1], c[0, 0] - c[1, 1])
        cands = [nu, nu + np.pi / 2]

        def var_at(v):
            cv, sv = np.cos(v), np.sin(v)
            return cv**2 * c[0, 0] + sv**2 * c[1, 1] - 2 * sv * cv * c[0, 1]

        return min(cands, key=var_at)

    def phase_uncertainty(self, theta):
        """Method-of-moments Delta^2 theta of this interferometer at theta."""
        sm = self.sector_moments()
        w = self.weights
        ct, st = np.cos(theta), np.sin(theta)
        mean_n = ct * sm[:, 0] - st * sm[:, 1]
        second_n = ct**2 * sm[:, 2] + st**2 * sm[:, 3] - 2 * ct * st * sm[:, 4]
        mean = float(w @ mean_n)
        var = float(w @ second_n) - mean**2
        slope = float(w @ (-st * sm[:, 0] - ct * sm[:, 1]))
        if abs(slope) < 1e-12 * max(self.N / 4.0, 1.0):
            raise DegenerateWorkingPoint("fringe slope vanishes")
        return var / slope**2

    def outcome_table(self, theta):
        """Flat outcome distribution over (sector n, first-mode count k) at theta."""
        rotated = self._copy().rotate_y(theta)
        probs = []
        meta = []
        for n, v in enumerate(rotated.vectors):
            p = rotated.weights[n] * np.abs(v) ** 2
            probs.append(p)
            k = np.arange(n + 1)
            meta.append(np.column_stack([np.full(n + 1, n), k]))
        return np.concatenate(probs), np.concatenate(meta)

    def rotate_y(self, theta):
        if theta != 0.0:
            self.phase_z(-np.pi / 2)
            self._sector_apply(lambda n, m: np.exp(-1j * theta * m))
            self.phase_z(np.pi / 2)
        return self

    def _copy(self):
        other = PairMixture.__new__(PairMixture)
        other.N = self.N
        other.weights = self.weights
        other.vectors = [v.copy() for v in self.vectors]
        return other


def separable_interferometers(config):
    """The two prepared (not yet phase-encoded) mode-separable interferometers."""
    if config.N % 2 != 0:
        raise InvalidSplit("mode-separable variant needs even N")
    side_a = PairMixture(config.N, "first")
    nu_a = config.nu_S_A
    side_a.squeeze(config.generator, config.tau_S_A, 0.0)
    side_a.phase_z(nu_a if nu_a is not None else (side_a.optimal_orientation() if config.tau_S_A else 0.0))
    side_b = PairMixture(config.N, "second")
    nu_b = config.nu_S_B
    side_b.squeeze(config.generator, config.tau_S_B, 0.0)
    side_b.phase_z(nu_b if nu_b is not None else (side_b.optimal_orientation() if config.tau_S_B else 0.0))
    return side_a, side_b


def run_separable(config):
    """Mode-separable reference: var_diff is the plain sum of uncertainties."""
    side_a, side_b = separable_interferometers(config)
    var_ta = side_a.phase_uncertainty(config.theta_A)
    var_tb = side_b.phase_uncertainty(config.theta_B)
    var_diff = var_ta + var_tb
    sql = 4.0 / config.N
    return SensitivityReport(
        var_theta_A=var_ta,
        var_theta_B=var_tb,
        cov_AB=0.0,
        slope_A=np.nan,
        slope_B=np.nan,
        var_diff=var_diff,
        gain=sql / var_diff,
        sql=sql,
    )
