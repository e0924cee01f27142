"""Closed-form Holstein-Primakoff layer for the mode-swapped protocol.

Carries the full analytic sensitivity of the coherent+squeezed input
through a general beam-splitter between the squeezed mode and the second
interferometer's empty mode, the zero-squeezing closed forms that serve
as oracles for the exact engine, the gain formulas, and the quadrature
picture of the swap.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from sqswap.fock import SqswapError


class DenominatorNonPositive(SqswapError):
    """Coherent amplitude too small against the squeezed population."""


class BoundaryPhase(SqswapError):
    """Closed forms are singular at theta in {0, pi}."""


class ValidityWarning(UserWarning):
    """Analytic layer used outside its depletion-free regime."""


@dataclass
class MSMatrix:
    """Entries of the general unitary acting on the (b, c) mode pair.

    Unitarity fixes u_bb_mag^2 + u_cb_mag^2 = 1 and
    delta_cc = delta_bb + delta_bc - delta_cb.
    """

    u_bb_mag: float
    u_cb_mag: float
    delta_bb: float = 0.0
    delta_cb: float = 0.0
    delta_bc: float = 0.0

    @property
    def delta_cc(self):
        return self.delta_bb + self.delta_bc - self.delta_cb

    def __post_init__(self):
        if abs(self.u_bb_mag**2 + self.u_cb_mag**2 - 1.0) > 1e-9:
            raise ValueError("mode-swap amplitudes must satisfy |u_bb|^2 + |u_cb|^2 = 1")


def ms_matrix_from_protocol(theta_MS, phi_MS):
    """Beam-splitter matrix of the laser coupling: delta_cb = phi_MS - pi/2."""
    d = phi_MS - np.pi / 2
    return MSMatrix(
        u_bb_mag=float(np.cos(theta_MS / 2)),
        u_cb_mag=float(abs(np.sin(theta_MS / 2))),
        delta_bb=0.0,
        delta_cb=d,
        delta_bc=d,
    )


@dataclass
class GaussianConfig:
    """Analytic-model inputs: coherent amplitudes, squeezing, swap, weights."""

    alpha_a_mag: float
    alpha_d_mag: float
    r: float
    ms: MSMatrix = field(default_factory=lambda: ms_matrix_from_protocol(0.0, np.pi / 2))
    phi_a0: float = 0.0
    phi_d0: float = 0.0
    phi0: float = np.pi / 2
    nu_E: float = 0.0
    v_A: float = 1.0
    v_B: float = -1.0
    theta_A: float = np.pi / 2
    theta_B: float = np.pi / 2

    def __post_init__(self):
        if self.r < 0 or self.alpha_a_mag < 0 or self.alpha_d_mag < 0:
            raise ValueError("r and coherent amplitudes must be non-negative")

    @classmethod
    def for_protocol(cls, N, tau_E=None, r=None, nu_E=0.0, theta_MS=np.pi / 2,
                     phi_MS=np.pi / 2, **kw):
        """Defaults of the concrete scheme: alpha = sqrt(N/2), phi0 = pi/2."""
        if (tau_E is None) == (r is None):
            raise ValueError("give exactly one of tau_E or r")
        if r is None:
            r = squeezing_from_tau(N, tau_E)
        return cls(
            alpha_a_mag=np.sqrt(N / 2.0),
            alpha_d_mag=np.sqrt(N / 2.0),
            r=float(r),
            ms=ms_matrix_from_protocol(theta_MS, phi_MS),
            nu_E=nu_E,
            **kw,
        )


def squeezing_from_tau(N, tau_E):
    """Holstein-Primakoff map of the twisting strength: r = N tau_E / 4."""
    return N * tau_E / 4.0


def squeezing_parameter(r):
    """Spin-squeezing parameter of the squeezed-vacuum picture: e^{-2r}."""
    if np.any(np.asarray(r) < 0):
        raise ValueError("r must be >= 0")
    return np.exp(-2.0 * np.asarray(r))


def chi_angles(config):
    """Orientation angles of the squeezed quadrature seen by each output port."""
    chi_a = config.phi_a0 - config.phi0 / 2.0 - config.nu_E - config.ms.delta_bb
    chi_b = config.phi_d0 - config.phi0 / 2.0 - config.nu_E / 2.0 - config.ms.delta_cb
    return chi_a, chi_b


def sensitivity_general(config, N=None):
    """Full closed-form uncertainty of v_A theta_A + v_B theta_B.

    The working-point dependence enters only through a non-negative
    second-degree polynomial in (cot theta_A, cot theta_B) that vanishes
    at mid-fringe.
    """
    s = np.sinh(config.r)
    c = np.cosh(config.r)
    aa, ad = config.alpha_a_mag, config.alpha_d_mag
    ubb, ucb = config.ms.u_bb_mag, config.ms.u_cb_mag
    den_a = aa**2 - ubb**2 * s**2
    den_b = ad**2 - ucb**2 * s**2
    if den_a <= 0 or den_b <= 0:
        raise DenominatorNonPositive("coherent population must exceed the swapped squeezed population")
    if N is not None and s**2 > N / 10.0:
        warnings.warn("n_s above N/10: analytic layer leaving its validity regime", ValidityWarning)
    chi_a, chi_b = chi_angles(config)
    va, vb = config.v_A, config.v_B
    e2r = np.exp(2 * config.r)
    em2r = np.exp(-2 * config.r)
    t_a = aa * ubb / den_a
    t_b = ad * ucb / den_b
    p_a = (aa**2 + ubb**2 * s**2) / den_a**2
    p_b = (ad**2 + ucb**2 * s**2) / den_b**2
    sin_term = (e2r - 1.0) * (t_a * np.sin(chi_a) * va - t_b * np.sin(chi_b) * vb) ** 2
    cos_term = (1.0 - em2r) * (t_a * np.cos(chi_a) * va - t_b * np.cos(chi_b) * vb) ** 2
    base = sin_term - cos_term + p_a * va**2 + p_b * vb**2
    cot_a = 1.0 / np.tan(config.theta_A)
    cot_b = 1.0 / np.tan(config.theta_B)
    q = (
        cot_a**2 * p_a * va**2
        + cot_b**2 * p_b * vb**2
        + (2 * c**2 - 1.0) * s**2
        * (cot_a * ubb**2 / den_a * va + cot_b * ucb**2 / den_b * vb) ** 2
    )
    return base + q


def gain_surface(config, N, theta_A, theta_B):
    """Analytic gain over arrays of working points (surrogate for heatmaps).

    sensitivity_general is elementwise in the phases, so array working
    points broadcast straight through the closed form.
    """
    cfg = replace(config, theta_A=np.asarray(theta_A, dtype=float),
                  theta_B=np.asarray(theta_B, dtype=float))
    return (4.0 / N) / sensitivity_general(cfg, N)


def gain_analytic(N, r):
    """Sensitivity gain of the optimally swapped protocol: (e^{-2r} + n_s/N)^{-1}."""
    ns = np.sinh(np.asarray(r)) ** 2
    if np.any(ns > N / 10.0):
        warnings.warn("n_s above N/10: gain formula leaving its validity regime", ValidityWarning)
    return 1.0 / (np.exp(-2.0 * np.asarray(r)) + ns / N)


def gain_max(N, tol=1e-12):
    """Peak of the analytic gain over the squeezed population.

    Uses the depletion-free large-n_s reduction e^{-2r} -> 1/(4 n_s), whose
    maximum is exactly sqrt(N) at n_s = sqrt(N)/2; located numerically by
    golden-section search for the record.
    """
    from sqswap.optimizer import golden_section

    def neg_gain(ns):
        return -1.0 / (0.25 / ns + ns / N)

    ns_opt = golden_section(neg_gain, 1e-3, max(4.0 * np.sqrt(N), 8.0), tol=tol)
    return -neg_gain(ns_opt), ns_opt


def no_squeezing_closed_forms(theta_A, theta_B, N):
    """Zero-squeezing uncertainties: analytic-model value and exact-engine value."""
    theta_A = np.asarray(theta_A, dtype=float)
    theta_B = np.asarray(theta_B, dtype=float)
    if np.any(np.sin(theta_A) == 0.0) or np.any(np.sin(theta_B) == 0.0):
        raise BoundaryPhase("closed forms diverge at theta in {0, pi}")
    cot_a = 1.0 / np.tan(theta_A)
    cot_b = 1.0 / np.tan(theta_B)
    var_theory = (2.0 / N) * (cot_a**2 + cot_b**2 + 2.0)
    var_numerical = var_theory - (cot_a - cot_b) ** 2 / N
    return var_theory, var_numerical


def quadrature_variance(kind, r, lam=0.0):
    """Variance of x_b + x_c for the three reference states.

    no_MS and optimal_MS follow the swap picture with the vacuum of the
    sum quadrature normalized to 1; the two-mode squeezed vacuum keeps its
    textbook 2 e^{-2r} (vacuum 2), whose EPR threshold sits at 1.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    if kind == "no_MS":
        return 0.5 * (np.exp(2 * r) + 1.0) * np.sin(lam) ** 2 + 0.5 * (
            np.exp(-2 * r) + 1.0
        ) * np.cos(lam) ** 2
    if kind == "optimal_MS":
        return np.exp(2 * r) * np.sin(lam) ** 2 + np.exp(-2 * r) * np.cos(lam) ** 2
    if kind == "TMSV":
        return 2.0 * np.exp(-2.0 * r)
    raise ValueError("kind must be 'no_MS', 'optimal_MS' or 'TMSV'")


def midfringe_from_quadrature(kind, r, N, lam=0.0):
    """Mid-fringe uncertainty implied by the quadrature picture: 4 Var / N."""
    return 4.0 * quadrature_variance(kind, r, lam) / N
