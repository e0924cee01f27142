"""Optimal rotation and mode-swap parameters, analytic and numeric.

The reduced objective f(nu, delta, r) captures the whole dependence of
the mid-fringe uncertainty on the state orientation nu and the swap phase
delta = phi_MS - pi/2 in the balanced-splitter analytic model.  Its
argmin over nu has closed-form branches whose symmetry laws extend them
to all delta; the numeric path is a dense periodic scan plus
golden-section refinement, and the same scan-and-refine strategy drives
the exact-protocol parameter search.
"""

from dataclasses import dataclass

import numpy as np

from sqswap import protocol as _protocol
from sqswap.fock import StateVector, _phase_z, apply_mode_swap, build_basis, evolve_squeezing, prepare_initial

TWO_BRANCH_EDGES = (-7 * np.pi / 8, -3 * np.pi / 8, np.pi / 8)
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, a, b, tol=1e-9):
    """Minimize a unimodal function on [a, b]; returns the midpoint argmin."""
    c = b - (b - a) * GOLDEN
    d = a + (b - a) * GOLDEN
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * GOLDEN
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * GOLDEN
            fd = f(d)
    return 0.5 * (a + b)


def f_objective(nu, delta, r):
    """Orientation-dependent part of the mid-fringe uncertainty (to minimize)."""
    s1 = np.sin(np.pi / 4 + nu) + np.sin(np.pi / 4 + nu / 2 + delta)
    c1 = np.cos(np.pi / 4 + nu) + np.cos(np.pi / 4 + nu / 2 + delta)
    return (np.exp(2 * r) - 1.0) * s1**2 - (1.0 - np.exp(-2 * r)) * c1**2


def _branch_value(delta, r, sin_coeff_pi):
    a = np.exp(2 * r) - 1.0
    b = 1.0 - np.exp(-2 * r)
    num = sin_coeff_pi[0] * np.pi * a + sin_coeff_pi[1] * np.pi * b - (0.75 * a + 0.5 * b) * delta
    den = 1.125 * a + 1.25 * b
    return num / den


def nu_min_analytic(delta, r):
    """Closed-form argmin of f over nu in [0, 4 pi), for delta in [-7pi/8, pi/8]."""
    delta = float(delta)
    if not TWO_BRANCH_EDGES[0] <= delta <= TWO_BRANCH_EDGES[2]:
        raise ValueError("delta outside [-7pi/8, pi/8]; reduce it with branch_reduce first")
    if delta <= TWO_BRANCH_EDGES[1]:
        return _branch_value(delta, r, (21.0 / 8.0, 25.0 / 8.0))
    return _branch_value(delta, r, (33.0 / 8.0, 37.0 / 8.0))


def nu_min_small_r(delta):
    """Small-squeezing limit of the argmin branches."""
    if delta <= TWO_BRANCH_EDGES[1]:
        return 46.0 / 19.0 * np.pi - 10.0 / 19.0 * delta
    return 70.0 / 19.0 * np.pi - 10.0 / 19.0 * delta


def nu_min_large_r(delta):
    """Large-squeezing limit of the argmin branches."""
    if delta <= TWO_BRANCH_EDGES[1]:
        return 7.0 / 3.0 * np.pi - 2.0 / 3.0 * delta
    return 11.0 / 3.0 * np.pi - 2.0 / 3.0 * delta


def branch_reduce(delta):
    """Map delta into [-7pi/8, pi/8) and count the pi/2 steps taken.

    f(nu + pi, delta + pi/2, r) = f(nu, delta, r), so nu_min at the
    original delta is the reduced branch value plus steps * pi (mod 4 pi).
    """
    steps = int(np.floor((delta - TWO_BRANCH_EDGES[0]) / (np.pi / 2)))
    return delta - steps * np.pi / 2, steps


def nu_min_numeric(delta, r, scan_points=4096, tol=1e-9):
    """Global argmin of f over nu in [0, 4 pi) by dense scan plus refinement."""
    nus = np.arange(scan_points) * (4 * np.pi / scan_points)
    vals = f_objective(nus, delta, r)
    i = int(np.argmin(vals))
    step = 4 * np.pi / scan_points
    lo, hi = nus[i] - step, nus[i] + step
    nu = golden_section(lambda v: f_objective(v, delta, r), lo, hi, tol=tol)
    return nu % (4 * np.pi)


def tau_ref(N, generator="oat"):
    """Reference squeezing strength: the optimum of a lone N/2-atom twist."""
    if N < 2:
        raise ValueError("N must be >= 2")
    generator = generator.lower()
    if generator == "oat":
        return 1.2 * (N / 2.0) ** (-2.0 / 3.0)
    if generator == "tat":
        return np.log10(2 * np.pi * N) / (4.0 * N)
    raise ValueError("generator must be 'oat' or 'tat'")


@dataclass
class OptimalConditions:
    """Joint optimum of orientation and swap phase in the analytic model."""

    nu_E: float
    delta_cb: float
    phi_MS: float
    theta_MS: float
    u_bb_mag: float
    u_cb_mag: float

    def family(self, l, m):
        """All minimizing pairs: delta = -pi/8 + l pi/2, nu = 2 delta + 4 m pi."""
        delta = -np.pi / 8 + l * np.pi / 2
        return 2 * delta + 4 * m * np.pi, delta


def optimal_conditions():
    return OptimalConditions(
        nu_E=11 * np.pi / 4,
        delta_cb=-5 * np.pi / 8,
        phi_MS=-np.pi / 8,
        theta_MS=np.pi / 2,
        u_bb_mag=1 / np.sqrt(2),
        u_cb_mag=1 / np.sqrt(2),
    )


@dataclass
class OptResult:
    nu_opt: float
    phi_ms_opt: float
    theta_ms_opt: float
    tau_opt: float
    gain_at_opt: float
    method: str


FREE_PARAMS = ("nu_E", "phi_MS", "theta_MS", "tau_E")

_COARSE_POINTS = {"nu_E": 64, "phi_MS": 64, "theta_MS": 17, "tau_E": 25}
_RANGES = {
    "nu_E": (0.0, 4 * np.pi, False),
    "phi_MS": (-np.pi / 2, np.pi / 2, False),
    "theta_MS": (0.0, np.pi, True),
    "tau_E": None,  # filled from tau_ref at call time
}


class _GainEvaluator:
    """Mid-fringe exact gain, reusing the twist result across nu and phi_MS."""

    def __init__(self, config, basis=None, threads=1):
        self.config = config
        self.basis = basis or build_basis(config.N)
        self.psi1 = prepare_initial(self.basis)
        self._twist_cache = {}
        self.evaluations = 0

    def _twisted(self, tau):
        if tau not in self._twist_cache:
            if len(self._twist_cache) > 8:
                self._twist_cache.clear()
            self._twist_cache[tau] = evolve_squeezing(
                self.psi1, self.config.generator, tau, 0.0
            )
        return self._twist_cache[tau]

    def gain(self, params):
        self.evaluations += 1
        tau = params.get("tau_E", self.config.tau_E)
        nu = params.get("nu_E", self.config.nu_E)
        theta_ms = params.get("theta_MS", self.config.theta_MS)
        phi_ms = params.get("phi_MS", self.config.phi_MS)
        st = StateVector(self.basis, self._twisted(tau).amplitudes.copy())
        _phase_z(st, "ab", nu)
        st = apply_mode_swap(st, theta_ms, phi_ms)
        return _protocol.fringe_kernel(st).gain(np.pi / 2, np.pi / 2)


def optimize_protocol(config, free_params=("nu_E", "phi_MS"), budget=6000,
                      refine_rounds=3, basis=None):
    """Coarse grid over the free parameters, then coordinate-wise refinement.

    Deterministic for a given budget; ties resolve to the lexicographically
    smallest parameter vector.  If the budget runs out before refinement
    completes, the best point so far is returned with method='grid'.
    """
    free = [p for p in FREE_PARAMS if p in free_params]
    if not free or any(p not in FREE_PARAMS for p in free_params):
        raise ValueError(f"free_params must be a non-empty subset of {FREE_PARAMS}")
    ev = _GainEvaluator(config, basis)
    ranges = dict(_RANGES)
    ranges["tau_E"] = (0.02 * tau_ref(config.N, config.generator),
                       1.3 * tau_ref(config.N, config.generator), True)

    axes = {}
    for p in free:
        lo, hi, inclusive = ranges[p]
        n = _COARSE_POINTS[p]
        axes[p] = np.linspace(lo, hi, n, endpoint=inclusive)

    best_gain = -np.inf
    best = {p: getattr(config, p) for p in free}
    exhausted = False

    def consider(params):
        nonlocal best_gain, best, exhausted
        if ev.evaluations >= budget:
            exhausted = True
            return False
        g = ev.gain(params)
        key = tuple(params[p] for p in free)
        best_key = tuple(best[p] for p in free)
        if g > best_gain + 1e-15 or (abs(g - best_gain) <= 1e-15 and key < best_key):
            best_gain = g
            best = dict(params)
        return True

    # coarse grid (full cartesian product over the free axes)
    grids = np.meshgrid(*[axes[p] for p in free], indexing="ij")
    coarse = np.stack([g.ravel() for g in grids], axis=-1)
    for row in coarse:
        if not consider({p: float(v) for p, v in zip(free, row)}):
            break

    method = "grid"
    if not exhausted:
        steps = {p: (ranges[p][1] - ranges[p][0]) / (_COARSE_POINTS[p] - 1 if ranges[p][2] else _COARSE_POINTS[p]) for p in free}
        done_all = True
        for _ in range(refine_rounds):
            for p in free:
                lo, hi, _inc = ranges[p]
                width = steps[p]
                cand = np.linspace(max(lo, best[p] - width), min(hi, best[p] + width), 9)
                for v in cand:
                    params = dict(best)
                    params[p] = float(v)
                    if not consider(params):
                        done_all = False
                        break
                steps[p] = width / 4.0
                if exhausted:
                    done_all = False
                    break
            if exhausted:
                break
        if done_all:
            method = "refined"

    return OptResult(
        nu_opt=best.get("nu_E", config.nu_E),
        phi_ms_opt=best.get("phi_MS", config.phi_MS),
        theta_ms_opt=best.get("theta_MS", config.theta_MS),
        tau_opt=best.get("tau_E", config.tau_E),
        gain_at_opt=best_gain,
        method=method,
    )


def optimize_orientation(config, basis=None, scan_points=96):
    """Best nu_E (exact gain at mid-fringe) for an otherwise fixed config."""
    ev = _GainEvaluator(config, basis)

    def neg(nu):
        return -ev.gain({"nu_E": nu % (4 * np.pi)})

    nus = np.arange(scan_points) * (4 * np.pi / scan_points)
    vals = [neg(nu) for nu in nus]
    i = int(np.argmin(vals))
    step = 4 * np.pi / scan_points
    nu = golden_section(neg, nus[i] - step, nus[i] + step, tol=1e-7) % (4 * np.pi)
    return nu, -neg(nu)
