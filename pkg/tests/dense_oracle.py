"""Dense matrix-exponential oracle for small bases.

Builds each protocol unitary as scipy.linalg.expm of the full generator
on the complete four-mode space, independently of the sector engine.
"""

import numpy as np
from scipy.linalg import expm


def _dense(basis, pair, axis):
    from sqswap.fock import pair_spin_operator

    return pair_spin_operator(basis, pair, axis).matrix.toarray()


def oracle_squeeze(basis, generator, tau, nu):
    jx = _dense(basis, "ab", "x")
    jz = _dense(basis, "ab", "z")
    if generator == "oat":
        core = expm(-1j * tau * (jx @ jx))
    else:
        jy = _dense(basis, "ab", "y")
        jp = jx + 1j * jy
        jm = jx - 1j * jy
        core = expm(-tau * (jp @ jp - jm @ jm))
    return expm(-1j * nu * jz) @ core


def oracle_mode_swap(basis, theta, phi):
    jx = _dense(basis, "bc", "x")
    jy = _dense(basis, "bc", "y")
    return expm(-1j * theta * (np.cos(phi) * jx + np.sin(phi) * jy))


def oracle_encode(basis, theta_a, theta_b):
    u_a = expm(-1j * theta_a * _dense(basis, "ab", "y"))
    u_b = expm(-1j * theta_b * _dense(basis, "cd", "y"))
    return u_a @ u_b


def random_state(basis, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
    amps /= np.linalg.norm(amps)
    return amps
