import math

import numpy as np
import pytest

from sqswap import fock
from sqswap.fock import (
    BasisMismatch,
    CapacityExceeded,
    NonNormalizedInput,
    StateVector,
    apply_mode_swap,
    build_basis,
    encode_phases,
    evolve_squeezing,
    load_state,
    moments,
    outcome_distribution,
    pair_spin_operator,
    prepare_initial,
    save_state,
)

from dense_oracle import oracle_encode, oracle_mode_swap, oracle_squeeze, random_state


def rand_state(basis, seed=0):
    return StateVector(basis, random_state(basis, seed))


# ----------------------------------------------------------------- basis


@pytest.mark.parametrize("n,size", [(1, 4), (2, 10), (100, 176851)])
def test_basis_size(n, size):
    assert build_basis(n).size == size
    assert size == math.comb(n + 3, 3)


def test_basis_states_valid_and_ordered():
    basis = build_basis(5)
    occ = basis.occupations
    assert (occ.sum(axis=1) == 5).all()
    assert (occ >= 0).all()
    keys = [tuple(row[:3]) for row in occ]
    assert keys == sorted(keys)


def test_index_map_bijection():
    basis = build_basis(6)
    assert len(basis.index_map) == basis.size
    for occ, i in basis.index_map.items():
        assert basis.index_of(occ) == i


def test_capacity_cap():
    with pytest.raises(CapacityExceeded):
        build_basis(401)
    build_basis(12, cap=12)
    with pytest.raises(CapacityExceeded):
        build_basis(13, cap=12)


# --------------------------------------------------------- initial state


def test_prepare_initial_n1():
    basis = build_basis(1)
    psi = prepare_initial(basis)
    assert psi.amplitudes[basis.index_of((1, 0, 0, 0))] == pytest.approx(1 / np.sqrt(2))
    assert psi.amplitudes[basis.index_of((0, 0, 0, 1))] == pytest.approx(1 / np.sqrt(2))
    assert np.count_nonzero(psi.amplitudes) == 2


def test_prepare_initial_n2_probabilities():
    basis = build_basis(2)
    p = prepare_initial(basis).probabilities()
    assert p[basis.index_of((2, 0, 0, 0))] == pytest.approx(0.25)
    assert p[basis.index_of((1, 0, 0, 1))] == pytest.approx(0.5)
    assert p[basis.index_of((0, 0, 0, 2))] == pytest.approx(0.25)


def test_prepare_initial_n100_moments():
    # binomial split: <N_a> = N/2 and Var(N_a) = N/4 (brute-force moments)
    basis = build_basis(100)
    p = prepare_initial(basis).probabilities()
    na = basis.occupations[:, 0]
    mean = float(p @ na)
    var = float(p @ na**2) - mean**2
    assert mean == pytest.approx(50.0, abs=1e-9)
    assert var == pytest.approx(25.0, abs=1e-9)


# -------------------------------------------------------------- operators


def test_jz_eigenvalue_single_atom():
    basis = build_basis(1)
    jz = pair_spin_operator(basis, "ab", "z")
    e = np.zeros(4, dtype=complex)
    e[basis.index_of((1, 0, 0, 0))] = 1.0
    assert np.vdot(e, jz.matrix @ e) == pytest.approx(0.5)


def test_jx_ladder_single_atom():
    basis = build_basis(1)
    jx = pair_spin_operator(basis, "ab", "x")
    e = np.zeros(4, dtype=complex)
    e[basis.index_of((1, 0, 0, 0))] = 1.0
    out = jx.matrix @ e
    assert out[basis.index_of((0, 1, 0, 0))] == pytest.approx(0.5)
    assert np.abs(out).sum() == pytest.approx(0.5)


@pytest.mark.parametrize("n", [2, 4, 6])
@pytest.mark.parametrize("pair", ["ab", "cd", "bc", "ad"])
def test_commutation_algebra(n, pair):
    basis = build_basis(n)
    jx = pair_spin_operator(basis, pair, "x").matrix.toarray()
    jy = pair_spin_operator(basis, pair, "y").matrix.toarray()
    jz = pair_spin_operator(basis, pair, "z").matrix.toarray()
    assert np.abs(jx @ jy - jy @ jx - 1j * jz).max() < 1e-13
    assert np.abs(jy @ jz - jz @ jy - 1j * jx).max() < 1e-13


def test_operators_hermitian():
    basis = build_basis(4)
    for axis in "xyz":
        m = pair_spin_operator(basis, "bc", axis).matrix
        assert (abs(m - m.conj().T)).max() == 0.0


# ------------------------------------------------------------- evolutions


def test_zero_angles_identity():
    basis = build_basis(6)
    psi = rand_state(basis, 1)
    for out in (
        evolve_squeezing(psi, "oat", 0.0, 0.0),
        apply_mode_swap(psi, 0.0, 0.3),
        encode_phases(psi, 0.0, 0.0),
    ):
        assert np.abs(out.amplitudes - psi.amplitudes).max() < 1e-12


@pytest.mark.parametrize("generator", ["oat", "tat"])
@pytest.mark.parametrize("n", [2, 4, 6])
def test_squeezing_vs_dense_oracle(generator, n):
    basis = build_basis(n)
    psi = rand_state(basis, n)
    out = evolve_squeezing(psi, generator, 0.1, 0.8)
    ref = oracle_squeeze(basis, generator, 0.1, 0.8) @ psi.amplitudes
    assert np.abs(out.amplitudes - ref).max() < 1e-9


@pytest.mark.parametrize("n", [2, 4, 6])
def test_mode_swap_vs_dense_oracle(n):
    basis = build_basis(n)
    psi = rand_state(basis, 10 + n)
    out = apply_mode_swap(psi, 1.3, -0.7)
    ref = oracle_mode_swap(basis, 1.3, -0.7) @ psi.amplitudes
    assert np.abs(out.amplitudes - ref).max() < 1e-9


@pytest.mark.parametrize("n", [2, 4, 6])
def test_encode_vs_dense_oracle(n):
    basis = build_basis(n)
    psi = rand_state(basis, 20 + n)
    out = encode_phases(psi, 0.9, 2.1)
    ref = oracle_encode(basis, 0.9, 2.1) @ psi.amplitudes
    assert np.abs(out.amplitudes - ref).max() < 1e-9


def test_mid_protocol_distribution_vs_oracle():
    basis = build_basis(4)
    psi = prepare_initial(basis)
    out = encode_phases(
        apply_mode_swap(evolve_squeezing(psi, "oat", 0.1, 0.5), 1.1, 0.4), 0.8, 1.9
    )
    u = oracle_encode(basis, 0.8, 1.9) @ oracle_mode_swap(basis, 1.1, 0.4) @ oracle_squeeze(
        basis, "oat", 0.1, 0.5
    )
    ref = np.abs(u @ psi.amplitudes) ** 2
    assert np.abs(outcome_distribution(out).probabilities - ref).max() < 1e-9


def test_unitarity_large_n():
    # any drift past 1e-10 would trip the NormDriftWarning escalated here
    import warnings

    for n, tau in ((100, 0.02), (200, 0.006)):
        basis = build_basis(n)
        psi = prepare_initial(basis)
        with warnings.catch_warnings():
            warnings.simplefilter("error", fock.NormDriftWarning)
            st = evolve_squeezing(psi, "oat", tau, 0.7)
            st = apply_mode_swap(st, np.pi / 2, 0.3)
            st = encode_phases(st, 1.2, 1.8)
        assert abs(st.norm() - 1.0) < 1e-12


def _marginal(state, mode_indices):
    occ = state.basis.occupations
    key = occ[:, mode_indices[0]].astype(np.int64) if len(mode_indices) == 1 else sum(
        occ[:, i].astype(np.int64) for i in mode_indices
    )
    p = state.probabilities()
    out = np.zeros(int(key.max()) + 1)
    np.add.at(out, key, p)
    return out


def test_conservation_blocks():
    basis = build_basis(8)
    psi = rand_state(basis, 3)

    sq = evolve_squeezing(psi, "oat", 0.2, 1.0)
    for modes in ([2], [3], [0, 1]):
        assert np.abs(_marginal(sq, modes) - _marginal(psi, modes)).max() < 1e-12

    sw = apply_mode_swap(psi, 0.8, 0.2)
    for modes in ([0], [3], [1, 2]):
        assert np.abs(_marginal(sw, modes) - _marginal(psi, modes)).max() < 1e-12

    en = encode_phases(psi, 0.9, 1.7)
    for modes in ([0, 1], [2, 3]):
        assert np.abs(_marginal(en, modes) - _marginal(psi, modes)).max() < 1e-12


def test_mode_swap_preserves_a_d_marginals_any_state():
    basis = build_basis(10)
    psi = rand_state(basis, 8)
    sw = apply_mode_swap(psi, 2.2, -1.0)
    assert np.abs(_marginal(sw, [0]) - _marginal(psi, [0])).max() < 1e-12
    assert np.abs(_marginal(sw, [3]) - _marginal(psi, [3])).max() < 1e-12


def test_full_rotation_leaves_probabilities():
    basis = build_basis(6)
    psi = rand_state(basis, 5)
    out = encode_phases(psi, 2 * np.pi, 2 * np.pi)
    assert np.abs(out.probabilities() - psi.probabilities()).max() < 1e-12


def test_oat_squeezing_series_small_tau():
    # residual against 1 - x/2 + x^2/8 stays within the finite-N envelope
    from sqswap.protocol import spin_squeezing_xi2

    n = 100
    basis = build_basis(n)
    psi = prepare_initial(basis)
    for x in (1e-3, 1e-2, 1e-1):
        st = evolve_squeezing(psi, "oat", x / n, 0.0)
        xi2 = spin_squeezing_xi2(st, "ab")
        series = 1 - x / 2 + x**2 / 8
        envelope = x / (2 * n) + x**2 / (8 * n) + x**3 / 48
        assert abs(xi2 - series) < 1.5 * envelope


def test_non_normalized_input_rejected():
    basis = build_basis(4)
    bad = StateVector(basis, 1.5 * prepare_initial(basis).amplitudes)
    with pytest.raises(NonNormalizedInput):
        evolve_squeezing(bad, "oat", 0.1, 0.0)


def test_fringe_law_coherent_input():
    basis = build_basis(40)
    psi = prepare_initial(basis)
    jz = basis.operator("ab", "z").matrix
    jx = basis.operator("ab", "x").matrix
    mz = np.real(np.vdot(psi.amplitudes, jz @ psi.amplitudes))
    mx = np.real(np.vdot(psi.amplitudes, jx @ psi.amplitudes))
    for theta in np.linspace(0.1, 3.0, 7):
        out = encode_phases(psi, theta, 0.0)
        mz_out = np.real(np.vdot(out.amplitudes, jz @ out.amplitudes))
        assert abs(mz_out - (mz * np.cos(theta) + mx * np.sin(theta))) < 1e-9


# ---------------------------------------------------------------- moments


def test_moments_initial_jz():
    basis = build_basis(30)
    psi = prepare_initial(basis)
    table = moments(psi, [basis.operator("ab", "z")])
    assert table.means["z_ab"] == pytest.approx(30 / 4.0, abs=1e-10)


def test_moments_variance_nonnegative_and_cov_symmetric():
    basis = build_basis(6)
    psi = rand_state(basis, 11)
    ops = [basis.operator("ab", "x"), basis.operator("cd", "z"), basis.operator("bc", "y")]
    table = moments(psi, ops)
    assert all(v >= -1e-12 for v in table.variances.values())
    assert table.cov("x_ab", "z_cd") == table.cov("z_cd", "x_ab")


def test_moments_basis_mismatch():
    b1, b2 = build_basis(4), build_basis(5)
    psi = prepare_initial(b1)
    with pytest.raises(BasisMismatch):
        moments(psi, [b2.operator("ab", "z")])


def test_outcome_distribution_sums_to_one():
    basis = build_basis(5)
    psi = rand_state(basis, 4)
    dist = outcome_distribution(psi)
    assert dist.probabilities.sum() == pytest.approx(1.0, abs=1e-10)


# ------------------------------------------------------------------- io


def test_state_roundtrip(tmp_path):
    basis = build_basis(7)
    psi = rand_state(basis, 9)
    path = tmp_path / "state.sqsw"
    save_state(psi, path)
    back = load_state(path)
    assert back.basis.N == 7
    assert np.abs(back.amplitudes - psi.amplitudes).max() == 0.0
    with open(path, "rb") as fh:
        assert fh.read(5) == b"SQSW1"


def test_state_load_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOPE!" + b"\x00" * 32)
    with pytest.raises(fock.SqswapError):
        load_state(path)
