import itertools

import numpy as np
import pytest

from qspinlab.errors import InvalidParam, NearCritical
from qspinlab.ggm import PartitionPolicy, ggm
from qspinlab.hilbert import pauli_expectation, reduced_density_matrix
from qspinlab.xy_analytic import (block_rdm, contractions, correlators, ggm_xy,
                                  pauli_to_majorana, string_expectation)

from conftest import PAULI


def ed_table(ed_ground, gamma, lam, n=20, rmax=3):
    psi = ed_ground("xy", n, lam, gamma).ground_state
    out = {"mz": pauli_expectation(psi, {0: "Z"})}
    for a in "xyz":
        out["g" + a * 2] = {r: pauli_expectation(psi, {0: a.upper(), r: a.upper()})
                            for r in range(1, rmax + 1)}
    return out


@pytest.mark.slow
@pytest.mark.parametrize("gamma,lam", [(1.0, 0.5), (0.2, 1.5)])
def test_correlators_match_ed_n20(ed_ground, gamma, lam):
    tab = correlators(gamma, lam, rmax=3)
    ref = ed_table(ed_ground, gamma, lam)
    assert abs(tab.mz - ref["mz"]) < 2e-3
    for key in ("gxx", "gyy", "gzz"):
        for r in range(1, 4):
            assert abs(getattr(tab, key)[r] - ref[key][r]) < 2e-3, (key, r)


def test_polarized_limit():
    tab = correlators(0.5, 50.0, rmax=2)
    # the field term +lam Z favours sigma^z = -1
    assert tab.mz == pytest.approx(-1.0, abs=1e-3)
    # transverse correlations fall off as 1/lam, not faster
    far = correlators(0.5, 500.0, rmax=1)
    assert abs(tab.gxx[1]) < 1e-2
    assert tab.gxx[1] * 50.0 == pytest.approx(far.gxx[1] * 500.0, rel=1e-2)
    assert abs(tab.gzz[1] - tab.mz ** 2) < 1e-4
    for g in (0.2, 0.8, 1.0):
        assert ggm_xy(g, 50.0) < 1e-3


def test_table_entries_bounded():
    for g, lam in itertools.product((0.2, 0.5, 1.0), (0.1, 0.7, 1.3, 3.0)):
        tab = correlators(g, lam, rmax=4)
        vals = [tab.mz, *tab.gxx.values(), *tab.gyy.values(), *tab.gzz.values()]
        assert all(-1 - 1e-12 <= v <= 1 + 1e-12 for v in vals)
        assert tab.rmax == 4


def test_deterministic():
    a, b = correlators(0.8, 0.6, 3), correlators(0.8, 0.6, 3)
    assert a.gxx == b.gxx and a.mz == b.mz and a.panels == b.panels


def test_quadrature_against_scipy():
    from scipy.integrate import quad
    g, lam = 0.7, 1.3
    cont, _ = contractions(g, lam, 2)
    for d in (-2, 0, 1):
        f = lambda k: -((lam - np.cos(k)) * np.cos(k * d) + g * np.sin(k) * np.sin(k * d)) / (
            np.pi * np.sqrt((lam - np.cos(k)) ** 2 + (g * np.sin(k)) ** 2))
        assert cont[d] == pytest.approx(quad(f, 0, np.pi, epsabs=1e-13)[0], abs=1e-10)


def test_wick_reproduces_toeplitz():
    tab = correlators(0.6, 0.4, rmax=3)
    g = tab.contraction
    for r in (1, 2, 3):
        for a, key in (("X", "gxx"), ("Y", "gyy"), ("Z", "gzz")):
            s = a + "I" * (r - 1) + a
            assert string_expectation(g, s) == pytest.approx(getattr(tab, key)[r], abs=1e-12)


def test_majorana_map_single_site():
    assert pauli_to_majorana("Z") == (-1j, (0, 1))
    coef, idx = pauli_to_majorana("XX")
    assert idx == (1, 2)


def test_block1_form():
    tab = correlators(0.8, 1.4, rmax=1)
    rho = block_rdm(tab, 1)
    assert np.allclose(rho, 0.5 * (np.eye(2) + tab.mz * PAULI["Z"]), atol=1e-14)


@pytest.mark.slow
def test_block2_matches_ed(ed_ground):
    rho = block_rdm(correlators(1.0, 2.0, rmax=2), 2)
    psi = ed_ground("xy", 20, 2.0, 1.0).ground_state
    ref = reduced_density_matrix(psi, 0b11)
    assert np.max(np.abs(rho - ref)) < 2e-3


@pytest.mark.slow
def test_block3_spectrum_matches_ed(ed_ground):
    rho = block_rdm(correlators(0.8, 0.5, rmax=2), 3)
    psi = ed_ground("xy", 20, 0.5, 0.8).ground_state
    ref = reduced_density_matrix(psi, 0b111)
    assert np.max(np.abs(np.linalg.eigvalsh(rho) - np.linalg.eigvalsh(ref))) < 5e-3


@pytest.mark.parametrize("gamma,lam", [(1.0, 0.3), (0.2, 0.95), (0.5, 1.02), (0.9, 2.5)])
def test_block_rdms_physical(gamma, lam):
    tab = correlators(gamma, lam, rmax=2)
    for L in (1, 2, 3):
        rho = block_rdm(tab, L)
        assert np.max(np.abs(rho - rho.conj().T)) < 1e-14
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.eigvalsh(rho)[0] >= -1e-9


def test_parity_odd_strings_vanish():
    rho = block_rdm(correlators(0.7, 0.6, rmax=2), 3)
    for string in itertools.product("IXYZ", repeat=3):
        if sum(p in "XY" for p in string) % 2 == 0:
            continue
        op = np.array([[1.0]])
        for p in reversed(string):
            op = np.kron(op, PAULI[p])
        assert abs(np.trace(rho @ op)) < 1e-12


def test_errors():
    with pytest.raises(NearCritical):
        correlators(1.0, 1.0005)
    with pytest.raises(InvalidParam):
        correlators(0.0, 0.5)
    with pytest.raises(InvalidParam):
        correlators(1.2, 0.5)
    with pytest.raises(InvalidParam):
        correlators(1.0, -0.1)
    with pytest.raises(InvalidParam):
        correlators(1.0, 0.5, rmax=5)
    with pytest.raises(InvalidParam):
        block_rdm(correlators(1.0, 0.5, rmax=1), 4)
    correlators(1.0, 1.001)  # the guard boundary itself is allowed


def test_derivative_peak_near_critical_point():
    for gamma in (0.2, 0.8, 1.0):
        lams = np.round(np.arange(0.9, 1.1 + 1e-9, 1e-3), 6)
        lams = lams[np.abs(lams - 1.0) >= 1e-3 - 1e-12]
        vals = np.array([ggm_xy(gamma, l) for l in lams])
        # central differences on consecutive grid neighbours; the gap at 1 is 2 steps
        deriv = (vals[2:] - vals[:-2]) / (lams[2:] - lams[:-2])
        peak = lams[1:-1][np.argmax(np.abs(deriv))]
        assert abs(peak - 1.0) < 5e-3, gamma


@pytest.mark.slow
@pytest.mark.parametrize("lam", [0.5, 1.5])
def test_ed_converges_monotonically(ed_ground, lam):
    exact = ggm_xy(1.0, lam)
    errs = []
    for n in (12, 16, 20):
        psi = ed_ground("xy", n, lam, 1.0).ground_state
        errs.append(abs(ggm(psi, PartitionPolicy("contiguous_blocks", 3)).value - exact))
    assert errs[0] >= errs[1] >= errs[2]
