import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qspinlab.errors import InvalidState
from qspinlab.measures import (_min_conditional_entropy, classical_correlation, concurrence,
                               logarithmic_negativity, measure_set, mutual_information,
                               negativity, partial_transpose, quantum_discord, shared_purity,
                               von_neumann_entropy)

from conftest import PAULI, random_unitary

SINGLET = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2)
BELL = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2)


def proj(v):
    return np.outer(v, np.conj(v))


def werner(p):
    return p * proj(SINGLET) + (1 - p) * np.eye(4) / 4


def random_mixed(rng, rank=None):
    rank = rank or int(rng.integers(1, 5))
    g = rng.standard_normal((4, rank)) + 1j * rng.standard_normal((4, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def wootters_oracle(rho):
    yy = np.kron(PAULI["Y"], PAULI["Y"])
    r = rho @ yy @ rho.conj() @ yy
    lam = np.sqrt(np.clip(np.sort(np.linalg.eigvals(r).real)[::-1], 0, None))
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


def test_concurrence_examples():
    assert concurrence(proj(SINGLET)) == pytest.approx(1.0, abs=1e-12)
    prod = np.kron([0.6, 0.8j], [1 / np.sqrt(2), 1 / np.sqrt(2)])
    assert concurrence(proj(prod)) == pytest.approx(0.0, abs=1e-7)


def test_werner_concurrence_oracle():
    rho = werner(0.8)
    assert concurrence(rho) == pytest.approx(0.7, abs=1e-12)
    assert wootters_oracle(rho) == pytest.approx(max(0, (3 * 0.8 - 1) / 2), abs=1e-12)


def test_logneg_examples():
    assert logarithmic_negativity(proj(SINGLET)) == pytest.approx(1.0, abs=1e-12)
    assert logarithmic_negativity(np.diag([0.3, 0, 0, 0.7])) == 0.0


def test_werner_logneg_oracle():
    rho = werner(0.8)
    ev = np.linalg.eigvalsh(partial_transpose(rho))
    assert -ev[ev < 0].sum() == pytest.approx((3 * 0.8 - 1) / 4, abs=1e-12)
    assert negativity(rho) == pytest.approx(0.35, abs=1e-12)
    assert logarithmic_negativity(rho) == pytest.approx(np.log2(1.7), abs=1e-12)
    assert np.log2(1.7) == pytest.approx(0.76553, abs=1e-5)


def test_discord_examples():
    assert quantum_discord(proj(BELL), "left") == pytest.approx(1.0, abs=1e-4)
    assert quantum_discord(proj(BELL), "right") == pytest.approx(1.0, abs=1e-4)
    classical = np.diag([0.5, 0, 0, 0.5])
    assert abs(quantum_discord(classical)) < 1e-4
    prod = np.kron(np.diag([0.3, 0.7]), np.diag([0.9, 0.1]))
    assert abs(quantum_discord(prod)) < 1e-4
    with pytest.raises(ValueError):
        quantum_discord(classical, "up")


def test_bell_classical_correlation_oracle():
    # J = S(rho_A) - min conditional entropy = 1 - 0
    assert classical_correlation(proj(BELL)) == pytest.approx(1.0, abs=1e-4)


def test_werner_discord_closed_form():
    # Werner states: D = (1-p)/4 log(1-p) - (1+p)/2 log(1+p) + (1+3p)/4 log(1+3p)
    p = 0.6
    ref = ((1 - p) / 4 * np.log2(1 - p) - (1 + p) / 2 * np.log2(1 + p)
           + (1 + 3 * p) / 4 * np.log2(1 + 3 * p))
    assert quantum_discord(werner(p)) == pytest.approx(ref, abs=1e-6)


def test_mutual_information():
    prod = np.kron(np.diag([0.3, 0.7]), np.diag([0.9, 0.1]))
    assert mutual_information(prod) == pytest.approx(0.0, abs=1e-12)
    assert mutual_information(proj(BELL)) == pytest.approx(2.0, abs=1e-12)
    assert mutual_information(np.eye(4) / 4) == pytest.approx(0.0, abs=1e-12)


def test_shared_purity_examples():
    prod = proj(np.kron([1.0, 0.0], [0.6, 0.8]))
    assert shared_purity(prod) == pytest.approx((1.0, 1.0, 0.0), abs=1e-9)
    assert shared_purity(np.eye(4) / 4) == pytest.approx((0.25, 0.25, 0.0), abs=1e-12)


def test_bell_shared_purity_against_grid():
    fg, fl, sp = shared_purity(proj(BELL))
    # exhaustive product-state grid on both Bloch spheres
    th = np.linspace(0, np.pi, 37)
    ph = np.linspace(0, 2 * np.pi, 72, endpoint=False)
    t, p = np.meshgrid(th, ph, indexing="ij")
    kets = np.stack([np.cos(t / 2), np.exp(1j * p) * np.sin(t / 2)], -1).reshape(-1, 2)
    prods = np.einsum("ib,ja->ijba", kets, kets).reshape(len(kets), len(kets), 4)
    grid = np.max(np.abs(prods @ BELL.conj()) ** 2)
    assert fg == pytest.approx(1.0, abs=1e-12)
    assert fl == pytest.approx(grid, abs=1e-6)
    assert sp == pytest.approx(0.5, abs=1e-9)


def test_entropy_examples():
    assert von_neumann_entropy(proj(BELL)) == pytest.approx(0.0, abs=1e-12)
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(1.0, abs=1e-12)
    assert von_neumann_entropy(np.diag([0.75, 0.25])) == pytest.approx(2 - 0.75 * np.log2(3),
                                                                      abs=1e-12)
    assert 2 - 0.75 * np.log2(3) == pytest.approx(0.81128, abs=1e-5)


def test_invalid_states():
    with pytest.raises(InvalidState):
        concurrence(np.eye(4) / 2)
    with pytest.raises(InvalidState):
        concurrence(np.diag([1.2, -0.2, 0, 0]))
    with pytest.raises(InvalidState):
        concurrence(np.triu(np.ones((4, 4))) / 4)
    with pytest.raises(InvalidState):
        concurrence(np.eye(2) / 2)


def test_concurrence_matches_wootters_oracle(rng):
    # full rank keeps the oracle's square roots away from roundoff-level eigenvalues
    for _ in range(50):
        rho = random_mixed(rng, rank=4)
        assert concurrence(rho) == pytest.approx(wootters_oracle(rho), abs=1e-8)


def test_pure_state_concurrence_exact(rng):
    yy = np.kron(PAULI["Y"], PAULI["Y"])
    for _ in range(50):
        psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        psi /= np.linalg.norm(psi)
        assert concurrence(proj(psi)) == pytest.approx(abs(psi @ yy @ psi), abs=1e-12)


def test_ppt_boundary_agreement():
    rng = np.random.default_rng(11)
    for _ in range(500):
        rho = random_mixed(rng)
        c, e = concurrence(rho), logarithmic_negativity(rho)
        assert (c < 1e-7) == (e < 1e-7), (c, e)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31))
def test_local_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    rho = random_mixed(rng)
    u = np.kron(random_unitary(rng), random_unitary(rng))
    a, b = measure_set(rho), measure_set(u @ rho @ u.conj().T)
    for name, val in vars(a).items():
        assert abs(val - getattr(b, name)) < 1e-8, name


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31))
def test_measure_bounds(seed):
    rho = random_mixed(np.random.default_rng(seed))
    m = measure_set(rho)
    assert m.logneg >= 0 and m.concurrence >= 0
    for d in (m.discord_left, m.discord_right):
        assert -1e-8 <= d <= m.mutual_info + 1e-8
    assert -1e-8 <= m.classical_corr <= m.mutual_info + 1e-8
    assert m.f_global >= m.f_local - 1e-9 and m.shared_purity >= -1e-9


def test_refinement_never_worse_than_grid(rng):
    for _ in range(20):
        rho = random_mixed(rng)
        for side in ("left", "right"):
            refined, grid = _min_conditional_entropy(rho, side)
            assert refined <= grid
