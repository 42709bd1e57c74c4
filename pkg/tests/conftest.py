"""Independent dense oracles shared by the test modules.

These use explicit Kronecker products with site 0 as the least significant
bit, so they share no code with the matrix-free kernels under test.
"""

import functools

import numpy as np
import pytest
import scipy.sparse as sp

PAULI = {
    "I": np.eye(2),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "Y": np.array([[0.0, -1j], [1j, 0.0]]),
    "Z": np.diag([1.0, -1.0]),
}


def kron_operator(n, ops):
    """Dense ``prod_s sigma^{ops[s]}_s`` on n qubits (bit s of the index is site s)."""
    out = np.array([[1.0 + 0j]])
    for s in reversed(range(n)):
        out = np.kron(out, PAULI[ops.get(s, "I")])
    return out


def sparse_kron_operator(n, ops):
    out = sp.identity(1, dtype=complex, format="csr")
    for s in reversed(range(n)):
        out = sp.kron(out, sp.csr_matrix(PAULI[ops.get(s, "I")]), format="csr")
    return out


def dense_hamiltonian(model):
    h = sp.csr_matrix((2 ** model.n_sites,) * 2, dtype=complex)
    for t in model.terms:
        h = h + t.coefficient * sparse_kron_operator(model.n_sites, dict(zip(t.sites, t.axes)))
    return h.toarray()


def partial_trace_oracle(psi, keep):
    """Reduced density matrix by an explicit double loop over basis states."""
    n = int(np.log2(len(psi)))
    keep = sorted(keep)
    rest = [s for s in range(n) if s not in keep]
    dim_a = 2 ** len(keep)
    rho = np.zeros((dim_a, dim_a), dtype=complex)
    for i in range(2 ** n):
        for j in range(2 ** n):
            if any((i >> s & 1) != (j >> s & 1) for s in rest):
                continue
            a = sum((i >> s & 1) << k for k, s in enumerate(keep))
            b = sum((j >> s & 1) << k for k, s in enumerate(keep))
            rho[a, b] += psi[i] * np.conj(psi[j])
    return rho


def random_state(rng, n, complex_=False):
    v = rng.standard_normal(2 ** n)
    if complex_:
        v = v + 1j * rng.standard_normal(2 ** n)
    return v / np.linalg.norm(v)


def ghz(n):
    v = np.zeros(2 ** n)
    v[0] = v[-1] = 2 ** -0.5
    return v


def w_state(n):
    v = np.zeros(2 ** n)
    for s in range(n):
        v[1 << s] = n ** -0.5
    return v


def random_unitary(rng, d=2):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def local_unitary(us):
    """``U_{n-1} x ... x U_0`` matching the bit convention."""
    out = np.array([[1.0 + 0j]])
    for u in reversed(us):
        out = np.kron(out, u)
    return out


@functools.lru_cache(maxsize=None)
def _ed_ground(name, n, param, gamma):
    from qspinlab.eigensolver import ground_spectrum
    from qspinlab.lattice import build_model
    return ground_spectrum(build_model(name, param, n=n, gamma=gamma), k=2)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture(scope="session")
def ed_ground():
    return _ed_ground


@functools.lru_cache(maxsize=None)
def cached_sweep(model, start, stop, step=0.01, n=None, nx=None, ny=None, gamma=1.0,
                 measures=("ggm",)):
    """Sweep records shared between modules; each distinct sweep runs once per session."""
    from qspinlab.sweep import SweepConfig, run_sweep
    cfg = SweepConfig(model=model, n=n, nx=nx, ny=ny, gamma=gamma, start=start, stop=stop,
                      step=step, measures=measures)
    return tuple(run_sweep(cfg))


ALL_MEASURES = ("ggm", "concurrence", "logneg", "discord", "shared_purity", "mi", "entropy")

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
