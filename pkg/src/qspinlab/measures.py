"""Two-qubit correlation measures and von Neumann entropy.

All logarithms are base 2.  Qubit A is the first (low-order) site of the
pair: for a 4x4 matrix the local index is ``a + 2 b``, matching the bit
convention of :mod:`qspinlab.hilbert`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidState

STATE_TOL = 1e-10
SHARED_PURITY_RESTARTS = 20
DISCORD_GRID_DEG = 1.0

_SY = np.array([[0.0, -1j], [1j, 0.0]])
_SYSY = np.kron(_SY, _SY)


@dataclass
class MeasureSet:
    concurrence: float
    logneg: float
    discord_left: float
    discord_right: float
    mutual_info: float
    classical_corr: float
    shared_purity: float
    f_global: float
    f_local: float


def validate_state(rho, dim=None) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or (dim and rho.shape[0] != dim):
        raise InvalidState(f"expected a square {dim or ''} matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise InvalidState("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > STATE_TOL:
        raise InvalidState(f"trace {np.trace(rho).real} != 1")
    if np.linalg.eigvalsh(rho)[0] < -STATE_TOL:
        raise InvalidState("density matrix has a negative eigenvalue")
    return rho


def _entropy_of(evals) -> float:
    p = np.clip(np.real(evals), 0.0, None)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def von_neumann_entropy(rho) -> float:
    rho = validate_state(rho)
    return _entropy_of(np.linalg.eigvalsh(rho))


def _as_tensor(rho):
    # rho[(a + 2b), (a' + 2b')] -> t[b, a, b', a']
    return rho.reshape(2, 2, 2, 2)


def partial_trace_pair(rho, keep: str) -> np.ndarray:
    """Reduce a two-qubit state to qubit ``'A'`` or ``'B'``."""
    t = _as_tensor(rho)
    if keep == "A":
        return np.trace(t, axis1=0, axis2=2)
    return np.trace(t, axis1=1, axis2=3)


def concurrence(rho) -> float:
    rho = validate_state(rho, 4)
    # lam_i are the singular values of X^T (Y x Y) X with rho = X X^dagger; this
    # equals the square roots of eig(rho rho~) without square-rooting roundoff
    w, v = np.linalg.eigh(rho)
    x = v * np.sqrt(np.clip(w, 0.0, None))
    lam = np.linalg.svd(x.T @ _SYSY @ x, compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def partial_transpose(rho, side: str = "B") -> np.ndarray:
    t = _as_tensor(rho)
    if side == "B":
        t = t.transpose(2, 1, 0, 3)
    else:
        t = t.transpose(0, 3, 2, 1)
    return t.reshape(4, 4)


def negativity(rho) -> float:
    rho = validate_state(rho, 4)
    ev = np.linalg.eigvalsh(partial_transpose(rho))
    return float(-np.sum(ev[ev < 0]))


def logarithmic_negativity(rho) -> float:
    return float(np.log2(2.0 * negativity(rho) + 1.0))


def mutual_information(rho) -> float:
    rho = validate_state(rho, 4)
    return (_entropy_of(np.linalg.eigvalsh(partial_trace_pair(rho, "A")))
            + _entropy_of(np.linalg.eigvalsh(partial_trace_pair(rho, "B")))
            - _entropy_of(np.linalg.eigvalsh(rho)))


def _bloch_vectors(theta, phi):
    """``cos(t/2)|0> + e^{i p} sin(t/2)|1>`` on a grid of angles."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.stack([c + 0j, np.exp(1j * phi) * s], axis=-1)


def _binary_entropy_2x2(mats) -> np.ndarray:
    """Entropy of a stack of 2x2 Hermitian PSD unit-trace matrices."""
    det = (mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]).real
    disc = np.sqrt(np.clip(1.0 - 4.0 * det, 0.0, 1.0))
    out = np.zeros(det.shape)
    for p in ((1 + disc) / 2, (1 - disc) / 2):
        safe = np.where(p > 0, p, 1.0)
        out -= np.where(p > 0, p * np.log2(safe), 0.0)
    return out


def _conditional_entropy(rho, side, theta, phi):
    """``sum_i p_i S(rho_{other|i})`` for the measurement basis {b, b_perp}."""
    t = _as_tensor(rho)
    if side == "right":  # measure B
        ops = t.transpose(0, 2, 1, 3)  # [b, b', a, a']
    else:  # measure A
        ops = t.transpose(1, 3, 0, 2)  # [a, a', b, b']
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    b = _bloch_vectors(theta, phi)
    bperp = np.stack([-np.conj(b[..., 1]), np.conj(b[..., 0])], axis=-1)
    total = np.zeros(theta.shape)
    for vec in (b, bperp):
        # <v| ops |v> over the measured qubit -> unnormalized 2x2 on the other
        cond = np.einsum("...i,ijkl,...j->...kl", vec.conj(), ops, vec)
        p = np.trace(cond, axis1=-2, axis2=-1).real
        safe = np.where(p > 1e-15, p, 1.0)
        total += np.where(p > 1e-15, p * _binary_entropy_2x2(cond / safe[..., None, None]), 0.0)
    return total


def _min_conditional_entropy(rho, side, grid_deg=DISCORD_GRID_DEG):
    thetas = np.deg2rad(np.arange(0.0, 180.0 + 1e-9, grid_deg))
    phis = np.deg2rad(np.arange(0.0, 360.0, grid_deg))
    th, ph = np.meshgrid(thetas, phis, indexing="ij")
    vals = _conditional_entropy(rho, side, th, ph)
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    grid_best = float(vals[i, j])
    res = minimize(lambda x: float(_conditional_entropy(rho, side, x[0], x[1])),
                   x0=[thetas[i], phis[j]], method="Nelder-Mead",
                   options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": 2000})
    return min(grid_best, float(res.fun)), grid_best


def classical_correlation(rho, side: str = "right") -> float:
    """Measurement-maximized classical correlation; ``side`` is the measured qubit."""
    rho = validate_state(rho, 4)
    other = "A" if side == "right" else "B"
    s_other = _entropy_of(np.linalg.eigvalsh(partial_trace_pair(rho, other)))
    return s_other - _min_conditional_entropy(rho, side)[0]


def quantum_discord(rho, side: str = "right") -> float:
    """Discord with rank-one projective measurements on qubit A (``left``) or B (``right``)."""
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    rho = validate_state(rho, 4)
    return mutual_information(rho) - classical_correlation(rho, side)


def _top_eig(m):
    w, v = np.linalg.eigh(m)
    return float(w[-1]), v[:, -1]


def shared_purity(rho, restarts: int = SHARED_PURITY_RESTARTS, tol: float = 1e-10):
    """``(f_global, f_local, f_global - f_local)`` for a two-qubit state."""
    rho = validate_state(rho, 4)
    f_global = float(np.linalg.eigvalsh(rho)[-1])
    t = _as_tensor(rho)  # [b, a, b', a']
    best = -np.inf
    for seed in range(restarts):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        a /= np.linalg.norm(a)
        prev = -np.inf
        for _ in range(1000):
            on_b = np.einsum("a,bacd,d->bc", a.conj(), t, a)
            f, b = _top_eig(0.5 * (on_b + on_b.conj().T))
            on_a = np.einsum("b,bacd,c->ad", b.conj(), t, b)
            f, a = _top_eig(0.5 * (on_a + on_a.conj().T))
            if abs(f - prev) < tol:
                break
            prev = f
        best = max(best, f)
    return f_global, best, f_global - best


def measure_set(rho) -> MeasureSet:
    fg, fl, sp = shared_purity(rho)
    mi = mutual_information(rho)
    return MeasureSet(
        concurrence=concurrence(rho),
        logneg=logarithmic_negativity(rho),
        discord_left=quantum_discord(rho, "left"),
        discord_right=quantum_discord(rho, "right"),
        mutual_info=mi,
        classical_corr=classical_correlation(rho, "right"),
        shared_purity=sp,
        f_global=fg,
        f_local=fl,
    )
