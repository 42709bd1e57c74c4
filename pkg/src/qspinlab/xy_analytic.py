"""Thermodynamic-limit ground state of the transverse XY chain.

With Majorana operators ``A_j = S_j X_j`` and ``B_j = S_j Y_j`` (``S_j`` the
Jordan-Wigner string of ``Z`` on sites left of ``j``) the Hamiltonian

    H = 1/2 sum [(1+g) X_j X_{j+1} + (1-g) Y_j Y_{j+1}] + lam sum Z_j

is quadratic, and the only non-trivial ground-state contraction is

    <A_j B_{j+d}> = i G(d),
    G(d) = -1/pi int_0^pi [(lam - cos k) cos(kd) + g sin k sin(kd)] / E(k) dk,
    E(k) = sqrt((lam - cos k)^2 + g^2 sin^2 k).

Every parity-even Pauli string on a block of consecutive sites maps to a
Majorana monomial whose expectation is a Pfaffian of these contractions
(Wick), giving the block density matrices.  The state is the
parity-symmetric one that finite periodic chains converge to.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParam, NearCritical, QuadratureFailure

CRITICAL_GUARD = 1e-3
QUAD_TOL = 1e-10
RMAX_LIMIT = 4
_GL_ORDER = 16
_MAX_PANELS = 2 ** 16

_PAULI = {
    "I": np.eye(2),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "Y": np.array([[0.0, -1j], [1j, 0.0]]),
    "Z": np.diag([1.0, -1.0]),
}


@dataclass
class CorrelatorTable:
    gamma: float
    lam: float
    mz: float
    gxx: dict[int, float]
    gyy: dict[int, float]
    gzz: dict[int, float]
    contraction: dict[int, float] = field(repr=False, default_factory=dict)
    panels: int = 0

    @property
    def rmax(self) -> int:
        return max(self.gxx) if self.gxx else 0


def _check_point(gamma, lam, rmax=RMAX_LIMIT):
    if not (0.0 < gamma <= 1.0):
        raise InvalidParam(f"gamma must lie in (0, 1], got {gamma}")
    if lam < 0:
        raise InvalidParam(f"lambda must be non-negative, got {lam}")
    if abs(lam - 1.0) < CRITICAL_GUARD - 1e-12:
        raise NearCritical(f"|lambda - 1| = {abs(lam - 1.0):.1e} is inside the critical guard")
    if not 0 <= rmax <= RMAX_LIMIT:
        raise InvalidParam(f"rmax must lie in [0, {RMAX_LIMIT}]")


def _gl_integrate(func, panels: int) -> np.ndarray:
    """Composite Gauss-Legendre over ``[0, pi]``; ``func`` maps k-array -> (m, k) array."""
    x, w = np.polynomial.legendre.leggauss(_GL_ORDER)
    edges = np.linspace(0.0, np.pi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    k = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return func(k) @ weights


def contractions(gamma: float, lam: float, dmax: int) -> tuple[dict[int, float], int]:
    """``G(d)`` for ``|d| <= dmax`` by panel-doubling quadrature."""
    ds = np.arange(-dmax, dmax + 1)

    def integrand(k):
        energy = np.sqrt((lam - np.cos(k)) ** 2 + (gamma * np.sin(k)) ** 2)
        kd = np.outer(ds, k)
        return -((lam - np.cos(k)) * np.cos(kd) + gamma * np.sin(k) * np.sin(kd)) / (np.pi * energy)

    panels = 8
    prev = _gl_integrate(integrand, panels)
    while panels < _MAX_PANELS:
        panels *= 2
        cur = _gl_integrate(integrand, panels)
        if np.max(np.abs(cur - prev)) < QUAD_TOL:
            return dict(zip(ds.tolist(), cur.tolist())), panels
        prev = cur
    raise QuadratureFailure(f"quadrature not converged at {panels} panels")


def _toeplitz_det(g: dict[int, float], size: int, offset: int, sign: int) -> float:
    if size == 0:
        return 1.0
    mat = np.array([[g[sign * (a - b) + offset] for b in range(size)] for a in range(size)])
    return float(np.linalg.det(mat))


def correlators(gamma: float, lam: float, rmax: int = 3) -> CorrelatorTable:
    """Magnetization and two-point functions up to separation ``rmax``."""
    _check_point(gamma, lam, rmax)
    g, panels = contractions(gamma, lam, max(rmax, 2))
    mz = g[0]
    gxx, gyy, gzz = {}, {}, {}
    for r in range(1, rmax + 1):
        gxx[r] = (-1) ** r * _toeplitz_det(g, r, -1, 1)
        gyy[r] = (-1) ** r * _toeplitz_det(g, r, 1, -1)
        gzz[r] = mz * mz - g[r] * g[-r]
    return CorrelatorTable(gamma, lam, mz, gxx, gyy, gzz, g, panels)


# --------------------------------------------------------------------------
# Majorana monomials and Wick contraction
# --------------------------------------------------------------------------

def _normal_order(coef: complex, idx: list[int]) -> tuple[complex, tuple[int, ...]]:
    """Sort Majorana indices, tracking anticommutation signs; ``w^2 = 1``."""
    idx = list(idx)
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(idx) - 1:
            if idx[i] == idx[i + 1]:
                del idx[i:i + 2]
                changed = True
            elif idx[i] > idx[i + 1]:
                idx[i], idx[i + 1] = idx[i + 1], idx[i]
                coef = -coef
                changed = True
                i += 1
            else:
                i += 1
    return coef, tuple(idx)


def pauli_to_majorana(string: str) -> tuple[complex, tuple[int, ...]]:
    """Pauli string on sites ``0..L-1`` as ``coef * w_{i1} w_{i2} ...``.

    Majorana ``2j`` is ``A_j`` and ``2j + 1`` is ``B_j``.
    """
    coef, idx = 1.0 + 0j, []
    for j, p in enumerate(string):
        if p == "I":
            continue
        if p == "Z":
            coef *= -1j
            idx += [2 * j, 2 * j + 1]
            continue
        for l in range(j):
            coef *= -1j
            idx += [2 * l, 2 * l + 1]
        idx.append(2 * j if p == "X" else 2 * j + 1)
    return _normal_order(coef, idx)


def _pfaffian(k: np.ndarray) -> complex:
    m = k.shape[0]
    if m == 0:
        return 1.0
    if m % 2:
        return 0.0
    total = 0.0
    rest = list(range(1, m))
    for pos, j in enumerate(rest):
        if k[0, j] == 0:
            continue
        keep = [r for r in rest if r != j]
        total += (-1) ** pos * k[0, j] * _pfaffian(k[np.ix_(keep, keep)])
    return total


def _pair(g: dict[int, float], a: int, b: int) -> complex:
    """``<w_a w_b>`` for distinct Majoranas."""
    ja, jb = a // 2, b // 2
    if a % 2 == b % 2:
        return 0.0
    if a % 2 == 0:  # A_ja B_jb
        return 1j * g[jb - ja]
    return -1j * g[ja - jb]  # B_ja A_jb = -A_jb B_ja


def majorana_expectation(g: dict[int, float], idx: tuple[int, ...]) -> complex:
    if len(idx) % 2:
        return 0.0
    m = len(idx)
    k = np.zeros((m, m), dtype=complex)
    for a in range(m):
        for b in range(a + 1, m):
            k[a, b] = _pair(g, idx[a], idx[b])
            k[b, a] = -k[a, b]
    return _pfaffian(k)


def string_expectation(g: dict[int, float], string: str) -> float:
    coef, idx = pauli_to_majorana(string)
    val = coef * majorana_expectation(g, idx)
    return float(val.real)


def block_rdm(table: CorrelatorTable, block_len: int) -> np.ndarray:
    """Density matrix of ``block_len`` consecutive sites; bit k of the index is site k."""
    if not 1 <= block_len <= 3:
        raise InvalidParam("block_len must be 1, 2 or 3")
    g = table.contraction
    if max(g) < block_len - 1:
        raise InvalidParam("correlator table too short for this block")
    dim = 2 ** block_len
    rho = np.zeros((dim, dim), dtype=complex)
    for string in itertools.product("IXYZ", repeat=block_len):
        if sum(p in "XY" for p in string) % 2:
            continue  # parity-odd strings vanish
        val = string_expectation(g, "".join(string))
        if val == 0.0:
            continue
        op = np.array([[1.0]])
        for p in reversed(string):
            op = np.kron(op, _PAULI[p])
        rho += val * op
    rho /= dim
    rho = 0.5 * (rho + rho.conj().T)
    if np.max(np.abs(rho.imag)) < 1e-14:
        return rho.real
    return rho


def ggm_xy(gamma: float, lam: float, max_block: int = 3) -> float:
    """``1 - max_L top-eigenvalue(rho_L)`` over blocks of ``L <= max_block`` sites."""
    table = correlators(gamma, lam, rmax=max(max_block - 1, 1))
    top = max(np.linalg.eigvalsh(block_rdm(table, L))[-1] for L in range(1, max_block + 1))
    return 1.0 - float(top)
