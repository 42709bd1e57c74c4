"""Lowest eigenpairs of a :class:`ModelSpec`.

Large problems use Lanczos with full reorthogonalization over the
matrix-free operator; small ones (``2^n <= 1024``) use a dense symmetric
eigensolver.  Either way the work is done separately in the two sectors of
``prod_i sigma^z_i`` whenever every term flips an even number of spins
(true for all four lattice models).  A single Krylov space cannot hold two
copies of a degenerate level, so further eigenpairs inside a sector are
obtained by deflating against the ones already locked.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import NoConvergence
from .hilbert import HamiltonianOperator, check_size, popcount_parity
from .lattice import ModelSpec

log = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-8
RESIDUAL_TOL = 1e-8
DENSE_MAX_DIM = 1024
RITZ_TOL = 1e-11
MAX_KRYLOV = 600


@dataclass
class SpectrumResult:
    energies: np.ndarray
    vectors: list[np.ndarray]
    gap: float
    degenerate: bool
    iterations: int
    residuals: list[float] = field(default_factory=list)
    sectors: list[int] = field(default_factory=list)

    @property
    def ground_state(self) -> np.ndarray:
        return self.vectors[0]


def _residual(op, vec, energy):
    return float(np.linalg.norm(op.apply(vec) - energy * vec))


class _Basis:
    """Growable row-major store of Krylov vectors."""

    def __init__(self, dim, chunk=64):
        self.data = np.empty((chunk, dim))
        self.size = 0
        self.chunk = chunk

    def append(self, v):
        if self.size == self.data.shape[0]:
            grown = np.empty((self.size + self.chunk, self.data.shape[1]))
            grown[: self.size] = self.data[: self.size]
            self.data = grown
        self.data[self.size] = v
        self.size += 1

    @property
    def rows(self):
        return self.data[: self.size]


def _orthogonalize(w, basis_rows, locked):
    for _ in range(2):
        if len(basis_rows):
            w -= basis_rows.T @ (basis_rows @ w)
        for u in locked:
            w -= np.dot(u, w) * u
    return w


def lanczos_lowest(op, v0, locked=(), *, max_krylov=MAX_KRYLOV, ritz_tol=RITZ_TOL,
                   residual_tol=RESIDUAL_TOL):
    """Lowest eigenpair of ``op`` in the orthogonal complement of ``locked``.

    Returns ``(energy, vector, iterations)``.
    """
    q = _orthogonalize(np.array(v0, dtype=float), np.empty((0, len(v0))), locked)
    q /= np.linalg.norm(q)
    basis = _Basis(len(q))
    alphas, betas = [], []
    prev = None
    j = 0
    while j < max_krylov:
        basis.append(q)
        w = op.apply(q)
        a = float(np.dot(q, w))
        alphas.append(a)
        w = _orthogonalize(w, basis.rows, locked)
        b = float(np.linalg.norm(w))
        j += 1
        evals, evecs = sla.eigh_tridiagonal(np.array(alphas), np.array(betas),
                                            select="i", select_range=(0, 0))
        theta = float(evals[0])
        est = abs(b * evecs[-1, 0])
        invariant = b < 1e-12 * max(1.0, abs(theta))
        if invariant or (prev is not None and abs(theta - prev) < ritz_tol
                         and est < 0.1 * residual_tol):
            vec = basis.rows.T @ evecs[:, 0]
            vec /= np.linalg.norm(vec)
            energy = float(np.dot(vec, op.apply(vec)))
            if invariant or _residual(op, vec, energy) < residual_tol:
                return energy, vec, j
        prev = theta
        betas.append(b)
        q = w / b
    raise NoConvergence(f"Lanczos did not converge within {max_krylov} Krylov vectors")


def _dense_sector(op, cols, k):
    h = op.dense(cols)[cols]
    h = 0.5 * (h + h.T)
    top = min(k, len(cols)) - 1
    evals, evecs = sla.eigh(h, subset_by_index=[0, top])
    out = []
    for e, v in zip(evals, evecs.T):
        full = np.zeros(op.dim)
        full[cols] = v
        out.append((float(e), full))
    return out


def ground_spectrum(model: ModelSpec, k: int = 2, seed: int = 0, *,
                    dense_max_dim: int = DENSE_MAX_DIM,
                    degeneracy_tol: float = DEGENERACY_TOL,
                    residual_tol: float = RESIDUAL_TOL,
                    max_krylov: int = MAX_KRYLOV) -> SpectrumResult:
    """The ``k`` lowest eigenpairs, resolved by spin-flip parity sector."""
    if k not in (1, 2, 3):
        raise ValueError(f"k must be 1, 2 or 3, got {k}")
    check_size(model.n_sites, model.geometry)
    op = HamiltonianOperator(model)
    if not op.is_real:
        raise ValueError("eigensolver expects a real-symmetric Hamiltonian")
    dim = op.dim
    if op.conserves_parity:
        parity = popcount_parity(model.n_sites)
        sectors = {p: np.flatnonzero(parity == p) for p in (0, 1)}
    else:
        sectors = {0: np.arange(dim)}

    found: dict[int, list[tuple[float, np.ndarray]]] = {}
    iterations = 0
    if dim <= dense_max_dim:
        for p, cols in sectors.items():
            found[p] = _dense_sector(op, cols, k)
    else:
        def extend(p):
            nonlocal iterations
            rng = np.random.default_rng([seed, p, len(found.get(p, []))])
            v0 = np.zeros(dim)
            cols = sectors[p]
            v0[cols] = rng.uniform(-1.0, 1.0, len(cols))
            locked = [v for _, v in found.get(p, [])]
            e, v, its = lanczos_lowest(op, v0, locked, max_krylov=max_krylov,
                                       residual_tol=residual_tol)
            iterations += its
            found.setdefault(p, []).append((e, v))

        for p in sectors:
            extend(p)
        while True:
            merged = sorted(e for lst in found.values() for e, _ in lst)
            open_ = [p for p in sectors if len(found[p]) < min(k, len(sectors[p]))]
            kth = merged[k - 1] if len(merged) >= k else np.inf
            need = [p for p in open_ if found[p][-1][0] < kth]
            if not need:
                break
            extend(min(need, key=lambda p: found[p][-1][0]))

    pairs = sorted(((e, p, i) for p, lst in found.items() for i, (e, _) in enumerate(lst)))
    pairs = pairs[:k]
    energies = np.array([e for e, _, _ in pairs])
    vectors = [found[p][i][1] for _, p, i in pairs]
    residuals = [_residual(op, v, e) for e, v in zip(energies, vectors)]
    if max(residuals) > residual_tol:
        raise NoConvergence(f"residual {max(residuals):.2e} exceeds {residual_tol:.0e}")
    gap = float(energies[1] - energies[0]) if k > 1 else float("nan")
    log.debug("%s: E=%s its=%d", model.name, energies, iterations)
    return SpectrumResult(energies, vectors, gap,
                          bool(k > 1 and gap < degeneracy_tol), iterations,
                          residuals, [p for _, p, _ in pairs])
