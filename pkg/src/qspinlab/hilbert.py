"""Bit-level kernels on the 2^N computational basis.

Basis convention: bit ``i`` of a basis index is site ``i``; bit value 0 is
the ``sigma^z = +1`` state.  Amplitude vectors are viewed as C-ordered
tensors of shape ``(2,) * N``, so site ``i`` lives on tensor axis
``N - 1 - i``.  Pauli flips become ``np.flip`` views along those axes and
no Hamiltonian matrix is ever materialized.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConvergenceFailure, EmptySubset, FullSubset, IoError, ParseError,
    ResourceLimit, SizeMismatch,
)
from .lattice import ModelSpec

MAGIC = b"QSLB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIII")

DEFAULT_MAX_N = 20
DEFAULT_MAX_N_2D = 16


def max_sites(geometry: str = "chain") -> int:
    """Resource guard; ``QSPINLAB_MAX_N`` overrides the built-in limits."""
    env = os.environ.get("QSPINLAB_MAX_N")
    if env:
        return int(env)
    return DEFAULT_MAX_N if geometry == "chain" else DEFAULT_MAX_N_2D


def check_size(n: int, geometry: str = "chain") -> None:
    limit = max_sites(geometry)
    if n > limit:
        raise ResourceLimit(
            f"{n} sites needs {2 ** n * 8 / 2 ** 20:.3g} MiB per vector; "
            f"limit is {limit} sites (set QSPINLAB_MAX_N to override)")


@dataclass
class StateVector:
    n_sites: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes)
        if self.amplitudes.shape != (2 ** self.n_sites,):
            raise SizeMismatch(
                f"expected {2 ** self.n_sites} amplitudes, got {self.amplitudes.shape}")

    @classmethod
    def from_array(cls, amplitudes) -> "StateVector":
        amplitudes = np.asarray(amplitudes)
        return cls(n_bits(amplitudes.shape[0]), amplitudes)

    def normalized(self) -> "StateVector":
        return StateVector(self.n_sites, self.amplitudes / np.linalg.norm(self.amplitudes))


def n_bits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise SizeMismatch(f"length {dim} is not a power of two >= 2")
    return n


def _amplitudes(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return state.amplitudes
    return np.asarray(state)


def sites_of(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def mask_of(sites) -> int:
    m = 0
    for s in sites:
        m |= 1 << int(s)
    return m


def popcount_parity(n: int) -> np.ndarray:
    """Parity of the number of set bits for every index in ``[0, 2^n)``."""
    idx = np.arange(2 ** n, dtype=np.int64)
    parity = np.zeros(2 ** n, dtype=np.int8)
    for i in range(n):
        parity ^= ((idx >> i) & 1).astype(np.int8)
    return parity


# --------------------------------------------------------------------------
# Hamiltonian action
# --------------------------------------------------------------------------

_PAULI_ON_OUTPUT = {
    # value of <y|P|y^flip> as a function of the output bit y (0 or 1)
    "X": (1.0, 1.0),
    "Y": (-1j, 1j),
    "Z": (1.0, -1.0),
}


def _term_tensor(term, union_sites: list[int]) -> np.ndarray:
    """Coefficient of one term on the output bits of ``union_sites``.

    ``union_sites`` is ordered by descending site index so that the tensor
    axes line up with ascending state-tensor axes.
    """
    m = len(union_sites)
    out = np.full((2,) * m, complex(term.coefficient))
    for s, a in zip(term.sites, term.axes):
        k = union_sites.index(s)
        shape = [1] * m
        shape[k] = 2
        out = out * np.array(_PAULI_ON_OUTPUT[a]).reshape(shape)
    return out


def _broadcast_shape(n: int, union_sites: list[int]) -> list[int]:
    shape = [1] * n
    for s in union_sites:
        shape[n - 1 - s] = 2
    return shape


class HamiltonianOperator:
    """Matrix-free action of a :class:`ModelSpec` on amplitude arrays.

    Terms are grouped by the set of sites they flip; each group is one
    ``np.flip`` view times a small broadcast coefficient tensor.
    """

    def __init__(self, model: ModelSpec):
        self.model = model
        n = self.n = model.n_sites
        groups: dict[tuple[int, ...], list] = {}
        for t in model.terms:
            groups.setdefault(tuple(sorted(t.flip_sites)), []).append(t)

        diag_terms = groups.pop((), [])
        self.conserves_parity = all(len(f) % 2 == 0 for f in groups)
        diag = np.zeros((2,) * n, dtype=complex)
        for t in diag_terms:
            union = sorted(t.sites, reverse=True)
            diag = diag + _term_tensor(t, union).reshape(_broadcast_shape(n, union))
        self.diagonal = _realify(diag).reshape(-1) if n else diag

        self.flips = []
        for flip, terms in sorted(groups.items()):
            union = sorted({s for t in terms for s in t.sites}, reverse=True)
            coeff = sum(_term_tensor(t, union) for t in terms)
            axes = tuple(n - 1 - s for s in flip)
            self.flips.append((axes, _realify(coeff).reshape(_broadcast_shape(n, union))))
        self.is_real = np.isrealobj(self.diagonal) and all(np.isrealobj(c) for _, c in self.flips)

    @property
    def dim(self) -> int:
        return 2 ** self.n

    def __call__(self, psi: np.ndarray) -> np.ndarray:
        return self.apply(psi)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """``H @ psi`` for a vector or a ``(2^n, m)`` block of columns."""
        psi = np.asarray(psi)
        if psi.shape[0] != self.dim:
            raise SizeMismatch(f"state has {psi.shape[0]} amplitudes, model needs {self.dim}")
        batch = psi.shape[1:]
        pad = (1,) * len(batch)
        t = psi.reshape((2,) * self.n + batch)
        dtype = np.result_type(psi.dtype, self.diagonal.dtype,
                               *(c.dtype for _, c in self.flips))
        out = np.multiply(self.diagonal.reshape((2,) * self.n + pad), t, dtype=dtype)
        tmp = np.empty_like(out)
        for axes, coeff in self.flips:
            np.multiply(np.flip(t, axes), coeff.reshape(coeff.shape + pad), out=tmp)
            out += tmp
        return out.reshape(psi.shape)

    def dense(self, columns: np.ndarray | None = None) -> np.ndarray:
        """Dense matrix (or the listed columns of it), built by applying H."""
        if columns is None:
            columns = np.arange(self.dim)
        basis = np.zeros((self.dim, len(columns)))
        basis[columns, np.arange(len(columns))] = 1.0
        return self.apply(basis)


def _realify(a: np.ndarray) -> np.ndarray:
    if np.all(a.imag == 0):
        return np.ascontiguousarray(a.real)
    return a


def apply_hamiltonian(model: ModelSpec, state) -> np.ndarray:
    psi = _amplitudes(state)
    if psi.shape[0] != 2 ** model.n_sites:
        raise SizeMismatch(
            f"state has {psi.shape[0]} amplitudes, model has {model.n_sites} sites")
    return HamiltonianOperator(model).apply(psi)


def apply_pauli(state, ops: dict[int, str]) -> np.ndarray:
    """Apply ``prod_s sigma^{ops[s]}_s`` to a state vector."""
    psi = _amplitudes(state)
    n = n_bits(psi.shape[0])
    sites = sorted(ops, reverse=True)
    coeff = np.ones((2,) * len(sites), dtype=complex)
    for k, s in enumerate(sites):
        shape = [1] * len(sites)
        shape[k] = 2
        coeff = coeff * np.array(_PAULI_ON_OUTPUT[ops[s]]).reshape(shape)
    flip = tuple(n - 1 - s for s in sites if ops[s] != "Z")
    t = psi.reshape((2,) * n)
    out = np.flip(t, flip) * _realify(coeff).reshape(_broadcast_shape(n, sites))
    return out.reshape(-1)


def pauli_expectation(state, ops: dict[int, str]) -> float:
    psi = _amplitudes(state)
    val = np.vdot(psi, apply_pauli(psi, ops))
    return float(val.real)


# --------------------------------------------------------------------------
# Reductions
# --------------------------------------------------------------------------

def _validate_mask(n: int, mask: int) -> None:
    full = (1 << n) - 1
    if mask & ~full:
        raise SizeMismatch(f"mask {mask:#x} has sites outside [0, {n})")
    if mask == 0:
        raise EmptySubset("subset must be nonempty")
    if mask == full:
        raise FullSubset("subset must be a proper subset")


def split_matrix(state, mask: int) -> np.ndarray:
    """Amplitudes reshaped to ``2^|A| x 2^|B|`` for the split ``A = mask``.

    The k-th smallest site of a part maps to bit k of its local index.
    """
    psi = _amplitudes(state)
    n = n_bits(psi.shape[0])
    _validate_mask(n, mask)
    a_axes = sorted(n - 1 - s for s in range(n) if mask >> s & 1)
    b_axes = sorted(n - 1 - s for s in range(n) if not mask >> s & 1)
    t = psi.reshape((2,) * n).transpose(a_axes + b_axes)
    return t.reshape(2 ** len(a_axes), 2 ** len(b_axes))


def reduced_density_matrix(state, subset_mask: int) -> np.ndarray:
    """``rho_A = Tr_B |psi><psi|`` via ``M M^dagger``."""
    m = split_matrix(state, subset_mask)
    rho = m @ m.conj().T
    return 0.5 * (rho + rho.conj().T)


def _power_top(m: np.ndarray, tol=1e-12, maxiter=500, window=8, block=2) -> float:
    """Top eigenvalue of ``m m^dagger`` by block power iteration.

    A block of ``block`` vectors is iterated through ``v -> m (m^dagger v)``
    and re-orthonormalized, with the top Ritz value as the estimate; a
    nearly degenerate top pair then converges at the rate of the next
    eigenvalue instead of stalling.  Stops when successive estimates differ
    by < ``tol`` and the geometric tail implied by the observed contraction
    rate is also below ``tol``.  Raises ``ConvergenceFailure`` at the cap,
    or earlier once a steady contraction rate shows the cap cannot be met;
    callers fall back to a dense solve.
    """
    rows = m.shape[0]
    block = max(1, min(block, rows))
    rng = np.random.default_rng(12345)
    v = rng.standard_normal((rows, block))
    if np.iscomplexobj(m):
        v = v + 1j * rng.standard_normal((rows, block))
    v, _ = np.linalg.qr(v)
    mh = m.conj().T
    prev = None
    deltas: list[float] = []
    for it in range(maxiter):
        w = m @ (mh @ v)
        ritz = np.linalg.eigvalsh(0.5 * (v.conj().T @ w + w.conj().T @ v))
        rq = float(ritz[-1])
        v, r = np.linalg.qr(w)
        if abs(r[0, 0]) == 0.0:
            raise ConvergenceFailure("power iteration hit the null space")
        if prev is not None:
            delta = abs(rq - prev)
            deltas.append(delta)
            step_rate = delta / max(deltas[-2], 1e-300) if len(deltas) > 1 else 1.0
            win_rate = ((delta / max(deltas[-1 - window], 1e-300)) ** (1.0 / window)
                        if len(deltas) > window else 1.0)
            # accept on the slower rate, give up only on a steady one
            rate = max(step_rate, win_rate)
            if delta < tol and (delta < 1e-15 or (rate < 1.0 and delta * rate / (1.0 - rate) < tol)):
                return rq
            steady = all(a > b for a, b in zip(deltas[-window - 1:-1], deltas[-window:]))
            if it >= maxiter // 5 and steady and 1e-15 < delta and win_rate < 1.0:
                if np.log(tol * (1.0 - win_rate) / delta) / np.log(win_rate) > maxiter - it:
                    raise ConvergenceFailure(
                        f"power iteration contracting at rate {win_rate:.4f}; cap unreachable")
        prev = rq
    raise ConvergenceFailure(f"power iteration did not converge in {maxiter} steps")


def max_schmidt_sq(state, subset_mask: int, method: str = "dense") -> float:
    """Largest squared Schmidt coefficient across ``subset_mask : rest``."""
    m = split_matrix(state, subset_mask)
    if m.shape[0] > m.shape[1]:
        m = m.T
    if method == "power":
        return _power_top(m)
    if method != "dense":
        raise ValueError(f"unknown method {method!r}")
    gram = m @ m.conj().T
    return float(np.linalg.eigvalsh(gram)[-1])


# --------------------------------------------------------------------------
# --dump-state binary format
# --------------------------------------------------------------------------

def write_state(path, state) -> None:
    psi = np.asarray(_amplitudes(state))
    if np.iscomplexobj(psi):
        if np.any(psi.imag != 0):
            raise SizeMismatch("state dump format holds real amplitudes only")
        psi = psi.real
    n = n_bits(psi.shape[0])
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, n, 0))
            fh.write(psi.astype("<f8").tobytes())
    except OSError as exc:
        raise IoError(str(exc)) from exc


def read_state(path) -> StateVector:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if len(raw) < _HEADER.size:
        raise ParseError("truncated state header")
    magic, version, n, _ = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported state format version {version}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * 2 ** n:
        raise ParseError(f"expected {2 ** n} amplitudes, found {len(body) // 8}")
    return StateVector(n, np.frombuffer(body, dtype="<f8").astype(float))
