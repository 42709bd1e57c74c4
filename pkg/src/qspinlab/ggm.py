"""Generalized geometric measure of a pure state.

``GGM = 1 - max_{A:B} lambda^2_{A:B}`` where ``lambda_{A:B}`` is the largest
Schmidt coefficient across the bipartition.  The scan runs over canonical
bipartitions (``|A| <= N/2``; for ``|A| = N/2`` part ``A`` holds site 0) in
ascending ``(|A|, mask)`` order, and ties resolve to the earliest entry.

When the caller supplies lattice symmetries (site permutations), those that
leave the state invariant up to a sign form its stabilizer; bipartitions in
the same stabilizer orbit share their Schmidt spectrum, so only one member
per orbit is diagonalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure
from .hilbert import _amplitudes, max_schmidt_sq, n_bits

POWER_MIN_BLOCK = 6
STABILIZER_TOL = 1e-9


@dataclass(frozen=True)
class Bipartition:
    n_sites: int
    mask: int

    @classmethod
    def canonical(cls, n: int, mask: int) -> "Bipartition":
        return cls(n, canonical_mask(n, mask))

    @property
    def size(self) -> int:
        return bin(self.mask).count("1")

    @property
    def sites(self) -> list[int]:
        return [i for i in range(self.n_sites) if self.mask >> i & 1]

    def hex(self) -> str:
        return f"{self.mask:#x}"


@dataclass(frozen=True)
class PartitionPolicy:
    mode: str = "all_subsets"
    max_block: int | None = None

    def __post_init__(self):
        if self.mode not in ("all_subsets", "contiguous_blocks"):
            raise ValueError(f"unknown partition mode {self.mode!r}")
        if self.max_block is not None and self.max_block < 1:
            raise ValueError("max_block must be >= 1")

    def block_cap(self, n: int) -> int:
        cap = n // 2 if self.max_block is None else min(self.max_block, n // 2)
        return max(cap, 1)


def default_policy(n: int, method: str = "ed") -> PartitionPolicy:
    if method == "analytic":
        return PartitionPolicy("contiguous_blocks", 3)
    if n <= 16:
        return PartitionPolicy("all_subsets")
    return PartitionPolicy("all_subsets", 4)


@dataclass(frozen=True)
class GgmResult:
    value: float
    lambda_max_sq: float
    argmax_partition: Bipartition
    partitions_scanned: int
    partitions_evaluated: int
    degenerate_input: bool = False


def canonical_mask(n: int, mask: int) -> int:
    full = (1 << n) - 1
    size = bin(mask).count("1")
    if 2 * size > n or (2 * size == n and not mask & 1):
        return full ^ mask
    return mask


def _popcount(a: np.ndarray) -> np.ndarray:
    count = np.zeros_like(a)
    b = a.copy()
    while np.any(b):
        count += b & 1
        b >>= 1
    return count


def _canonical_array(n: int, masks: np.ndarray) -> np.ndarray:
    full = (1 << n) - 1
    size = _popcount(masks)
    flip = (2 * size > n) | ((2 * size == n) & ((masks & 1) == 0))
    return np.where(flip, full ^ masks, masks)


def _sorted_masks(n: int, masks: np.ndarray) -> np.ndarray:
    masks = np.unique(masks)
    return masks[np.lexsort((masks, _popcount(masks)))]


def bipartition_masks(n: int, policy: PartitionPolicy) -> np.ndarray:
    """Canonical masks for ``policy`` in ascending ``(|A|, mask)`` order."""
    if n < 2:
        raise ValueError("need at least two sites")
    cap = policy.block_cap(n)
    if policy.mode == "all_subsets":
        masks = np.arange(1, (1 << n) - 1, dtype=np.int64)
        size = _popcount(masks)
        keep = (2 * size < n) | ((2 * size == n) & ((masks & 1) == 1))
        masks = masks[keep & (size <= cap)]
    else:
        windows = []
        for length in range(1, cap + 1):
            for start in range(n):
                windows.append(sum(1 << ((start + t) % n) for t in range(length)))
        masks = _canonical_array(n, np.array(windows, dtype=np.int64))
    return _sorted_masks(n, masks)


def enumerate_bipartitions(n: int, policy: PartitionPolicy) -> list[Bipartition]:
    return [Bipartition(n, int(m)) for m in bipartition_masks(n, policy)]


def permute_sites(psi: np.ndarray, perm) -> np.ndarray:
    """State with the content of site ``s`` moved to site ``perm[s]``."""
    n = n_bits(psi.shape[0])
    order = [0] * n
    for s, t in enumerate(perm):
        order[n - 1 - t] = n - 1 - s
    return psi.reshape((2,) * n).transpose(order).reshape(-1)


def stabilizer(psi: np.ndarray, perms, tol: float = STABILIZER_TOL) -> list[tuple[int, ...]]:
    """Permutations under which ``psi`` is invariant up to a global phase."""
    norm2 = float(np.vdot(psi, psi).real)
    keep = []
    for p in perms:
        overlap = abs(np.vdot(psi, permute_sites(psi, p))) / norm2
        if overlap > 1.0 - tol:
            keep.append(tuple(p))
    return keep


def _image(masks: np.ndarray, perm) -> np.ndarray:
    out = np.zeros_like(masks)
    for s, t in enumerate(perm):
        out |= ((masks >> s) & 1) << t
    return out


def orbit_representatives(n: int, masks: np.ndarray, group) -> np.ndarray:
    """Smallest canonical image of every mask under ``group``."""
    rep = masks.copy()
    for perm in group:
        rep = np.minimum(rep, _canonical_array(n, _image(masks, perm)))
    return rep


def schmidt_value(psi, mask: int, power_min_block: int = POWER_MIN_BLOCK) -> float:
    size = bin(mask).count("1")
    if size >= power_min_block:
        try:
            return max_schmidt_sq(psi, mask, "power")
        except ConvergenceFailure:
            pass
    return max_schmidt_sq(psi, mask, "dense")


def ggm(state, policy: PartitionPolicy | None = None, *, symmetries=None,
        degenerate_input: bool = False,
        power_min_block: int = POWER_MIN_BLOCK) -> GgmResult:
    """GGM of a normalized pure state."""
    psi = _amplitudes(state)
    n = n_bits(psi.shape[0])
    if policy is None:
        policy = default_policy(n)
    masks = bipartition_masks(n, policy)
    reps = masks
    if symmetries:
        group = stabilizer(psi, symmetries)
        if len(group) > 1:
            reps = orbit_representatives(n, masks, group)
    unique = list(dict.fromkeys(reps.tolist()))
    # evaluate representatives in enumeration order; sizes ascend
    values = {m: schmidt_value(psi, m, power_min_block) for m in unique}
    per_mask = np.array([values[m] for m in reps.tolist()])
    best = int(np.argmax(per_mask))
    lam = min(float(per_mask[best]), 1.0)
    return GgmResult(1.0 - lam, lam, Bipartition(n, int(masks[best])), len(masks),
                     len(unique), degenerate_input)
