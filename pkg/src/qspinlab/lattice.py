"""Pauli-term Hamiltonians of the four periodic spin-1/2 models.

Every builder returns an immutable :class:`ModelSpec` whose terms are
sorted by ``(sites, axes)``; zero-coefficient terms are dropped.  Couplings
are in units of the nearest-neighbour exchange (``J = J1 = 1``), so only
the dimensionless ratios ``gamma``, ``lambda`` and ``alpha`` appear.

Site numbering on 2D lattices is ``s = x + nx * y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import networkx as nx
from networkx.algorithms.isomorphism import GraphMatcher

from .errors import InvalidParam, InvalidSize, ParseError

AXES = ("X", "Y", "Z")
GEOMETRIES = ("chain", "square", "shastry_sutherland")


@dataclass(frozen=True, order=True)
class PauliTerm:
    """``coefficient * prod_k sigma^{axes[k]}_{sites[k]}``."""

    sites: tuple[int, ...]
    axes: tuple[str, ...]
    coefficient: float

    def __post_init__(self):
        if len(self.sites) != len(self.axes):
            raise InvalidParam("sites and axes must have equal length")
        if len(set(self.sites)) != len(self.sites):
            raise InvalidParam(f"repeated site in term {self.sites}")
        if any(a not in AXES for a in self.axes):
            raise InvalidParam(f"unknown Pauli axis in {self.axes}")
        if not math.isfinite(self.coefficient):
            raise InvalidParam("term coefficient must be finite")

    @property
    def flip_sites(self) -> tuple[int, ...]:
        return tuple(s for s, a in zip(self.sites, self.axes) if a != "Z")


@dataclass(frozen=True)
class ModelSpec:
    name: str
    n_sites: int
    geometry: str
    terms: tuple[PauliTerm, ...]
    params: Mapping[str, float]
    shape: tuple[int, ...] = ()

    def __post_init__(self):
        for t in self.terms:
            if any(s < 0 or s >= self.n_sites for s in t.sites):
                raise InvalidParam(f"term {t} has a site outside [0, {self.n_sites})")

    def bonds(self, axes: tuple[str, ...] = ("Z", "Z")) -> list[tuple[int, int, float]]:
        """Two-site terms with the given axes as ``(i, j, coefficient)``."""
        return [(t.sites[0], t.sites[1], t.coefficient)
                for t in self.terms if len(t.sites) == 2 and t.axes == axes]

    # -- text form used by ``--dump-model`` ---------------------------------
    def to_text(self) -> str:
        head = [self.name, str(self.n_sites), self.geometry]
        head += [f"{k}={v!r}" for k, v in self.params.items()]
        if self.shape:
            head += [f"nx={self.shape[0]}", f"ny={self.shape[1]}"]
        lines = [" ".join(head)]
        for t in self.terms:
            ops = " ".join(f"{s}:{a}" for s, a in zip(t.sites, t.axes))
            lines.append(f"{t.coefficient!r} {ops}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ModelSpec":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ParseError("empty model text", line=1)
        head = lines[0].split()
        if len(head) < 3:
            raise ParseError("header needs name, n_sites and geometry", line=1)
        name, geometry = head[0], head[2]
        try:
            n_sites = int(head[1])
        except ValueError:
            raise ParseError(f"bad n_sites {head[1]!r}", line=1) from None
        params: dict[str, float] = {}
        shape = [0, 0]
        for tok in head[3:]:
            key, sep, val = tok.partition("=")
            if not sep:
                raise ParseError(f"expected key=value, got {tok!r}", line=1, key=tok)
            if key in ("nx", "ny"):
                shape["xy".index(key[1])] = int(val)
            else:
                params[key] = float(val)
        terms = []
        for lineno, ln in enumerate(lines[1:], start=2):
            parts = ln.split()
            try:
                coeff = float(parts[0])
                ops = [p.split(":") for p in parts[1:]]
                sites = tuple(int(s) for s, _ in ops)
                axes = tuple(a for _, a in ops)
            except (ValueError, IndexError):
                raise ParseError(f"malformed term {ln!r}", line=lineno) from None
            terms.append(PauliTerm(sites, axes, coeff))
        return cls(name, n_sites, geometry, tuple(terms), params,
                   tuple(shape) if any(shape) else ())


def _finalize(name, n, geometry, raw: Iterable[PauliTerm], params, shape=()) -> ModelSpec:
    terms = sorted(t for t in raw if t.coefficient != 0.0)
    return ModelSpec(name, n, geometry, tuple(terms), dict(params), shape)


def _check_unique(bonds: list[tuple[int, int]]) -> None:
    seen = set()
    for i, j in bonds:
        key = frozenset((i, j))
        if i == j or key in seen:
            raise InvalidSize(f"periodic wrap duplicates bond ({i}, {j})")
        seen.add(key)


def _heisenberg(i: int, j: int, coeff: float) -> list[PauliTerm]:
    a, b = sorted((i, j))
    return [PauliTerm((a, b), (ax, ax), coeff) for ax in AXES]


def _finite(value, label):
    if not math.isfinite(value):
        raise InvalidParam(f"{label} must be finite")


def build_chain_xy(n: int, gamma: float, lam: float) -> ModelSpec:
    """Periodic transverse XY chain with ``J = 1``.

    ``H = 1/2 sum_i [(1+gamma) X_i X_{i+1} + (1-gamma) Y_i Y_{i+1}] + lam sum_i Z_i``
    """
    if n < 3:
        raise InvalidSize(f"XY chain needs n >= 3, got {n}")
    if not (0.0 < gamma <= 1.0):
        raise InvalidParam(f"gamma must lie in (0, 1], got {gamma}")
    _finite(lam, "lambda")
    bonds = [(i, (i + 1) % n) for i in range(n)]
    _check_unique(bonds)
    raw = []
    for i, j in bonds:
        a, b = sorted((i, j))
        raw.append(PauliTerm((a, b), ("X", "X"), 0.5 * (1.0 + gamma)))
        raw.append(PauliTerm((a, b), ("Y", "Y"), 0.5 * (1.0 - gamma)))
    raw += [PauliTerm((i,), ("Z",), float(lam)) for i in range(n)]
    return _finalize("xy", n, "chain", raw, {"gamma": float(gamma), "lambda": float(lam)})


def build_j1j2_chain(n: int, alpha: float) -> ModelSpec:
    """Periodic J1-J2 Heisenberg ring, ``sigma.sigma`` couplings 1 and ``alpha``."""
    if n < 5 or n % 2:
        raise InvalidSize(f"J1-J2 chain needs even n >= 6, got {n}")
    _finite(alpha, "alpha")
    if alpha < 0:
        raise InvalidParam("alpha must be non-negative")
    nn = [(i, (i + 1) % n) for i in range(n)]
    nnn = [(i, (i + 2) % n) for i in range(n)]
    _check_unique(nn + nnn)
    raw = [t for i, j in nn for t in _heisenberg(i, j, 1.0)]
    raw += [t for i, j in nnn for t in _heisenberg(i, j, float(alpha))]
    return _finalize("j1j2_chain", n, "chain", raw, {"alpha": float(alpha)})


def _square_nn(nx_, ny_):
    site = lambda x, y: (x % nx_) + nx_ * (y % ny_)
    bonds = []
    for y in range(ny_):
        for x in range(nx_):
            bonds.append((site(x, y), site(x + 1, y)))
            bonds.append((site(x, y), site(x, y + 1)))
    return site, bonds


def build_j1j2_square(nx_: int, ny_: int, alpha: float) -> ModelSpec:
    """J1-J2 Heisenberg model on an ``nx x ny`` torus (both diagonals per plaquette)."""
    if nx_ < 3 or ny_ < 3:
        raise InvalidSize(f"square lattice needs nx, ny >= 3, got {nx_}x{ny_}")
    _finite(alpha, "alpha")
    if alpha < 0:
        raise InvalidParam("alpha must be non-negative")
    site, nn = _square_nn(nx_, ny_)
    diag = []
    for y in range(ny_):
        for x in range(nx_):
            diag.append((site(x, y), site(x + 1, y + 1)))
            diag.append((site(x, y), site(x + 1, y - 1)))
    _check_unique(nn + diag)
    raw = [t for i, j in nn for t in _heisenberg(i, j, 1.0)]
    raw += [t for i, j in diag for t in _heisenberg(i, j, float(alpha))]
    return _finalize("j1j2_square", nx_ * ny_, "square", raw, {"alpha": float(alpha)},
                     (nx_, ny_))


def shastry_sutherland_dimers(nx_: int, ny_: int) -> list[tuple[int, int]]:
    """Orthogonal-dimer diagonals of the Shastry-Sutherland torus.

    Plaquettes with lower-left corner ``(x, y)`` and both coordinates even
    carry ``(x, y)-(x+1, y+1)``; both odd carry ``(x+1, y)-(x, y+1)``.
    """
    site = lambda x, y: (x % nx_) + nx_ * (y % ny_)
    dimers = []
    for y in range(ny_):
        for x in range(nx_):
            if x % 2 == 0 and y % 2 == 0:
                dimers.append((site(x, y), site(x + 1, y + 1)))
            elif x % 2 == 1 and y % 2 == 1:
                dimers.append((site(x + 1, y), site(x, y + 1)))
    return dimers


def build_shastry_sutherland(nx_: int, ny_: int, alpha: float) -> ModelSpec:
    if nx_ < 4 or ny_ < 4 or nx_ % 2 or ny_ % 2:
        raise InvalidSize(f"Shastry-Sutherland needs even nx, ny >= 4, got {nx_}x{ny_}")
    _finite(alpha, "alpha")
    if alpha < 0:
        raise InvalidParam("alpha must be non-negative")
    _, nn = _square_nn(nx_, ny_)
    dimers = shastry_sutherland_dimers(nx_, ny_)
    _check_unique(nn + dimers)
    raw = [t for i, j in nn for t in _heisenberg(i, j, 1.0)]
    raw += [t for i, j in dimers for t in _heisenberg(i, j, float(alpha))]
    return _finalize("shastry_sutherland", nx_ * ny_, "shastry_sutherland", raw,
                     {"alpha": float(alpha)}, (nx_, ny_))


def build_model(name: str, param: float, *, n: int | None = None, nx: int | None = None,
                ny: int | None = None, gamma: float = 1.0) -> ModelSpec:
    """Dispatch on the model tag used by the sweep driver and CLI."""
    if name == "xy":
        return build_chain_xy(n, gamma, param)
    if name == "j1j2_chain":
        return build_j1j2_chain(n, param)
    if name == "j1j2_square":
        return build_j1j2_square(nx, ny, param)
    if name == "shastry_sutherland":
        return build_shastry_sutherland(nx, ny, param)
    raise InvalidParam(f"unknown model {name!r}")


def symmetry_permutations(model: ModelSpec) -> list[tuple[int, ...]]:
    """Site permutations that map the term list onto itself.

    Only one- and two-site terms with a symmetric axis pattern are
    understood; anything else yields the identity alone.
    """
    n = model.n_sites
    identity = [tuple(range(n))]
    g = nx.Graph()
    g.add_nodes_from(range(n), label=())
    onsite: dict[int, list] = {i: [] for i in range(n)}
    edges: dict[tuple[int, int], list] = {}
    for t in model.terms:
        if len(t.sites) == 1:
            onsite[t.sites[0]].append((t.axes, t.coefficient))
        elif len(t.sites) == 2 and t.axes[0] == t.axes[1]:
            edges.setdefault(t.sites, []).append((t.axes, t.coefficient))
        else:
            return identity
    for i, lab in onsite.items():
        g.nodes[i]["label"] = tuple(sorted(lab))
    for (i, j), lab in edges.items():
        g.add_edge(i, j, label=tuple(sorted(lab)))
    same = lambda a, b: a["label"] == b["label"]
    matcher = GraphMatcher(g, g, node_match=same, edge_match=same)
    perms = {tuple(m[i] for i in range(n)) for m in matcher.isomorphisms_iter()}
    return sorted(perms)
