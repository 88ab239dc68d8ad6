"""Exclusive minimum-weight perfect matching.

Each error species (X errors seen by Z checks, Z errors seen by X checks) is
decoded on its own.  For a species we need the least weight of a correction in
both logical classes, ``W0`` (same class as the reference boundary choice) and
``W1`` (flipped).  The gap ``delta = |W0 - W1|`` drives the abort rule::

    abort  iff  1 - delta / d > c

Two independent exact solvers are provided:

* :func:`build_parity_graph` + :func:`mwpm_exact` -- the parity-constrained
  matching graph solved by a blossom algorithm (``networkx``).  Used for
  single-shot decoding, where an explicit correction is returned.
* :func:`batch_sector_weights` -- a compiled subset dynamic program over the
  defect set.  Defects whose direct pairing can never beat sending both to
  the same boundary are split into independent components, so the program
  stays small.  Used for Monte Carlo, where only ``(W0, W1)`` matter.

Boundary conventions follow :mod:`exclusive_qec.code_model`: each species has
boundary "a" and boundary "b", and the class bit of a correction is the
parity of its matches to boundary "b".
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import networkx as nx
import numba
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .blossom import min_weight_perfect_matching
from .code_model import Code, PauliError, Species, Syndrome, SECTOR_NAMES
from .errors import InfeasibleSector, InvalidParameter

log = logging.getLogger(__name__)

__all__ = [
    "DecoderConfig",
    "DecodeOutcome",
    "MatchingGraph",
    "Matching",
    "SpeciesGraph",
    "species_graphs",
    "build_parity_graph",
    "mwpm_exact",
    "min_weight_in_sector",
    "sector_weights",
    "decode_exclusive",
    "batch_sector_weights",
    "batch_decode_mwpm",
    "should_abort",
    "abort_mask",
    "tolerance_fraction",
]

INF = 1 << 28
DP_MAX = 12  # components up to this size use the subset DP, larger ones blossom


def tolerance_fraction(c) -> Fraction:
    """Exact rational form of a tolerance given as float, str or Fraction."""
    if isinstance(c, Fraction):
        frac = c
    elif isinstance(c, str):
        frac = Fraction(c)
    else:
        frac = Fraction(float(c)).limit_denominator(10_000)
    if not 0 <= frac <= 1:
        raise InvalidParameter(f"exclusive tolerance must be in [0, 1], got {c}")
    return frac


@dataclass(frozen=True)
class DecoderConfig:
    """Exclusive tolerance ``c`` in [0, 1]; 1 never aborts, 0 accepts only
    trivial syndromes."""

    c: float = 1.0

    def __post_init__(self):
        tolerance_fraction(self.c)

    @property
    def fraction(self) -> Fraction:
        return tolerance_fraction(self.c)


def should_abort(d: int, margin: int, c) -> bool:
    """``1 - margin/d > c`` evaluated in exact arithmetic."""
    frac = tolerance_fraction(c)
    return (d - margin) * frac.denominator > frac.numerator * d


def abort_mask(d: int, margins: np.ndarray, c, nontrivial: np.ndarray) -> np.ndarray:
    """Vectorised abort rule.

    ``margins`` is ``(shots, species)``; a shot aborts if any species fails the
    test.  ``c = 0`` additionally aborts on every nontrivial syndrome.
    """
    frac = tolerance_fraction(c)
    bad = (d - np.asarray(margins, np.int64)) * frac.denominator > frac.numerator * d
    out = bad.any(axis=-1)
    if frac == 0:
        out |= np.asarray(nontrivial, bool)
    return out


# --------------------------------------------------------------------------
# Species decoding graph
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpeciesGraph:
    """Check graph of one species with precomputed distances.

    ``dist`` holds check-to-check chain lengths through the bulk, ``dist_a``
    and ``dist_b`` the lengths to each boundary, and ``logical`` the least
    weight of a chain joining the two boundaries.
    """

    species: Species
    n: int
    dist: np.ndarray
    dist_a: np.ndarray
    dist_b: np.ndarray
    logical: int
    pred: np.ndarray
    edge_qubit: dict
    exit_a: np.ndarray
    exit_b: np.ndarray

    @property
    def num_checks(self) -> int:
        return self.dist.shape[0]

    def path_qubits(self, u: int, v: int) -> list:
        """Qubits of a shortest bulk chain between checks ``u`` and ``v``."""
        out = []
        cur = v
        while cur != u:
            prev = int(self.pred[u, cur])
            if prev < 0:
                raise InfeasibleSector(f"checks {u} and {v} are disconnected")
            out.append(self.edge_qubit[(min(prev, cur), max(prev, cur))])
            cur = prev
        return out

    def boundary_path(self, u: int, side: int) -> list:
        """Qubits of a shortest chain from check ``u`` to boundary ``side``."""
        exits = self.exit_a if side == 0 else self.exit_b
        q, c = exits[u]
        return self.path_qubits(u, int(c)) + [int(q)]

    def logical_path(self) -> list:
        """Qubits of a least-weight chain joining boundary a to boundary b."""
        tot = self.dist_a + self.dist_b
        u = int(np.argmin(tot))
        return self.boundary_path(u, 0) + self.boundary_path(u, 1)


def _build_species_graph(species: Species) -> SpeciesGraph:
    h = species.checks
    m, n = h.shape
    rows, cols, edge_qubit = [], [], {}
    a_edges, b_edges = [], []
    for q in range(n):
        cs = np.flatnonzero(h[:, q])
        if len(cs) == 2:
            u, v = int(cs[0]), int(cs[1])
            edge_qubit.setdefault((u, v), q)
            rows += [u, v]
            cols += [v, u]
        elif len(cs) == 1:
            side = int(species.boundary_side[q])
            (a_edges if side == 0 else b_edges).append((q, int(cs[0])))
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, m))
    dist, pred = shortest_path(adj, method="D", unweighted=True, return_predecessors=True)
    dist = np.where(np.isfinite(dist), dist, INF).astype(np.int64)

    def to_boundary(edges):
        best = np.full(m, INF, np.int64)
        exit_ = np.zeros((m, 2), np.int64)
        for q, c in edges:
            cand = dist[:, c] + 1
            better = cand < best
            best[better] = cand[better]
            exit_[better] = (q, c)
        return best, exit_

    dist_a, exit_a = to_boundary(a_edges)
    dist_b, exit_b = to_boundary(b_edges)
    logical = int((dist_a + dist_b).min()) if m else INF
    return SpeciesGraph(
        species=species,
        n=n,
        dist=dist,
        dist_a=dist_a,
        dist_b=dist_b,
        logical=logical,
        pred=pred,
        edge_qubit=edge_qubit,
        exit_a=exit_a,
        exit_b=exit_b,
    )


@lru_cache(maxsize=64)
def species_graphs(code: Code) -> tuple:
    """``(x_graph, z_graph)`` for ``code`` (cached per code object)."""
    return tuple(_build_species_graph(s) for s in code.species)


def _species_index(code: Code, species) -> int:
    if isinstance(species, (int, np.integer)):
        return int(species)
    names = [s.name for s in code.species]
    if species not in names:
        raise InvalidParameter(f"unknown species {species!r}; use 'X' or 'Z'")
    return names.index(species)


def _defects_of(code: Code, defects, species) -> tuple:
    """Normalise ``defects`` to ``(species_index, sorted check indices)``.

    ``defects`` may be a :class:`Syndrome` with a single nonempty part, or a
    sequence of check indices together with an explicit ``species``.
    """
    if isinstance(defects, Syndrome):
        xs, zs = defects.x_defects(), defects.z_defects()
        if len(xs) and len(zs):
            raise InvalidParameter("defects of both species given; decode each separately")
        if species is None:
            # X-check defects flag Z errors and vice versa.
            species = "Z" if len(xs) else "X"
        idx = _species_index(code, species)
        arr = zs if code.species[idx].name == "X" else xs
        return idx, np.asarray(arr, np.int64)
    if species is None:
        raise InvalidParameter("species must be given with a bare defect list")
    return _species_index(code, species), np.unique(np.asarray(defects, np.int64))


# --------------------------------------------------------------------------
# Parity-constrained matching graph
# --------------------------------------------------------------------------


@dataclass
class MatchingGraph:
    """Matching graph with a fixed parity of matches to boundary "b".

    Vertices are labelled ``("d", check)`` for defects, ``("a", k)`` and
    ``("b", k)`` for the two boundary sets.
    """

    vertices: list
    edges: dict
    parity: int
    species: int

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    def boundary_sizes(self) -> tuple:
        na = sum(1 for v in self.vertices if v[0] == "a")
        nb = sum(1 for v in self.vertices if v[0] == "b")
        return na, nb


@dataclass
class Matching:
    pairs: list
    weight: int


def build_parity_graph(code: Code, defects, boundary_parity, species=None) -> MatchingGraph:
    """Matching graph whose perfect matchings have the requested parity of
    defect-to-boundary-"b" matches.

    With ``k`` defects, boundary "b" gets ``k`` or ``k + 1`` vertices so that its
    size has the requested parity and boundary "a" gets ``k`` or ``k + 1``
    vertices to make the total even.  Boundary vertices on the same side are
    joined at weight 0; an "a"-"b" pair costs a full logical chain, which is
    how a correction picks up an extra logical when that is cheapest.
    """
    parity = {"even": 0, "odd": 1, "trivial": 0, "flipped": 1}.get(boundary_parity, boundary_parity)
    if parity not in (0, 1):
        raise InvalidParameter(f"bad boundary parity {boundary_parity!r}")
    idx, dfs = _defects_of(code, defects, species)
    g = species_graphs(code)[idx]
    k = len(dfs)
    nb = k if k % 2 == parity else k + 1
    na = k if k % 2 == (k - parity) % 2 else k + 1
    verts = [("d", int(c)) for c in dfs] + [("a", i) for i in range(na)] + [("b", i) for i in range(nb)]
    edges = {}
    for i, u in enumerate(dfs):
        for v in dfs[i + 1 :]:
            edges[(("d", int(u)), ("d", int(v)))] = int(g.dist[u, v])
        for s in range(na):
            edges[(("d", int(u)), ("a", s))] = int(g.dist_a[u])
        for s in range(nb):
            edges[(("d", int(u)), ("b", s))] = int(g.dist_b[u])
    for side, size in (("a", na), ("b", nb)):
        for s in range(size):
            for t in range(s + 1, size):
                edges[((side, s), (side, t))] = 0
    for s in range(na):
        for t in range(nb):
            edges[(("a", s), ("b", t))] = g.logical
    return MatchingGraph(vertices=verts, edges=edges, parity=parity, species=idx)


def mwpm_exact(graph) -> Matching:
    """Exact minimum-weight perfect matching.

    ``graph`` is a :class:`MatchingGraph` or a ``networkx.Graph`` with integer
    ``weight`` attributes.  Raises :class:`InfeasibleSector` if no perfect
    matching exists.
    """
    if isinstance(graph, MatchingGraph):
        G = nx.Graph()
        G.add_nodes_from(graph.vertices)
        for (u, v), w in graph.edges.items():
            G.add_edge(u, v, weight=w)
    else:
        G = graph
    nv = G.number_of_nodes()
    if nv % 2:
        raise InfeasibleSector(f"odd vertex count {nv}")
    if nv == 0:
        return Matching(pairs=[], weight=0)
    big = 1 + sum(abs(w) for _, _, w in G.edges(data="weight"))
    H = nx.Graph()
    H.add_nodes_from(G.nodes)
    for u, v, w in G.edges(data="weight"):
        H.add_edge(u, v, weight=big - w)
    mate = nx.max_weight_matching(H, maxcardinality=True)
    if 2 * len(mate) != nv:
        raise InfeasibleSector("graph has no perfect matching")
    pairs = sorted((tuple(sorted((u, v), key=str)) for u, v in mate), key=str)
    weight = sum(G[u][v]["weight"] for u, v in pairs)
    return Matching(pairs=pairs, weight=int(weight))


def _correction_from_matching(code: Code, g: SpeciesGraph, matching: Matching) -> np.ndarray:
    bits = np.zeros(code.n, np.uint8)
    for u, v in matching.pairs:
        kinds = {u[0], v[0]}
        if kinds == {"d"}:
            qs = g.path_qubits(u[1], v[1])
        elif "d" in kinds:
            dv, bv = (u, v) if u[0] == "d" else (v, u)
            qs = g.boundary_path(dv[1], 0 if bv[0] == "a" else 1)
        elif kinds == {"a", "b"}:
            qs = g.logical_path()
        else:
            qs = []
        for q in qs:
            bits[q] ^= 1
    return bits


def _embed(code: Code, idx: int, bits: np.ndarray) -> PauliError:
    zero = np.zeros(code.n, np.uint8)
    return PauliError(bits, zero) if code.species[idx].error_part == "x" else PauliError(zero, bits)


def min_weight_in_sector(code: Code, defects, sector_flag, species=None) -> tuple:
    """Least-weight single-species correction in the given class.

    ``sector_flag`` is ``"trivial"`` or ``"flipped"`` (or 0/1).  Returns
    ``(correction, weight)`` where ``correction`` is a :class:`PauliError`.
    """
    graph = build_parity_graph(code, defects, sector_flag, species)
    g = species_graphs(code)[graph.species]
    matching = mwpm_exact(graph)
    bits = _correction_from_matching(code, g, matching)
    return _embed(code, graph.species, bits), matching.weight


# --------------------------------------------------------------------------
# Compiled sector weights
# --------------------------------------------------------------------------


@numba.njit(cache=True)
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@numba.njit(cache=True)
def _component_blossom(members, k, dist, dist_a, dist_b, logical, parity):
    """Least weight of a component with the given parity of "b" matches."""
    nb = k if k % 2 == parity else k + 1
    na = k if k % 2 == (k - parity) % 2 else k + 1
    nv = k + na + nb
    cap = k * (k - 1) // 2 + k * (na + nb) + na * (na - 1) // 2 + nb * (nb - 1) // 2 + na * nb
    ei = np.empty(cap, np.int64)
    ej = np.empty(cap, np.int64)
    ew = np.empty(cap, np.int64)
    m = 0
    for a in range(k):
        u = members[a]
        for b in range(a + 1, k):
            v = members[b]
            if dist[u, v] < min(dist_a[u] + dist_a[v], dist_b[u] + dist_b[v]):
                ei[m] = a
                ej[m] = b
                ew[m] = dist[u, v]
                m += 1
        for s in range(na):
            ei[m] = a
            ej[m] = k + s
            ew[m] = dist_a[u]
            m += 1
        for s in range(nb):
            ei[m] = a
            ej[m] = k + na + s
            ew[m] = dist_b[u]
            m += 1
    for s in range(na):
        for t in range(s + 1, na):
            ei[m] = k + s
            ej[m] = k + t
            ew[m] = 0
            m += 1
        for t in range(nb):
            ei[m] = k + s
            ej[m] = k + na + t
            ew[m] = logical
            m += 1
    for s in range(nb):
        for t in range(s + 1, nb):
            ei[m] = k + na + s
            ej[m] = k + na + t
            ew[m] = 0
            m += 1
    _, w = min_weight_perfect_matching(ei[:m], ej[:m], ew[:m], nv)
    return w


@numba.njit(cache=True)
def _weights_one(defs, nd, dist, dist_a, dist_b, logical, best0, best1):
    """Return ``(W0, W1)`` for one defect list."""
    if nd == 0:
        return 0, logical
    parent = np.arange(nd)
    for a in range(nd):
        i = defs[a]
        for b in range(a + 1, nd):
            j = defs[b]
            lim = min(dist_a[i] + dist_a[j], dist_b[i] + dist_b[j])
            if dist[i, j] < lim:
                ra = _find(parent, a)
                rb = _find(parent, b)
                if ra != rb:
                    parent[ra] = rb
    tot0 = 0
    tot1 = INF
    members = np.empty(nd, np.int64)
    done = np.zeros(nd, np.bool_)
    for a in range(nd):
        r = _find(parent, a)
        if done[r]:
            continue
        done[r] = True
        k = 0
        for b in range(nd):
            if _find(parent, b) == r:
                members[k] = defs[b]
                k += 1
        if k == 1:
            c0 = dist_a[members[0]]
            c1 = dist_b[members[0]]
        elif k > DP_MAX:
            c0 = _component_blossom(members, k, dist, dist_a, dist_b, logical, 0)
            c1 = _component_blossom(members, k, dist, dist_a, dist_b, logical, 1)
        else:
            full = (1 << k) - 1
            best0[0] = 0
            best1[0] = INF
            for mask in range(1, full + 1):
                i = 0
                while not (mask >> i) & 1:
                    i += 1
                rest = mask ^ (1 << i)
                u = members[i]
                b0 = min(best0[rest] + dist_a[u], best1[rest] + dist_b[u])
                b1 = min(best1[rest] + dist_a[u], best0[rest] + dist_b[u])
                for j in range(i + 1, k):
                    if (rest >> j) & 1:
                        r2 = rest ^ (1 << j)
                        w = dist[u, members[j]]
                        if best0[r2] + w < b0:
                            b0 = best0[r2] + w
                        if best1[r2] + w < b1:
                            b1 = best1[r2] + w
                best0[mask] = b0
                best1[mask] = b1
            c0 = best0[full]
            c1 = best1[full]
        n0 = min(tot0 + c0, tot1 + c1)
        n1 = min(tot0 + c1, tot1 + c0)
        tot0 = n0
        tot1 = n1
    return min(tot0, tot1 + logical), min(tot1, tot0 + logical)


@numba.njit(cache=True)
def _weights_batch(syn, dist, dist_a, dist_b, logical):
    shots, m = syn.shape
    out = np.empty((shots, 2), np.int64)
    defs = np.empty(m, np.int64)
    best0 = np.empty(1 << DP_MAX, np.int64)
    best1 = np.empty(1 << DP_MAX, np.int64)
    for s in range(shots):
        nd = 0
        for c in range(m):
            if syn[s, c]:
                defs[nd] = c
                nd += 1
        w0, w1 = _weights_one(defs, nd, dist, dist_a, dist_b, logical, best0, best1)
        out[s, 0] = w0
        out[s, 1] = w1
    return out


def _weights_reference(code: Code, idx: int, defects: np.ndarray) -> tuple:
    """Sector weights from the networkx matcher (independent check)."""
    w0 = mwpm_exact(build_parity_graph(code, defects, 0, idx)).weight
    w1 = mwpm_exact(build_parity_graph(code, defects, 1, idx)).weight
    return w0, w1


_TABLE_MAX_CHECKS = 12


@lru_cache(maxsize=32)
def _weight_table(code: Code, idx: int):
    g = species_graphs(code)[idx]
    m = g.num_checks
    ints = np.arange(1 << m, dtype=np.int64)
    syn = ((ints[:, None] >> np.arange(m)) & 1).astype(np.uint8)
    return _weights_batch(syn, g.dist, g.dist_a, g.dist_b, g.logical)


def batch_sector_weights(code: Code, species, syndromes: np.ndarray) -> np.ndarray:
    """``(shots, 2)`` array of ``(W0, W1)`` for a batch of one-species syndromes."""
    idx = _species_index(code, species)
    g = species_graphs(code)[idx]
    syn = np.ascontiguousarray(syndromes, dtype=np.uint8)
    if syn.ndim == 1:
        syn = syn[None, :]
    if g.num_checks <= _TABLE_MAX_CHECKS:
        table = _weight_table(code, idx)
        keys = syn.astype(np.int64) @ (1 << np.arange(g.num_checks, dtype=np.int64))
        return table[keys]
    return _weights_batch(syn, g.dist, g.dist_a, g.dist_b, g.logical)


def sector_weights(code: Code, defects, species=None) -> tuple:
    """``(W0, W1)`` for a single one-species defect set."""
    idx, dfs = _defects_of(code, defects, species)
    syn = np.zeros(species_graphs(code)[idx].num_checks, np.uint8)
    syn[dfs] = 1
    w = batch_sector_weights(code, idx, syn)[0]
    return int(w[0]), int(w[1])


# --------------------------------------------------------------------------
# Exclusive decoding
# --------------------------------------------------------------------------


@dataclass
class DecodeOutcome:
    """Result of an exclusive decoder.

    On abort ``correction`` and ``sector`` are ``None``.  ``margins`` holds the
    per-species quantity compared with ``d`` in the abort rule (the weight
    gap for matching, the survived distance for union-find) and
    ``weights`` the per-species ``(W0, W1)`` when available.
    """

    accepted: bool
    correction: PauliError | None = None
    sector: str | None = None
    margins: tuple = ()
    weights: tuple = ()
    extra: dict = field(default_factory=dict)

    @property
    def aborted(self) -> bool:
        return not self.accepted

    @property
    def delta(self) -> int | None:
        return min(self.margins) if self.margins else None


def decode_exclusive(code: Code, syn: Syndrome, config: DecoderConfig | float) -> DecodeOutcome:
    """Exclusive MWPM decoding of a full syndrome.

    The returned ``sector`` is the logical class of the correction with
    respect to the reference boundaries, so the residual class of the true
    error ``E`` is ``logical_sector(E * correction)``.
    """
    if not isinstance(config, DecoderConfig):
        config = DecoderConfig(c=config)
    graphs = species_graphs(code)
    parts = (syn.z, syn.x)  # X species is seen by Z checks
    margins, weights, corr_bits, sector = [], [], [], 0
    for idx, g in enumerate(graphs):
        dfs = np.flatnonzero(parts[idx])
        w0, w1 = sector_weights(code, dfs, idx)
        weights.append((w0, w1))
        margins.append(abs(w1 - w0))
        choose = 0 if w0 <= w1 else 1
        corr, w = min_weight_in_sector(code, dfs, choose, idx)
        assert w == min(w0, w1)
        corr_bits.append(corr)
        sector |= choose << idx
    nontrivial = not syn.trivial
    if abort_mask(code.d, np.array(margins), config.c, np.array(nontrivial))[()]:
        return DecodeOutcome(False, margins=tuple(margins), weights=tuple(weights))
    correction = corr_bits[0] * corr_bits[1]
    return DecodeOutcome(
        True,
        correction=correction,
        sector=SECTOR_NAMES[sector],
        margins=tuple(margins),
        weights=tuple(weights),
    )


def batch_decode_mwpm(code: Code, x: np.ndarray, z: np.ndarray, c) -> tuple:
    """Decode a batch of code-capacity errors.

    Returns ``(aborted, residual_sector, margins)`` where ``residual_sector``
    is the class index (0 = I) of error times correction.
    """
    from .code_model import batch_syndromes

    sx, sz = batch_syndromes(code, x, z)
    wx = batch_sector_weights(code, 0, sz)
    wz = batch_sector_weights(code, 1, sx)
    margins = np.stack([np.abs(wx[:, 1] - wx[:, 0]), np.abs(wz[:, 1] - wz[:, 0])], axis=1)
    nontrivial = sx.any(axis=1) | sz.any(axis=1)
    aborted = abort_mask(code.d, margins, c, nontrivial)
    xs, zs = code.species
    ex = (x.astype(np.int32) @ xs.class_support.astype(np.int32)) & 1
    ez = (z.astype(np.int32) @ zs.class_support.astype(np.int32)) & 1
    cx = (wx[:, 1] < wx[:, 0]).astype(np.int32)
    cz = (wz[:, 1] < wz[:, 0]).astype(np.int32)
    residual = ((ex ^ cx) | ((ez ^ cz) << 1)).astype(np.uint8)
    return aborted, residual, margins
