"""Exclusive union-find decoder.

Per species the decoding graph has one vertex per check plus one virtual
vertex per boundary qubit; every qubit is an edge.  Decoding runs in three
steps:

1. *Syndrome validation.*  Clusters start as the connected pieces of the
   erasure plus singleton defects.  The smallest invalid clusters (odd
   defect count, no boundary vertex) grow by half an edge in every
   direction until no invalid cluster remains.  Fully grown edges form the
   final erasure.
2. *Survived distance.*  The least number of non-erased qubits on a chain
   joining the two boundaries, found by 0-1 BFS.  The decoder aborts when
   ``1 - d_surv / d > c`` for either species.
3. *Peeling.*  A spanning forest of each final cluster, rooted at a boundary
   vertex when one is present, is peeled from the leaves to produce a
   correction supported inside the final erasure.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .code_model import Code, PauliError, Syndrome, SECTOR_NAMES, batch_syndromes
from .errors import InvalidParameter
from .matching import DecodeOutcome, DecoderConfig, abort_mask, tolerance_fraction

__all__ = [
    "UFGraph",
    "ErasurePauliError",
    "uf_graphs",
    "syndrome_validation",
    "survived_distance",
    "peel",
    "decode_uf_exclusive",
    "batch_decode_uf",
]


@dataclass(frozen=True, eq=False)
class UFGraph:
    """Decoding graph of one species.

    ``ends[q]`` are the two vertices joined by qubit ``q``; vertices
    ``>= num_checks`` are virtual boundary vertices and ``side[v]`` gives their
    boundary (0 = a, 1 = b, -1 for checks).
    """

    num_checks: int
    num_vertices: int
    ends: np.ndarray
    side: np.ndarray
    incident: tuple
    d: int


@dataclass(frozen=True)
class ErasurePauliError:
    """Erased qubit set plus a Pauli part that may overlap it."""

    erasure: frozenset
    pauli: PauliError

    @property
    def s(self) -> int:
        return self.pauli.weight

    @property
    def t_e(self) -> int:
        return len(self.erasure)


def _build_uf_graph(code: Code, species) -> UFGraph:
    h = species.checks
    m, n = h.shape
    ends = np.zeros((n, 2), np.int64)
    sides = [-1] * m
    nv = m
    for q in range(n):
        cs = np.flatnonzero(h[:, q])
        if len(cs) == 2:
            ends[q] = cs
        else:
            ends[q] = (cs[0], nv)
            sides.append(int(species.boundary_side[q]))
            nv += 1
    incident = [[] for _ in range(nv)]
    for q in range(n):
        incident[ends[q, 0]].append(q)
        incident[ends[q, 1]].append(q)
    return UFGraph(
        num_checks=m,
        num_vertices=nv,
        ends=ends,
        side=np.array(sides, np.int64),
        incident=tuple(tuple(x) for x in incident),
        d=code.d,
    )


@lru_cache(maxsize=64)
def uf_graphs(code: Code) -> tuple:
    """``(x_graph, z_graph)`` union-find graphs for ``code``."""
    return tuple(_build_uf_graph(code, s) for s in code.species)


def _resolve(code: Code, defects, species):
    """Return ``(species_index, defect array)`` for a Syndrome or index list."""
    if isinstance(defects, Syndrome):
        xs, zs = defects.x_defects(), defects.z_defects()
        if species is None:
            if len(xs) and len(zs):
                raise InvalidParameter("defects of both species given; decode each separately")
            species = "Z" if len(xs) else "X"
        idx = 0 if species in ("X", 0) else 1
        return idx, (zs if idx == 0 else xs)
    if species is None:
        raise InvalidParameter("species must be given with a bare defect list")
    idx = 0 if species in ("X", 0) else 1
    return idx, np.asarray(list(defects), np.int64)


class _Clusters:
    def __init__(self, g: UFGraph, defects):
        nv = g.num_vertices
        self.g = g
        self.parent = list(range(nv))
        self.size = [1] * nv
        self.parity = [0] * nv
        self.boundary = [v >= g.num_checks for v in range(nv)]
        for v in defects:
            self.parity[v] ^= 1

    def find(self, v):
        root = v
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[v] != root:
            self.parent[v], v = root, self.parent[v]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.parity[ra] ^= self.parity[rb]
        self.boundary[ra] = self.boundary[ra] or self.boundary[rb]
        return ra

    def invalid(self, r) -> bool:
        return self.parity[r] == 1 and not self.boundary[r]


def _validate(g: UFGraph, erasure, defects) -> np.ndarray:
    support = np.zeros(len(g.ends), np.int64)
    cl = _Clusters(g, defects)
    for q in erasure:
        support[q] = 2
        cl.union(*g.ends[q])
    # Vertices of each cluster, kept for growth.
    members: dict = {}
    active = set(defects) | {int(v) for q in erasure for v in g.ends[q]}
    for v in active:
        members.setdefault(cl.find(v), set()).add(v)
    while True:
        bad = [r for r in members if cl.find(r) == r and cl.invalid(r)]
        if not bad:
            break
        frontier = {}
        for r in bad:
            frontier[r] = {q for v in members[r] for q in g.incident[v] if support[q] < 2}
        # Size counts vertices plus half-grown edges; all smallest clusters
        # grow together so ties do not depend on iteration order.
        size = {r: len(members[r]) + sum(1 for q in frontier[r] if support[q] == 1) for r in bad}
        smallest = min(size.values())
        grown = []
        for r in bad:
            if size[r] != smallest:
                continue
            for q in frontier[r]:
                if support[q] < 2:
                    support[q] += 1
                    if support[q] == 2:
                        grown.append(q)
        for q in grown:
            u, v = g.ends[q]
            ru, rv = cl.find(u), cl.find(v)
            mu = members.pop(ru, {int(u)})
            mv = members.pop(rv, {int(v)}) if rv != ru else set()
            new = cl.union(u, v)
            members[new] = mu | mv | {int(u), int(v)}
    return np.flatnonzero(support == 2)


def syndrome_validation(code: Code, erasure, defects, species=None) -> frozenset:
    """Grow clusters until each has even parity or touches a boundary.

    Returns the final erasure as a frozenset of qubit indices (a superset of
    ``erasure``).
    """
    idx, dfs = _resolve(code, defects, species)
    g = uf_graphs(code)[idx]
    return frozenset(int(q) for q in _validate(g, sorted(set(erasure)), [int(v) for v in dfs]))


def _surv_one(g: UFGraph, erased: set) -> int:
    nv = g.num_vertices
    dist = [1 << 30] * nv
    dq = deque()
    for v in range(g.num_checks, nv):
        if g.side[v] == 0:
            dist[v] = 0
            dq.append(v)
    while dq:
        u = dq.popleft()
        for q in g.incident[u]:
            a, b = g.ends[q]
            w = int(b if a == u else a)
            cost = 0 if q in erased else 1
            if dist[u] + cost < dist[w]:
                dist[w] = dist[u] + cost
                if cost:
                    dq.append(w)
                else:
                    dq.appendleft(w)
    return min(dist[v] for v in range(g.num_checks, nv) if g.side[v] == 1)


def survived_distance(code: Code, final_erasure, species=None) -> int:
    """Least weight outside ``final_erasure`` of any logical operator.

    With ``species`` given only that species' logical chains are considered;
    otherwise the minimum over both is returned.
    """
    erased = {int(q) for q in final_erasure}
    graphs = uf_graphs(code)
    if species is None:
        return min(_surv_one(g, erased) for g in graphs)
    idx = 0 if species in ("X", 0) else 1
    return _surv_one(graphs[idx], erased)


def peel(g: UFGraph, final_erasure, defects) -> list:
    """Correction (list of qubits) inside ``final_erasure`` matching ``defects``."""
    erased = sorted({int(q) for q in final_erasure})
    adj: dict = {}
    for q in erased:
        u, v = (int(x) for x in g.ends[q])
        adj.setdefault(u, []).append((v, q))
        adj.setdefault(v, []).append((u, q))
    mark = {int(v): 1 for v in defects}
    seen = set()
    correction = []
    # Root every component at a boundary vertex if it has one.
    starts = sorted(adj, key=lambda v: (v < g.num_checks, v))
    for root in starts:
        if root in seen:
            continue
        order, parent_edge = [], {root: None}
        seen.add(root)
        queue = deque([root])
        while queue:
            u = queue.popleft()
            order.append(u)
            for v, q in adj[u]:
                if v not in seen:
                    seen.add(v)
                    parent_edge[v] = (u, q)
                    queue.append(v)
        for v in reversed(order[1:]):
            if mark.get(v, 0) and v < g.num_checks:
                u, q = parent_edge[v]
                correction.append(q)
                mark[v] = 0
                mark[u] = mark.get(u, 0) ^ 1
    return correction


def _decode_species(code: Code, idx: int, erasure, defects):
    g = uf_graphs(code)[idx]
    final = _validate(g, erasure, defects)
    dsurv = _surv_one(g, set(int(q) for q in final))
    corr = peel(g, final, defects)
    return final, dsurv, corr


def decode_uf_exclusive(code: Code, erasure, syn: Syndrome, config: DecoderConfig | float) -> DecodeOutcome:
    """Exclusive union-find decoding of erasure plus Pauli syndrome.

    ``erasure`` is an iterable of erased qubits (shared by both species).
    """
    if not isinstance(config, DecoderConfig):
        config = DecoderConfig(c=config)
    erasure = sorted({int(q) for q in erasure})
    parts = (syn.z, syn.x)
    margins, finals, bits = [], [], []
    sector = 0
    for idx in range(2):
        dfs = [int(v) for v in np.flatnonzero(parts[idx])]
        final, dsurv, corr = _decode_species(code, idx, erasure, dfs)
        margins.append(dsurv)
        finals.append(frozenset(int(q) for q in final))
        b = np.zeros(code.n, np.uint8)
        b[corr] ^= 1
        bits.append(b)
        sector |= int(b @ code.species[idx].class_support % 2) << idx
    extra = {"final_erasure": tuple(finals)}
    if abort_mask(code.d, np.array(margins), config.c, np.array(not syn.trivial))[()]:
        return DecodeOutcome(False, margins=tuple(margins), extra=extra)
    correction = PauliError(bits[0], bits[1])
    return DecodeOutcome(True, correction=correction, sector=SECTOR_NAMES[sector], margins=tuple(margins), extra=extra)


@lru_cache(maxsize=32)
def _uf_table(code: Code, idx: int):
    """``(d_surv, class bit)`` for every one-species syndrome (no erasure)."""
    g = uf_graphs(code)[idx]
    m = g.num_checks
    table = np.zeros((1 << m, 2), np.int64)
    cls = code.species[idx].class_support
    for key in range(1 << m):
        dfs = [v for v in range(m) if (key >> v) & 1]
        _, dsurv, corr = _decode_species(code, idx, [], dfs)
        table[key] = (dsurv, int(cls[corr].sum() % 2))
    return table


_UF_TABLE_MAX_CHECKS = 12


def batch_decode_uf(code: Code, x: np.ndarray, z: np.ndarray, c) -> tuple:
    """Decode a batch of code-capacity errors without erasure.

    Same return convention as :func:`exclusive_qec.matching.batch_decode_mwpm`.
    Results are tabulated per syndrome for small codes and memoised otherwise.
    """
    tolerance_fraction(c)
    sx, sz = batch_syndromes(code, x, z)
    cols = []
    for idx, syn in ((0, sz), (1, sx)):
        m = syn.shape[1]
        keys = syn.astype(np.int64) @ (1 << np.arange(m, dtype=np.int64))
        if m <= _UF_TABLE_MAX_CHECKS:
            cols.append(_uf_table(code, idx)[keys])
        else:
            memo: dict = {}
            res = np.empty((len(keys), 2), np.int64)
            for s, key in enumerate(keys):
                if key not in memo:
                    dfs = [int(v) for v in np.flatnonzero(syn[s])]
                    _, dsurv, corr = _decode_species(code, idx, [], dfs)
                    memo[key] = (dsurv, int(code.species[idx].class_support[corr].sum() % 2))
                res[s] = memo[key]
            cols.append(res)
    margins = np.stack([cols[0][:, 0], cols[1][:, 0]], axis=1)
    nontrivial = sx.any(axis=1) | sz.any(axis=1)
    aborted = abort_mask(code.d, margins, c, nontrivial)
    xs, zs = code.species
    ex = (x.astype(np.int32) @ xs.class_support.astype(np.int32)) & 1
    ez = (z.astype(np.int32) @ zs.class_support.astype(np.int32)) & 1
    residual = ((ex ^ cols[0][:, 1]) | ((ez ^ cols[1][:, 1]) << 1)).astype(np.uint8)
    return aborted, residual, margins
