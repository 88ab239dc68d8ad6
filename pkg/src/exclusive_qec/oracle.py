"""Exhaustive enumeration for small codes.

Counts are kept as exact integers indexed by error weight, so every
probability can be evaluated at any ``p`` without enumerating again: an error
of weight ``w`` on ``n`` qubits has probability ``(p/3)^w (1-p)^(n-w)``.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .code_model import SECTOR_NAMES, _ft_label, build_code, build_spacetime
from .decoders import ExclusiveDecoder
from .errors import InvalidParameter
from .matching import tolerance_fraction

log = logging.getLogger(__name__)

__all__ = [
    "ExactSectorTable",
    "enumerate_code_capacity",
    "enumerate_low_weight",
    "enumerate_low_weight_ft",
    "FTCounts",
    "MAX_EXHAUSTIVE_D",
]

MAX_EXHAUSTIVE_D = 3
ACCEPT, ABORT = 0, 1


@dataclass
class ExactSectorTable:
    """``counts[sector, outcome, w]``: number of weight-``w`` errors whose
    decoder outcome is ``outcome`` (0 accept, 1 abort) and whose residual
    class is ``sector``.

    ``complete_to`` is the largest weight that was fully enumerated; for
    exhaustive tables it equals ``n``.
    """

    d: int
    n: int
    decoder: str
    c: str
    counts: np.ndarray
    complete_to: int = -1

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=object)
        if self.complete_to < 0:
            self.complete_to = self.n

    @property
    def exhaustive(self) -> bool:
        return self.complete_to >= self.n

    def check_totals(self) -> bool:
        """Counts at each enumerated weight add to ``C(n, w) 3^w``."""
        tot = self.counts.sum(axis=(0, 1))
        return all(int(tot[w]) == math.comb(self.n, w) * 3**w for w in range(self.complete_to + 1))

    def _weight_probs(self, p: float) -> np.ndarray:
        w = np.arange(self.n + 1)
        return (p / 3.0) ** w * (1.0 - p) ** (self.n - w)

    def probabilities(self, p: float) -> np.ndarray:
        """``(4, 2)`` array of ``P(sector, outcome)`` (truncated tables give
        lower bounds)."""
        if not 0.0 <= p <= 1.0:
            raise InvalidParameter(f"p must lie in [0, 1], got {p}")
        pw = self._weight_probs(p)
        return (self.counts.astype(np.float64) * pw).sum(axis=-1)

    def g(self, p: float) -> float:
        return float(self.probabilities(p)[:, ABORT].sum())

    def h(self, p: float) -> float:
        return float(self.probabilities(p)[:, ACCEPT].sum())

    def f(self, p: float) -> float:
        P = self.probabilities(p)
        acc = P[:, ACCEPT].sum()
        return float(P[1:, ACCEPT].sum() / acc) if acc > 0 else float("nan")

    def failure(self, p: float) -> float:
        """Joint probability of accepting with a nontrivial residual."""
        return float(self.probabilities(p)[1:, ACCEPT].sum())

    def sector_probability(self, p: float, sector, outcome: int = ACCEPT) -> float:
        s = SECTOR_NAMES.index(sector) if isinstance(sector, str) else int(sector)
        return float(self.probabilities(p)[s, outcome])

    def weight_distribution(self, p: float, sector=None, outcome: int = ACCEPT) -> np.ndarray:
        """Exact conditional law of the error weight given (sector, outcome)."""
        c = self.counts[:, outcome].sum(axis=0) if sector is None else self.counts[
            SECTOR_NAMES.index(sector) if isinstance(sector, str) else int(sector), outcome
        ]
        pr = c.astype(np.float64) * self._weight_probs(p)
        return pr / pr.sum()

    def minimal_weight(self, event: str) -> int | None:
        """Smallest weight of a failing (``"fail"``) or aborting (``"abort"``)
        error within the enumerated range; ``None`` if there is none."""
        if event == "fail":
            per_w = self.counts[1:, ACCEPT].sum(axis=0)
        elif event == "abort":
            per_w = self.counts[:, ABORT].sum(axis=0)
        else:
            raise InvalidParameter(f"unknown event {event!r}")
        for w in range(self.complete_to + 1):
            if per_w[w] > 0:
                return w
        return None

    def to_json(self) -> str:
        return json.dumps(
            {
                "d": self.d,
                "n": self.n,
                "decoder": self.decoder,
                "c": self.c,
                "complete_to": self.complete_to,
                "sectors": list(SECTOR_NAMES),
                "outcomes": ["accept", "abort"],
                "counts": [[[int(v) for v in row] for row in sec] for sec in self.counts],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ExactSectorTable":
        obj = json.loads(text)
        counts = np.array([[[int(v) for v in row] for row in sec] for sec in obj["counts"]], dtype=object)
        return cls(d=obj["d"], n=obj["n"], decoder=obj["decoder"], c=obj["c"], counts=counts, complete_to=obj["complete_to"])


def _pauli_digits(n: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    return (idx[:, None] // (4 ** np.arange(n, dtype=np.int64))) % 4


def _accumulate(counts, dec, digits):
    x = (digits & 1).astype(np.uint8)
    z = (digits >> 1).astype(np.uint8)
    w = (digits > 0).sum(axis=1)
    aborted, residual, _ = dec.decode_batch(x, z)
    key = (residual.astype(np.int64) * 2 + aborted.astype(np.int64)) * (counts.shape[-1]) + w
    binc = np.bincount(key, minlength=counts.size)
    counts += binc.reshape(counts.shape)


def enumerate_code_capacity(d: int, decoder: str = "mwpm", c=1.0, chunk: int = 1 << 16) -> ExactSectorTable:
    """All ``4^(d^2)`` Pauli errors of the distance-``d`` code (``d <= 3``)."""
    if d > MAX_EXHAUSTIVE_D:
        raise InvalidParameter(f"exhaustive enumeration needs 4^{d * d} decodes; refusing d={d} > {MAX_EXHAUSTIVE_D}")
    code = build_code(d)
    dec = ExclusiveDecoder(code, decoder, c)
    n = code.n
    counts = np.zeros((4, 2, n + 1), np.int64)
    total = 4**n
    for start in range(0, total, chunk):
        _accumulate(counts, dec, _pauli_digits(n, start, min(total, start + chunk)))
    return ExactSectorTable(d=d, n=n, decoder=decoder, c=str(tolerance_fraction(c)), counts=counts.astype(object))


def enumerate_low_weight(d: int, decoder: str = "mwpm", c=1.0, max_weight: int = 3, chunk: int = 1 << 18) -> ExactSectorTable:
    """Every error of weight at most ``max_weight``; counts above are zero."""
    code = build_code(d)
    n = code.n
    if max_weight > n:
        max_weight = n
    size = sum(math.comb(n, w) * 3**w for w in range(max_weight + 1))
    if size > 5 * 10**8:
        raise InvalidParameter(f"low-weight sweep would decode {size:.3g} errors; refusing")
    dec = ExclusiveDecoder(code, decoder, c)
    counts = np.zeros((4, 2, n + 1), np.int64)
    for w in range(max_weight + 1):
        combos = list(itertools.product((1, 2, 3), repeat=w))
        paulis = np.array(combos, np.int64).reshape(len(combos), w)
        supports = itertools.combinations(range(n), w)
        per = max(1, chunk // len(paulis))
        while True:
            batch = list(itertools.islice(supports, per))
            sup = np.array(batch, np.int64).reshape(len(batch), w)
            if len(sup) == 0:
                break
            digits = np.zeros((len(sup) * len(paulis), n), np.int64)
            rows = np.repeat(np.arange(len(sup)), len(paulis))
            for k in range(w):
                digits[np.arange(len(rows)), sup[rows, k]] = np.tile(paulis[:, k], len(sup))
            _accumulate(counts, dec, digits)
    return ExactSectorTable(
        d=d, n=n, decoder=decoder, c=str(tolerance_fraction(c)), counts=counts.astype(object), complete_to=max_weight
    )


# --------------------------------------------------------------------------
# Fault-tolerant (phenomenological) low-weight enumeration
# --------------------------------------------------------------------------


@dataclass
class FTCounts:
    """Zero-tolerance accepted faults of low weight, by sector label.

    ``by_weight[w][label]`` counts configurations with trivial detection
    events; label ``"II00"`` is the trivial class, all others are failures.
    """

    d: int
    t: int
    max_weight: int
    by_weight: dict = field(default_factory=dict)
    coefficients: dict = field(default_factory=dict)

    def leading_coefficient(self, weight: int | None = None) -> Fraction:
        """Exact ``A`` in ``f ~ A p^w`` from failing configurations of weight
        ``w``, with data faults at ``p/3`` and measurement faults at ``2p/3``."""
        w = self.minimal_failure_weight() if weight is None else weight
        slot = self.coefficients.get(w, {})
        return sum((v for k, v in slot.items() if k != "II00"), Fraction(0))

    def failing(self, weight: int | None = None) -> dict:
        w = self.max_weight if weight is None else weight
        return {k: v for k, v in sorted(self.by_weight.get(w, {}).items()) if k != "II00"}

    def minimal_failure_weight(self) -> int | None:
        for w in sorted(self.by_weight):
            if self.failing(w):
                return w
        return None


def _species_edges(st, kind: str):
    """Edges ``(u, v)`` of one species' detector graph and their site tags.

    For ``kind="x"`` (X data errors) vertices are (Z check, round); each
    round's data qubit joins its two Z checks and each Z-check measurement
    fault joins consecutive rounds of that check.
    """
    h = st.hz if kind == "x" else st.hx
    m, n, t = h.shape[0], st.n, st.t
    edges, tags = [], []
    for r in range(t):
        for q in range(n):
            cs = np.flatnonzero(h[:, q])
            if len(cs) != 2:
                raise InvalidParameter("every qubit must touch exactly two checks of each type")
            edges.append((r * m + cs[0], r * m + cs[1]))
            tags.append(("data", r, q))
    for r in range(t):
        for s in range(m):
            edges.append((r * m + s, ((r + 1) % t) * m + s))
            tags.append(("meas", r, s))
    return edges, tags


def _eulerian_subsets(edges, max_size: int, budget: int):
    """All nonempty edge sets with every vertex of even degree and at most
    ``max_size`` edges."""
    incident: dict = {}
    for i, (u, v) in enumerate(edges):
        incident.setdefault(u, []).append(i)
        incident.setdefault(v, []).append(i)
    seen = set()
    found = []
    stack = [(frozenset([e]), frozenset({edges[e][0]}) ^ frozenset({edges[e][1]})) for e in range(len(edges))]
    while stack:
        cur, odd = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        if len(seen) > budget:
            raise InvalidParameter(f"low-weight enumeration exceeded {budget} states")
        if not odd:
            found.append(cur)
            if len(cur) < max_size:
                for e in range(len(edges)):
                    if e not in cur:
                        u, v = edges[e]
                        stack.append((cur | {e}, frozenset({u}) ^ frozenset({v})))
            continue
        if len(cur) + len(odd) // 2 > max_size:
            continue
        v0 = min(odd)
        for e in incident[v0]:
            if e in cur:
                continue
            a, b = edges[e]
            stack.append((cur | {e}, odd ^ {a} ^ {b}))
    return found


def enumerate_low_weight_ft(d: int, t: int | None = None, max_weight: int | None = None, budget: int = 2 * 10**6) -> FTCounts:
    """Accepted spacetime faults of weight at most ``max_weight`` (default
    ``d``) for the zero-tolerance decoder on the rotated toric code.

    At zero tolerance a fault is accepted exactly when it has no detection
    events, so each species' part is an even-degree edge set of its detector
    graph.  The enumeration builds those sets for each species and combines
    them, counting a data site with both an X and a Z flip once.
    """
    st = build_spacetime(d, t)
    max_weight = d if max_weight is None else int(max_weight)
    if max_weight < 1:
        raise InvalidParameter("max_weight must be positive")
    sites = st.data_sites + sum(st.measurement_sites)
    est = math.comb(sites, max_weight) * 3**max_weight
    log.info("FT enumeration d=%d t=%d w<=%d over %d sites (naive size %.3g)", d, st.t, max_weight, sites, est)
    parts = {}
    for kind in ("x", "z"):
        edges, tags = _species_edges(st, kind)
        subsets = _eulerian_subsets(edges, max_weight, budget)
        recs = [(frozenset(), frozenset(), 0, np.zeros(6, np.uint8))]
        for sub in subsets:
            data = frozenset(tags[e][1:] for e in sub if tags[e][0] == "data")
            meas = [tags[e][1:] for e in sub if tags[e][0] == "meas"]
            arr = np.zeros((st.t, st.n), np.uint8)
            for r, q in data:
                arr[r, q] = 1
            marr = np.zeros((st.t, st.hz.shape[0] if kind == "x" else st.hx.shape[0]), np.uint8)
            for r, s in meas:
                marr[r, s] = 1
            zero_d = np.zeros_like(arr)
            zero_m = np.zeros_like(marr)
            if kind == "x":
                bits = st.logical_bits(arr, zero_d, zero_m, marr)
            else:
                bits = st.logical_bits(zero_d, arr, marr, zero_m)
            recs.append((sub, data, len(sub), bits))
        parts[kind] = recs
    by_weight: dict = {}
    coefficients: dict = {}
    third, two_thirds = Fraction(1, 3), Fraction(2, 3)
    for _, dx, nx, bx in parts["x"]:
        for _, dz, nz, bz in parts["z"]:
            if nx + nz == 0:
                continue
            w = nx + nz - len(dx & dz)
            if w > max_weight:
                continue
            label = _ft_label(bx ^ bz)
            slot = by_weight.setdefault(w, {})
            slot[label] = slot.get(label, 0) + 1
            n_meas = nx - len(dx) + nz - len(dz)
            term = third ** (w - n_meas) * two_thirds**n_meas
            cslot = coefficients.setdefault(w, {})
            cslot[label] = cslot.get(label, Fraction(0)) + term
    return FTCounts(d=d, t=st.t, max_weight=max_weight, by_weight=by_weight, coefficients=coefficients)
