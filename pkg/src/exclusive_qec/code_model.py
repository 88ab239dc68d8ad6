"""Rotated surface code layouts, Pauli errors, syndromes and noise sampling.

Two layouts are provided:

* :class:`Code` -- the rotated planar code with boundaries (code capacity).
* :class:`SpacetimeCode` -- the rotated toric code repeated over ``t = d``
  rounds of noisy syndrome measurement with periodic time.

Lattice convention (planar code)
--------------------------------
Data qubit ``(r, c)`` has index ``r * d + c`` with ``r`` the row (top = 0).
Plaquette ``(i, j)`` with ``-1 <= i, j <= d - 1`` touches qubits
``(i, j), (i, j+1), (i+1, j), (i+1, j+1)`` that lie on the lattice.  A plaquette
is X-type when ``i + j`` is even and Z-type otherwise.  Weight-two X plaquettes
sit on the top and bottom edges, weight-two Z plaquettes on the left and right
edges.  Consequently

* X errors (seen by Z plaquettes) terminate on the top/bottom boundaries and
  the logical X representative is a column of X;
* Z errors (seen by X plaquettes) terminate on the left/right boundaries and
  the logical Z representative is a row of Z.

Paulis are stored as a pair of bit vectors ``(x, z)``; ``Y`` sets both bits.
Batches are ``(shots, n)`` ``uint8`` arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParameter, PreconditionViolation

__all__ = [
    "Code",
    "SpacetimeCode",
    "NoiseParams",
    "PauliError",
    "SpacetimeError",
    "Syndrome",
    "Species",
    "SECTOR_NAMES",
    "build_code",
    "build_spacetime",
    "syndrome",
    "logical_sector",
    "ft_sector",
    "sample_error",
    "sample_errors",
    "sample_spacetime_errors",
    "shot_block_rng",
]

SECTOR_NAMES = ("I", "X", "Z", "Y")
_PAULI_CHARS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}


def _as_bits(v, n: int, what: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.uint8)
    if arr.shape[-1] != n:
        raise InvalidParameter(f"{what} has length {arr.shape[-1]}, expected {n}")
    return arr & 1


@dataclass(frozen=True)
class PauliError:
    """A Pauli operator on ``n`` qubits in (x, z) bit form."""

    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.uint8) & 1
        z = np.asarray(self.z, dtype=np.uint8) & 1
        if x.shape != z.shape or x.ndim != 1:
            raise InvalidParameter("x and z parts must be 1-d arrays of equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @classmethod
    def identity(cls, n: int) -> "PauliError":
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8))

    @classmethod
    def from_string(cls, s: str) -> "PauliError":
        try:
            bits = [_PAULI_CHARS[ch] for ch in s.upper()]
        except KeyError as ex:
            raise InvalidParameter(f"bad Pauli character in {s!r}") from ex
        return cls(np.array([b[0] for b in bits]), np.array([b[1] for b in bits]))

    @classmethod
    def on(cls, n: int, qubits: Iterable[int], pauli: str) -> "PauliError":
        """Apply the same single-qubit ``pauli`` on every listed qubit."""
        xb, zb = _PAULI_CHARS[pauli.upper()]
        x = np.zeros(n, np.uint8)
        z = np.zeros(n, np.uint8)
        q = list(qubits)
        x[q] = xb
        z[q] = zb
        return cls(x, z)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def weight(self) -> int:
        # A Y counts once.
        return int(np.count_nonzero(self.x | self.z))

    def __mul__(self, other: "PauliError") -> "PauliError":
        return PauliError(self.x ^ other.x, self.z ^ other.z)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliError):
            return NotImplemented
        return bool(np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z))

    def __hash__(self):
        return hash((self.x.tobytes(), self.z.tobytes()))

    def __str__(self) -> str:
        chars = "IXZY"
        return "".join(chars[a | (b << 1)] for a, b in zip(self.x, self.z))


@dataclass(frozen=True)
class Syndrome:
    """Violated stabilizers: ``x`` bits for X-type checks, ``z`` bits for Z-type."""

    x: np.ndarray
    z: np.ndarray

    @property
    def trivial(self) -> bool:
        return not (self.x.any() or self.z.any())

    def x_defects(self) -> np.ndarray:
        return np.flatnonzero(self.x)

    def z_defects(self) -> np.ndarray:
        return np.flatnonzero(self.z)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Syndrome):
            return NotImplemented
        return bool(np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z))

    def __hash__(self):
        return hash((self.x.tobytes(), self.z.tobytes()))


@dataclass(frozen=True)
class Species:
    """One CSS half of the decoding problem.

    ``checks`` is the parity-check matrix of the stabilizers that detect this
    error species, ``error_part`` names which Pauli bit ("x" or "z") those
    errors live in.  Qubits touching a single check are boundary edges and
    ``boundary_side[q]`` says which boundary (0 = "a", 1 = "b") they end on,
    or -1 for bulk qubits.  The logical class bit of an error of this species
    is the parity of its overlap with ``class_support``, which is exactly
    the set of boundary-"b" qubits.
    """

    name: str
    error_part: str
    checks: np.ndarray
    boundary_side: np.ndarray
    class_support: np.ndarray
    logical_chain: np.ndarray

    @property
    def num_checks(self) -> int:
        return self.checks.shape[0]


@dataclass(frozen=True, eq=False)
class Code:
    """Rotated planar surface code of distance ``d``."""

    d: int
    hx: np.ndarray
    hz: np.ndarray
    x_plaquettes: tuple
    z_plaquettes: tuple
    logical_x: np.ndarray
    logical_z: np.ndarray
    coords: tuple
    boundaries: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.d * self.d

    @property
    def x_species(self) -> Species:
        return self._species[0]

    @property
    def z_species(self) -> Species:
        return self._species[1]

    @property
    def species(self) -> tuple:
        return self._species

    def stabilizer_generators(self) -> list:
        """All stabilizer generators as :class:`PauliError` objects."""
        zero = np.zeros(self.n, np.uint8)
        gens = [PauliError(row, zero) for row in self.hx]
        gens += [PauliError(zero, row) for row in self.hz]
        return gens


def build_code(d: int) -> Code:
    """Build the distance-``d`` rotated planar code (``d >= 2``)."""
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise InvalidParameter(f"distance must be an integer >= 2, got {d!r}")
    d = int(d)
    n = d * d
    xs, zs = [], []
    for i in range(-1, d):
        for j in range(-1, d):
            is_x = (i + j) % 2 == 0
            bulk = 0 <= i <= d - 2 and 0 <= j <= d - 2
            top_bottom = i in (-1, d - 1) and 0 <= j <= d - 2
            left_right = j in (-1, d - 1) and 0 <= i <= d - 2
            if not (bulk or (top_bottom and is_x) or (left_right and not is_x)):
                continue
            qubits = [
                (i + a) * d + (j + b)
                for a in (0, 1)
                for b in (0, 1)
                if 0 <= i + a < d and 0 <= j + b < d
            ]
            (xs if is_x else zs).append(((i, j), tuple(qubits)))

    def matrix(plaqs):
        h = np.zeros((len(plaqs), n), np.uint8)
        for k, (_, qs) in enumerate(plaqs):
            h[k, list(qs)] = 1
        return h

    hx, hz = matrix(xs), matrix(zs)
    logical_x = np.zeros(n, np.uint8)
    logical_x[[r * d for r in range(d)]] = 1  # column 0
    logical_z = np.zeros(n, np.uint8)
    logical_z[list(range(d))] = 1  # row 0
    coords = tuple((q // d, q % d) for q in range(n))

    rows = np.array([q // d for q in range(n)])
    cols = np.array([q % d for q in range(n)])
    # X species: seen by Z checks, boundaries top (a) / bottom (b).
    side_x = np.full(n, -1, np.int8)
    one_check = hz.sum(axis=0) == 1
    side_x[one_check & (rows == 0)] = 0
    side_x[one_check & (rows == d - 1)] = 1
    # Z species: seen by X checks, boundaries left (a) / right (b).
    side_z = np.full(n, -1, np.int8)
    one_check = hx.sum(axis=0) == 1
    side_z[one_check & (cols == 0)] = 0
    side_z[one_check & (cols == d - 1)] = 1

    x_species = Species(
        name="X",
        error_part="x",
        checks=hz,
        boundary_side=side_x,
        class_support=(rows == d - 1).astype(np.uint8),
        logical_chain=logical_x.copy(),
    )
    z_species = Species(
        name="Z",
        error_part="z",
        checks=hx,
        boundary_side=side_z,
        class_support=(cols == d - 1).astype(np.uint8),
        logical_chain=logical_z.copy(),
    )
    code = Code(
        d=d,
        hx=hx,
        hz=hz,
        x_plaquettes=tuple(p for p, _ in xs),
        z_plaquettes=tuple(p for p, _ in zs),
        logical_x=logical_x,
        logical_z=logical_z,
        coords=coords,
        boundaries={"X": ("top", "bottom"), "Z": ("left", "right")},
    )
    object.__setattr__(code, "_species", (x_species, z_species))
    return code


def syndrome(code: Code, error: PauliError) -> Syndrome:
    """Syndrome of a single error: X checks see the z part and vice versa."""
    x = _as_bits(error.x, code.n, "error x part")
    z = _as_bits(error.z, code.n, "error z part")
    return Syndrome(
        x=(code.hx.astype(np.int64) @ z % 2).astype(np.uint8),
        z=(code.hz.astype(np.int64) @ x % 2).astype(np.uint8),
    )


def batch_syndromes(code: Code, x: np.ndarray, z: np.ndarray):
    """Vectorised syndromes: returns ``(sx, sz)`` each ``(shots, checks)``."""
    sx = (z.astype(np.int32) @ code.hx.T.astype(np.int32)) & 1
    sz = (x.astype(np.int32) @ code.hz.T.astype(np.int32)) & 1
    return sx.astype(np.uint8), sz.astype(np.uint8)


def sector_bits(code: Code, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Logical class index ``xbit | zbit << 1`` for (batches of) operators.

    Only meaningful when the syndrome is trivial; for corrections it gives the
    class relative to the fixed reference boundaries.
    """
    xs, zs = code.species
    xbit = (np.asarray(x, np.int32) @ xs.class_support.astype(np.int32)) & 1
    zbit = (np.asarray(z, np.int32) @ zs.class_support.astype(np.int32)) & 1
    return (xbit | (zbit << 1)).astype(np.uint8)


def logical_sector(code: Code, residual: PauliError) -> str:
    """Logical class (``"I"``, ``"X"``, ``"Z"`` or ``"Y"``) of a trivially-syndromed operator."""
    if not syndrome(code, residual).trivial:
        raise PreconditionViolation("residual has a nontrivial syndrome")
    return SECTOR_NAMES[int(sector_bits(code, residual.x, residual.z))]


@dataclass(frozen=True)
class NoiseParams:
    """Depolarizing strength ``p`` and measurement flip probability ``p_m``."""

    p: float
    p_m: float = 0.0

    def __post_init__(self):
        for name in ("p", "p_m"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidParameter(f"{name}={v} outside [0, 1]")

    @classmethod
    def fault_tolerant(cls, p: float) -> "NoiseParams":
        return cls(p=p, p_m=2.0 * p / 3.0)


def shot_block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-style stream for a fixed block of shots.

    Shots are processed in fixed-size blocks; block ``b`` always draws from
    ``Philox`` keyed by ``(seed, b)`` so results do not depend on how blocks
    are scheduled across workers.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(block,))
    return np.random.Generator(np.random.Philox(ss))


def sample_errors(n: int, p: float, shots: int, rng: np.random.Generator):
    """I.i.d. depolarizing errors: X, Y, Z each with probability ``p/3``."""
    hit = rng.random((shots, n)) < p
    kind = rng.integers(1, 4, size=(shots, n), dtype=np.uint8)
    kind *= hit
    return (kind & 1).astype(np.uint8), (kind >> 1).astype(np.uint8)


def sample_error(code, params: NoiseParams, rng: np.random.Generator):
    """Draw a single error for ``code`` (a :class:`Code` or :class:`SpacetimeCode`)."""
    if isinstance(code, SpacetimeCode):
        x, z, mx, mz = sample_spacetime_errors(code, params, 1, rng)
        return SpacetimeError(x[0], z[0], mx[0], mz[0])
    x, z = sample_errors(code.n, params.p, 1, rng)
    return PauliError(x[0], z[0])


# --------------------------------------------------------------------------
# Spacetime (phenomenological) model
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SpacetimeError:
    """Data errors per round plus measurement faults per round.

    ``x``/``z`` are ``(t, n)``; ``mx``/``mz`` are ``(t, m)`` measurement flips
    on X-type and Z-type checks.
    """

    x: np.ndarray
    z: np.ndarray
    mx: np.ndarray
    mz: np.ndarray

    @property
    def weight(self) -> int:
        data = int(np.count_nonzero(self.x | self.z))
        return data + int(np.count_nonzero(self.mx)) + int(np.count_nonzero(self.mz))


@dataclass(frozen=True, eq=False)
class SpacetimeCode:
    """Rotated toric code with ``t`` rounds of measurement and periodic time.

    Logical operators (two encoded qubits)::

        qubit 1:  X1 = X on a row,     Z1 = Z on a column
        qubit 2:  X2 = X on a column,  Z2 = Z on a row
    """

    d: int
    t: int
    hx: np.ndarray
    hz: np.ndarray

    @property
    def n(self) -> int:
        return self.d * self.d

    @property
    def data_sites(self) -> int:
        return self.n * self.t

    @property
    def measurement_sites(self) -> tuple:
        return self.hx.shape[0] * self.t, self.hz.shape[0] * self.t

    def detection_events(self, x, z, mx, mz):
        """Detection events for (batches of) spacetime errors.

        Event ``(s, r)`` is the change in the measured value of check ``s``
        between rounds ``r - 1`` and ``r`` (indices mod ``t``); a data error in
        round ``r`` is seen from round ``r`` on and a measurement flip at round
        ``r`` is seen at rounds ``r`` and ``r + 1``.  Returns ``(ex, ez)`` where
        ``ex`` are events on X checks (seeing Z errors).
        """
        z = np.asarray(z, np.int32)
        x = np.asarray(x, np.int32)
        ex = (z @ self.hx.T.astype(np.int32)) ^ mx ^ np.roll(mx, 1, axis=-2)
        ez = (x @ self.hz.T.astype(np.int32)) ^ mz ^ np.roll(mz, 1, axis=-2)
        return (ex & 1).astype(np.uint8), (ez & 1).astype(np.uint8)

    def logical_bits(self, x, z, mx, mz) -> np.ndarray:
        """Label bits ``(X1, X2, Z1, Z2, wrapZ, wrapX)`` for accepted errors."""
        d = self.d
        cx = np.bitwise_xor.reduce(np.asarray(x, np.uint8), axis=-2).reshape(*np.shape(x)[:-2], d, d)
        cz = np.bitwise_xor.reduce(np.asarray(z, np.uint8), axis=-2).reshape(*np.shape(z)[:-2], d, d)
        # X on a row anticommutes with Z on a column: overlap with column 0.
        x1 = np.bitwise_xor.reduce(cx[..., :, 0], axis=-1)
        x2 = np.bitwise_xor.reduce(cx[..., 0, :], axis=-1)
        z1 = np.bitwise_xor.reduce(cz[..., 0, :], axis=-1)
        z2 = np.bitwise_xor.reduce(cz[..., :, 0], axis=-1)
        wrap_z = np.bitwise_xor.reduce(np.asarray(mz, np.uint8)[..., 0, :], axis=-1)
        wrap_x = np.bitwise_xor.reduce(np.asarray(mx, np.uint8)[..., 0, :], axis=-1)
        return np.stack([x1, x2, z1, z2, wrap_z, wrap_x], axis=-1).astype(np.uint8)


def build_spacetime(d: int, t: int | None = None) -> SpacetimeCode:
    """Rotated toric code on a ``d x d`` torus, ``t`` (default ``d``) rounds.

    The checkerboard colouring only closes consistently on the torus for
    even ``d``.
    """
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise InvalidParameter(f"distance must be an integer >= 2, got {d!r}")
    if d % 2:
        raise InvalidParameter("the rotated toric layout requires even d")
    d = int(d)
    t = d if t is None else int(t)
    if t < 1:
        raise InvalidParameter("need at least one round")
    n = d * d
    hx, hz = [], []
    for i in range(d):
        for j in range(d):
            row = np.zeros(n, np.uint8)
            for a in (0, 1):
                for b in (0, 1):
                    row[((i + a) % d) * d + (j + b) % d] = 1
            (hx if (i + j) % 2 == 0 else hz).append(row)
    return SpacetimeCode(d=d, t=t, hx=np.array(hx), hz=np.array(hz))


def sample_spacetime_errors(model: SpacetimeCode, params: NoiseParams, shots: int, rng):
    """Phenomenological noise: depolarizing data errors each round plus
    measurement flips with probability ``p_m`` on every check each round."""
    x, z = sample_errors(model.n * model.t, params.p, shots, rng)
    x = x.reshape(shots, model.t, model.n)
    z = z.reshape(shots, model.t, model.n)
    mx = (rng.random((shots, model.t, model.hx.shape[0])) < params.p_m).astype(np.uint8)
    mz = (rng.random((shots, model.t, model.hz.shape[0])) < params.p_m).astype(np.uint8)
    return x, z, mx, mz


def _ft_label(bits: Sequence[int]) -> str:
    x1, x2, z1, z2, wz, wx = (int(b) for b in bits)
    chars = "IXZY"
    return f"{chars[x1 | z1 << 1]}{chars[x2 | z2 << 1]}{wz}{wx}"


def ft_sector(model: SpacetimeCode, fault: SpacetimeError) -> str:
    """Sector label such as ``"II00"``, ``"XI00"`` or ``"II10"``.

    The first two characters are the logical Pauli on each encoded qubit of
    the accumulated data error; the digits are the parities of Z-type and
    X-type measurement faults crossing a fixed time slice.
    """
    ex, ez = model.detection_events(fault.x, fault.z, fault.mx, fault.mz)
    if ex.any() or ez.any():
        raise PreconditionViolation("fault has nontrivial detection events")
    return _ft_label(model.logical_bits(fault.x, fault.z, fault.mx, fault.mz))
