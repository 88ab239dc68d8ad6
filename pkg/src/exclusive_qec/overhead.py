"""Resource-overhead calculators for exclusive decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .analysis import AnsatzParams, eval_ansatz
from .errors import InvalidParameter
from .matching import tolerance_fraction

__all__ = [
    "OverheadParams",
    "Repetitions",
    "repetitions",
    "repetitions_ax",
    "DepthBoost",
    "depth_boost",
    "footprint_ratio",
    "footprint_logR",
    "OverheadReport",
    "magic_state_case_study",
]


@dataclass(frozen=True)
class OverheadParams:
    """Circuit volume ``q``, baseline ``q0`` and target accuracy ``eps``.

    ``a = sqrt(eps) q / q0`` is the boost factor and ``x = q0 / sqrt(eps)``
    the rescaled baseline volume.
    """

    q: float
    q0: float
    eps: float

    def __post_init__(self):
        if self.q <= 0 or self.q0 <= 0 or not 0 < self.eps <= 1:
            raise InvalidParameter("need q, q0 > 0 and 0 < eps <= 1")

    @property
    def a(self) -> float:
        return math.sqrt(self.eps) * self.q / self.q0

    @property
    def x(self) -> float:
        return self.q0 / math.sqrt(self.eps)


@dataclass(frozen=True)
class Repetitions:
    """Expected number of attempts; ``undefined`` when ``p^(k~ d) >= 1``."""

    R: float
    log_R: float
    undefined: bool = False


def repetitions(p: float, c, d: int, q: float) -> Repetitions:
    """``R = (1 - p^(k~ d))^(-q)`` with ``k~ = c/2``."""
    if not 0 < p < 1:
        raise InvalidParameter(f"p must lie in (0, 1), got {p}")
    if q < 1:
        raise InvalidParameter("q must be at least 1")
    kt = float(tolerance_fraction(c)) / 2.0
    a = p ** (kt * d)
    if a >= 1.0:
        return Repetitions(R=math.inf, log_R=math.inf, undefined=True)
    log_r = -q * math.log1p(-a)
    return Repetitions(R=math.exp(log_r), log_R=log_r)


def repetitions_ax(a: float, x: float) -> tuple:
    """``R = (1 - a/x)^(-a x)`` and its approximation ``exp(a^2)``."""
    if a <= 0 or x <= a:
        raise InvalidParameter("need 0 < a < x")
    return math.exp(-a * x * math.log1p(-a / x)), math.exp(a * a)


@dataclass(frozen=True)
class DepthBoost:
    q: float
    cap: float
    clipped: bool


def depth_boost(R: float, eps: float, q0: float) -> DepthBoost:
    """``q = sqrt(log R / eps) q0``, clipped at ``q0^2 / eps``."""
    if R <= 1:
        raise InvalidParameter("R must exceed 1")
    if not 0 < eps <= 1 or q0 <= 0:
        raise InvalidParameter("need 0 < eps <= 1 and q0 > 0")
    q = math.sqrt(math.log(R) / eps) * q0
    cap = q0 * q0 / eps
    if q > cap:
        return DepthBoost(q=cap, cap=cap, clipped=True)
    return DepthBoost(q=q, cap=cap, clipped=False)


def footprint_ratio(k: float, convention: str = "printed") -> float:
    """``m / m0`` when moving to distance ``d0 / (2k)``.

    ``"printed"`` gives ``1 / (4k)^2``; ``"squared"`` gives ``1 / (4 k^2)``,
    which is what ``(d/d0)^2`` implies.
    """
    if not 0 < k <= 1:
        raise InvalidParameter("k must lie in (0, 1]")
    if convention == "printed":
        return 1.0 / (4.0 * k) ** 2
    if convention == "squared":
        return 1.0 / (4.0 * k * k)
    raise InvalidParameter(f"unknown convention {convention!r}")


def footprint_logR(eps: float, q: float, m_ratio: float) -> float:
    """``log R = eps^(2 sqrt(m/m0) - 1) q^(2 (1 - sqrt(m/m0)))``."""
    if not 0 < m_ratio <= 1:
        raise InvalidParameter("m_ratio must lie in (0, 1]")
    if eps <= 0 or q <= 0:
        raise InvalidParameter("eps and q must be positive")
    r = math.sqrt(m_ratio)
    return eps ** (2 * r - 1) * q ** (2 * (1 - r))


@dataclass
class OverheadReport:
    """Magic-state case study: accuracy, repetitions and footprint."""

    p: float
    d: int
    d0: int
    q: float
    f: float
    epsilon: float
    epsilon_T: float
    qubit_ratio: float
    R_reference: float
    spacetime_ratio: float
    g_readings: dict = field(default_factory=dict)
    R_readings: dict = field(default_factory=dict)
    spacetime_readings: dict = field(default_factory=dict)

    def lines(self) -> list:
        out = [
            f"p = {self.p:.6g}, d = {self.d} vs d0 = {self.d0}, q = {self.q:g}",
            f"f = A(d) p^d = {self.f:.6e}",
            f"epsilon = f q = {self.epsilon:.6e} (epsilon_T = {self.epsilon_T:.3e})",
            f"qubit ratio = {self.qubit_ratio:.6g}",
            f"spacetime ratio at R = {self.R_reference:g}: {self.spacetime_ratio:.6g}",
        ]
        for k in self.R_readings:
            out.append(
                f"reading {k}: g = {self.g_readings[k]:.6e}, R = {self.R_readings[k]:.6g}, "
                f"spacetime ratio = {self.spacetime_readings[k]:.6g}"
            )
        return out


def magic_state_case_study(
    p: float = 1e-4, d: int = 4, d0: int = 8, q: float = 90, R_reference: float = 3.2
) -> OverheadReport:
    """Zero-tolerance distance-``d`` memory against a standard distance-``d0`` one.

    The per-attempt abort probability ``g`` is ambiguous, so ``R = (1-g)^(-q)``
    is reported under several readings:

    * ``block``: exact abort probability of a ``t = d`` round block;
    * ``block_first_order``: its first-order value ``t d^2 (p + p_m)``;
    * ``per_round``: one round (``t = 1``) per error-correction cycle;
    * ``block_pm_equals_p``: a ``t = d`` block with ``p_m = p``.
    """
    f = eval_ansatz("ztft_f", None, p, d)
    eps = f * q
    readings = {
        "block": eval_ansatz("ztft_abort", AnsatzParams(t=d), p, d),
        "block_first_order": eval_ansatz("ztft_abort_first_order", AnsatzParams(t=d), p, d),
        "per_round": eval_ansatz("ztft_abort", AnsatzParams(t=1), p, d),
        "block_pm_equals_p": eval_ansatz("ztft_abort", AnsatzParams(t=d, p_m=p), p, d),
    }
    Rs = {k: math.exp(-q * math.log1p(-g)) for k, g in readings.items()}
    volume = (d / d0) ** 3
    return OverheadReport(
        p=p,
        d=d,
        d0=d0,
        q=q,
        f=f,
        epsilon=eps,
        epsilon_T=10 * p**3,
        qubit_ratio=(d / d0) ** 2,
        R_reference=R_reference,
        spacetime_ratio=volume * R_reference,
        g_readings=readings,
        R_readings=Rs,
        spacetime_readings={k: volume * R for k, R in Rs.items()},
    )
