"""Direct Monte Carlo, closed-form ansatz evaluation and fits."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.optimize import curve_fit

from .code_model import (
    NoiseParams,
    PauliError,
    build_code,
    build_spacetime,
    logical_sector,
    sample_errors,
    sample_spacetime_errors,
    shot_block_rng,
    syndrome,
)
from .decoders import DECODERS, ExclusiveDecoder
from .errors import FitError, InvalidParameter
from .matching import tolerance_fraction

log = logging.getLogger(__name__)

__all__ = [
    "Estimate",
    "MCResult",
    "SETTINGS",
    "direct_mc",
    "AnsatzParams",
    "ANSATZE",
    "eval_ansatz",
    "FitResult",
    "fit_critical_exponent",
    "DecayFit",
    "fit_decay",
    "uf_bound_sweep",
    "SweepResult",
    "BLOCK_SHOTS",
]

SETTINGS = ("cc", "phenom")
BLOCK_SHOTS = 1 << 15
MIN_EVENTS = 10


@dataclass
class Estimate:
    """A probability estimate with its standard error."""

    value: float
    se: float
    n: int
    meta: dict = field(default_factory=dict)

    def within(self, target: float, sigmas: float = 3.0) -> bool:
        """Whether ``target`` lies within ``sigmas`` standard errors.

        A zero standard error (no events observed) only accepts an exact match
        or a target below one expected event.
        """
        if self.se == 0:
            return abs(self.value - target) <= 1.0 / max(self.n, 1)
        return abs(self.value - target) <= sigmas * self.se


def _binomial(k: int, n: int, meta: dict) -> Estimate:
    if n == 0:
        return Estimate(float("nan"), float("nan"), 0, meta)
    v = k / n
    return Estimate(v, math.sqrt(v * (1 - v) / n), n, meta)


@dataclass
class MCResult:
    """Raw counts plus the derived ``g`` and ``f`` estimates."""

    shots: int
    accepts: int
    aborts: int
    failures: int
    meta: dict

    @property
    def g(self) -> Estimate:
        return _binomial(self.aborts, self.shots, dict(self.meta, quantity="g"))

    @property
    def h(self) -> Estimate:
        return _binomial(self.accepts, self.shots, dict(self.meta, quantity="h"))

    @property
    def f(self) -> Estimate:
        """Post-selected failure rate; ``nan`` (flagged) with no accepts."""
        if self.accepts == 0:
            log.warning("no accepted shots; f is undefined")
        return _binomial(self.failures, self.accepts, dict(self.meta, quantity="f"))

    @property
    def f_defined(self) -> bool:
        return self.accepts > 0


def _cc_block(dec: ExclusiveDecoder, n: int, p: float, shots: int, rng) -> tuple:
    x, z = sample_errors(n, p, shots, rng)
    aborted, residual, _ = dec.decode_batch(x, z)
    acc = ~aborted
    return int(acc.sum()), int(aborted.sum()), int((acc & (residual != 0)).sum())


def _phenom_block(st, params: NoiseParams, shots: int, rng) -> tuple:
    x, z, mx, mz = sample_spacetime_errors(st, params, shots, rng)
    ex, ez = st.detection_events(x, z, mx, mz)
    acc = ~(ex.any(axis=(1, 2)) | ez.any(axis=(1, 2)))
    if acc.any():
        bits = st.logical_bits(x[acc], z[acc], mx[acc], mz[acc])
        fails = int(bits.any(axis=1).sum())
    else:
        fails = 0
    return int(acc.sum()), int((~acc).sum()), fails


def direct_mc(
    decoder: str,
    setting: str,
    d: int,
    p: float,
    c=1.0,
    shots: int = 10**5,
    seed: int = 0,
    t: int | None = None,
    p_m: float | None = None,
) -> MCResult:
    """Direct sampling of abort and post-selected failure rates.

    ``setting="cc"`` is code capacity on the rotated planar code.
    ``setting="phenom"`` is the zero-tolerance decoder on the rotated toric
    code with ``t`` (default ``d``) noisy rounds and ``p_m = 2p/3`` unless
    given; a shot is accepted exactly when it has no detection events.

    Shots are drawn in fixed blocks of :data:`BLOCK_SHOTS`, each from its own
    stream keyed by ``(seed, block)``.
    """
    if shots < 1:
        raise InvalidParameter("shots must be at least 1")
    if decoder not in DECODERS:
        raise InvalidParameter(f"unknown decoder {decoder!r}")
    if setting not in SETTINGS:
        raise InvalidParameter(f"unknown setting {setting!r}; choose from {SETTINGS}")
    if not 0.0 <= p <= 1.0:
        raise InvalidParameter(f"p must lie in [0, 1], got {p}")
    frac = tolerance_fraction(c)
    meta = {"decoder": decoder, "setting": setting, "d": d, "p": p, "c": str(frac), "seed": seed}
    if setting == "cc":
        code = build_code(d)
        dec = ExclusiveDecoder(code, decoder, c)

        def block(k, rng):
            return _cc_block(dec, code.n, p, k, rng)

        meta["t"] = 0
    else:
        if frac != 0:
            raise InvalidParameter("the phenomenological setting is only implemented at zero tolerance")
        st = build_spacetime(d, t)
        params = NoiseParams(p=p, p_m=2.0 * p / 3.0 if p_m is None else p_m)

        def block(k, rng):
            return _phenom_block(st, params, k, rng)

        meta["t"] = st.t
        meta["p_m"] = params.p_m
    acc = ab = fail = 0
    for b, start in enumerate(range(0, shots, BLOCK_SHOTS)):
        k = min(BLOCK_SHOTS, shots - start)
        a1, a2, a3 = block(k, shot_block_rng(seed, b))
        acc += a1
        ab += a2
        fail += a3
    return MCResult(shots=shots, accepts=acc, aborts=ab, failures=fail, meta=meta)


# --------------------------------------------------------------------------
# Closed-form ansatz
# --------------------------------------------------------------------------


@dataclass
class AnsatzParams:
    """Parameters for :func:`eval_ansatz`; unset fields default as noted.

    ``k`` and ``k_tilde`` default to ``1 - c/2`` and ``c/2``.  ``t`` defaults
    to ``d`` and ``p_m`` to ``2p/3``.
    """

    c: float | None = None
    k: float | None = None
    k_tilde: float | None = None
    A: float | None = None
    C: float | None = None
    A_tilde: float | None = None
    C_tilde: float | None = None
    Lambda_h: float | None = None
    C_h: float | None = None
    t: int | None = None
    p_m: float | None = None

    def need(self, *names):
        out = []
        for nm in names:
            v = getattr(self, nm)
            if v is None and nm == "k" and self.c is not None:
                v = 1.0 - float(tolerance_fraction(self.c)) / 2.0
            if v is None and nm == "k_tilde" and self.c is not None:
                v = float(tolerance_fraction(self.c)) / 2.0
            if v is None:
                raise InvalidParameter(f"ansatz parameter {nm!r} is required")
            out.append(v)
        return out


def _A_ft(d: int) -> float:
    if d % 2:
        raise InvalidParameter("A(d) is defined for even d")
    return 4 * d * d / 2 * comb(d, d // 2) / 3**d + d * d * (2 / 3) ** d + 4 * d * d / 3**d


def _pm(params: AnsatzParams, p: float) -> float:
    return 2.0 * p / 3.0 if params.p_m is None else params.p_m


def _ztft_abort(params, p, d):
    t = d if params.t is None else params.t
    return 1.0 - (1.0 - p) ** (t * d * d) * (1.0 - _pm(params, p)) ** (t * d * d)


def _ztft_abort_first(params, p, d):
    t = d if params.t is None else params.t
    return t * d * d * (p + _pm(params, p))


def _f(params, p, d):
    C, A, k = params.need("C", "A", "k")
    return C * (A * p) ** (k * d)


def _g(params, p, d):
    C, A, k = params.need("C_tilde", "A_tilde", "k_tilde")
    return C * p * (A * p) ** (k * d)


def _h(params, p, d):
    C, L = params.need("C_h", "Lambda_h")
    return C * L ** (d * d)


ANSATZE = {
    "f": _f,
    "g": _g,
    "h": _h,
    "k": lambda params, p, d: params.need("k")[0],
    "k_tilde": lambda params, p, d: params.need("k_tilde")[0],
    "A_ft": lambda params, p, d: _A_ft(d),
    "ztft_f": lambda params, p, d: _A_ft(d) * p**d,
    "ztft_abort": _ztft_abort,
    "ztft_abort_first_order": _ztft_abort_first,
    "zero_tolerance_abort": lambda params, p, d: 1.0 - (1.0 - p) ** (d * d),
    "zero_tolerance_abort_first_order": lambda params, p, d: p * d * d,
}


def eval_ansatz(name: str, params: AnsatzParams | None, p: float, d: int) -> float:
    """Evaluate a named closed-form expression.

    Names: ``f``, ``g``, ``h``, ``k``, ``k_tilde``, ``A_ft``, ``ztft_f``,
    ``ztft_abort``, ``ztft_abort_first_order``, ``zero_tolerance_abort``,
    ``zero_tolerance_abort_first_order``.
    """
    if name not in ANSATZE:
        raise InvalidParameter(f"unknown ansatz {name!r}; known: {sorted(ANSATZE)}")
    return float(ANSATZE[name](params or AnsatzParams(), p, d))


# --------------------------------------------------------------------------
# Fits
# --------------------------------------------------------------------------


@dataclass
class FitResult:
    """Fitted parameters, covariance and goodness of fit."""

    params: dict
    errors: dict
    cov: np.ndarray
    r2: float
    chi2: float
    dof: int
    degenerate: bool = False
    note: str = ""


def _prepare(data, counts=None):
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise InvalidParameter("data must be rows of (d, p, value, se)")
    keep = np.isfinite(arr).all(axis=1) & (arr[:, 3] > 0)
    if counts is not None:
        counts = np.asarray(counts)
        few = counts < MIN_EVENTS
        if few.any():
            log.info("dropping %d points with fewer than %d events", int(few.sum()), MIN_EVENTS)
        keep &= ~few
    return arr[keep]


def _crossing_guess(arr):
    """Pairwise curve crossings between consecutive distances."""
    ds = np.unique(arr[:, 0])
    guesses = []
    for d1, d2 in zip(ds, ds[1:]):
        a = arr[arr[:, 0] == d1]
        b = arr[arr[:, 0] == d2]
        common = np.intersect1d(a[:, 1], b[:, 1])
        if len(common) < 2:
            continue
        va = np.array([a[a[:, 1] == p][0, 2] for p in common])
        vb = np.array([b[b[:, 1] == p][0, 2] for p in common])
        diff = vb - va
        for i in range(len(common) - 1):
            if diff[i] == 0:
                guesses.append(common[i])
            elif diff[i] * diff[i + 1] < 0:
                frac = diff[i] / (diff[i] - diff[i + 1])
                guesses.append(common[i] + frac * (common[i + 1] - common[i]))
    return guesses


def fit_critical_exponent(data, counts=None) -> FitResult:
    """Fit ``value = A x^2 + B x + C`` with ``x = (p - p_th) d^(-nu)``.

    ``data`` is rows of ``(d, p, value, se)``; ``counts`` optionally gives the
    number of observed events per row, and rows with fewer than ten are
    dropped.  Inverse-variance weighted least squares over
    ``(A, B, C, p_th, nu)``.  ``degenerate`` is set when the curves for
    different ``d`` do not cross inside the sampled range.
    """
    arr = _prepare(data, counts)
    ds = np.unique(arr[:, 0])
    ps = np.unique(arr[:, 1])
    if len(ds) < 3 or len(ps) < 5:
        raise FitError("need at least 3 distances and 5 probabilities")
    d, p, y, s = arr.T
    guesses = _crossing_guess(arr)
    degenerate = len(guesses) == 0
    pth0 = float(np.median(guesses)) if guesses else float(np.median(ps))

    def model(X, A, B, C, pth, nu):
        dd, pp = X
        x = (pp - pth) * dd ** (-nu)
        return A * x * x + B * x + C

    best = None
    for nu0 in (-1.0, -0.5, 0.5, 1.0):
        x0 = (p - pth0) * d ** (-nu0)
        try:
            A0, B0, C0 = np.polyfit(x0, y, 2, w=1.0 / s)
            popt, pcov = curve_fit(
                model, (d, p), y, p0=[A0, B0, C0, pth0, nu0], sigma=s, absolute_sigma=True, maxfev=20000
            )
        except (RuntimeError, ValueError, np.linalg.LinAlgError):
            continue
        chi2 = float((((model((d, p), *popt) - y) / s) ** 2).sum())
        if best is None or chi2 < best[2]:
            best = (popt, pcov, chi2)
    if best is None:
        raise FitError("critical-exponent fit did not converge")
    popt, pcov, chi2 = best
    resid = y - model((d, p), *popt)
    w = 1.0 / s**2
    ybar = np.sum(w * y) / np.sum(w)
    r2 = 1.0 - np.sum(w * resid**2) / np.sum(w * (y - ybar) ** 2)
    names = ("A", "B", "C", "p_th", "nu")
    errs = np.sqrt(np.clip(np.diag(pcov), 0, None))
    if not ps.min() <= popt[3] <= ps.max():
        degenerate = True
    return FitResult(
        params=dict(zip(names, map(float, popt))),
        errors=dict(zip(names, map(float, errs))),
        cov=pcov,
        r2=float(r2),
        chi2=chi2,
        dof=len(y) - 5,
        degenerate=degenerate,
        note="no crossing in data range" if degenerate else "",
    )


@dataclass
class DecayFit:
    """Per-``p`` linear fits ``log value = x log Lambda + log C``.

    ``per_p[p] = {"Lambda", "C", "log_Lambda", "log_Lambda_se", "r2", "points"}``.
    When the abscissa is ``d`` and at least two ``p`` are present, ``k`` and
    ``A`` come from ``log Lambda = k log p + k log A``.
    """

    abscissa: str
    per_p: dict
    k: float | None = None
    k_se: float | None = None
    A: float | None = None


def _wlinfit(x, y, w):
    W = np.sum(w)
    xm = np.sum(w * x) / W
    ym = np.sum(w * y) / W
    sxx = np.sum(w * (x - xm) ** 2)
    if sxx == 0:
        raise FitError("abscissa values are all equal")
    slope = np.sum(w * (x - xm) * (y - ym)) / sxx
    icpt = ym - slope * xm
    resid = y - slope * x - icpt
    syy = np.sum(w * (y - ym) ** 2)
    r2 = 1.0 - np.sum(w * resid**2) / syy if syy > 0 else 1.0
    return slope, icpt, math.sqrt(1.0 / sxx), r2


def fit_decay(data, abscissa: str = "d") -> DecayFit:
    """Exponential-decay fits in ``d`` or ``n = d^2``.

    ``data`` is rows of ``(d, p, value, se)``; ``se`` may be zero for exact
    values, in which case the fit is unweighted.  Nonpositive values are
    dropped with a warning.
    """
    if abscissa not in ("d", "n"):
        raise InvalidParameter("abscissa must be 'd' or 'n'")
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise InvalidParameter("data must be rows of (d, p, value, se)")
    bad = ~(arr[:, 2] > 0)
    if bad.any():
        log.warning("dropping %d nonpositive values", int(bad.sum()))
        arr = arr[~bad]
    per_p = {}
    for p in np.unique(arr[:, 1]):
        rows = arr[arr[:, 1] == p]
        if len(rows) < 3:
            raise FitError(f"need at least 3 points at p={p}")
        x = rows[:, 0] if abscissa == "d" else rows[:, 0] ** 2
        y = np.log(rows[:, 2])
        rel = rows[:, 3] / rows[:, 2]
        w = 1.0 / rel**2 if np.all(rel > 0) else np.ones_like(y)
        slope, icpt, se, r2 = _wlinfit(x, y, w)
        if not np.all(rel > 0):
            se = float("nan")
        per_p[float(p)] = {
            "Lambda": math.exp(slope),
            "C": math.exp(icpt),
            "log_Lambda": slope,
            "log_Lambda_se": se,
            "r2": r2,
            "points": len(rows),
        }
    out = DecayFit(abscissa=abscissa, per_p=per_p)
    if abscissa == "d" and len(per_p) >= 2:
        lp = np.log(np.array(list(per_p)))
        ll = np.array([v["log_Lambda"] for v in per_p.values()])
        k, icpt, kse, _ = _wlinfit(lp, ll, np.ones_like(lp))
        out.k = float(k)
        out.k_se = float(kse) if len(lp) > 2 else None
        out.A = math.exp(icpt / k) if k != 0 else None
    return out


# --------------------------------------------------------------------------
# Union-find correctness sweep
# --------------------------------------------------------------------------


@dataclass
class SweepResult:
    d: int
    c: float
    trials: int
    accepted: int
    violations: int
    examples: list


def uf_bound_sweep(d: int, c, trials: int, seed: int = 0, max_examples: int = 5) -> SweepResult:
    """Random erasure-plus-Pauli errors inside the guaranteed-correct region.

    Each trial draws ``(s, t_e)`` uniformly from the pairs with
    ``2 s + t_e < 2 d (1 - c/2)``, erases ``t_e`` random qubits carrying
    uniformly random Paulis, and adds ``s`` random non-identity Paulis
    outside the erasure.  A violation is an accepted decode whose residual
    is a nontrivial logical.
    """
    from .unionfind import decode_uf_exclusive

    frac = float(tolerance_fraction(c))
    code = build_code(d)
    n = code.n
    bound = 2 * d * (1 - frac / 2)
    pairs = [(s, te) for s in range(n + 1) for te in range(n + 1 - s) if 2 * s + te < bound]
    rng = np.random.Generator(np.random.Philox(seed))
    accepted = violations = 0
    examples = []
    for _ in range(trials):
        s, te = pairs[rng.integers(len(pairs))]
        perm = rng.permutation(n)
        er, rest = perm[:te], perm[te : te + s]
        x = np.zeros(n, np.uint8)
        z = np.zeros(n, np.uint8)
        k = rng.integers(0, 4, te).astype(np.uint8)
        x[er] = k & 1
        z[er] = k >> 1
        k = rng.integers(1, 4, s).astype(np.uint8)
        x[rest] = k & 1
        z[rest] = k >> 1
        err = PauliError(x, z)
        out = decode_uf_exclusive(code, er.tolist(), syndrome(code, err), c)
        if not out.accepted:
            continue
        accepted += 1
        if logical_sector(code, err * out.correction) != "I":
            violations += 1
            if len(examples) < max_examples:
                examples.append({"error": str(err), "erasure": sorted(er.tolist()), "s": s, "t_e": te})
    return SweepResult(d=d, c=c, trials=trials, accepted=accepted, violations=violations, examples=examples)
