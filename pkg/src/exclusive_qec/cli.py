"""Command-line front end.

Subcommands: ``simulate``, ``split``, ``sector-split``, ``fit``, ``oracle``
and ``overhead``.  Every option may also be given in a flat ``key = value``
config file passed with ``--config``; command-line flags win.  Outputs embed
the resolved config, its hash and the package version.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .analysis import direct_mc, fit_critical_exponent, fit_decay
from .code_model import build_code
from .errors import ExclusiveQECError
from .matching import tolerance_fraction
from .oracle import enumerate_code_capacity, enumerate_low_weight_ft
from .overhead import depth_boost, footprint_logR, magic_state_case_study, repetitions
from .splitting import (
    ChainTarget,
    Predicate,
    SplitSchedule,
    normalize_acceptance,
    run_sector_splitting,
    run_splitting,
)

log = logging.getLogger("exclusive_qec")

CSV_COLUMNS = [
    "kind", "decoder", "setting", "d", "t", "p", "c", "shots", "accepts", "aborts",
    "failures", "g", "g_se", "f", "f_se", "seed",
]
SPLIT_COLUMNS = CSV_COLUMNS + ["predicate", "P", "P_se", "h", "h_se", "j", "p_j", "R_j", "R_j_se", "ess"]
WORKERS_ENV = "EXCLUSIVE_QEC_WORKERS"
MAX_DECODES = 10**10


class UsageError(ExclusiveQECError):
    """Malformed configuration."""


# --------------------------------------------------------------------------
# Config handling
# --------------------------------------------------------------------------


def read_config(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for num, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{num}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def _floats(s):
    if isinstance(s, (list, tuple)):
        return [float(v) for v in s]
    return [float(v) for v in str(s).replace(",", " ").split()]


def _ints(s):
    if isinstance(s, (list, tuple)):
        return [int(v) for v in s]
    return [int(v) for v in str(s).replace(",", " ").split()]


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _resolved(args) -> dict:
    skip = {"func", "config", "out", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _header(cfg: dict) -> list:
    return [
        f"# exclusive-qec {__version__}",
        f"# config_hash: {config_hash(cfg)}",
        f"# config: {json.dumps(cfg, sort_keys=True, default=str)}",
    ]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, cfg, columns, rows):
    buf = io.StringIO()
    for line in _header(cfg):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    _emit(path, buf.getvalue())


def _write_json(path, cfg, payload):
    obj = {"version": __version__, "config_hash": config_hash(cfg), "config": cfg}
    obj.update(payload)
    _emit(path, json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")


def _emit(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def read_csv_rows(path: str) -> list:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def _point_seed(seed: int, d: int, p: float, c: str) -> int:
    key = f"{d}|{p!r}|{c}".encode()
    extra = int.from_bytes(hashlib.sha256(key).digest()[:4], "little")
    return int(np.random.SeedSequence([seed, extra]).generate_state(1, dtype=np.uint64)[0] >> 1)


def _simulate_point(task):
    decoder, setting, d, p, c, shots, seed, t = task
    res = direct_mc(decoder, setting, d, p, c, shots, _point_seed(seed, d, p, str(tolerance_fraction(c))), t=t)
    g, f = res.g, res.f
    return {
        "kind": "simulate", "decoder": decoder, "setting": setting, "d": d,
        "t": res.meta["t"], "p": p, "c": str(tolerance_fraction(c)), "shots": shots,
        "accepts": res.accepts, "aborts": res.aborts, "failures": res.failures,
        "g": g.value, "g_se": g.se, "f": f.value, "f_se": f.se, "seed": seed,
    }


def cmd_simulate(args):
    ds, ps = _ints(args.d), _floats(args.p)
    total = args.shots * len(ds) * len(ps)
    if total > args.max_decodes:
        raise UsageError(f"budget of {total:.3g} decodes exceeds max_decodes={args.max_decodes:.3g}")
    tasks = [(args.decoder, args.setting, d, p, args.c, args.shots, args.seed, args.t) for d in ds for p in ps]
    workers = args.workers or int(os.environ.get(WORKERS_ENV, "1"))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_simulate_point, tasks))
    else:
        rows = [_simulate_point(t) for t in tasks]
    _write_csv(args.out, _resolved(args), CSV_COLUMNS, rows)


def _schedule(args):
    kw = dict(chains=args.chains, samples=args.samples, burn_in_sweeps=args.burn_in, stab_move_prob=args.stab_prob)
    if args.ps:
        return SplitSchedule(ps=sorted(_floats(args.ps), reverse=True), **kw)
    return SplitSchedule.geometric(args.p0, args.p_end, args.ratio, **kw)


def cmd_split(args):
    code = build_code(args.d)
    target = ChainTarget.build(code, args.decoder, args.c, Predicate(args.predicate, args.sector))
    sched = _schedule(args)
    if args.anchor is not None:
        anchor, anchor_se = float(args.anchor), float(args.anchor_se)
    else:
        mc = direct_mc(args.decoder, "cc", args.d, sched.ps[0], args.c, args.anchor_shots, args.seed)
        counts = {"fail": mc.failures, "abort": mc.aborts, "accept": mc.accepts}
        if args.predicate not in counts:
            raise UsageError("give --anchor for this predicate")
        k = counts[args.predicate]
        anchor = k / mc.shots
        anchor_se = math.sqrt(anchor * (1 - anchor) / mc.shots)
        if k == 0:
            raise UsageError(f"no anchor events in {mc.shots} shots at p={sched.ps[0]}")
    res = run_splitting(target, sched, anchor, anchor_se, seed=args.seed)
    c = str(tolerance_fraction(args.c))
    rows = []
    for i, p in enumerate(res.ps):
        row = {
            "kind": "split", "decoder": args.decoder, "setting": "cc", "d": args.d, "t": 0, "p": p,
            "c": c, "shots": sched.chains * sched.samples, "seed": args.seed, "predicate": args.predicate,
            "P": float(res.P[i]), "P_se": float(res.P_se[i]), "j": i,
        }
        if i > 0:
            rec = res.records[i - 1]
            row.update(p_j=rec["p_j"], R_j=rec["R_j"], R_j_se=rec["R_j_se"], ess=rec["ess"])
        rows.append(row)
    _write_csv(args.out, _resolved(args), SPLIT_COLUMNS, rows)


def cmd_sector_split(args):
    code = build_code(args.d)
    if not args.ps:
        args.p0 = 0.75
    sched = _schedule(args)
    est = run_sector_splitting(code, args.decoder, args.c, sched, seed=args.seed)
    if args.h_ref_p is not None:
        i = int(np.argmin(np.abs(np.array(est.ps) - args.h_ref_p)))
        mc = direct_mc(args.decoder, "cc", args.d, est.ps[i], args.c, args.h_ref_shots, args.seed)
        normalize_acceptance(est, est.ps[i], mc.h.value, mc.h.se)
    c = str(tolerance_fraction(args.c))
    rows = []
    for i, p in enumerate(est.ps):
        row = {
            "kind": "sector-split", "decoder": args.decoder, "setting": "cc", "d": args.d, "t": 0,
            "p": p, "c": c, "shots": sched.chains * sched.samples, "seed": args.seed,
            "predicate": "sector", "f": float(est.f[i]), "f_se": float(est.f_se[i]), "j": i,
        }
        if est.c_norm is not None:
            row.update(h=float(est.h[i]), h_se=float(est.h_se[i]), g=1 - float(est.h[i]), g_se=float(est.h_se[i]))
        rows.append(row)
    _write_csv(args.out, _resolved(args), SPLIT_COLUMNS, rows)


def cmd_fit(args):
    rows = read_csv_rows(args.input)
    q = args.quantity
    data = []
    for r in rows:
        if q == "h" and r.get("h") in (None, "") and r.get("g") not in (None, ""):
            # simulate output carries g only; h = 1 - g with the same SE
            r = dict(r, h=1.0 - float(r["g"]), h_se=r.get("g_se"))
        if r.get(q) in (None, ""):
            continue
        data.append((float(r["d"]), float(r["p"]), float(r[q]), float(r.get(q + "_se") or 0.0)))
    if args.model == "critical":
        res = fit_critical_exponent(data)
        payload = {"model": "critical", "quantity": q, "params": res.params, "errors": res.errors,
                   "r2": res.r2, "chi2": res.chi2, "dof": res.dof, "degenerate": res.degenerate}
    else:
        res = fit_decay(data, args.abscissa)
        payload = {"model": "decay", "quantity": q, "abscissa": args.abscissa,
                   "per_p": {repr(k): v for k, v in res.per_p.items()}, "k": res.k, "A": res.A}
    _write_json(args.out, _resolved(args), payload)


def cmd_oracle(args):
    if args.ft:
        res = enumerate_low_weight_ft(args.d, args.t, args.max_weight)
        payload = {
            "kind": "oracle-ft", "d": res.d, "t": res.t, "max_weight": res.max_weight,
            "by_weight": {str(w): v for w, v in sorted(res.by_weight.items())},
            "leading_coefficient": str(res.leading_coefficient()),
        }
        _write_json(args.out, _resolved(args), payload)
        return
    table = enumerate_code_capacity(args.d, args.decoder, args.c)
    payload = {"kind": "oracle", "table": json.loads(table.to_json())}
    if args.p:
        payload["evaluations"] = [
            {"p": p, "g": table.g(p), "f": table.f(p), "h": table.h(p)} for p in _floats(args.p)
        ]
    _write_json(args.out, _resolved(args), payload)


_OVERHEAD_NEEDS = {
    "repetitions": ("p", "d", "q"),
    "depth-boost": ("R", "eps", "q0"),
    "footprint": ("eps", "q", "m_ratio"),
}


def cmd_overhead(args):
    cfg = _resolved(args)
    missing = [k for k in _OVERHEAD_NEEDS.get(args.topic, ()) if getattr(args, k) is None]
    if missing:
        raise UsageError(f"overhead {args.topic} needs " + ", ".join("--" + m.replace("_", "-") for m in missing))
    if args.topic == "magic-state":
        rep = magic_state_case_study(args.p or 1e-4, args.d or 4, args.d0, args.q or 90, args.R_reference)
        payload = {k: v for k, v in vars(rep).items()}
        payload["report"] = rep.lines()
    elif args.topic == "repetitions":
        r = repetitions(args.p, args.c, args.d, args.q)
        payload = {"R": r.R, "log_R": r.log_R, "undefined": r.undefined}
    elif args.topic == "depth-boost":
        b = depth_boost(args.R, args.eps, args.q0)
        payload = {"q": b.q, "cap": b.cap, "clipped": b.clipped}
    else:
        payload = {"log_R": footprint_logR(args.eps, args.q, args.m_ratio)}
    _write_json(args.out, cfg, payload)


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def _split_opts(sp):
    sp.add_argument("--chains", type=int, default=64)
    sp.add_argument("--samples", type=int, default=200, help="weights recorded per chain per level")
    sp.add_argument("--burn-in", type=int, default=None, help="burn-in sweeps per level (default 10 n)")
    sp.add_argument("--stab-prob", type=float, default=None, help="probability of an operator move")
    sp.add_argument("--ratio", type=float, default=1.25)
    sp.add_argument("--p-end", type=float, default=0.01)
    sp.add_argument("--ps", default=None, help="explicit schedule, comma separated")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="exclusive-qec", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None, help="key = value file; flags override it")
        sp.add_argument("--out", default="-", help="output path ('-' for stdout)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("simulate", help="direct Monte Carlo of g and f")
    common(sp)
    sp.add_argument("--decoder", choices=("mwpm", "uf"), default="mwpm")
    sp.add_argument("--setting", choices=("cc", "phenom"), default="cc")
    sp.add_argument("--d", default="3", help="distance(s), comma separated")
    sp.add_argument("--p", default="0.1", help="error probability(ies)")
    sp.add_argument("--c", type=float, default=1.0)
    sp.add_argument("--t", type=int, default=None, help="rounds (phenom)")
    sp.add_argument("--shots", type=int, default=100000)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--max-decodes", type=float, default=MAX_DECODES)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("split", help="splitting estimate of a rare event")
    common(sp)
    sp.add_argument("--decoder", choices=("mwpm", "uf"), default="mwpm")
    sp.add_argument("--d", type=int, default=3)
    sp.add_argument("--c", type=float, default=1.0)
    sp.add_argument("--predicate", choices=("fail", "abort", "accept", "sector", "all"), default="fail")
    sp.add_argument("--sector", default="I")
    sp.add_argument("--p0", type=float, default=0.3)
    sp.add_argument("--anchor", type=float, default=None, help="P at p0 (default: direct MC)")
    sp.add_argument("--anchor-se", type=float, default=0.0)
    sp.add_argument("--anchor-shots", type=int, default=100000)
    _split_opts(sp)
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("sector-split", help="sector splitting from p = 0.75")
    common(sp)
    sp.add_argument("--decoder", choices=("mwpm", "uf"), default="mwpm")
    sp.add_argument("--d", type=int, default=3)
    sp.add_argument("--c", type=float, default=0.0)
    sp.add_argument("--h-ref-p", type=float, default=None, help="normalise h by direct MC at this p")
    sp.add_argument("--h-ref-shots", type=int, default=100000)
    _split_opts(sp)
    sp.set_defaults(func=cmd_sector_split, p0=0.75)

    sp = sub.add_parser("fit", help="fit simulation output")
    common(sp)
    sp.add_argument("--input", required=False, default=None)
    sp.add_argument("--model", choices=("critical", "decay"), default="critical")
    sp.add_argument("--quantity", choices=("f", "g", "h", "P"), default="f")
    sp.add_argument("--abscissa", choices=("d", "n"), default="d")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("oracle", help="exact enumeration tables")
    common(sp)
    sp.add_argument("--decoder", choices=("mwpm", "uf"), default="mwpm")
    sp.add_argument("--d", type=int, default=3)
    sp.add_argument("--c", type=float, default=1.0)
    sp.add_argument("--p", default=None, help="evaluate f, g, h at these p")
    sp.add_argument("--ft", action="store_true", help="low-weight spacetime enumeration")
    sp.add_argument("--t", type=int, default=None)
    sp.add_argument("--max-weight", type=int, default=None)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("overhead", help="resource-overhead calculators")
    common(sp)
    sp.add_argument("topic", choices=("magic-state", "repetitions", "depth-boost", "footprint"))
    sp.add_argument("--p", type=float, default=None)
    sp.add_argument("--c", type=float, default=0.0)
    sp.add_argument("--d", type=int, default=None)
    sp.add_argument("--d0", type=int, default=8)
    sp.add_argument("--q", type=float, default=None)
    sp.add_argument("--q0", type=float, default=None)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--R", type=float, default=None)
    sp.add_argument("--R-reference", type=float, default=3.2)
    sp.add_argument("--m-ratio", type=float, default=None)
    sp.set_defaults(func=cmd_overhead)
    return ap


def _parse(argv):
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        sub = ap._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        unknown = sorted(set(cfg) - set(known))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        defaults = {}
        for k, v in cfg.items():
            act = known[k]
            if act.type is not None:
                v = act.type(v)
            elif isinstance(act.default, bool) or act.const is True:
                v = v.lower() in ("1", "true", "yes", "on")
            if act.choices is not None and v not in act.choices:
                raise UsageError(f"config {k}={v!r} not in {sorted(act.choices)}")
            defaults[k] = v
        sub.set_defaults(**defaults)
        args = ap.parse_args(argv)
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _parse(argv)
    except SystemExit as ex:
        return int(ex.code or 0)
    except (UsageError, ValueError, OSError) as ex:
        sys.stderr.write(json.dumps({"error": type(ex).__name__, "message": str(ex)}) + "\n")
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "fit" and not args.input:
        sys.stderr.write(json.dumps({"error": "UsageError", "message": "fit needs --input"}) + "\n")
        return 2
    cfg = _resolved(args)
    sys.stderr.write(f"config_hash={config_hash(cfg)}\n")
    try:
        args.func(args)
    except UsageError as ex:
        sys.stderr.write(json.dumps({"error": "UsageError", "message": str(ex)}) + "\n")
        return 2
    except (ExclusiveQECError, ValueError) as ex:
        sys.stderr.write(json.dumps({"error": type(ex).__name__, "message": str(ex)}) + "\n")
        return 1
    return 0
