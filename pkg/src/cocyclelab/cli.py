"""``hcl``: command-line front end.

Every command writes a table (CSV with a header row, or JSON lines with a
``schema_version`` field) to ``--out`` or standard output. Exit status is 0
on success, 1 when the analysis fails with a witness (no domination, no
cycle, a perturbation that does not fit the budget) and 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Sequence

import numpy as np

SCHEMA_VERSION = 1
EXPERIMENTS = ("rotation-arc", "make-dense-simple", "explosion", "continuity", "suspension", "dichotomy")


class UsageError(Exception):
    pass


class AnalysisFailure(Exception):
    """Analysis ran but the property asked for does not hold; rows are still written."""

    def __init__(self, msg, columns=None, rows=None):
        super().__init__(msg)
        self.columns = columns
        self.rows = rows or []


# ------------------------------------------------------------------ output

def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        x = float(v)
        return x if math.isfinite(x) else str(x)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v if v is None else str(v)


def render(columns: Sequence[str], rows: Sequence[dict], fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in columns])
    else:
        buf.write(json.dumps({"schema_version": SCHEMA_VERSION, "columns": list(columns)}) + "\n")
        for r in rows:
            rec = {"schema_version": SCHEMA_VERSION}
            rec.update({c: _json_value(r.get(c)) for c in columns})
            buf.write(json.dumps(rec) + "\n")
    return buf.getvalue()


def emit(args, columns, rows):
    text = render(columns, rows, args.format)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


# ------------------------------------------------------------------ helpers

def _system(args):
    from .sysfile import load_system

    if not args.system:
        raise UsageError("--system is required for this command")
    return load_system(args.system)


def _need_seed(args):
    if args.seed is None:
        raise UsageError("--seed is required for stochastic commands")
    return args.seed


def _orbits(sd, args):
    from .sft import enumerate_orbits_up_to

    return enumerate_orbits_up_to(sd.sft, args.period_max, getattr(args, "period_min", 1))


def _budget(args, default=None):
    eps = args.budget if args.budget is not None else default
    if eps is None:
        raise UsageError("--budget is required for this command")
    if not eps > 0:
        raise UsageError("--budget must be positive")
    return eps


def _parse_periods(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        a, b = text.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(t) for t in text.split(",")]


# ------------------------------------------------------------------ commands

def cmd_orbits(args):
    sd = _system(args)
    rows = [{"period": w.period, "word": str(w)} for w in _orbits(sd, args)]
    emit(args, ["period", "word"], rows)


def cmd_spectrum(args):
    from .spectrum import MeasureSpec, measure_lyapunov_exponents

    sd = _system(args)
    specs = []
    for m in args.measure or ["orbits"]:
        if m == "orbits":
            specs += [MeasureSpec.periodic(w) for w in _orbits(sd, args)]
        elif m == "markov":
            specs.append(MeasureSpec.of_markov(sd.measure(), "markov"))
        else:
            try:
                specs.append(MeasureSpec.periodic(m))
            except ValueError:
                raise UsageError(f"bad measure {m!r}") from None
    stochastic = any(s.kind == "markov" for s in specs)
    seed = _need_seed(args) if stochastic else 0
    from .spectrum import measure_seeds

    seeds = measure_seeds(seed, len(specs))
    rows = []
    for s, sd_seed in zip(specs, seeds):
        if s.kind == "periodic" and not sd.sft.is_admissible_cycle(s.word.symbols):
            raise UsageError(f"word {s.word} is not an admissible cycle")
        sp = measure_lyapunov_exponents(sd.cocycle, s, args.length, sd_seed)
        for i, (v, e) in enumerate(zip(sp.exponents, sp.errors)):
            rows.append({"measure_id": s.label, "i": i, "lambda": v, "error_estimate": e,
                         "method": sp.method})
    emit(args, ["measure_id", "i", "lambda", "error_estimate", "method"], rows)


def cmd_dominate(args):
    from .domination import NoInvariantSplitting, NotDominated, finest_splitting_report, m_domination_test

    sd = _system(args)
    words = _orbits(sd, args)
    dims, certs = finest_splitting_report(sd.cocycle, words, args.m_max)
    cols = ["record", "dims", "index", "m", "margin", "worst_orbit", "worst_site", "worst_ratio", "orbits"]
    dstr = "(" + ",".join(map(str, dims)) + ")"
    rows = [{"record": "certificate", "dims": dstr, "index": ct.index, "m": ct.m, "margin": ct.margin,
             "worst_orbit": str(ct.worst_orbit), "worst_site": ct.worst_site,
             "worst_ratio": ct.worst_ratio, "orbits": len(ct.witness_orbits)} for ct in certs]
    cut = np.cumsum(dims)[:-1]
    failing = [k for k in range(1, sum(dims)) if k not in cut]
    for k in failing:
        try:
            m_domination_test(sd.cocycle, words, k, args.m_max)
        except NoInvariantSplitting as e:
            rows.append({"record": "witness", "dims": dstr, "index": k, "m": args.m_max,
                         "worst_orbit": str(e.witness), "orbits": len(words)})
        except NotDominated as e:
            rows.append({"record": "witness", "dims": dstr, "index": k, "m": args.m_max,
                         "worst_orbit": str(e.witness), "worst_site": e.site, "worst_ratio": e.ratio,
                         "orbits": len(words)})
    if failing:
        raise AnalysisFailure(f"finest dominated splitting is {dstr}", cols, rows)
    emit(args, cols, rows)


def cmd_signatures(args):
    from .cocycle import has_simple_spectrum, orbit_cocycle
    from .domination import signature_robustness_margin, unstable_signature
    from .spectrum import measure_seeds

    sd = _system(args)
    seed = _need_seed(args)
    words = _orbits(sd, args)
    rows = []
    for w, s in zip(words, measure_seeds(seed, len(words))):
        oc = orbit_cocycle(sd.cocycle, w)
        rows.append({"word": str(w), "period": w.period, "signature": str(unstable_signature(oc)),
                     "simple": has_simple_spectrum(oc),
                     "robustness_margin": signature_robustness_margin(oc, args.samples, s % 2**31)})
    emit(args, ["word", "period", "signature", "simple", "robustness_margin"], rows)


def cmd_cycle_detect(args):
    from .domination import detect_equidimensional_cycle

    sd = _system(args)
    seed = _need_seed(args)
    words = _orbits(sd, args)
    wit = detect_equidimensional_cycle(sd.cocycle, words, args.samples, seed)
    cols = ["orbit_p", "orbit_q", "sig_p", "sig_q", "robustness_margin"]
    if wit is None:
        raise AnalysisFailure("no equidimensional cycle with robust different signatures", cols, [])
    emit(args, cols, [{"orbit_p": str(wit.orbit_p), "orbit_q": str(wit.orbit_q), "sig_p": str(wit.sig_p),
                       "sig_q": str(wit.sig_q), "robustness_margin": wit.robustness_margin}])


def cmd_suspend(args):
    from .spectrum import MeasureSpec, measure_lyapunov_exponents, measure_seeds
    from .suspension import RoofFunction, suspend_spectrum

    sd = _system(args)
    roof = sd.roof
    if args.roof is not None:
        vals = [float(x) for x in args.roof.split(",")]
        if len(vals) == 1:
            vals = vals * sd.sft.alphabet_size
        roof = RoofFunction(vals)
    if roof is None:
        raise UsageError("system has no roof.<symbol> keys and no --roof was given")
    specs = [MeasureSpec.periodic(w) for w in _orbits(sd, args)]
    if args.markov:
        specs.append(MeasureSpec.of_markov(sd.measure(), "markov"))
        seed = _need_seed(args)
    else:
        seed = 0
    rows = []
    for s, sdd in zip(specs, measure_seeds(seed, len(specs))):
        base = measure_lyapunov_exponents(sd.cocycle, s, args.length, sdd)
        fl = suspend_spectrum(base, roof, s)
        for i, v in enumerate(fl.exponents):
            rows.append({"measure_id": s.label, "i": i, "lambda": v, "flow_direction": i == fl.zero_index,
                         "normalization": fl.normalization})
    emit(args, ["measure_id", "i", "lambda", "flow_direction", "normalization"], rows)


# ------------------------------------------------------------------ experiments

def exp_rotation_arc(args):
    from .perturb import rotation_arc_experiment

    sd = _system(args)
    ex = rotation_arc_experiment(sd.cocycle, sd.sft, args.marked, args.xi, t_grid=args.t_grid)
    rec = ex.as_record()
    rec["imag_at_t_star"] = ex.imag_at_t_star
    rows = [dict(rec, record="summary")]
    for m, d in zip(ex.m_values, ex.oscillation_values):
        rows.append({"record": "oscillation", "m": int(m), "oscillation": float(d)})
    cols = ["record", "m_t", "t_star", "xi", "slope", "intercept", "r_squared", "rho_at_t_star",
            "eigen_gap_at_t_star", "imag_at_t_star", "factor_norm", "word", "m", "oscillation"]
    emit(args, cols, rows)


def exp_make_dense_simple(args):
    from .perturb import BudgetExceeded, StageError, make_dense_simple

    sd = _system(args)
    eps = _budget(args)
    cols = ["record", "stage", "detail", "word", "period", "max_factor_norm", "simple"]
    try:
        r = make_dense_simple(sd.cocycle, sd.sft, args.k, eps, _need_seed(args))
    except (StageError, BudgetExceeded) as e:
        stage = getattr(e, "stage", "budget")
        raise AnalysisFailure(str(e), cols, [{"record": "failure", "stage": stage, "detail": str(e)}]) from e
    rec = r.as_record()
    rows = [{"record": "result", "word": rec["word"], "period": rec["period"],
             "max_factor_norm": rec["max_factor_norm"], "simple": rec["simple"]}]
    for st in r.stages:
        detail = ";".join(f"{k}={_cell(v)}" for k, v in st.items() if k != "stage")
        rows.append({"record": "stage", "stage": st["stage"], "detail": detail})
    emit(args, cols, rows)


def exp_explosion(args):
    from .perturb import signature_explosion

    sd = _system(args)
    eps = _budget(args, 0.1)
    try:
        r = signature_explosion(sd.cocycle, sd.sft, args.p, args.q, args.n, eps, _need_seed(args),
                                args.period_cap, args.samples)
    except ValueError as e:
        raise AnalysisFailure(str(e), ["set", "word", "signature", "margin", "factor_norm"], []) from e
    emit(args, ["set", "word", "signature", "margin", "factor_norm"], r.records())


def exp_continuity(args):
    from .spectrum import SplittingRequired, continuity_probe

    sd = _system(args)
    cols = ["period_cap", "word", "distance", "i", "deviation"]
    try:
        tab = continuity_probe(sd.cocycle, sd.measure(), _parse_periods(args.periods), _need_seed(args),
                               args.length, sd.sft)
    except SplittingRequired as e:
        raise AnalysisFailure(str(e), cols, []) from e
    emit(args, cols, tab.records())


def exp_suspension(args):
    from .suspension import RoofFunction, flow_signature_correspondence

    sd = _system(args)
    roofs = [("file", sd.roof)] if sd.roof is not None else []
    roofs += [("const1", RoofFunction.constant(1.0, sd.sft.alphabet_size)),
              ("const2", RoofFunction.constant(2.0, sd.sft.alphabet_size))]
    words = _orbits(sd, args)
    rows, bad = [], []
    cols = ["roof", "word", "signature", "flow_signature", "simple", "flow_simple", "normalization",
            "scale_error", "gap_error"]
    for name, h in roofs:
        rep = flow_signature_correspondence(sd.cocycle, words, h)
        rows += [dict(r, roof=name) for r in rep.rows]
        bad += rep.violations
    if bad:
        raise AnalysisFailure("; ".join(bad), cols, rows)
    emit(args, cols, rows)


def exp_dichotomy(args):
    from .perturb import classify_dichotomy
    from .sft import golden_mean_shift
    from .systems import random_golden_cocycle

    eps = _budget(args, 0.1)
    seed = _need_seed(args)
    cols = ["system", "outcome", "case", "dims", "margin", "perturbation_norm", "mechanism_p", "mechanism_q",
            "p", "q", "sig_p", "sig_q", "robustness_margin", "detail"]
    rows = []
    if args.system:
        sd = _system(args)
        targets = [(sd.name, sd.cocycle, sd.sft)]
    else:
        g = golden_mean_shift()
        targets = [(f"random-{s}", random_golden_cocycle(s), g) for s in range(seed, seed + args.count)]
    for name, c, sft in targets:
        r = classify_dichotomy(c, sft, eps, args.period_max, seed=seed, samples=args.samples)
        rows.append(dict(r.as_record(), system=name))
    if any(r["outcome"] == "unresolved" for r in rows):
        raise AnalysisFailure("some systems were not resolved", cols, rows)
    emit(args, cols, rows)


EXPERIMENT_FUNCS = {
    "rotation-arc": exp_rotation_arc,
    "make-dense-simple": exp_make_dense_simple,
    "explosion": exp_explosion,
    "continuity": exp_continuity,
    "suspension": exp_suspension,
    "dichotomy": exp_dichotomy,
}


def cmd_experiment(args):
    EXPERIMENT_FUNCS[args.name](args)


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    def global_flags(suppress: bool) -> argparse.ArgumentParser:
        # flags may be given before or after the subcommand; the subcommand
        # copies must not reset values given before it
        g = argparse.ArgumentParser(add_help=False)
        kw = {"default": argparse.SUPPRESS} if suppress else {}
        g.add_argument("--system", help="system-definition file", **kw)
        g.add_argument("--seed", type=int, help="master seed (required for stochastic commands)", **kw)
        g.add_argument("--out", help="output file (default: standard output)", **kw)
        g.add_argument("--format", choices=("csv", "jsonl"), **(kw or {"default": "csv"}))
        g.add_argument("--period-max", type=int, dest="period_max", **(kw or {"default": 8}))
        g.add_argument("--budget", type=float, help="perturbation budget eps", **kw)
        return g

    common = global_flags(True)
    p = argparse.ArgumentParser(prog="hcl", parents=[global_flags(False)],
                                description="Linear cocycles over subshifts of finite type.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("orbits", parents=[common], help="list periodic orbits")
    s.add_argument("--period-min", type=int, default=1, dest="period_min")
    s.set_defaults(func=cmd_orbits)

    s = sub.add_parser("spectrum", parents=[common], help="Lyapunov exponents of measures")
    s.add_argument("--measure", action="append",
                   help="'orbits' (all orbits up to --period-max), 'markov', or a word; repeatable")
    s.add_argument("--length", type=int, default=100_000)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("dominate", parents=[common], help="finest dominated splitting")
    s.add_argument("--m-max", type=int, default=12, dest="m_max")
    s.set_defaults(func=cmd_dominate)

    s = sub.add_parser("signatures", parents=[common], help="unstable signatures and robustness margins")
    s.add_argument("--samples", type=int, default=100)
    s.set_defaults(func=cmd_signatures)

    s = sub.add_parser("cycle-detect", parents=[common], help="equidimensional cycle search")
    s.add_argument("--samples", type=int, default=100)
    s.set_defaults(func=cmd_cycle_detect)

    s = sub.add_parser("suspend", parents=[common], help="flow exponents of the suspension")
    s.add_argument("--roof", help="comma-separated roof values (one value means constant)")
    s.add_argument("--markov", action="store_true", help="also include the Markov measure")
    s.add_argument("--length", type=int, default=100_000)
    s.set_defaults(func=cmd_suspend)

    s = sub.add_parser("experiment", parents=[common], help="run a named experiment")
    s.add_argument("name", choices=EXPERIMENTS)
    s.add_argument("--marked", type=int, default=0)
    s.add_argument("--xi", type=float, default=0.05)
    s.add_argument("--t-grid", type=int, default=17, dest="t_grid")
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--p", default="1")
    s.add_argument("--q", default="0")
    s.add_argument("--period-cap", type=int, default=12, dest="period_cap")
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--periods", default="2..12")
    s.add_argument("--length", type=int, default=100_000)
    s.add_argument("--count", type=int, default=10, help="number of random systems (dichotomy)")
    s.set_defaults(func=cmd_experiment)
    return p


def _check_threads():
    v = os.environ.get("HCL_THREADS")
    if v is None:
        return
    try:
        n = int(v)
    except ValueError:
        n = 0
    if n < 1:
        raise UsageError(f"HCL_THREADS must be a positive integer, got {v!r}")


def _validate(args):
    if args.period_max < 1:
        raise UsageError("--period-max must be >= 1")
    for name in ("samples", "length", "n", "k", "count", "m_max", "period_cap", "t_grid"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be >= 1")


def main(argv: Sequence[str] | None = None) -> int:
    from .sysfile import SystemFileError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        _check_threads()
        _validate(args)
        args.func(args)
    except (UsageError, SystemFileError) as e:
        print(f"hcl: error: {e}", file=sys.stderr)
        return 2
    except AnalysisFailure as e:
        if e.columns is not None:
            emit(args, e.columns, e.rows)
        print(f"hcl: analysis failed: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
