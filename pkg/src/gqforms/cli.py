"""Command-line front end producing JSON or CSV reports."""
import argparse
import csv
import io
import json
import sys
import time

import numpy as np

from . import __version__
from .characters import find_primitive_gamma, is_primitive_bruteforce, verify_certificate
from .counting import CountSpec, compare_to_prediction, count
from .densities import find_real_point, main_term_constant, singular_series
from .descent import descend, lift, system_from_json, system_to_json
from .errors import BudgetError, InvalidInput, SearchBoundError
from .expsums import h_lattice, s_bound, s_bound_by_unit, s_sum_gamma, s_sum_moebius
from .field import builtin_field, format_element, parse_element
from .formats import gqf_to_json, load_form
from .forms import check_assumptions, diagonal_data, is_admissible, special_shape_of
from .ideal import Ideal, ideals_up_to_norm

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_SEARCH = 0, 2, 3, 4


# ---------------------------------------------------------------- helpers
def _field(args):
    return builtin_field(args.field)


def _form(args, f):
    if not args.form:
        raise InvalidInput("--form is required")
    return load_form(f, args.form)


def _element(f, text):
    return parse_element(f, str(text))


def _ideal(f, text):
    gens = [_element(f, g) for g in text.split(",") if g.strip()]
    if not gens:
        raise InvalidInput("--ideal needs at least one generator")
    return Ideal.from_generators(f, gens)


def _p_list(text):
    try:
        return [float(x) if "." in x else int(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise InvalidInput(f"--P: {exc}") from exc


def _ideal_json(b):
    return {"hnf": b.to_json(), "norm": b.norm()}


def _complex(z):
    return {"re": float(z.real), "im": float(z.imag)}


def _to_jsonable(x):
    if isinstance(x, dict):
        return {str(k): _to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_to_jsonable(v) for v in x]
    if isinstance(x, complex):
        return _complex(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _to_jsonable(x.tolist())
    if hasattr(x, "coords") and hasattr(x, "field"):
        return format_element(x)
    if isinstance(x, float) and (x != x or x in (float("inf"), float("-inf"))):
        return str(x)
    return x


def _csv_cell(v):
    v = _to_jsonable(v)
    return json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v


def _config(args):
    skip = {"func", "out", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, result, rows=None, started=None):
    if args.format == "csv":
        if rows is None:
            raise InvalidInput(f"{args.command} has no CSV table; use --format json")
        buf = io.StringIO()
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
            writer.writeheader()
            for r in rows:
                writer.writerow({k: _csv_cell(v) for k, v in r.items()})
        text = buf.getvalue()
    else:
        report = {"version": __version__, "command": args.command, "config": _config(args),
                  "seed": args.seed, "result": _to_jsonable(result),
                  "wall_time": round(time.perf_counter() - started, 6) if started else None}
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands
def cmd_descend(args, started):
    f = _field(args)
    F = _form(args, f)
    S = descend(F)
    if args.N:
        from .descent import shift
        S = shift(S, _element(f, args.N))
    out = system_to_json(S)
    out["field"] = args.field
    _write_raw(args, out)


def cmd_lift(args, started):
    f = _field(args)
    src = args.system or "-"
    try:
        text = sys.stdin.read() if src == "-" else open(src).read()
        obj = json.loads(text)
    except OSError as exc:
        raise InvalidInput(f"cannot read system {src!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"system: invalid JSON ({exc})") from exc
    F = lift(system_from_json(f, obj))
    out = gqf_to_json(F)
    out["field"] = args.field
    _write_raw(args, out)


def _write_raw(args, obj):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _real_point(F, N, P, seed):
    S = descend(F)
    t = np.array([float(c) for c in N.coords]) / P ** 2
    pt = find_real_point(S, t, seed=seed, scale=max(1e-3, float(np.sqrt(np.abs(t).max() or 1.0))))
    if not pt.found:
        raise InvalidInput("no nonsingular real point found; the box centre is undefined")
    return pt.xi


def _count_mode(args, F):
    if args.mode != "auto":
        return args.mode
    return "split" if diagonal_data(F) is not None and args.weight == "indicator" else "direct"


def cmd_count(args, started):
    f = _field(args)
    F = _form(args, f)
    N = _element(f, args.N)
    rows = []
    for P in _p_list(args.P):
        xi = _real_point(F, N, P, args.seed)
        spec = CountSpec(F, N, P, xi, args.delta, args.weight, _count_mode(args, F), args.budget)
        res = count(spec)
        rows.append({"P": P, "count": res.count, "mode": res.mode, "box_points": spec.box_size(),
                     "transport_verified": res.transport_verified})
    _emit(args, {"rows": rows}, rows, started)


def _predict(args, F, N, P, series=None):
    return main_term_constant(F, N, P, p_max=args.pmax, l_max=args.lmax, delta=args.delta,
                              samples=args.samples, weight=args.weight if args.weight != "none-box" else "indicator",
                              seed=args.seed, budget=args.budget, series=series)


def cmd_predict(args, started):
    f = _field(args)
    F = _form(args, f)
    N = _element(f, args.N)
    P = _p_list(args.P)[0]
    rep = _predict(args, F, N, P)
    rows = [{"p": r.p, "l_used": r.l_used, "sigma_p": str(r.value), "stabilized": r.stabilized,
             "note": r.note} for r in rep.series.table]
    _emit(args, rep.to_json(), rows, started)


def cmd_compare(args, started):
    f = _field(args)
    F = _form(args, f)
    N = _element(f, args.N)
    series = singular_series(F, N, args.pmax, args.lmax, args.budget, args.seed)
    rows, reports = [], []
    for P in _p_list(args.P):
        rep = _predict(args, F, N, P, series)
        if rep.xi is None:
            xi = np.zeros(f.degree * F.n)
        else:
            xi = rep.xi
        spec = CountSpec(F, N, P, xi, args.delta, args.weight, _count_mode(args, F), args.budget)
        rec = compare_to_prediction(spec, rep)
        rows.append({k: rec[k] for k in ("P", "count", "predicted", "ratio")})
        reports.append({**rec, "sigma_infinity": rep.sigma_infinity.to_json() if rep.sigma_infinity else None,
                        "constant_c": rep.constant_c, "constant_c_literal_normalisation": rep.constant_c_literal})
    result = {"singular_series": series.value, "obstructed": series.obstructed,
              "all_primes_stabilized": series.all_stabilized, "rows": reports}
    _emit(args, result, rows, started)


def _parse_m(f, n, text):
    if not text:
        return [f.zero()] * n
    vals = [_element(f, x) for x in text.split(",")]
    if len(vals) != n:
        raise InvalidInput(f"--m needs {n} comma-separated elements")
    return vals


def _expsum_record(F, b, N, m, budget, cross_check):
    S = s_sum_gamma(F, b, N, m, budget=budget)
    H = h_lattice(F, b)
    bound = s_bound(F, b, H)
    unit_bound = s_bound_by_unit(F, b)
    checks = {"bound_ok": abs(S) <= bound + 1e-6, "unit_bound_ok": abs(S) <= unit_bound + 1e-6}
    if cross_check:
        try:
            S2 = s_sum_moebius(F, b, N, m, budget=budget)
            checks["moebius_abs_dev"] = abs(S - S2)
            checks["moebius_agree"] = abs(S - S2) <= 1e-8 * max(1.0, abs(S))
        except BudgetError as exc:
            checks["moebius"] = f"skipped: {exc}"
    return {"ideal": b.to_json(), "norm": b.norm(), "m": [format_element(x) for x in m],
            "S_re": float(S.real), "S_im": float(S.imag), "bound": bound, "bound_ratio": abs(S) / bound,
            "unit_bound": unit_bound, "unit_bound_ratio": abs(S) / unit_bound, "checks": checks}


def cmd_expsum(args, started):
    f = _field(args)
    F = _form(args, f)
    N = _element(f, args.N)
    if args.sweep_norm:
        rows = []
        m = [f.zero()] * F.n
        for b in ideals_up_to_norm(f, args.sweep_norm):
            if b.is_unit():
                continue
            try:
                rows.append(_expsum_record(F, b, N, m, args.budget, False))
            except (BudgetError, SearchBoundError) as exc:
                rows.append({"ideal": b.to_json(), "norm": b.norm(), "error": str(exc)})
        flat = [{"norm": r["norm"], "ideal": r["ideal"], "S_re": r.get("S_re"), "S_im": r.get("S_im"),
                 "bound_ratio": r.get("bound_ratio"), "unit_bound_ratio": r.get("unit_bound_ratio")}
                for r in rows]
        _emit(args, {"records": rows}, flat, started)
        return
    if not args.ideal:
        raise InvalidInput("--ideal or --sweep-norm is required")
    b = _ideal(f, args.ideal)
    m = _parse_m(f, F.n, args.m)
    rec = _expsum_record(F, b, N, m, args.budget, True)
    _emit(args, rec, [{k: v for k, v in rec.items() if k != "checks"}], started)


def cmd_char(args, started):
    f = _field(args)
    if not args.ideal:
        raise InvalidInput("--ideal is required")
    b = _ideal(f, args.ideal)
    chi = find_primitive_gamma(b)
    out = {"ideal": b.to_json(), "norm": b.norm(), "gamma": format_element(chi.gamma),
           "alpha": format_element(chi.alpha), "g": chi.g, "nu": format_element(chi.nu),
           "p1": chi.p1.to_json(), "e": chi.e.to_json(), "certificate_verified": verify_certificate(chi)}
    if b.norm() <= 2000:
        out["primitive_by_enumeration"] = is_primitive_bruteforce(chi.gamma, b)
    _emit(args, out, [{k: v for k, v in out.items() if not isinstance(v, dict)}], started)


def cmd_check_assumptions(args, started):
    f = _field(args)
    F = _form(args, f)
    out = {"G_set": sorted(F.G_set)}
    adm, _ = is_admissible(F, seed=args.seed)
    out["admissible"] = adm
    S = special_shape_of(F)
    if S is None:
        out["special_shape"] = False
    else:
        out["special_shape"] = True
        out["m"] = S.m
        out["tau"] = S.tau
        res = check_assumptions(S, seed=args.seed)
        res["det_A"] = format_element(res["det_A"])
        res["det_B"] = format_element(res["det_B"])
        out.update(res)
    _emit(args, out, None, started)


# ---------------------------------------------------------------- parser
def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--field", default="Qsqrt:2", help="builtin (Qsqrt:D, cyclic7) or a field JSON file")
    common.add_argument("--form", help="form JSON file, inline JSON, or shorthand like 'a=1,1;b=1'")
    common.add_argument("--N", default="0", help="target element, e.g. '3' or '1+1*w2'")
    common.add_argument("--P", default="24", help="scale or comma-separated list of scales")
    common.add_argument("--pmax", type=int, default=50)
    common.add_argument("--lmax", type=int, default=3)
    common.add_argument("--delta", type=float, default=0.25)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=10 ** 9)
    common.add_argument("--threads", type=int, default=1, help="accepted for compatibility; work runs on one thread")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="gqforms", description="Generalised quadratic forms over number fields.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("descend", parents=[common], help="descended rational system of a form")
    s.set_defaults(func=cmd_descend, N=None)
    s = sub.add_parser("lift", parents=[common], help="form with a given descended system")
    s.add_argument("--system", help="system JSON file, '-' for stdin")
    s.set_defaults(func=cmd_lift)
    for name, fn, hlp in (("count", cmd_count, "exact solution counts in a box"),
                          ("compare", cmd_compare, "counts against the predicted main term"),
                          ("predict", cmd_predict, "singular series, singular integral, main term")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("--weight", choices=("indicator", "smooth", "none-box"), default="indicator")
        s.add_argument("--mode", choices=("auto", "direct", "split"), default="auto")
        s.add_argument("--samples", type=int, default=1_000_000)
        s.set_defaults(func=fn)
    s = sub.add_parser("expsum", parents=[common], help="complete exponential sums")
    s.add_argument("--ideal", help="comma-separated generators")
    s.add_argument("--m", help="comma-separated entries of m (default zero)")
    s.add_argument("--sweep-norm", type=int, help="all ideals up to this norm, m = 0")
    s.set_defaults(func=cmd_expsum)
    s = sub.add_parser("char", parents=[common], help="certified primitive character modulo an ideal")
    s.add_argument("--ideal", help="comma-separated generators")
    s.set_defaults(func=cmd_char)
    s = sub.add_parser("check-assumptions", parents=[common], help="structural hypotheses of a form")
    s.set_defaults(func=cmd_check_assumptions)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        args.func(args, started)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except SearchBoundError as exc:
        print(f"search bound reached: {exc}", file=sys.stderr)
        return EXIT_SEARCH
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
