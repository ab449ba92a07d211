"""Command-line front end: ``python -m fatoulab <subcommand> ...``.

Every subcommand resolves its configuration first, writes its tables into
the output directory (CSV with a header row, or JSON with ``--format json``)
and prints one line per check.  Exit status is 0 when every check passes,
1 when one fails (the line names the inequality) and 2 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .circle import CircleGrid, function_from_spec, grid_for
from .convolution import convergence_trace
from .counterexample import (
    ConstructionError,
    block_lower_bound,
    build_spec,
    bv_mean_check,
    divergence_profile,
    assemble,
)
from .functionals import (
    default_ladder,
    lemma_phi_star_bounds_check,
    pi_functional,
    pi_infinity,
    region_from_spec,
    slice_quantities,
    small_c_phi,
    synthesize_region,
)
from .kernels import check_identity_axioms, family_from_spec
from .maximal import (
    annulus_bound_check,
    hl_maximal,
    holder_bound_check,
    phi_lambda_star,
    pointwise_bound_check,
    t_a_check,
    tail_bound_check,
    weak_type_ratio,
)

DEFAULT_N = 2 ** 16
DEFAULT_OUT = "fatoulab_out"
# default rung ranges 1 - 2^-j; the construction may go much closer to 1
J_RANGES = {"counterexample": (3, 40)}
J_DEFAULT = (3, 14)


class InputError(ValueError):
    """Bad configuration: reported with exit status 2."""


@dataclass
class RunConfig:
    subcommand: str
    kernel: object
    region: object
    p: float
    n: int
    j_min: int
    j_max: int
    out: Path
    fmt: str
    gnuplot_stub: bool = False
    seed: Optional[int] = None
    written: list = field(default_factory=list)

    @property
    def r_seq(self) -> np.ndarray:
        return default_ladder(self.j_min, self.j_max)

    def grid_rule(self):
        return lambda r: grid_for(r, self.n)


# -- output -----------------------------------------------------------------------


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(cfg: RunConfig, stem: str, header: Sequence[str], rows) -> Path:
    """Write rows as ``stem.csv`` (header first) or ``stem.json`` (list of objects)."""
    rows = [list(r) for r in rows]
    if cfg.fmt == "json":
        path = cfg.out / f"{stem}.json"
        objs = [{h: _jsonable(v) for h, v in zip(header, r)} for r in rows]
        path.write_text(json.dumps(objs, indent=2) + "\n")
    else:
        path = cfg.out / f"{stem}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow([_cell(v) for v in r])
    cfg.written.append((path, list(header)))
    return path


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def write_summary(cfg: RunConfig, stem: str, obj: dict) -> Path:
    path = cfg.out / f"{stem}.json"
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def write_gnuplot_stub(cfg: RunConfig) -> Optional[Path]:
    csvs = [(p, h) for p, h in cfg.written if p.suffix == ".csv" and len(h) >= 2]
    if not csvs:
        return None
    lines = ["# plotting script for the tables of this run", "set datafile separator ','",
             "set key autotitle columnhead", "set logscale y"]
    for p, h in csvs:
        cols = ", ".join(f"'{p.name}' using 1:{i + 1} with linespoints"
                         for i in range(1, len(h)))
        lines.append(f"set title '{p.stem}'; set xlabel '{h[0]}'")
        lines.append(f"plot {cols}")
        lines.append("pause -1")
    path = cfg.out / "plot.gp"
    path.write_text("\n".join(lines) + "\n")
    return path


def check_line(name: str, ok: bool, detail: str = "") -> str:
    verdict = "PASS" if ok else "FAIL"
    return f"{verdict} {name}" + (f": {detail}" if detail else "")


# -- subcommands ----------------------------------------------------------------------


def cmd_kernel(cfg: RunConfig, args) -> bool:
    fam = cfg.kernel
    r = args.r
    if not 0.0 < r < 1.0:
        raise InputError("--r must lie in (0, 1)")
    s = fam.slice(r)
    xs = np.asarray(args.x, dtype=float)
    if args.what == "norms":
        q = slice_quantities(fam, r)
        rows = [("c", s.c), ("sup_norm", q["sup_norm"]), ("phi_star", q["phi_star"]),
                ("mu", q["mu"]), ("central_ratio", q["central_ratio"])]
        for k, v in rows:
            print(f"{k} {float(v)!r}")
        if args.write:
            write_table(cfg, "kernel_norms", ["quantity", "value"], rows)
        return True
    vals = s.evaluate(xs) if args.what == "evaluate" else s.majorant_at(xs)
    vals = np.atleast_1d(vals)
    if len(xs) == 1:
        print(repr(float(vals[0])))
    else:
        for x, v in zip(xs, vals):
            print(f"{float(x)!r} {float(v)!r}")
    if args.write:
        write_table(cfg, "kernel", ["x", "value"], zip(xs, vals))
    return True


def cmd_axioms(cfg: RunConfig, args) -> bool:
    rep = check_identity_axioms(cfg.kernel, cfg.r_seq, args.x_probes, cfg.grid_rule(),
                                args.tol)
    header = ["r", "phi1_deviation", "phi3_mass"] + [f"phi2_x{k}" for k in range(len(args.x_probes))]
    write_table(cfg, "axioms", header, ([row[h] for h in header] for row in rep.rows()))
    write_summary(cfg, "axioms_summary", {"kernel": cfg.kernel.to_spec(), "ok": rep.ok,
                                          "flags": rep.flags, "phi3_sup": rep.phi3_sup,
                                          "x_probes": list(args.x_probes)})
    print(check_line("approximate identity axioms (unit mass, decreasing majorant, bounded majorant mass)",
                     rep.ok, "; ".join(rep.flags) or f"max mass {rep.phi3_sup:.6g}"))
    return rep.ok


def cmd_functionals(cfg: RunConfig, args) -> bool:
    fam, lam, p = cfg.kernel, cfg.region, cfg.p
    r_seq = cfg.r_seq
    plain = pi_functional("plain", lam, fam, r_seq)
    pp = pi_functional("p", lam, fam, r_seq, p=p)
    cs = small_c_phi(fam, r_seq)
    rows = []
    for i, r in enumerate(r_seq):
        q = slice_quantities(fam, r)
        rows.append((r, float(lam(r)), q["sup_norm"], q["phi_star"], q["mu"], q["central_ratio"],
                     plain.values[i], pp.values[i]))
    write_table(cfg, "functionals", ["r", "lambda", "sup_norm", "phi_star", "mu", "central_ratio",
                                     "pi_plain", "pi_p"], rows)
    table = pi_infinity(lam, fam, args.delta, r_seq)
    write_table(cfg, "pi_infinity", ["delta", "r", "mass"],
                ((d, r, table[i, j]) for i, d in enumerate(args.delta) for j, r in enumerate(r_seq)))
    rep = lemma_phi_star_bounds_check(fam, r_seq, cfg.grid_rule(), c=args.c)
    write_table(cfg, "phi_star_bounds", ["r", "phi_star", "sup_norm", "lower_bound", "c_phi",
                                         "lower_ok", "upper_ok", "hypothesis_ok"],
                ([row[k] for k in ("r", "phi_star", "sup_norm", "lower_bound", "c_phi", "lower_ok",
                                   "upper_ok", "hypothesis_ok")] for row in rep.rows()))
    write_summary(cfg, "functionals_summary", {
        "kernel": fam.to_spec(), "region": lam.to_spec(), "p": p,
        "pi_plain_tail": plain.tail_value, "pi_p_tail": pp.tail_value, "pi_p_sup": pp.sup_value,
        "pi_p_growth": pp.growth(), "c_phi": rep.c_phi, "c_phi_small": cs.tail_value,
        "tail_rule": pp.tail_rule, "phi_star_bounds_passed": rep.passed,
        "rectangle_step_ok": rep.node_rectangle_ok})
    print(f"INFO moment functional: tail {pp.tail_value:.6g}, sup {pp.sup_value:.6g}, "
          f"growth {pp.growth():.6g}; c_phi {cs.tail_value:.6g}")
    bad = [float(r) for r, lo, up in zip(rep.r_values, rep.lower_ok, rep.upper_ok) if not (lo and up)]
    print(check_line(f"moment bounds {rep.c:g}/log||phi_r||_inf <= phi_*(r) <= C_phi",
                     rep.passed, "all rungs" if rep.passed else f"violated at r = {bad}"))
    return rep.passed


def cmd_region(cfg: RunConfig, args) -> bool:
    fam, p = cfg.kernel, cfg.p
    r_seq = cfg.r_seq
    lam = synthesize_region(fam, p, args.target, args.mode, r_seq)
    lv = lam(r_seq)
    write_table(cfg, "region", ["r", "lambda"], zip(r_seq, lv))
    eps = 1.0 - r_seq
    L = np.log(1.0 / eps)
    write_table(cfg, "region_rates", ["r", "lambda", "one_minus_r", "rate_log_p",
                                      "ratio_power", "ratio_log_p"],
                zip(r_seq, lv, eps, eps * L ** p, lv / eps, lv / (eps * L ** p)))
    write_summary(cfg, "region_summary", {"kernel": fam.to_spec(), "p": p, "mode": args.mode,
                                          "target": args.target, "region": lam.to_spec()})
    print(f"INFO region synthesized on {len(r_seq)} rungs; lambda(r_max) = {float(lv[-1]):.6g}")
    return True


def cmd_converge(cfg: RunConfig, args) -> bool:
    f = function_from_spec(args.f)
    tr = convergence_trace(cfg.kernel, f, cfg.region, args.x, cfg.r_seq, cfg.grid_rule())
    write_table(cfg, "trace", ["r", "lambda", "sup_deviation"], tr.rows)
    final = float(tr.sup_deviation[-1])
    print(f"INFO final sup deviation {final:.6g} at r = {float(tr.r[-1])!r}")
    if args.tol is None:
        return True
    mono = tr.monotone_tail(args.tail)
    ok = mono and final < args.tol
    print(check_line("convergence in the region |theta - x| < lambda(r)", ok,
                     f"monotone over last {args.tail} rungs: {mono}, final {final:.6g} vs {args.tol:g}"))
    return ok


def cmd_maximal(cfg: RunConfig, args) -> bool:
    fam, lam, p = cfg.kernel, cfg.region, cfg.p
    f = function_from_spec(args.f)
    grid = CircleGrid(args.nodes)
    r_seq = cfg.r_seq
    rep = pointwise_bound_check(fam, f, lam, p, grid, r_seq)
    field_ = rep.extra["field"]
    m = hl_maximal(f.abs_pow(p), grid)
    write_table(cfg, "phi_lambda_star", ["x", "value"], zip(grid.nodes, field_.values))
    write_table(cfg, "hl_maximal", ["x", "value"], zip(grid.nodes, m.values))
    write_table(cfg, "pointwise_bound", ["x", "lhs", "rhs", "margin"],
                zip(rep.x, rep.lhs, rep.rhs, rep.margin))
    weak = weak_type_ratio(phi_lambda_star(fam, f, lam, CircleGrid(args.weak_n), r_seq), f, p)
    summary = rep.summary()
    summary.update({k: v for k, v in rep.extra.items() if k != "field"})
    summary["weak_type_ratio"] = weak
    reports = [rep]
    if args.lemmas:
        reports.append(tail_bound_check(fam, f, lam, grid, r_seq))
        reports += [t_a_check(fam, f, p, A, grid, r_seq) for A in args.A]
        reports += [annulus_bound_check(fam, f, p, grid, r_seq, C=C) for C in args.C]
        if p > 1:
            reports.append(holder_bound_check(fam, f, p, lam, grid, r_seq))
        summary["lemmas"] = [r.summary() for r in reports[1:]]
        write_table(cfg, "lemma_margins", ["check", "x", "lhs", "rhs", "margin"],
                    ((r.name, x, a, b, c) for r in reports[1:]
                     for x, a, b, c in zip(r.x, r.lhs, r.rhs, r.margin)))
    write_summary(cfg, "maximal_summary", summary)
    print(f"INFO weak type ratio sup_t t^p |{{Phi* > t}}| / ||f||_p^p = {weak:.6g}")
    for r in reports:
        print(r.line())
    return all(r.passed for r in reports)


def _sample_points(cfg: RunConfig, count: int) -> np.ndarray:
    if cfg.seed is None:
        return 2 * math.pi * (np.arange(count) + 0.5) / count
    return np.sort(np.random.default_rng(cfg.seed).uniform(0.0, 2 * math.pi, count))


def cmd_counterexample(cfg: RunConfig, args) -> bool:
    fam, lam, p = cfg.kernel, cfg.region, cfg.p
    probe = default_ladder(cfg.j_min, cfg.j_max)
    try:
        spec = build_spec(fam, lam, p, args.K, args.mode, args.growth, r_probe=probe)
        assemble(spec)
    except ConstructionError as exc:
        print(check_line("divergence construction", False, str(exc)))
        return False
    spec.write_json(cfg.out / "counterexample.json")
    x = _sample_points(cfg, args.samples)
    prof = divergence_profile(spec, x_grid=x)
    write_table(cfg, "profile", ["k", "x", "sup", "S1", "S2", "S3"],
                ((k + 1, prof.x[i], prof.sup[k, i], prof.S1[k, i], prof.S2[k, i], prof.S3[k, i])
                 for k in range(prof.K) for i in range(len(prof.x))))
    block_rows, norm_ok, ratio_ok = [], True, True
    for rec in spec.records:
        b = rec.block
        val, _, cap = b.lp_chain()
        bb = block_lower_bound(fam, lam, p, b.r, float(x[0]), c_small=spec.c_small, block=b)
        norm_ok &= val <= cap * (1 + 1e-12)
        ratio_ok &= bb.passed
        block_rows.append((rec.k, b.r, b.n, b.mu, b.lam, b.Lambda, val, bb.ratio, bb.required))
    write_table(cfg, "blocks", ["k", "r", "n", "mu", "lambda", "Lambda", "lp_norm_p",
                                "lower_bound_ratio", "required_ratio"], block_rows)
    checks = [
        ("block norm ||f_r||_p^p <= 8 pi", norm_ok, ""),
        ("block lower bound Phi_r(x, f_r) >= (c_phi/2) Lambda^(1/p)", ratio_ok,
         f"min ratio {min(r[7] for r in block_rows):.6g} vs {spec.c_small / 2:.6g}"),
        ("later blocks |S3| <= 8 pi C_phi", prof.s3_ok(), f"max {float(prof.S3.max()):.6g}"),
        ("split sup >= S2 - S1 - S3", prof.decomposition_ok(), ""),
    ]
    frac = prof.fraction_increasing()
    if args.mode == "demo":
        checks.append(("windowed sups increase strictly in k", frac >= args.min_fraction,
                       f"fraction {frac:.4g} vs {args.min_fraction:g}"))
    else:
        checks.append(("windowed sups exceed C_phi k", prof.strict_ok(),
                       f"min sup {float(prof.sup.min()):.6g}"))
    write_summary(cfg, "counterexample_summary", {
        "radii": spec.radii, "K": spec.K, "mode": args.mode, "fraction_increasing": frac,
        "growth_factor": prof.growth_factor(), "bounds": prof.bounds,
        "checks": {name: ok for name, ok, _ in checks}})
    for name, ok, detail in checks:
        print(check_line(name, ok, detail))
    return all(ok for _, ok, _ in checks)


def cmd_lemma1(cfg: RunConfig, args) -> bool:
    f = function_from_spec(args.f)
    rows, ok = [], True
    for n in args.n_teeth:
        rep = bv_mean_check(f, n, args.delta_factor * math.pi / n, args.probes)
        rows.append((n, rep.delta, rep.max_error, rep.bound, rep.variation))
        ok &= rep.passed
        print(check_line(f"comb mean error <= 2 V / n (n={n})", rep.passed,
                         f"{rep.max_error:.3g} vs {rep.bound:.6g}"))
    write_table(cfg, "lemma1", ["n", "delta", "max_error", "bound", "variation"], rows)
    return ok


COMMANDS = {
    "kernel": cmd_kernel,
    "axioms": cmd_axioms,
    "functionals": cmd_functionals,
    "region": cmd_region,
    "converge": cmd_converge,
    "maximal": cmd_maximal,
    "counterexample": cmd_counterexample,
    "lemma1": cmd_lemma1,
}


# -- parsing ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kernel", default=None,
                        help='kernel spec: inline JSON or a .json path, e.g. \'{"kind":"poisson"}\'')
    common.add_argument("--region", default=None,
                        help='region spec, e.g. \'{"form":"power_log","c":1,"a":1,"b":2}\'')
    common.add_argument("--p", type=float, default=2.0)
    common.add_argument("--n", type=int, default=DEFAULT_N, help="minimum grid size (power of two)")
    common.add_argument("--r-min-exp", type=int, default=None, help="ladder starts at 1 - 2^-j_min")
    common.add_argument("--r-max-exp", type=int, default=None, help="ladder ends at 1 - 2^-j_max")
    common.add_argument("--out", default=None, help="output directory (else $FATOULAB_OUT)")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    common.add_argument("--gnuplot-stub", action="store_true",
                        help="also write plot.gp referencing the CSV tables")
    common.add_argument("--seed", type=int, default=None, help="randomize sample points")
    common.add_argument("--report-only", action="store_true", help="exit 0 even if a check fails")

    parser = argparse.ArgumentParser(prog="fatoulab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    k = sub.add_parser("kernel", parents=[common], help="evaluate a kernel slice")
    k.add_argument("--kind", choices=("poisson", "frac_poisson"), default=None)
    k.add_argument("--alpha", type=float, default=0.5)
    k.add_argument("--r", type=float, required=True)
    k.add_argument("--x", type=float, nargs="+", default=[0.0])
    k.add_argument("--what", choices=("evaluate", "majorant", "norms"), default="evaluate")

    a = sub.add_parser("axioms", parents=[common], help="check the approximate identity axioms")
    a.add_argument("--x-probes", type=float, nargs="+", default=[math.pi / 4, math.pi / 2, math.pi])
    a.add_argument("--tol", type=float, default=1e-6)

    f = sub.add_parser("functionals", parents=[common], help="moment functionals and bounds")
    f.add_argument("--delta", type=float, nargs="+", default=[0.25, 0.5, 1.0])
    f.add_argument("--c", type=float, default=0.2, help="constant of the lower moment bound")

    rg = sub.add_parser("region", parents=[common], help="synthesize lambda(r) from a target")
    rg.add_argument("--mode", choices=("moment", "holder"), default="moment")
    rg.add_argument("--target", type=float, default=1.0)

    c = sub.add_parser("converge", parents=[common], help="sup deviation trace at one point")
    c.add_argument("--f", default='{"kind":"power","beta":0.25}')
    c.add_argument("--x", type=float, default=math.pi)
    c.add_argument("--tol", type=float, default=None, help="assert final deviation below tol")
    c.add_argument("--tail", type=int, default=5)

    m = sub.add_parser("maximal", parents=[common], help="maximal operator bounds")
    m.add_argument("--f", default='{"kind":"power","beta":0.25}')
    m.add_argument("--nodes", type=int, default=64)
    m.add_argument("--lemmas", action="store_true", help="also run the four auxiliary bounds")
    m.add_argument("--A", type=float, nargs="+", default=[1.0, 4.0])
    m.add_argument("--C", type=float, nargs="+", default=[1.0, 4.0])
    m.add_argument("--weak-n", type=int, default=2 ** 14, help="grid size for the weak type ratio")

    ce = sub.add_parser("counterexample", parents=[common], help="divergence construction")
    ce.add_argument("--K", type=int, default=3)
    ce.add_argument("--mode", choices=("demo", "strict"), default="demo")
    ce.add_argument("--growth", type=float, default=4.0)
    ce.add_argument("--samples", type=int, default=16)
    ce.add_argument("--min-fraction", type=float, default=0.9)

    l1 = sub.add_parser("lemma1", parents=[common], help="comb means of a BV function")
    l1.add_argument("--f", default='{"kind":"cos","k":1}')
    l1.add_argument("--n-teeth", type=int, nargs="+", default=[8, 16, 32, 64])
    l1.add_argument("--delta-factor", type=float, default=0.25, help="delta = factor * pi / n")
    l1.add_argument("--probes", type=int, default=257)
    return parser


DEFAULT_KERNEL = {"counterexample": '{"kind":"frac_poisson","alpha":0.5}',
                  "maximal": '{"kind":"frac_poisson","alpha":0.5}',
                  "converge": '{"kind":"frac_poisson","alpha":0.5}'}
DEFAULT_REGION = {"counterexample": '{"form":"power_log","c":1,"a":1,"b":3}'}


def resolve(args, environ=None) -> RunConfig:
    """Turn parsed arguments into a RunConfig; raises InputError on bad specs."""
    environ = os.environ if environ is None else environ
    cmd = args.subcommand
    try:
        if cmd == "kernel" and args.kind is not None:
            spec = {"kind": args.kind, "alpha": args.alpha}
        else:
            spec = args.kernel or DEFAULT_KERNEL.get(cmd, '{"kind":"poisson"}')
        kernel = family_from_spec(spec)
        region = region_from_spec(args.region or DEFAULT_REGION.get(
            cmd, '{"form":"power_log","c":1,"a":1,"b":2}'))
        if cmd in ("converge", "maximal", "lemma1"):
            function_from_spec(args.f)
    except (ValueError, KeyError, OSError) as exc:
        raise InputError(f"bad spec: {exc}") from exc
    j_lo, j_hi = J_RANGES.get(cmd, J_DEFAULT)
    j_min = j_lo if args.r_min_exp is None else args.r_min_exp
    j_max = j_hi if args.r_max_exp is None else args.r_max_exp
    if not 1 <= j_min <= j_max:
        raise InputError("need 1 <= r-min-exp <= r-max-exp")
    if args.n < 8 or args.n & (args.n - 1):
        raise InputError("--n must be a power of two >= 8")
    if args.p < 1:
        raise InputError("--p must be >= 1")
    explicit = args.out is not None or "FATOULAB_OUT" in environ
    out = Path(args.out if args.out is not None else environ.get("FATOULAB_OUT", DEFAULT_OUT))
    out = out.expanduser().resolve()
    cfg = RunConfig(cmd, kernel, region, args.p, args.n, j_min, j_max, out, args.fmt,
                    args.gnuplot_stub, args.seed)
    # the kernel subcommand prints its values and writes a table only on request
    args.write = cmd != "kernel" or explicit
    if args.write:
        out.mkdir(parents=True, exist_ok=True)
    return cfg


def run(argv: Optional[Sequence[str]] = None, environ=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args, environ)
        ok = COMMANDS[cfg.subcommand](cfg, args)
    except InputError as exc:
        parser.print_usage(sys.stderr)
        print(f"fatoulab: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"fatoulab: error: {exc}", file=sys.stderr)
        return 2
    if cfg.gnuplot_stub and args.write:
        write_gnuplot_stub(cfg)
    if ok or args.report_only:
        return 0
    return 1


def main() -> None:
    sys.exit(run())
