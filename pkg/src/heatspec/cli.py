"""Command-line front end: oracle checks, audits, sweeps, plots.

Exit codes: 0 on success, 2 for configuration errors, 3 when a check run
with --assert misses its threshold.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from .filters import audit_axioms, parse_filter, qualification_margin
from .heat_kernel import (
    HeatKernelParams,
    basis_for_kernel,
    circle_kernel_closed_form,
    kernel_eval,
    mercer_weights,
    sphere_kernel_addition,
    torus_kernel_product,
)
from .manifolds import get_manifold, manifold_kinds, weyl_envelope
from .minimax import build_hard_family, check_conditions, gilbert_varshamov, kl_divergence
from .power_space import effective_dimension, error_norm
from .experiments import (
    ExperimentConfig,
    fit_rate,
    load_config_file,
    plot_rate_svg,
    read_rate_csv,
    run_convergence_sweep,
    target_rate_exponent,
    write_rate_csv,
)

_EXIT_OK = 0
_EXIT_CONFIG = 2
_EXIT_ASSERT = 3

_CALIBRATION_GRID = (0.1, 0.3, 1.0, 3.0)


class _ConfigError(Exception):
    pass


def _emit_csv(columns, rows, output):
    if output is None:
        writer = csv.writer(sys.stdout)
        writer.writerow(columns)
        writer.writerows(rows)
    else:
        with open(output, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(columns)
            writer.writerows(rows)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return "" if value is None else str(value)


def _parse_t_list(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise _ConfigError(f"bad t list {text!r}") from None
    if not values:
        raise _ConfigError("empty t list")
    return values


def _kernel_check_one(kind: str, t: float, grid_size: int, tail_tol: float) -> float:
    man = get_manifold(kind)
    params = HeatKernelParams(t=t, tail_tol=tail_tol)
    basis = basis_for_kernel(man, params)
    if kind == "circle":
        theta = np.linspace(0.0, 2.0 * math.pi, grid_size)
        x = np.column_stack([np.cos(theta), np.sin(theta)])
        z = np.tile([1.0, 0.0], (grid_size, 1))
        closed = circle_kernel_closed_form(t, theta, 0.0)
    elif kind == "sphere2":
        ang = np.linspace(0.0, math.pi, grid_size)
        x = np.column_stack([np.sin(ang), np.zeros(grid_size), np.cos(ang)])
        z = np.tile([0.0, 0.0, 1.0], (grid_size, 1))
        closed = sphere_kernel_addition(t, np.cos(ang))
    else:
        d1 = np.linspace(0.0, 2.0 * math.pi, grid_size, endpoint=False)
        d2 = np.linspace(0.0, math.pi, grid_size, endpoint=False)
        x = np.column_stack([d1, d2])
        z = np.zeros((grid_size, 2))
        closed = torus_kernel_product(t, x, z)
    mercer = kernel_eval(basis, params, x, z)
    return float(np.max(np.abs(mercer - closed)))


def _cmd_kernel_check(args) -> int:
    kinds = [args.manifold] if args.manifold else list(manifold_kinds())
    t_values = _parse_t_list(args.t)
    rows = []
    worst = 0.0
    for kind in kinds:
        for t in t_values:
            diff = _kernel_check_one(kind, t, args.grid_size, args.tail_tol)
            worst = max(worst, diff)
            rows.append([kind, _fmt(t), args.grid_size, _fmt(diff)])
    _emit_csv(("manifold", "t", "grid_size", "max_abs_diff"), rows, args.output)
    if args.assert_ and worst >= args.tol:
        print(f"kernel-check: worst discrepancy {worst:g} >= {args.tol:g}", file=sys.stderr)
        return _EXIT_ASSERT
    return _EXIT_OK


_AXIOM_FIELDS = (
    ("sg_nonnegative", "sg_below_zero"),
    ("sg_at_most_one", "sg_above_one"),
    ("residual_at_most_one", "residual_above_one"),
    ("g_at_most_inv_lambda", "g_above_inv_lambda"),
)


def _cmd_filter_audit(args) -> int:
    families = (
        [parse_filter(args.filter)]
        if args.filter
        else [parse_filter(name) for name in ("tikhonov", "cutoff", "landweber")]
    )
    man = get_manifold(args.manifold or "circle")
    params = HeatKernelParams(t=args.t, tail_tol=args.tail_tol)
    kappa_sq = float(mercer_weights(basis_for_kernel(man, params), params).sum())
    s_grid = np.geomspace(1e-9, kappa_sq, 120)
    rows = []
    failed = False
    for family in families:
        audit = audit_axioms(family, s_grid=s_grid)
        failed = failed or not audit.passes()
        for label, field in _AXIOM_FIELDS:
            rows.append([audit.family_label, label, _fmt(getattr(audit, field)), "", ""])
        for alpha in (0.5, 1.0, 1.5, 5.0):
            margin = qualification_margin(family, alpha, s_grid=s_grid)
            rows.append([family.label, "qualification", "", _fmt(alpha), _fmt(margin)])
    _emit_csv(("family", "axiom", "worst_violation", "alpha", "margin"), rows, args.output)
    if args.assert_ and failed:
        print("filter-audit: an axiom bound is violated beyond tolerance", file=sys.stderr)
        return _EXIT_ASSERT
    return _EXIT_OK


def _cmd_effdim(args) -> int:
    man = get_manifold(args.manifold or "circle")
    lams = sorted(_parse_t_list(args.lam), reverse=True)
    if any(lam <= 0 for lam in lams):
        raise _ConfigError("lambda values must be positive")
    # the tail gate needs the first omitted weight below 1e-12 * lam, so
    # size the basis for the smallest lambda requested
    tail_tol = min(args.tail_tol, 1e-13 * min(lams))
    params = HeatKernelParams(t=args.t, tail_tol=tail_tol)
    basis = basis_for_kernel(man, params)
    rows = []
    ratios = []
    for lam in lams:
        value = effective_dimension(basis, params, lam)
        ratio = value / math.log(1.0 / lam) ** (man.dim / 2.0) if lam < 1 else float("nan")
        ratios.append(ratio)
        rows.append([man.kind, _fmt(args.t), _fmt(lam), _fmt(value), _fmt(ratio)])
    _emit_csv(("manifold", "t", "lambda", "N", "bound_ratio"), rows, args.output)
    finite = [r for r in ratios if math.isfinite(r)]
    if finite:
        spread = max(finite) / min(finite)
        print(f"certified D = {max(finite):.6g} (ratio spread {spread:.4g})", file=sys.stderr)
        if args.assert_ and spread > 3.0:
            print(f"effdim: ratio spread {spread:.4g} > 3", file=sys.stderr)
            return _EXIT_ASSERT
    return _EXIT_OK


def _merged_config(args) -> ExperimentConfig:
    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    overrides = {
        "manifold": args.manifold,
        "t": args.t,
        "filter": args.filter,
        "beta": args.beta,
        "gamma": args.gamma,
        "radius": args.radius,
        "sigma": args.sigma,
        "n_grid": tuple(int(p) for p in args.n_grid.split(",")) if args.n_grid else None,
        "seeds": args.seeds,
        "c": getattr(args, "c", None),
        "target_modes": args.target_modes,
        "seed": args.seed,
        "output": args.output,
    }
    values.update({key: val for key, val in overrides.items() if val is not None})
    return ExperimentConfig(**values)


def _report_fit(rows, config) -> "tuple[float, object]":
    fit = fit_rate(rows)
    target = target_rate_exponent(config.beta, config.gamma)
    print(
        f"{config.manifold} {config.filter} beta={config.beta} gamma={config.gamma} "
        f"c={config.c}: slope={fit.slope:.4f} (target {target:.4f}) "
        f"r2={fit.r_squared:.4f} over {fit.cells} n-levels"
    )
    return target, fit


def _cmd_rate_sweep(args) -> int:
    config = _merged_config(args)
    rows = run_convergence_sweep(config, jobs=args.jobs)
    if config.output:
        write_rate_csv(rows, config.output)
    else:
        _emit_csv(
            tuple(rows[0].keys()),
            [[_fmt(v) for v in row.values()] for row in rows],
            None,
        )
    bad = [row for row in rows if row["status"] != "ok"]
    if bad:
        print(f"{len(bad)} of {len(rows)} cells failed", file=sys.stderr)
    target, fit = _report_fit(rows, config)
    if args.plot:
        plot_rate_svg(rows, args.plot)
    if args.assert_:
        lo = args.slope_min if args.slope_min is not None else target - 0.25
        hi = args.slope_max if args.slope_max is not None else target + 0.25
        if not (lo <= fit.slope <= hi and fit.r_squared >= args.r2_min):
            print(
                f"rate-sweep: slope {fit.slope:.4f} outside [{lo:.4f}, {hi:.4f}] "
                f"or r2 {fit.r_squared:.4f} < {args.r2_min}",
                file=sys.stderr,
            )
            return _EXIT_ASSERT
    return _EXIT_OK


def _cmd_calibrate(args) -> int:
    best = None
    for c in _CALIBRATION_GRID:
        args.c = c
        config = _merged_config(args)
        rows = run_convergence_sweep(config, jobs=args.jobs)
        target, fit = _report_fit(rows, config)
        gap = abs(fit.slope - target)
        if best is None or gap < best[0]:
            best = (gap, c, fit)
    print(f"recommended c = {best[1]} (slope gap {best[0]:.4f})")
    return _EXIT_OK


def _cmd_minimax_audit(args) -> int:
    man = get_manifold(args.manifold or "circle")
    params = HeatKernelParams(t=args.t)
    basis = basis_for_kernel(man, params, min_size=2 * args.k)
    code = gilbert_varshamov(args.k, seed=args.seed)
    p = man.density
    log_n = math.log(args.n)
    mode_coeff = args.k / log_n ** (man.dim / 2.0)
    weyl = weyl_envelope(basis)
    # smallest rate exponent the gamma > 0 window admits; gamma = 0 forces 1
    rate = min(1.0, max(1e-9, 1.0 - args.gamma * args.t * weyl.c_low * mode_coeff ** (2.0 / man.dim)))
    if args.eps is not None:
        eps = args.eps
        eps_coeff = eps * args.n**rate
    else:
        eps_coeff = min(
            args.a * p ** (-args.gamma) * args.sigma**2 * math.log(2.0) / 4.0,
            p ** (args.beta - args.gamma) * args.radius**2 / mode_coeff,
        )
        eps = eps_coeff * args.n ** (-rate)
    family = build_hard_family(basis, params, args.gamma, eps, code)
    report = check_conditions(
        family,
        args.n,
        args.sigma,
        args.a,
        args.radius,
        args.beta,
        weyl,
        rate,
        mode_coeff,
        eps_coeff,
    )
    rows = []
    members = family.members
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            dist_sq = error_norm(members[i], members[j], args.gamma) ** 2
            kl = kl_divergence(members[i], members[j], args.n, args.sigma)
            rows.append([i, j, _fmt(dist_sq), _fmt(kl)])
    _emit_csv(("i", "j", "distance_sq", "kl"), rows, args.output)

    def line(name, ok, detail):
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")

    hamming = code.pairwise_hamming(code.strings)
    off_diag = hamming[np.triu_indices(code.count, k=1)]
    print(f"code: {code.count} strings of length {args.k}, min pairwise distance "
          f"{int(off_diag.min())}")
    print(f"family: eps={eps:g} (coeff {eps_coeff:g} at rate n^-{rate:g}), "
          f"power gamma={args.gamma}")
    line(
        "source norm",
        report.source_ok,
        f"worst {report.source_worst_sq:g} <= limit {report.source_limit_sq:g}",
    )
    line("kl budget", report.kl_ok, f"worst {report.kl_worst:g} <= limit {report.kl_limit:g}")
    line(
        "exponent margins",
        report.exponents_ok,
        f"upper {report.source_exponent_margin:g} < 0, "
        f"lower {report.kl_exponent_margin:g} <= 0",
    )
    line(
        "eps coefficient",
        report.eps_coeff_ok,
        f"{report.eps_coeff:g} <= cap {report.eps_coeff_cap:g}",
    )
    all_ok = report.conditions_ok and report.exponents_ok and report.eps_coeff_ok
    if args.assert_ and not all_ok:
        return _EXIT_ASSERT
    return _EXIT_OK


def _cmd_plot(args) -> int:
    rows = read_rate_csv(args.input)
    plot_rate_svg(rows, args.output)
    print(f"wrote {args.output}")
    return _EXIT_OK


def _add_assert_flag(parser):
    parser.add_argument(
        "--assert",
        dest="assert_",
        action="store_true",
        help="exit with code 3 when the check misses its threshold",
    )


def _add_sweep_flags(parser, with_c=True):
    parser.add_argument("--config", help="key = value config file; flags override it")
    parser.add_argument("--manifold", choices=manifold_kinds())
    parser.add_argument("--t", type=float)
    parser.add_argument("--filter", help="tikhonov | cutoff | landweber[:steps]")
    parser.add_argument("--beta", type=float)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--radius", type=float)
    parser.add_argument("--sigma", type=float)
    parser.add_argument("--n-grid", help="comma-separated ascending sample sizes")
    parser.add_argument("--seeds", type=int)
    if with_c:
        parser.add_argument("--c", type=float, help="schedule constant")
    parser.add_argument("--target-modes", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--output", help="CSV path (default: stdout)")
    parser.add_argument("--jobs", type=int, default=1, help="parallel cells")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatspec",
        description="Heat-kernel spectral regression: oracle checks, audits, rate sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel-check", help="Mercer sum against closed-form kernels")
    p.add_argument("--manifold", choices=manifold_kinds(), help="default: all")
    p.add_argument("--t", default="0.1,0.5,1,5", help="comma-separated diffusion times")
    p.add_argument("--grid-size", type=int, default=100)
    p.add_argument("--tail-tol", type=float, default=1e-12)
    p.add_argument("--tol", type=float, default=1e-10, help="assert threshold")
    p.add_argument("--output", help="CSV path (default: stdout)")
    _add_assert_flag(p)
    p.set_defaults(func=_cmd_kernel_check)

    p = sub.add_parser("filter-audit", help="filter axioms and qualification margins")
    p.add_argument("--filter", help="audit one family instead of all three")
    p.add_argument("--manifold", choices=manifold_kinds(), help="sets the spectrum top (default circle)")
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--tail-tol", type=float, default=1e-12)
    p.add_argument("--output", help="CSV path (default: stdout)")
    _add_assert_flag(p)
    p.set_defaults(func=_cmd_filter_audit)

    p = sub.add_parser("effdim", help="effective dimension and its log-power ratio")
    p.add_argument("--manifold", choices=manifold_kinds())
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument(
        "--lam",
        default="0.1,0.01,0.001,0.0001,0.00001,0.000001",
        help="comma-separated regularization levels",
    )
    p.add_argument("--tail-tol", type=float, default=1e-12)
    p.add_argument("--output", help="CSV path (default: stdout)")
    _add_assert_flag(p)
    p.set_defaults(func=_cmd_effdim)

    p = sub.add_parser("rate-sweep", help="convergence sweep over (n, seed) cells")
    _add_sweep_flags(p)
    p.add_argument("--plot", help="also write a log-log SVG here")
    p.add_argument("--slope-min", type=float, help="assert band (default target - 0.25)")
    p.add_argument("--slope-max", type=float, help="assert band (default target + 0.25)")
    p.add_argument("--r2-min", type=float, default=0.9)
    _add_assert_flag(p)
    p.set_defaults(func=_cmd_rate_sweep)

    p = sub.add_parser("calibrate", help="scan the schedule constant c")
    _add_sweep_flags(p, with_c=False)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("minimax-audit", help="packing family and divergence conditions")
    p.add_argument("--manifold", choices=manifold_kinds())
    p.add_argument("--t", type=float, default=0.01)
    p.add_argument("--k", type=int, default=16, help="code length / half the mode window")
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--eps", type=float, help="override the derived per-coordinate energy")
    p.add_argument("--n", type=int, default=4096)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--a", type=float, default=0.05, help="KL budget fraction in (0, 1/8)")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="pairwise CSV path (default: stdout)")
    _add_assert_flag(p)
    p.set_defaults(func=_cmd_minimax_audit)

    p = sub.add_parser("plot", help="log-log SVG from a rate-sweep CSV")
    p.add_argument("input", help="rate-sweep CSV")
    p.add_argument("--output", required=True, help="SVG path")
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (_ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
