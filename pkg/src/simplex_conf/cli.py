"""Command-line entry point: ``simplex-conf bounds|simulate|verify|chi2``.

Exit codes: 0 ok, 2 parse error, 3 zero count, 4 convergence failure,
5 failed verification, 6 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .approx import cdf_gap_bound, local_expansion_array, tv_bound
from .confopt import (
    ConfidenceSpec,
    Objective,
    PseudoCounts,
    confidence_bounds,
    containment_check,
    fig2_matrix,
    neg_entropy,
    quadratic,
    smooth_half,
)
from .domain import (
    ModelParams,
    count_vector_from_full,
    make_simplex_point,
    simplex_point_from_full,
)
from .errors import ConvergenceError, SimplexConfError, ZeroCount
from .multinomial import central_moments, log_pmf_array, support_array
from .oracle import QuadratureConfig, sup_cdf_gap, tv_estimate
from .simulate import CSV_HEADER, format_csv, run_coverage
from .specfun import chi2_cdf, chi2_quantile
from .svg import Series, write_svg

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_ZERO_COUNT = 3
EXIT_CONVERGENCE = 4
EXIT_VERIFY = 5
EXIT_IO = 6

FIG1_P0 = (0.2, 0.3, 0.5)
FIG2_P0 = (0.2, 0.3, 0.15, 0.35)


class UsageError(Exception):
    """Bad command-line or input-file content (exit 2)."""


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def _parse_list(text: str, kind=float, what: str = "list") -> list:
    try:
        items = [kind(tok) for tok in str(text).replace(" ", "").split(",") if tok != ""]
    except ValueError as exc:
        raise UsageError(f"malformed {what} {text!r}") from exc
    if not items:
        raise UsageError(f"empty {what}")
    return items


def _parse_counts(text: str) -> list[int]:
    counts = _parse_list(text, str, "counts")
    out = []
    for tok in counts:
        if not tok.isdigit():
            raise UsageError(f"malformed counts {text!r}: {tok!r} is not a nonnegative integer")
        out.append(int(tok))
    return out


def read_counts_csv(path: str | Path) -> tuple[list[int], list[float]]:
    """Read a ``category,value,count`` file; returns (counts, values) in file order."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read counts file {path}: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["category", "value", "count"]:
        raise UsageError(f"{path}: header must be 'category,value,count'")
    counts, values = [], []
    for line, row in enumerate(reader, start=2):
        try:
            values.append(float(row["value"]))
            c = row["count"].strip()
            if not c.isdigit():
                raise ValueError(c)
            counts.append(int(c))
        except (ValueError, AttributeError) as exc:
            raise UsageError(f"{path}:{line}: malformed row {row}") from exc
    return counts, values


def _read_matrix(path: str, d: int) -> np.ndarray:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError:
        raise
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc
    if isinstance(raw, dict):
        raw = raw.get("A")
    try:
        A = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: matrix must be a list of rows") from exc
    if A.shape != (d, d):
        raise UsageError(f"{path}: expected a {d}x{d} matrix, got shape {A.shape}")
    return 0.5 * (A + A.T)


def build_objective(spec: str, d: int, values: Optional[Sequence[float]]) -> Objective:
    """``negentropy``, ``quadratic:fig2`` or ``quadratic:<json file>``."""
    if spec == "negentropy":
        return neg_entropy()
    if spec.startswith("quadratic:"):
        src = spec.split(":", 1)[1]
        if src == "fig2":
            if d != 3:
                raise UsageError(f"the fig2 matrix needs four categories (d=3), got d={d}")
            v = values if values is not None else (1.0, 2.0, 3.0, 4.0)
            A = fig2_matrix(v)
        else:
            A = _read_matrix(src, d)
        try:
            return quadratic(A, values)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    raise UsageError(f"unknown objective {spec!r}")


def _spec_from_args(args) -> ConfidenceSpec:
    try:
        return ConfidenceSpec(alpha=args.alpha, epsilon_mode=args.epsilon_mode, tau=args.tau)
    except (ValueError, SimplexConfError) as exc:
        raise UsageError(str(exc)) from exc


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def _point_list(p) -> Optional[list]:
    return None if p is None else [float(v) for v in p.full]


def bounds_payload(counts: list[int], obj_name: str, values, args) -> dict:
    if len(counts) < 2:
        raise UsageError("need at least two categories")
    observed = count_vector_from_full(counts)
    d = observed.d
    obj = build_objective(obj_name, d, values)
    spec = _spec_from_args(args)
    target = observed
    if args.smooth == "half":
        target = smooth_half(observed)
    elif np.any(observed.full == 0):
        raise ZeroCount(f"zero count in {counts}; use --smooth half to proceed")
    tau = args.tau if args.tau is not None else d + 1
    phat = target.full / target.total
    if np.min(phat) * tau < 1.0:
        warnings.warn(f"empirical frequencies lie outside P_tau for tau={tau}; bounds proceed regardless")
    res = confidence_bounds(target, obj, spec)
    diag = dict(res.diagnostics)
    return {
        "lambda_lower": res.lambda_lower,
        "lambda_upper": res.lambda_upper,
        "argmin": _point_list(res.argmin),
        "argmax": _point_list(res.argmax),
        "alpha": spec.alpha,
        "epsilon": diag.pop("epsilon"),
        "epsilon_mode": spec.epsilon_mode,
        "tau": tau,
        "threshold_L": res.threshold_L,
        "objective": obj_name,
        "counts": [float(c) for c in target.full] if isinstance(target, PseudoCounts) else list(counts),
        "diagnostics": diag,
    }


def cmd_bounds(args) -> int:
    if args.counts_file:
        counts, file_values = read_counts_csv(args.counts_file)
        values = file_values if args.values is None else _parse_list(args.values, float, "values")
    elif args.counts:
        counts = _parse_counts(args.counts)
        values = None if args.values is None else _parse_list(args.values, float, "values")
    else:
        raise UsageError("give --counts or --counts-file")
    if values is not None and len(values) != len(counts):
        raise UsageError(f"{len(values)} values for {len(counts)} categories")
    payload = bounds_payload(counts, args.objective, values, args)
    if args.format == "csv":
        keys = ["lambda_lower", "lambda_upper", "alpha", "epsilon", "threshold_L"]
        text = ",".join(keys) + "\n" + ",".join(repr(payload[k]) for k in keys) + "\n"
    else:
        text = json.dumps(payload, indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _svg_prefix(args) -> Optional[Path]:
    if args.svg is None:
        return None
    if args.svg != "":
        return Path(args.svg)
    return Path(args.out).with_suffix("") if args.out else Path("coverage")


def cmd_simulate(args) -> int:
    if args.preset == "fig2":
        p0_full = FIG2_P0 if args.p0 is None else _parse_list(args.p0, float, "p0")
        obj_name = args.objective or "quadratic:fig2"
    else:
        p0_full = FIG1_P0 if args.p0 is None else _parse_list(args.p0, float, "p0")
        obj_name = args.objective or "negentropy"
    try:
        p0 = simplex_point_from_full(p0_full)
    except SimplexConfError as exc:
        raise UsageError(f"p0: {exc}") from exc
    if abs(math.fsum(p0_full) - 1.0) > 1e-9:
        raise UsageError(f"p0 must sum to 1, got {math.fsum(p0_full)}")
    values = None if args.values is None else _parse_list(args.values, float, "values")
    obj = build_objective(obj_name, p0.d, values)
    n_grid = _parse_list(args.n_grid, int, "n-grid")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])) or n_grid[0] < 1:
        raise UsageError("n-grid must be positive and strictly increasing")
    if args.trials < 1:
        raise UsageError("trials must be >= 1")
    if not 0 <= args.seed < 2**64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    spec = _spec_from_args(args)
    rows = run_coverage(p0, obj, n_grid, args.trials, args.seed, spec)
    if args.format == "json":
        text = json.dumps([dict(zip(CSV_HEADER, r.as_tuple())) for r in rows], indent=2) + "\n"
    else:
        text = format_csv(rows)
    _emit(text, args.out)
    prefix = _svg_prefix(args)
    if prefix is not None:
        ns = [r.n for r in rows]
        write_svg(
            [Series("mean lower", ns, [r.mean_lower for r in rows]),
             Series("mean upper", ns, [r.mean_upper for r in rows]),
             Series("lambda0", ns, [r.lambda0 for r in rows], dashed=True)],
            f"{prefix}_bounds.svg", title="Mean confidence bounds", xlabel="n", ylabel="objective",
            logx=True,
        )
        write_svg(
            [Series("empirical level", ns, [r.empirical_level for r in rows])],
            f"{prefix}_level.svg", title="Empirical non-coverage", xlabel="n", ylabel="level",
            logx=True, hline=spec.alpha,
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _check(name: str, ok: bool, note: str = "") -> tuple[str, bool, str]:
    return name, bool(ok), note


def verify_moments(args) -> list:
    results = []
    for weights in ((0.5,), (0.2, 0.3)):
        p = make_simplex_point(weights)
        for n in (2, 5, 10):
            support = support_array(n, p.d)
            prob = np.exp(log_pmf_array(support, n, p))
            delta = (support - n * p.full) / math.sqrt(n)
            worst = 0.0
            for i, pi in enumerate(p.full):
                m = central_moments(n, pi)
                emp = prob @ delta[:, i] ** 2, prob @ delta[:, i] ** 3, prob @ delta[:, i] ** 4
                worst = max(worst, abs(emp[0] - m.m2), abs(emp[1] - m.m3), abs(emp[2] - m.m4))
            results.append(_check(f"moments n={n} p={weights}", worst <= 1e-10, f"max error {worst:.3g}"))
    return results


def verify_expansion(args) -> list:
    n = args.n if args.n is not None else 256
    tau = args.tau if args.tau is not None else 3.0
    weights = _parse_list(args.p, float, "p") if args.p else [1 / 3, 1 / 3]
    p = make_simplex_point(weights)
    table = local_expansion_array(support_array(n, p.d), ModelParams(n, p, tau))
    checked = int(table.bulk.sum())
    violations = table.violations
    slack = np.abs(table.exact_log_ratio - table.main_term) / table.error_bound
    max_slack = float(np.max(slack[table.bulk])) if checked else 0.0
    note = f"{checked} bulk points, max |remainder|/bound = {max_slack:.4f}"
    return [_check(f"expansion n={n} tau={tau:g} p={tuple(weights)}", checked > 0 and violations == 0, note)]


def _uniform(d: int):
    return make_simplex_point([1.0 / (d + 1)] * d)


def verify_tv(args) -> list:
    n = args.n if args.n is not None else 16
    d = args.d if args.d is not None else 1
    tau = args.tau if args.tau is not None else d + 1
    est = tv_estimate(_uniform(d), n, QuadratureConfig())
    bound = tv_bound(n, d, tau, strict=False)
    note = f"estimate {est:.6g}, bound {bound:.6g}"
    if bound > 1:
        note += ", bound vacuous (>1)"
    return [_check(f"tv n={n} d={d}", 0 <= est <= 1 and est <= bound, note)]


def verify_cdf(args) -> list:
    n = args.n if args.n is not None else 25
    d = args.d if args.d is not None else 2
    tau = args.tau if args.tau is not None else d + 1
    gap = sup_cdf_gap(_uniform(d), n)
    bound = cdf_gap_bound(n, d, tau, strict=False)
    note = f"gap {gap:.6g}, bound {bound:.6g}"
    if bound > 1:
        note += ", bound vacuous (>1)"
    return [_check(f"cdf n={n} d={d}", gap <= bound, note)]


def verify_containment(args) -> list:
    counts = _parse_counts(args.counts) if args.counts else [25, 25]
    observed = count_vector_from_full(counts)
    rep = containment_check(observed, args.alpha, args.grid, args.tau)
    note = (f"eps_n {rep.epsilon_theoretical:.6g}, minimal empirical eps {rep.min_empirical_epsilon:.6g} "
            f"(margin {rep.level_margin:.6g}), "
            f"{rep.exact_members}/{rep.grid_points} exact members")
    if rep.vacuous:
        note += ", VacuousSet"
    return [_check(f"containment counts={tuple(counts)}", rep.contained, note)]


VERIFY_TARGETS = {
    "moments": verify_moments,
    "expansion": verify_expansion,
    "tv": verify_tv,
    "cdf": verify_cdf,
    "containment": verify_containment,
}


def cmd_verify(args) -> int:
    results = VERIFY_TARGETS[args.target](args)
    lines = []
    for name, ok, note in results:
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({note})" if note else ""))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_VERIFY


# ---------------------------------------------------------------------------
# chi2
# ---------------------------------------------------------------------------


def cmd_chi2(args) -> int:
    if args.d < 1:
        raise UsageError("d must be >= 1")
    try:
        if args.which == "cdf":
            if args.x < 0:
                raise UsageError("ell must be nonnegative")
            value = chi2_cdf(args.d, args.x)
        else:
            if not 0 <= args.x < 1:
                raise UsageError("q must lie in [0, 1)")
            value = chi2_quantile(args.d, args.x)
    except SimplexConfError as exc:
        raise UsageError(str(exc)) from exc
    _emit(f"{value:.15g}\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    p.add_argument("--config", help="JSON file of option values; flags override it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--tau", type=float, default=None, help="defaults to d+1")
    p.add_argument("--epsilon-mode", choices=("practical", "theoretical"), default="practical")
    p.add_argument("--out", help="write the result here instead of stdout")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="simplex-conf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bounds", parents=[common], help="confidence bounds for observed counts")
    b.add_argument("--counts", help="inline counts for all categories, e.g. 20,30,50")
    b.add_argument("--counts-file", help="CSV with header category,value,count")
    b.add_argument("--values", help="category values, comma separated")
    b.add_argument("--objective", default="negentropy")
    b.add_argument("--smooth", choices=("none", "half"), default="none")
    b.add_argument("--format", choices=("json", "csv"), default="json")
    b.set_defaults(func=cmd_bounds)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo coverage study")
    s.add_argument("--preset", choices=("fig1", "fig2"), default="fig1")
    s.add_argument("--p0", help="true probabilities of all categories")
    s.add_argument("--values", help="category values, comma separated")
    s.add_argument("--objective", default=None)
    s.add_argument("--n-grid", default="250,1000,4000")
    s.add_argument("--trials", type=int, default=2000)
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--svg", nargs="?", const="", default=None,
                   help="also write <prefix>_bounds.svg and <prefix>_level.svg")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", parents=[common], help="check the bounds against brute-force oracles")
    v.add_argument("target", choices=tuple(VERIFY_TARGETS))
    v.add_argument("--n", type=int, default=None)
    v.add_argument("--d", type=int, default=None)
    v.add_argument("--p", help="weights of the first d categories")
    v.add_argument("--counts", help="observed counts (containment)")
    v.add_argument("--grid", type=int, default=999)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("chi2", parents=[common], help="chi-square c.d.f. or quantile")
    c.add_argument("which", choices=("cdf", "quantile"))
    c.add_argument("d", type=int)
    c.add_argument("x", type=float, help="ell for cdf, q for quantile")
    c.set_defaults(func=cmd_chi2)
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.config}: invalid JSON ({exc})") from exc
        if not isinstance(cfg, dict):
            raise UsageError(f"{args.config}: expected a JSON object")
        # re-parse with file values as defaults so explicit flags still win
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in subparser._actions}
        unknown = sorted(set(k.replace("-", "_") for k in cfg) - known)
        if unknown:
            raise UsageError(f"{args.config}: unknown keys {unknown}")
        subparser.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        args = parser.parse_args(argv)
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code = args.func(args)
        for w in caught:
            print(f"simplex-conf: warning: {w.message}", file=sys.stderr)
        return code
    except UsageError as exc:
        print(f"simplex-conf: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ZeroCount as exc:
        print(f"simplex-conf: zero count: {exc}", file=sys.stderr)
        return EXIT_ZERO_COUNT
    except ConvergenceError as exc:
        print(f"simplex-conf: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"simplex-conf: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SimplexConfError, ValueError) as exc:
        print(f"simplex-conf: error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
