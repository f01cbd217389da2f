"""Command-line front end.

Exit codes: 0 success, 1 a verified claim failed, 2 bad input, 3 the
request is infeasible or violates an invariant.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass

from . import biso as biso_mod
from . import gaussian as gauss
from .dependence import maximal_correlation
from .errors import (ClampWarning, DegenerateError, DimensionError, InfeasibleError, InputError,
                     NotBisoError, ResourceError, ScopeError)
from .filters import FilterProblem, SearchConfig, erasure_filter, p_error_curve, privacy_curve
from .prob import JointDistribution
from .verify import SUITES, report_json, round_floats, run_suite

EXIT_OK, EXIT_CLAIM, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2, 3


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    grid_resolution: float = 0.02
    restarts: int = 32
    tolerance: float = 1e-6
    output_format: str = "csv"
    output_path: str | None = None

    def __post_init__(self):
        if not 0 < self.grid_resolution <= 0.5:
            raise InputError("--resolution must lie in (0, 0.5]")
        if self.restarts < 1:
            raise InputError("--restarts must be at least 1")
        if self.output_format not in ("csv", "json"):
            raise InputError("--format must be csv or json")

    def search(self) -> SearchConfig:
        return SearchConfig(seed=self.seed, resolution=self.grid_resolution,
                            restarts=self.restarts, tolerance=self.tolerance)


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".12g")


def parse_eps(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise InputError(f"bad eps range {text!r}: need step > 0 and stop >= start")
            n = int(math.floor((stop - start) / step + 1e-9))
            values = [round(start + i * step, 12) for i in range(n + 1)]
        else:
            values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise InputError(f"cannot parse eps grid {text!r}") from None
    if not values or not all(math.isfinite(v) for v in values):
        raise InputError(f"eps grid {text!r} is empty or not finite")
    return values


def clamp_eps(values, limit: float, err) -> list[float]:
    """Clamp into ``[0, limit]``, warn on stderr, drop duplicates, sort."""
    out = []
    for v in values:
        c = min(max(v, 0.0), limit)
        if c != v and abs(c - v) > 1e-9 * max(1.0, limit):
            print(f"warning: eps={fmt(v)} clamped to {fmt(c)}", file=err)
        out.append(c)
    return sorted(set(out))


def _load_json_arg(text: str):
    """Inline JSON, or the path of a JSON file."""
    if os.path.exists(text):
        with open(text) as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc}") from None


def _emit(text: str, cfg: RunConfig, out) -> None:
    if cfg.output_path:
        with open(cfg.output_path, "w", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(round_floats(obj), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_maxcorr(args, cfg, out, err) -> int:
    j = JointDistribution.load(args.joint)
    rep = maximal_correlation(j)
    d = rep.to_dict()
    if cfg.output_format == "json":
        _emit(_json(d), cfg, out)
    else:
        rows = [(k, d[k]) for k in ("rho_m", "rho_m_sq", "sigma_min", "multiplicity")]
        _emit(_csv(("quantity", "value"), rows), cfg, out)
    return EXIT_OK


def cmd_curve(args, cfg, out, err) -> int:
    j = JointDistribution.load(args.joint)
    kind = args.kind
    base_kind = "strong" if kind == "strong" else "weak"
    limit = FilterProblem(j, 0.0, base_kind).limit
    rho2 = FilterProblem(j, 0.0, "strong").limit
    eps = clamp_eps(parse_eps(args.eps), limit, err)
    search = cfg.search()
    if kind == "perror":
        curve = p_error_curve(j, eps, search)
    else:
        curve = privacy_curve(j, eps, kind, search)
    rows, records = [], []
    for pt in curve.points:
        er = erasure_filter(j, pt.eps, base_kind)
        erasure_bound = er.bayes_error if kind == "perror" else er.ensr
        upper = 1.0 - pt.eps / rho2 if rho2 > 0 else 1.0
        rows.append((pt.eps, pt.value, erasure_bound, upper, pt.solution.method,
                     pt.solution.slack))
        rec = pt.solution.to_dict()
        rec.update(value=pt.value, erasure_bound=erasure_bound, strong_upper_bound=upper)
        rec.update(pt.extras)
        records.append(rec)
    if cfg.output_format == "json":
        _emit(_json({"kind": curve.kind, "seed": cfg.seed, "points": records}), cfg, out)
    else:
        _emit(_csv(("eps", "value", "erasure_bound", "strong_upper_bound", "method", "slack"),
                   rows), cfg, out)
    return EXIT_OK


def cmd_verify(args, cfg, out, err) -> int:
    report = run_suite(args.suite, cfg.seed, cfg.search())
    _emit(report_json(report), cfg, out)
    for name in report["failed_claims"]:
        print(f"FAILED: {name}", file=err)
    return EXIT_OK if report["passed"] else EXIT_CLAIM


def _gaussian_model(params: dict):
    if not isinstance(params, dict):
        raise InputError("gaussian parameters must be a JSON object")
    if "rho" in params:
        gp = gauss.GaussianPair(float(params.get("var_x", 1.0)), float(params.get("var_y", 1.0)),
                                float(params["rho"]))
        return gp, None
    y = params.get("y", "gaussian")
    x = params.get("x")
    if y != "gaussian":
        raise ScopeError("only a Gaussian Y is supported for non-Gaussian X")
    noise = {"y_plus_laplace": "laplace", "y_plus_uniform": "uniform",
             "y_plus_gaussian": "gaussian"}.get(x)
    if noise is None:
        raise InputError(f"unknown x model {x!r}")
    model = gauss.PairModel("gaussian", float(params.get("var_y", 1.0)), 1.0, noise,
                            float(params.get("scale", 1.0)))
    return None, model


def cmd_gaussian(args, cfg, out, err) -> int:
    gp, model = _gaussian_model(_load_json_arg(args.params))
    bins = args.bins
    if gp is not None:
        ref = gp
        rho2 = rho_m2 = gp.rho_sq
        target = gp
    else:
        ref = gauss.GaussianPair(model.var_x, model.var_y, math.sqrt(model.rho_sq))
        joint, _ = gauss._quantized_xy(model, bins, gauss.DEFAULT_SPAN)
        rho2 = gauss._pearson_sq(joint)
        rho_m2 = maximal_correlation(joint).rho_m_sq
        target = model
    if rho2 <= 0:
        raise ScopeError("X and Y are uncorrelated; no privacy level is meaningful")
    eps = clamp_eps(parse_eps(args.eps), rho2, err)
    rows = []
    for e in eps:
        closed = gauss.m_eps_gaussian(ref, e)
        g = gauss.gamma_eps(ref, e)
        if e <= 0:
            # only infinite noise (a constant output) leaks nothing
            numeric = 1.0
        else:
            numeric = gauss.numeric_m_eps(target, e, bins).ensr
        lower = 1.0 - e / rho2
        upper = 1.0 - e / rho_m2
        rows.append((e, closed, g, numeric, lower, upper))
    header = ("eps", "closed_form", "gamma_eps", "numeric_quantized", "lower", "upper")
    if cfg.output_format == "json":
        _emit(_json({"rho_sq": rho2, "rho_m_sq": rho_m2, "bins": bins,
                     "rows": [dict(zip(header, r)) for r in rows]}), cfg, out)
    else:
        _emit(_csv(header, rows), cfg, out)
    return EXIT_OK


def cmd_biso(args, cfg, out, err) -> int:
    b = biso_mod.from_dict(_load_json_arg(args.params))
    rep = biso_mod.report(b)
    f0, ratio = biso_mod.initial_efficiency(b)
    eps = clamp_eps(parse_eps(args.eps), rep.rho_m_sq, err)
    header = ("eps", "w_closed", "m_lower", "m_upper", "p_error_lower", "p_error_upper")
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        for e in eps:
            w = biso_mod.w_eps_closed(b, e)
            lo, hi = biso_mod.m_eps_bounds(b, e)
            if b.p >= 0.5:
                plo, phi = biso_mod.p_error_bounds(b, e)
            else:
                plo = phi = float("nan")
            rows.append((e, w, lo, hi, plo, phi))
    if cfg.output_format == "json":
        _emit(_json({"ex_given_y1": rep.ex_given_y1, "var_x": rep.var_x, "var_y": rep.var_y,
                     "var_x_given_y1": rep.var_x_given_y1, "rho_m_sq": rep.rho_m_sq,
                     "initial_efficiency": f0, "max_gain_ratio": ratio,
                     "rows": [dict(zip(header, r)) for r in rows]}), cfg, out)
    else:
        _emit(_csv(header, rows), cfg, out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--resolution", type=float, default=0.02,
                        help="lattice step of the binary-Y grid search")
    common.add_argument("--restarts", type=int, default=32)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--out", default=None, help="output file (default stdout)")

    p = argparse.ArgumentParser(prog="ensrlab", description=(
        "Privacy filters trading estimation accuracy of Y against leakage of X."))
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("maxcorr", parents=[common], help="maximal correlation of a joint pmf")
    s.add_argument("--joint", required=True)

    s = sub.add_parser("curve", parents=[common], help="sampled privacy curve")
    s.add_argument("--joint", required=True)
    s.add_argument("--kind", choices=("strong", "weak", "perror"), default="strong")
    s.add_argument("--eps", required=True, help="start:stop:step or a comma list")

    s = sub.add_parser("verify", parents=[common], help="run verification suites")
    s.add_argument("suite", nargs="?", default="all", choices=SUITES + ("all",))

    s = sub.add_parser("gaussian", parents=[common], help="additive Gaussian noise curves")
    s.add_argument("--params", default='{"rho": 0.8, "var_y": 1.0}',
                   help="inline JSON or path to a JSON file")
    s.add_argument("--eps", required=True)
    s.add_argument("--bins", type=int, default=gauss.DEFAULT_BINS)

    s = sub.add_parser("biso", parents=[common], help="closed forms for BISO channels")
    s.add_argument("--params", required=True, help="inline JSON or path to a JSON file")
    s.add_argument("--eps", required=True)
    return p


_COMMANDS = {"maxcorr": cmd_maxcorr, "curve": cmd_curve, "verify": cmd_verify,
             "gaussian": cmd_gaussian, "biso": cmd_biso}
_DEFAULT_FORMAT = {"maxcorr": "json", "verify": "json"}


def main(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    try:
        fmt_ = args.format or _DEFAULT_FORMAT.get(args.command, "csv")
        cfg = RunConfig(args.seed, args.resolution, args.restarts, 1e-6, fmt_, args.out)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ClampWarning)
            return _COMMANDS[args.command](args, cfg, out, err)
    except (InfeasibleError, DegenerateError, ScopeError, NotBisoError, ResourceError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INFEASIBLE
    except (InputError, DimensionError, OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
