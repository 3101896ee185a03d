"""Command-line entry point: ``subweibull <verb> [options]``."""

from __future__ import annotations

import argparse
import ast
import json
import math
import operator
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .constants import constant_bundle, cross_check
from .data import load_csv
from .distributions import DistributionSpec
from .errors import InputError, NumericError
from .montecarlo import SimReport
from .nbr import c_condition, delta_n, fit_nbr, hessian, nbr_experiment, score
from .norms import (NormValue, estimate_phi_norm, estimate_psi_norm_emgf, phi_norm_of, psi1_norm_negbin,
                    psi1_norm_poisson, psi_norm_bounded, psi_norm_mgf_inversion, vector_norm_estimate)
from .randmat import MatrixSpec, bai_yin_experiment, jacobi_eigenvalues
from .report import clean, dumps
from .robust import choose_alpha, chen_bound, power_c, solve_z
from .suite import mgf_centered_exponential, run_experiment
from .tails import (WeightedFamily, confidence_interval, nb_sum_bound, phi_sum_bound, phi_sum_ci,
                    reference_example_comparison, subexp_deviation, subexp_sum_bound, sum_deviation,
                    sum_tail_two_regime_branches, gbo_deviation_tail, crossover_point)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

# --- small parsing helpers ------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"e": math.e, "pi": math.pi}


def parse_number(text: str) -> float:
    """Evaluate a plain arithmetic expression such as ``0.05``, ``1/20`` or ``2/e``."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        raise InputError(f"cannot parse number {text!r}")
    try:
        val = ev(ast.parse(str(text).strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError, OverflowError) as exc:
        raise InputError(f"cannot parse number {text!r}") from exc
    if not math.isfinite(val):
        raise InputError(f"number {text!r} is not finite")
    return val


def parse_list(text: Optional[str]) -> Optional[list]:
    if text is None:
        return None
    items = [s for s in str(text).replace(";", ",").split(",") if s.strip()]
    if not items:
        raise InputError("empty list")
    return [parse_number(s) for s in items]


def _theta(value: float) -> float:
    if not (value > 0 and math.isfinite(value)):
        raise InputError("theta must be a positive finite number")
    return value


def load_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"file not found: {p}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed config JSON: {exc.msg} at line {exc.lineno}") from exc
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object")
    return cfg


# --- psi norms of named laws ------------------------------------------------------

def psi_norm_of(dist: DistributionSpec, theta: float) -> NormValue:
    """Closed-form or MGF-inverted psi_theta norm for the laws where one is available."""
    k, p = dist.kind, dist.param
    if k in ("weibull", "symweibull") and not dist.centered and theta == p("theta"):
        return NormValue(p("scale") * 2.0 ** (1.0 / theta), "psi", theta, "closed_form")
    if k == "exponential" and theta == 1.0:
        if dist.centered:
            v = psi_norm_mgf_inversion(mgf_centered_exponential, 1.0, 1.0 - 1e-9).value
            return NormValue(p("scale") * v, "psi", 1.0, "mgf_inversion")
        return NormValue(2.0 * p("scale"), "psi", 1.0, "closed_form")
    if k == "gaussian" and theta == 2.0 and (dist.centered or p("mu") == 0.0):
        return NormValue(p("sigma") * math.sqrt(8.0 / 3.0), "psi", 2.0, "closed_form")
    if k == "poisson" and theta == 1.0:
        return psi1_norm_poisson(p("lam"), centered=dist.centered)
    if k == "negbin" and theta == 1.0 and not dist.centered:
        return psi1_norm_negbin(p("mu") / (p("k") + p("mu")), p("k"))
    bound = dist.support_bound()
    if bound is not None and math.isfinite(bound) and bound > 0:
        nv = psi_norm_bounded(bound, theta)
        return NormValue(nv.value, "psi", theta, "upper_bound", diagnostics={"support_bound": bound})
    raise InputError(f"no psi_{theta:g} norm available for {dist.label()}")


# --- verbs ---------------------------------------------------------------------------

def cmd_constants(args) -> dict:
    theta = _theta(args.theta)
    out = {"bundle": constant_bundle(theta).to_dict()}
    if args.cross_check:
        out["cross_check"] = cross_check(theta)
    if args.reference_example:
        out["reference_example"] = reference_example_comparison(theta)
    return out


def cmd_norm(args) -> dict:
    dist = DistributionSpec.parse(args.dist)
    theta = _theta(args.theta)
    if args.family == "psi":
        nv = psi_norm_of(dist, theta)
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            nv = phi_norm_of(dist, theta, k_max=args.k_max)
    return {"distribution": dist.label(), "norm": nv.to_dict()}


def cmd_estimate(args) -> dict:
    batch = load_csv(args.file)
    theta = _theta(args.theta)
    if args.family == "phi":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if batch.is_vector_rows:
                nv = vector_norm_estimate(batch, theta, args.k_min, args.k_max)
            else:
                nv = estimate_phi_norm(batch, theta, args.k_min, args.k_max)
    else:
        nv = estimate_psi_norm_emgf(batch.scalars(), theta)
    return {"file": str(args.file), "n": batch.n, "norm": nv.to_dict()}


def _grid(args, default) -> list:
    return parse_list(args.t_grid) or list(default)


def cmd_bound(args) -> dict:
    thm = args.theorem
    delta = parse_number(args.delta) if args.delta is not None else None
    out = {"theorem": thm}
    if thm in ("1b", "1c"):
        theta = _theta(args.theta)
        fam = WeightedFamily(parse_list(args.weights) or [1.0], parse_list(args.norms) or [1.0], theta)
        if thm == "1b":
            tb = gbo_deviation_tail(fam)
            out["tail"] = tb.report(_grid(args, [1.0, 2.0, 4.0, 8.0]))
            if delta is not None:
                out["delta"] = delta
                out["radius"] = sum_deviation(fam, delta)
        else:
            sc = crossover_point(fam)
            grid = _grid(args, [0.5 * sc, sc, 2.0 * sc])
            out["crossover"] = sc
            out["branches"] = [sum_tail_two_regime_branches(fam, s) for s in grid]
    elif thm == "2":
        theta = _theta(args.theta)
        v = parse_list(args.norms) or [1.0]
        tb = phi_sum_bound(v, theta)
        out["tail"] = tb.report(_grid(args, [tb.valid_from * m for m in (1.0, 1.5, 2.0, 4.0)]))
        if delta is not None:
            out["delta"] = delta
            out["mean_radius"] = phi_sum_ci(v, theta, delta)
    elif thm == "nb":
        mus = parse_list(args.mus)
        if mus is None:
            raise InputError("--mus is required for the nb bound")
        ks = parse_list(args.ks) or [1.0]
        w = parse_list(args.weights) or [1.0 / len(mus)]
        out["tail"] = nb_sum_bound(mus, ks, np.broadcast_to(w, (len(mus),))).report(
            _grid(args, [0.5, 1.0, 2.0, 4.0]))
    else:  # subexp
        w = parse_list(args.weights) or [1.0]
        norms = parse_list(args.norms) or [1.0]
        out["tail"] = subexp_sum_bound(w, norms).report(_grid(args, [1.0, 2.0, 4.0, 8.0]))
        if delta is not None:
            out["delta"] = delta
            out["radius"] = subexp_deviation(w, norms, math.log(2.0 / delta))
    return out


def cmd_ci(args) -> dict:
    batch = load_csv(args.file)
    delta = parse_number(args.delta)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return confidence_interval(batch.scalars(), _theta(args.theta), delta, args.method,
                                   norm=args.norm)


def cmd_robust_mean(args) -> dict:
    x = load_csv(args.file).scalars()
    beta, eps = args.beta, args.epsilon
    v = args.v_beta
    plug_in = v is None
    if plug_in:
        v = float(np.mean(np.abs(x - x.mean()) ** beta))
        if v <= 0:
            raise InputError("samples are constant; the beta-moment is zero")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        info = choose_alpha(x.size, beta, eps, v, return_info=True)
        radius = chen_bound(x.size, beta, eps, v)
    est = solve_z(x, info["alpha"], power_c(beta))
    return {"n": int(x.size), "beta": beta, "epsilon": eps, "v_beta": v, "plug_in_v_beta": plug_in,
            "alpha": info["alpha"], "n_min": info["n_min"], "sample_condition": info["condition_ok"],
            "estimate": est, "radius": radius, "interval": [est - radius, est + radius],
            "confidence": 1.0 - 2.0 * eps}


def _seed(args, cfg: dict) -> int:
    return int(args.seed if args.seed is not None else cfg.get("seed", 0))


def cmd_validate(args) -> SimReport:
    cfg = load_config(args.config)
    return run_experiment(cfg, _seed(args, cfg), args.jobs)


def cmd_baiyin(args) -> SimReport:
    cfg = load_config(args.config)
    spec = MatrixSpec(int(cfg.get("n", 400)), int(cfg.get("p", 10)), cfg.get("row_law", "gaussian"),
                      cfg.get("theta"), cfg.get("K"))
    return bai_yin_experiment(spec, float(cfg.get("s", 2.0)), cfg.get("c"), int(cfg.get("reps", 200)),
                              _seed(args, cfg), float(cfg.get("level", 0.99)), args.jobs)


def cmd_nbr(args):
    if args.file is not None:
        return _nbr_fit(args)
    if args.config is None:
        raise InputError("nbr-sim needs --config or --file")
    cfg = load_config(args.config)
    return nbr_experiment(cfg, _seed(args, cfg), args.jobs)


def _nbr_fit(args) -> dict:
    """Fit on a CSV whose last column is the response and the others the design."""
    batch = load_csv(args.file)
    if not batch.is_vector_rows or batch.values.shape[1] < 2:
        raise InputError("nbr data needs at least one design column and a response column")
    X, y = np.array(batch.values[:, :-1]), np.array(batch.values[:, -1])
    if args.k is None:
        raise InputError("--k (known dispersion) is required with --file")
    bh = fit_nbr(X, y, args.k)
    out = {"beta_hat": bh, "score_norm": float(np.linalg.norm(score(X, y, args.k, bh))),
           "delta_n_at_fit": delta_n(X, y, args.k, bh),
           "hessian_min_eig": float(jacobi_eigenvalues(hessian(X, y, args.k, bh))[0][0])}
    if args.beta_star is not None:
        bs = np.asarray(parse_list(args.beta_star))
        if bs.size != X.shape[1]:
            raise InputError("--beta-star must have one entry per design column")
        dn = delta_n(X, y, args.k, bs)
        ok, val = c_condition(X, dn)
        err = float(np.linalg.norm(bh - bs))
        out.update({"delta_n": dn, "error": err, "condition_flags": {"c_condition": ok, "value": val},
                    "sandwich_result": bool(ok and 0.5 * dn <= err <= dn)})
    return out


# --- parser ----------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="subweibull", description="Sub-Weibull norms, tail bounds and seeded experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("constants", help="constants for a tail index theta")
    p.add_argument("--theta", type=parse_number, required=True)
    p.add_argument("--cross-check", action="store_true", help="include the two optimiser routes")
    p.add_argument("--reference-example", action="store_true", help="include the theta=0.5, n=10 comparison record")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("norm", help="norm of a named distribution")
    p.add_argument("--dist", required=True, help="e.g. exponential:1, centered_poisson:1, weibull:0.5")
    p.add_argument("--family", choices=("psi", "phi"), default="psi")
    p.add_argument("--theta", type=parse_number, required=True)
    p.add_argument("--k-max", type=int, default=100)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("estimate", help="estimate a norm from data")
    p.add_argument("--file", required=True)
    p.add_argument("--theta", type=parse_number, required=True)
    p.add_argument("--family", choices=("phi", "psi-emgf"), default="phi")
    p.add_argument("--k-min", type=int, default=None)
    p.add_argument("--k-max", type=int, default=50)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bound", help="evaluate a tail bound on a grid")
    p.add_argument("--theorem", choices=("1b", "1c", "2", "nb", "subexp"), required=True)
    p.add_argument("--theta", type=parse_number, default=1.0)
    p.add_argument("--norms")
    p.add_argument("--weights")
    p.add_argument("--mus")
    p.add_argument("--ks")
    p.add_argument("--delta")
    p.add_argument("--t-grid")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("ci", help="confidence interval for a mean")
    p.add_argument("--file", required=True)
    p.add_argument("--theta", type=parse_number, required=True)
    p.add_argument("--delta", required=True)
    p.add_argument("--method", choices=("gbo_theorem1", "phi_theorem2"), default="gbo_theorem1")
    p.add_argument("--norm", type=parse_number, default=None)
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("robust-mean", help="log-truncated mean estimate with its radius")
    p.add_argument("--file", required=True)
    p.add_argument("--beta", type=parse_number, required=True)
    p.add_argument("--epsilon", type=parse_number, required=True)
    p.add_argument("--v-beta", type=parse_number, default=None)
    p.set_defaults(func=cmd_robust_mean)

    for verb, func, hlp in (("validate", cmd_validate, "tail-domination experiment"),
                            ("baiyin", cmd_baiyin, "extreme singular value experiment"),
                            ("nbr-sim", cmd_nbr, "negative binomial regression experiment or fit")):
        p = sub.add_parser(verb, help=hlp)
        p.add_argument("--config", required=verb != "nbr-sim")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--csv", action="store_true", help="print per-record CSV instead of JSON")
        if verb == "nbr-sim":
            p.add_argument("--file")
            p.add_argument("--k", type=parse_number, default=None)
            p.add_argument("--beta-star")
        p.set_defaults(func=func)
    return ap


def _emit_error(kind: str, exc: Exception, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": str(exc), "exit_code": code}, sort_keys=True) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "jobs", 1) is not None and getattr(args, "jobs", 1) < 1:
            raise InputError("--jobs must be at least 1")
        result = args.func(args)
    except InputError as exc:
        return _emit_error("input", exc, EXIT_INPUT)
    except (NumericError, ArithmeticError) as exc:
        return _emit_error("numeric", exc, EXIT_NUMERIC)
    if isinstance(result, SimReport):
        sys.stdout.write(result.to_csv() if getattr(args, "csv", False) else dumps(result.to_dict()) + "\n")
    else:
        sys.stdout.write(dumps(clean(result)) + "\n")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
