"""Command line front end.

Exit codes: 0 every requested check passed, 1 input error, 2 a check failed,
3 numerical resolution failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bezout import check_symmetrizer
from .config import (ConditionsSection, EnergySection, ExperimentConfig, PolynomialSection,
                     axis_spec, load_config)
from .cubic import (CubicSymbol, QForm, SampleGrid, check_lemma_setudo, check_miki,
                    check_positivity_B, check_positivity_dtS, check_positivity_tJ,
                    classify_characteristics, condition_E, condition_H, extend_symbols,
                    from_q_form)
from .energy import (CSV_HEADER, EnergyModel, EnergyRunConfig, canonical_model,
                     cancellation_check, example_model, integrate_mode, parameter_scan,
                     verify_estimate_backward, verify_estimate_forward, verify_keiyaku)
from .errors import (ConfigError, EmptyFilteredSet, NonConvergence, StepSizeTooCoarse,
                     TripleCharError)
from .expr import Expression
from .poly import (MonicPolynomial, discriminant, distinct_real_root_count, is_hyperbolic,
                   min_root_gap, nuij_smooth, roots)
from .report import ConditionReport, jsonable

EXIT_PASS, EXIT_INPUT, EXIT_FAIL, EXIT_NUMERIC = 0, 1, 2, 3


class InputError(Exception):
    pass


# ---------------------------------------------------------------- helpers


def _summary(command, model, config, reports, extra=None, holds=None):
    """Top-level report: overall verdict plus the individual reports."""
    dicts = [r.to_dict() if isinstance(r, ConditionReport) else r for r in reports]
    if holds is None:
        holds = all(d["holds"] for d in dicts if d.get("holds") is not None)
    failing = next((d for d in dicts if d.get("holds") is False), None)
    out = {
        "command": command,
        "model": model,
        "config": config.model_dump(mode="json"),
        "holds": bool(holds),
        "constants": {d["name"]: d.get("constants", {}) for d in dicts},
        "worst_point": failing.get("worst_point") if failing else None,
        "reports": dicts,
    }
    if extra:
        out.update(extra)
    return jsonable(out)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _out_dir(args, config):
    d = args.out or config.output.directory
    if d is None:
        return None
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in row])


def _finish(args, config, summary, tables=()):
    """Print the summary, write outputs under --out and return the exit code."""
    text = _dump(summary)
    sys.stdout.write(text)
    out = _out_dir(args, config)
    if out is not None:
        if "json" in config.output.formats:
            (out / "report.json").write_text(text, encoding="utf-8")
        if "csv" in config.output.formats:
            for name, header, rows in tables:
                _write_csv(out / name, header, rows)
        meta = {
            "argv": list(args.argv),
            "seed": args.seed,
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "finished": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        (out / "run_meta.json").write_text(_dump(meta), encoding="utf-8")
    return EXIT_PASS if summary["holds"] else EXIT_FAIL


def _config(args) -> ExperimentConfig:
    if args.config:
        return load_config(args.config)
    return ExperimentConfig()


def _require(section, what):
    if section is None:
        raise InputError(f"config needs a '{what}' section")
    return section


# ---------------------------------------------------------------- poly


def _parse_coeffs(text):
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        try:
            v = float(tok)
        except ValueError:
            raise InputError(f"coefficient {tok!r} is not a number") from None
        if not math.isfinite(v):
            raise InputError(f"coefficient {tok!r} is not finite")
        vals.append(v)
    return vals


def _polynomial(args, config):
    if args.coeffs is not None:
        config.polynomial = PolynomialSection(coeffs=_parse_coeffs(args.coeffs))
    sec = _require(config.polynomial, "polynomial")
    return MonicPolynomial(tuple(sec.coeffs))


def _roots_dict(rs):
    return [[z.real, z.imag] for z in rs.roots]


def cmd_poly(args) -> int:
    config = _config(args)
    p = _polynomial(args, config)
    tol = args.tol if args.tol is not None else 1e-9
    if args.action == "check":
        hyp, max_im = is_hyperbolic(p, tol)
        rs = roots(p, tol)
        distinct = distinct_real_root_count(p)
        r = ConditionReport(
            "hyperbolic", 0.0 if hyp else -max_im,
            constants={"max_imag": max_im, "discriminant": discriminant(p, exact=True),
                       "distinct_real_roots": distinct, "degree": p.degree,
                       "strictly_hyperbolic": distinct == p.degree},
            details={"roots": _roots_dict(rs), "polynomial": str(p)})
        return _finish(args, config, _summary("poly check", str(p), config, [r]))
    if args.action == "symmetrize":
        res = check_symmetrizer(p)
        rtol = args.tol if args.tol is not None else 1e-10
        scale = max(abs(res["delta_sq"]), 1e-300)
        ok_det = abs(res["det_minus_delta_sq"]) <= 1e-8 * scale
        reports = [
            ConditionReport("det_H_equals_discriminant", 0.0 if ok_det else -1.0,
                            constants={"det_H": res["det_H"], "delta_sq": res["delta_sq"],
                                       "difference": res["det_minus_delta_sq"]}),
            ConditionReport("H_symmetrizes_companions", rtol - max(res["residual_A_p"],
                                                                  res["residual_A_tilde"]),
                            constants={"residual_A_p": res["residual_A_p"],
                                       "residual_A_tilde": res["residual_A_tilde"]}),
            ConditionReport("H_positive_semidefinite", 0.0 if res["psd"] else res["min_eigenvalue"],
                            constants={"min_eigenvalue": res["min_eigenvalue"]}),
        ]
        return _finish(args, config, _summary("poly symmetrize", str(p), config, reports,
                                              extra={"H": res["H"]}))
    # nuij
    if args.eps is None:
        raise InputError("poly nuij needs --eps")
    q = nuij_smooth(p, args.eps)
    distinct = distinct_real_root_count(q)
    try:
        gap = min_root_gap(roots(q, tol)) if distinct == q.degree else 0.0
    except NonConvergence:
        gap = 0.0
    r = ConditionReport("strictly_hyperbolic", gap if distinct == q.degree else -1.0,
                        constants={"min_root_gap": gap, "distinct_real_roots": distinct,
                                   "eps": args.eps},
                        details={"smoothed": list(q.coeffs), "polynomial": str(q)})
    return _finish(args, config, _summary("poly nuij", str(p), config, [r],
                                          extra={"smoothed": list(q.coeffs)}))


# ---------------------------------------------------------------- cubic


def symbol_from_section(sec) -> CubicSymbol:
    if sec.a is not None:
        return CubicSymbol.from_expressions(sec.a, sec.b, sec.c, sec.phi, sec.dimension,
                                            sec.da_dt, sec.db_dt, sec.dc_dt, sec.name)
    q = QForm(*(Expression(s, sec.dimension) for s in (sec.q1, sec.q2, sec.q3)))
    sym = from_q_form(q, Expression(sec.phi, sec.dimension))
    from dataclasses import replace
    return replace(sym, dimension=sec.dimension, name=sec.name)


def grid_from_section(sec, dimension) -> SampleGrid:
    if len(sec.x) != dimension or len(sec.xi) != dimension:
        raise InputError(f"grid needs {dimension} x and xi axes")
    return SampleGrid.product(axis_spec(sec.t), [axis_spec(a) for a in sec.x],
                              [axis_spec(a) for a in sec.xi])


def _matrix_exprs(rows, dimension):
    return None if rows is None else [[Expression(e, dimension) for e in r] for r in rows]


def _guarded(name, fn):
    try:
        return fn()
    except EmptyFilteredSet as exc:
        return {"name": name, "holds": None, "skipped": str(exc)}


def condition_suite(grid, sym, cond: ConditionsSection, tol):
    """Structural and lemma-level checks plus (E) and (H); the verdict needs the
    former and at least one of the discriminant conditions."""
    reports = [
        check_miki(grid, sym, cond.eps_bar, cond.delta1_min, cond.big_o_max, cond.abs_tol,
                   cond.smallness),
        _guarded("det_S_lower_bound", lambda: check_lemma_setudo(grid, sym, cond.eps_bar)),
        _guarded("S_dominates_tJ", lambda: check_positivity_tJ(grid, sym, cond.eps1, cond.eps_bar)),
        _guarded("S_dominates_t_dtS",
                 lambda: check_positivity_dtS(grid, sym, cond.eps_dtS, cond.eps_bar)),
    ]
    if cond.B is not None:
        B = _matrix_exprs(cond.B, sym.dimension)
        reports.append(_guarded("S_dominates_t2_BSB",
                                lambda: check_positivity_B(grid, sym, B, cond.T, cond.eps_bar)))
    e = condition_E(grid, sym, cond.delta_E, cond.reduced, tol)
    h = condition_H(grid, sym, cond.delta_H, cond.reduced, tol)
    dicts = [r.to_dict() if isinstance(r, ConditionReport) else r for r in reports]
    required = all(d["holds"] is not False for d in dicts)
    return dicts + [e.to_dict(), h.to_dict()], bool(required and (e.holds or h.holds))


def cmd_cubic(args) -> int:
    config = _config(args)
    sym = symbol_from_section(_require(config.symbol, "symbol"))
    grid = grid_from_section(_require(config.grid, "grid"), sym.dimension)
    cond = config.conditions
    tol = args.tol if args.tol is not None else cond.tol
    name = sym.name or "symbol"
    if args.action == "conditions":
        dicts, holds = condition_suite(grid, sym, cond, tol)
        return _finish(args, config, _summary("cubic conditions", name, config, dicts,
                                              holds=holds))
    if args.action == "classify":
        table = classify_characteristics(grid, sym, tol)
        counts = {k: 0 for k in ("simple", "double", "triple", "nonhyperbolic")}
        for cp in table:
            counts[cp.kind] += 1
        bad = next((cp for cp in table if cp.kind == "nonhyperbolic"), None)
        r = ConditionReport("classification", -1.0 if bad else 0.0,
                            constants={**counts,
                                       "effective_triple": sum(cp.effective for cp in table)},
                            worst_point=bad.point if bad else None)
        rows = [[cp.point["t"], *cp.point["x"], *cp.point["xi"], cp.kind, int(cp.effective),
                 cp.Delta, cp.Delta0] for cp in table]
        n = sym.dimension
        header = (["t"] + [f"x{i + 1}" for i in range(n)] + [f"xi{i + 1}" for i in range(n)]
                  + ["class", "effective", "Delta", "Delta0"])
        summary = _summary("cubic classify", name, config, [r],
                           extra={"table": [cp.to_dict() for cp in table]})
        return _finish(args, config, summary, tables=[("classification.csv", header, rows)])
    # extend
    ext = _require(config.extend, "extend")
    d = sym.dimension
    chi0 = Expression(ext.chi0, d) if ext.chi0 else None
    extended = extend_symbols(sym, Expression(ext.chi, d), Expression(ext.chi_tilde, d), ext.M,
                              ext.M_prime, chi0, grid=grid, delta1=ext.delta1, T=ext.T)
    dicts, holds = condition_suite(grid, extended, cond, tol)
    return _finish(args, config, _summary("cubic extend", extended.name, config, dicts,
                                          holds=holds))


# ---------------------------------------------------------------- energy


def model_from_section(sec: EnergySection, symbol_sec=None, adjoint=False) -> EnergyModel:
    state = sec.state_values() or (1.0, 0.0, 0.0)
    xi_list = tuple(np.asarray(v, dtype=float) for v in sec.xi_list) if sec.xi_list else ()
    if sec.model == "canonical":
        base = canonical_model(state, xi_list)
    elif sec.model == "example":
        base = example_model(sec.b1, sec.b2, state, xi_list)
    else:
        if symbol_sec is None:
            raise InputError("a custom energy model needs a 'symbol' section")
        base = EnergyModel(symbol_sec.name or "custom", symbol_from_section(symbol_sec), state,
                           xi_list=xi_list)
    dim = base.sym.dimension
    if xi_list and any(v.size != dim for v in xi_list):
        raise InputError(f"xi_list entries must have dimension {dim}")
    rows = sec.B_adjoint if adjoint and sec.B_adjoint is not None else sec.B
    B = _matrix_exprs(rows, dim)
    F = None if sec.F is None else [Expression(e, dim) for e in sec.F]
    from dataclasses import replace
    return replace(base, B=B, F=F)


def run_config(sec: EnergySection, direction="forward") -> EnergyRunConfig:
    state = sec.state_values() or (1.0, 0.0, 0.0)
    return EnergyRunConfig(N=sec.N, gamma=sec.gamma, lam=sec.lam, eps1=sec.eps1,
                           t_start=sec.t_start, t_end=sec.t_end, steps=sec.steps,
                           direction=direction, state=state, spacing=sec.spacing)


def _trace_tables(traces):
    return [(f"mode_{i}.csv", CSV_HEADER, list(tr.csv_rows())) for i, tr in enumerate(traces)]


def _mode_reports(traces, cfg, model, sec, cancel_tol):
    reports = []
    for tr in traces:
        k = verify_keiyaku(tr, cfg, model.sym, N_star_guess=sec.N_star, N_list=sec.N_list,
                           gamma_list=sec.gamma_list)
        k.name = f"energy_inequality[xi={tr.xi.tolist()}]"
        reports.append(k)
        resid = cancellation_check(tr, model.sym)
        reports.append(ConditionReport(f"cancellation[xi={tr.xi.tolist()}]", cancel_tol - resid,
                                       constants={"max_residual": resid,
                                                  "err_est": tr.err_max}))
    return reports


def cmd_energy(args) -> int:
    config = _config(args)
    sec = _require(config.energy, "energy")
    cancel_tol = args.tol if args.tol is not None else 1e-13
    backward = args.action == "adjoint"
    model = model_from_section(sec, config.symbol, adjoint=backward)
    cfg = run_config(sec, "backward" if backward else "forward")
    traces = [integrate_mode(ms, cfg) for ms in model.modes()]
    if args.action == "scan":
        table = parameter_scan(model, cfg, sec.N_list, sec.gamma_list, sec.lambda_list, traces)
        scan = table.to_dict()
        r = ConditionReport("feasible_region", 0.0 if table.feasible else -1.0,
                            constants={"feasible_cells": len(table.feasible),
                                       "cells": len(table.rows),
                                       "monotonicity_violations": table.monotonicity_violations})
        cancel = _mode_reports(traces, cfg, model, sec, cancel_tol)[1::2]
        summary = _summary("energy scan", model.name, config, [r] + cancel,
                           extra={"scan": scan})
        return _finish(args, config, summary, tables=_trace_tables(traces))
    reports = _mode_reports(traces, cfg, model, sec, cancel_tol)
    est = (verify_estimate_backward if backward else verify_estimate_forward)(
        traces, cfg, n_star=sec.N_star)
    summary = _summary(f"energy {args.action}", model.name, config, reports + [est])
    return _finish(args, config, summary, tables=_trace_tables(traces))


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment config (JSON)")
    common.add_argument("--out", metavar="DIR", help="directory for reports and traces")
    common.add_argument("--tol", type=float, help="check tolerance override")
    common.add_argument("--seed", type=int, default=0, help="seed recorded with the run")

    parser = argparse.ArgumentParser(prog="triplechar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    groups = parser.add_subparsers(dest="group", required=True)

    poly = groups.add_parser("poly", help="hyperbolic polynomial checks")
    poly_sub = poly.add_subparsers(dest="action", required=True)
    for name in ("check", "symmetrize", "nuij"):
        p = poly_sub.add_parser(name, parents=[common])
        p.add_argument("--coeffs", help="non-leading coefficients, highest degree first; "
                                        "use --coeffs=-1,0 when the first is negative")
        p.add_argument("--eps", type=float, help="smoothing parameter for nuij")
        p.set_defaults(func=cmd_poly)

    cubic = groups.add_parser("cubic", help="cubic symbol conditions")
    cubic_sub = cubic.add_subparsers(dest="action", required=True)
    for name in ("conditions", "classify", "extend"):
        cubic_sub.add_parser(name, parents=[common]).set_defaults(func=cmd_cubic)

    energy = groups.add_parser("energy", help="per-mode energy runs")
    energy_sub = energy.add_subparsers(dest="action", required=True)
    for name in ("run", "scan", "adjoint"):
        energy_sub.add_parser(name, parents=[common]).set_defaults(func=cmd_energy)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    args.argv = argv
    try:
        return args.func(args)
    except StepSizeTooCoarse as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, ConfigError, ValueError, TripleCharError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
