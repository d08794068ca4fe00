"""Command-line front end.

One subcommand per reporting surface:

  analyze   symbolic analysis of a Matrix Market file (fill, FLOP predictions)
  selinv    factor a matrix and write its selected inverse
  reml      restricted-likelihood report for a dataset file
  gen       generate a synthetic variety-trial dataset
  bench     run the generated benchmark ladder, emit CSV
  verify    dense-oracle cross-check of the whole pipeline (n <= 500)

CSV is the only structured output format; exit code 0 means every
requested verification passed.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from . import datagen, reml
from .errors import SeldetError, TooLargeError
from .numeric import ldlt_factorize, log_det, solve
from .ordering import amd_order, load_order, natural_order
from .selinv import (
    DENSE_ORACLE_LIMIT,
    dense_inverse_oracle,
    selected_inverse,
)
from .sparse_core import (
    Permutation,
    SparseSymmetric,
    from_coo_arrays,
    read_matrix_market,
    write_matrix_market,
)
from .symbolic import predict_flops, selinv_flops_from_ldlt, symbolic_factor

__all__ = ["main"]


def _read_matrix(path: str) -> SparseSymmetric:
    with open(path, encoding="utf-8") as fh:
        return read_matrix_market(fh)


def _ordering_perm(flag: str, a: SparseSymmetric) -> Permutation:
    if flag == "natural":
        return natural_order(a.n)
    if flag == "amd":
        return amd_order(a)
    if flag.startswith("file:"):
        with open(flag[len("file:"):], encoding="utf-8") as fh:
            return load_order(fh, a.n)
    raise SeldetError(f"unknown ordering {flag!r}; use natural, amd, or file:<path>")


def _add_ordering_flag(p: argparse.ArgumentParser):
    p.add_argument("--ordering", default="amd",
                   help="natural, amd, or file:<path> (default: amd)")


def _write_csv(path: str | None, header: list[str], rows: list[list]):
    out = open(path, "w", newline="", encoding="utf-8") if path else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(header)
        w.writerows(rows)
    finally:
        if path:
            out.close()


# ---------------------------------------------------------------- analyze


def cmd_analyze(args) -> int:
    a = _read_matrix(args.matrix)
    perm = _ordering_perm(args.ordering, a)
    sym = symbolic_factor(a, perm)
    ldlt, selinv_f = predict_flops(sym)
    n = a.n
    tri = n * (n + 1) // 2
    per_mille = 1000.0 * a.nnz / tri if tri else 0.0
    identity_ok = selinv_f == selinv_flops_from_ldlt(ldlt, sym.nnz_L, n)
    header = ["name", "n", "nnz", "nnz_per_col", "per_mille", "ordering",
              "nnz_L", "ldlt_flops", "selinv_flops", "identity"]
    row = [args.matrix, n, a.nnz, round(a.nnz / n, 3) if n else 0.0,
           round(per_mille, 3), args.ordering, sym.nnz_L, ldlt, selinv_f,
           "PASS" if identity_ok else "FAIL"]
    if args.csv or args.out:
        _write_csv(args.out, header, [row])
    if not args.csv:
        print(f"matrix        : {args.matrix}")
        print(f"n             : {n}")
        print(f"nnz (lower)   : {a.nnz}  ({a.nnz / n:.2f} per column, "
              f"{per_mille:.3f} per mille)" if n else "nnz (lower)   : 0")
        print(f"ordering      : {args.ordering}")
        print(f"nnz(L)        : {sym.nnz_L}")
        print(f"ldlt_flops    : {ldlt}")
        print(f"selinv_flops  : {selinv_f}")
        print(f"flop identity : {'PASS' if identity_ok else 'FAIL'} "
              f"(selinv = 2*ldlt - (nnz_L - n))")
    return 0 if identity_ok else 1


# ----------------------------------------------------------------- selinv


def _selected_to_matrix(zsel) -> SparseSymmetric:
    """Selected inverse as a SparseSymmetric in ORIGINAL indices."""
    sym = zsel.sym
    perm = sym.perm.perm
    n = sym.n
    cols_new = np.repeat(np.arange(n, dtype=np.int64), np.diff(sym.l_col_ptr))
    rows_o = np.concatenate([perm[sym.l_row_idx], perm])
    cols_o = np.concatenate([perm[cols_new], perm])
    vals = np.concatenate([zsel.z_values, zsel.z_diag])
    return from_coo_arrays(n, rows_o, cols_o, vals)


def cmd_selinv(args) -> int:
    a = _read_matrix(args.matrix)
    t0 = time.perf_counter()
    perm = _ordering_perm(args.ordering, a)
    t_order = time.perf_counter() - t0
    t0 = time.perf_counter()
    sym = symbolic_factor(a, perm)
    t_sym = time.perf_counter() - t0
    pred_ldlt, pred_si = predict_flops(sym)
    t0 = time.perf_counter()
    fac = ldlt_factorize(a, sym)
    t_fac = time.perf_counter() - t0
    t0 = time.perf_counter()
    zsel = selected_inverse(fac)
    t_si = time.perf_counter() - t0

    print(f"n={a.n} nnz={a.nnz} nnz(L)={sym.nnz_L} ordering={args.ordering}")
    print(f"logdet        : {log_det(fac):.12g}")
    print(f"ldlt_flops    : predicted {pred_ldlt}, measured {fac.flops}")
    print(f"selinv_flops  : predicted {pred_si}, measured {zsel.flops}")
    print(f"time (s)      : ordering {t_order:.4f}, symbolic {t_sym:.4f}, "
          f"factorize {t_fac:.4f}, selinv {t_si:.4f}")

    if args.out:
        zmat = _selected_to_matrix(zsel)
        with open(args.out, "w", encoding="utf-8") as fh:
            write_matrix_market(zmat, fh)
        print(f"selected inverse written to {args.out} "
              f"({zmat.nnz} stored entries)")

    ok = fac.flops == pred_ldlt and zsel.flops == pred_si
    if args.verify:
        if a.n > DENSE_ORACLE_LIMIT:
            raise TooLargeError(
                f"--verify needs n <= {DENSE_ORACLE_LIMIT}, got {a.n}")
        zd = dense_inverse_oracle(a)
        zmat = _selected_to_matrix(zsel)
        rows, cols, vals = zmat.triplets()
        scale = np.sqrt(np.abs(np.diag(zd)[rows] * np.diag(zd)[cols]))
        err = np.abs(vals - zd[rows, cols]) / np.maximum(scale, 1e-300)
        max_err = float(err.max()) if err.size else 0.0
        sign, ld_dense = np.linalg.slogdet(a.to_dense())
        ld_err = abs(log_det(fac) - ld_dense) / max(1.0, abs(ld_dense))
        ok_entries = max_err <= 1e-10
        ok_ld = ld_err <= 1e-10
        print(f"verify entries: max rel err {max_err:.3e} "
              f"{'PASS' if ok_entries else 'FAIL'}")
        print(f"verify logdet : rel err {ld_err:.3e} "
              f"{'PASS' if ok_ld else 'FAIL'}")
        ok = ok and ok_entries and ok_ld and sign > 0
    return 0 if ok else 1


# ------------------------------------------------------------------- reml


def _parse_param_list(text: str | None, count: int, default: float) -> np.ndarray:
    if text is None:
        return np.full(count, default)
    vals = [float(tok) for tok in text.split(",")]
    if len(vals) == 1:
        return np.full(count, vals[0])
    if len(vals) != count:
        raise SeldetError(f"expected 1 or {count} comma-separated values, "
                          f"got {len(vals)}")
    return np.asarray(vals)


def cmd_reml(args) -> int:
    with open(args.dataset, encoding="utf-8") as fh:
        d = reml.read_dataset(fh)
    gamma = _parse_param_list(args.gamma, len(d.factors), 1.0)
    phi = _parse_param_list(args.phi, d.n_residual_blocks, 1.0)
    v = reml.VarianceParams(sigma2=args.sigma2, gamma=gamma, phi=phi)
    if args.ordering.startswith("file:"):
        m = reml.assemble_mme(d, v)
        with open(args.ordering[len("file:"):], encoding="utf-8") as fh:
            ordering: str | Permutation = load_order(fh, m.C.n)
    else:
        ordering = args.ordering
    rep = reml.reml_report(d, v, ordering=ordering)

    print(f"observations  : {d.n_obs}   effects (p+b): {rep.dim}")
    print(f"nnz(C)        : {rep.nnz_c}   nnz(L): {rep.nnz_l}")
    print(f"loglik (REML) : {rep.loglik:.12g}")
    print(f"logdet C      : {rep.logdet_c:.12g}")
    print(f"logdet R      : {rep.logdet_r:.12g}")
    print(f"logdet G      : {rep.logdet_g:.12g}")
    print(f"y'Py          : {rep.ypy:.12g}")
    print("logdet gradient:")
    for name, val in zip(rep.gradient_names, rep.gradient):
        print(f"  d/d {name:<24s} {val: .12g}")
    pev_tau = rep.pev[:len(rep.tau)]
    pev_u = rep.pev[len(rep.tau):]
    print(f"PEV (fixed)   : min {pev_tau.min():.6g}  mean {pev_tau.mean():.6g}  "
          f"max {pev_tau.max():.6g}")
    if pev_u.size:
        print(f"PEV (random)  : min {pev_u.min():.6g}  mean {pev_u.mean():.6g}  "
              f"max {pev_u.max():.6g}")
    print(f"flops         : ldlt {rep.measured_ldlt_flops}/{rep.predicted_ldlt_flops}"
          f"  selinv {rep.measured_selinv_flops}/{rep.predicted_selinv_flops}"
          f"  (measured/predicted)")

    ok = True
    if args.check_h_form:
        ll_h = reml.restricted_loglik(d, v, form="h")
        rel = abs(ll_h - rep.loglik) / max(1.0, abs(rep.loglik))
        good = rel <= 1e-8
        ok = ok and good
        print(f"h-form check  : C-form {rep.loglik:.12g}, H-form {ll_h:.12g}; "
              f"forms agree: max rel diff {rel:.3e} {'PASS' if good else 'FAIL'}")
    if args.fd_check:
        print("finite-difference check of the logdet gradient (rel step 1e-5):")
        worst = 0.0
        for i, name in enumerate(rep.gradient_names):
            base = v.gamma[i] if i < v.gamma.size else v.phi[i - v.gamma.size]
            h = 1e-5 * base
            lo = _logdet_at(d, v.perturbed(i, 1.0 - 1e-5))
            hi = _logdet_at(d, v.perturbed(i, 1.0 + 1e-5))
            fd = (hi - lo) / (2.0 * h)
            rel = abs(rep.gradient[i] - fd) / max(1.0, abs(fd))
            worst = max(worst, rel)
            print(f"  {name:<24s} analytic {rep.gradient[i]: .9g}  "
                  f"fd {fd: .9g}  rel {rel:.3e}")
        good = worst <= 1e-6
        ok = ok and good
        print(f"fd check      : worst rel {worst:.3e} {'PASS' if good else 'FAIL'}")

    if args.out:
        header = ["quantity", "value"]
        rows = [["loglik", rep.loglik], ["logdet_C", rep.logdet_c],
                ["logdet_R", rep.logdet_r], ["logdet_G", rep.logdet_g],
                ["yPy", rep.ypy]]
        rows += [[f"grad:{name}", val]
                 for name, val in zip(rep.gradient_names, rep.gradient)]
        _write_csv(args.out, header, rows)
    return 0 if ok else 1


def _logdet_at(d, v) -> float:
    m = reml.assemble_mme(d, v)
    perm = amd_order(m.C)
    fac = ldlt_factorize(m.C, symbolic_factor(m.C, perm))
    return log_det(fac)


# -------------------------------------------------------------------- gen


def cmd_gen(args) -> int:
    variances = {}
    for spec_ in args.var or []:
        if "=" not in spec_:
            raise SeldetError(f"--var expects term=value, got {spec_!r}")
        key, val = spec_.split("=", 1)
        variances[key] = float(val)
    if args.preset:
        cfg = datagen.preset_config(args.preset, seed=args.seed)
        if variances:
            cfg = datagen.TrialConfig(
                years=cfg.years, centers=cfg.centers,
                centers_per_year_fraction=cfg.centers_per_year_fraction,
                control_varieties=cfg.control_varieties,
                new_varieties_per_year=cfg.new_varieties_per_year,
                mean_persistence=cfg.mean_persistence,
                missing_fraction=cfg.missing_fraction,
                variance_components=variances, seed=args.seed)
    else:
        cfg = datagen.TrialConfig(
            years=args.years, centers=args.centers,
            centers_per_year_fraction=args.fraction,
            control_varieties=args.controls,
            new_varieties_per_year=args.new_per_year,
            mean_persistence=args.mean_persistence,
            missing_fraction=args.missing,
            variance_components=variances, seed=args.seed)
    d = datagen.generate(cfg)
    with open(args.out, "w", encoding="utf-8") as fh:
        reml.write_dataset(d, fh)
    s = datagen.design_summary(d)
    print("year center variety  y.c  y.v  v.c  units")
    print(f"{s.years:4d} {s.centers:6d} {s.varieties:7d} {s.year_center:4d} "
          f"{s.year_variety:4d} {s.variety_center:4d} {s.units:6d}")
    print(f"v/y {s.varieties_per_year:.1f}   y/v {s.years_per_variety:.1f}   "
          f"c.v {s.obs_per_year_variety:.1f}")
    print(f"effects (p+b) : {s.effects}")
    print(f"dataset written to {args.out}")
    return 0


# ------------------------------------------------------------------ bench


def cmd_bench(args) -> int:
    problems = args.problems.split(",") if args.problems else list(datagen.PRESETS)
    orderings = args.orderings.split(",")
    header = ["problem", "ordering", "n", "nnz_C", "nnz_L",
              "pred_ldlt", "meas_ldlt", "pred_selinv", "meas_selinv",
              "t_order", "t_symbolic", "t_factorize", "t_selinv"]
    rows: list[list] = []
    pairs: list[list] = []
    failed = False
    for name in problems:
        try:
            cfg = datagen.preset_config(name.strip(), seed=args.seed)
            d = datagen.generate(cfg)
            v = reml.VarianceParams(
                sigma2=1.0, gamma=np.ones(len(d.factors)),
                phi=np.ones(d.n_residual_blocks))
            m = reml.assemble_mme(d, v)
            for flag in orderings:
                flag = flag.strip()
                t0 = time.perf_counter()
                perm = _ordering_perm(flag, m.C)
                t_order = time.perf_counter() - t0
                t0 = time.perf_counter()
                sym = symbolic_factor(m.C, perm)
                t_sym = time.perf_counter() - t0
                pred_ldlt, pred_si = predict_flops(sym)
                t0 = time.perf_counter()
                fac = ldlt_factorize(m.C, sym)
                t_fac = time.perf_counter() - t0
                t0 = time.perf_counter()
                zsel = selected_inverse(fac)
                t_si = time.perf_counter() - t0
                rows.append([name, flag, m.C.n, m.C.nnz, sym.nnz_L,
                             pred_ldlt, fac.flops, pred_si, zsel.flops,
                             round(t_order, 4), round(t_sym, 4),
                             round(t_fac, 4), round(t_si, 4)])
                pairs.append([sym.nnz_L, round(t_fac + t_si, 4)])
        except SeldetError as exc:
            failed = True
            print(f"bench: problem {name!r} failed: {exc}", file=sys.stderr)
    _write_csv(args.out, header, rows)
    if args.out:
        pairs_path = args.out + ".pairs.csv"
        _write_csv(pairs_path, ["nnz_L", "time_s"], pairs)
        print(f"wrote {args.out} and {pairs_path}")
    return 1 if failed else 0


# ----------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    a = _read_matrix(args.matrix)
    if a.n > DENSE_ORACLE_LIMIT:
        raise TooLargeError(
            f"verify needs n <= {DENSE_ORACLE_LIMIT}, got {a.n}")
    perm = _ordering_perm(args.ordering, a)
    sym = symbolic_factor(a, perm)
    pred_ldlt, pred_si = predict_flops(sym)
    fac = ldlt_factorize(a, sym)
    zsel = selected_inverse(fac)
    checks: list[tuple[str, bool, str]] = []

    checks.append(("flop counters", fac.flops == pred_ldlt and zsel.flops == pred_si,
                   f"ldlt {fac.flops}/{pred_ldlt}, selinv {zsel.flops}/{pred_si}"))

    zd = dense_inverse_oracle(a)
    zmat = _selected_to_matrix(zsel)
    rows, cols, vals = zmat.triplets()
    scale = np.sqrt(np.abs(np.diag(zd)[rows] * np.diag(zd)[cols]))
    err = np.abs(vals - zd[rows, cols]) / np.maximum(scale, 1e-300)
    max_err = float(err.max()) if err.size else 0.0
    checks.append(("selected entries vs dense inverse", max_err <= 1e-10,
                   f"max rel err {max_err:.3e}"))

    sign, ld_dense = np.linalg.slogdet(a.to_dense())
    ld_err = abs(log_det(fac) - ld_dense) / max(1.0, abs(ld_dense))
    checks.append(("logdet vs dense", sign > 0 and ld_err <= 1e-10,
                   f"rel err {ld_err:.3e}"))

    rng = np.random.default_rng(0)
    b = rng.standard_normal(a.n)
    x = solve(fac, b)
    resid = float(np.max(np.abs(a.to_dense() @ x - b)))
    rel = resid / max(1.0, float(np.max(np.abs(b))))
    checks.append(("solve residual", rel <= 1e-8, f"rel residual {rel:.3e}"))

    all_ok = True
    for name, ok, detail in checks:
        all_ok = all_ok and ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return 0 if all_ok else 1


# ------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="seldet",
        description="Sparse LDL^T factorization, selected inversion, and "
                    "REML log-determinant derivatives.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="symbolic analysis and FLOP prediction")
    p.add_argument("matrix", help="Matrix Market file")
    _add_ordering_flag(p)
    p.add_argument("--csv", action="store_true", help="emit CSV instead of text")
    p.add_argument("--out", help="write CSV to this path")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("selinv", help="factor and compute the selected inverse")
    p.add_argument("matrix", help="Matrix Market file")
    _add_ordering_flag(p)
    p.add_argument("--out", help="write the selected inverse (Matrix Market)")
    p.add_argument("--verify", action="store_true",
                   help="compare against the dense inverse (n <= 500)")
    p.set_defaults(func=cmd_selinv)

    p = sub.add_parser("reml", help="restricted-likelihood report for a dataset")
    p.add_argument("dataset", help="tab-separated dataset file")
    _add_ordering_flag(p)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--gamma", help="comma-separated, one per random factor "
                                   "(single value broadcasts; default 1)")
    p.add_argument("--phi", help="comma-separated, one per residual block "
                                 "(single value broadcasts; default 1)")
    p.add_argument("--check-h-form", action="store_true",
                   help="cross-check against the dense likelihood form")
    p.add_argument("--fd-check", action="store_true",
                   help="finite-difference check of the gradient")
    p.add_argument("--out", help="write the report as CSV to this path")
    p.set_defaults(func=cmd_reml)

    p = sub.add_parser("gen", help="generate a synthetic variety-trial dataset")
    p.add_argument("--preset", help=f"one of: {', '.join(datagen.PRESETS)}")
    p.add_argument("--years", type=int, default=12)
    p.add_argument("--centers", type=int, default=22)
    p.add_argument("--fraction", type=float, default=0.5,
                   help="fraction of centers used per year")
    p.add_argument("--controls", type=int, default=10)
    p.add_argument("--new-per-year", type=int, default=10)
    p.add_argument("--mean-persistence", type=float, default=5.5)
    p.add_argument("--missing", type=float, default=0.10)
    p.add_argument("--var", action="append", metavar="TERM=VALUE",
                   help="variance component override (repeatable)")
    p.add_argument("--seed", type=int, default=20240901)
    p.add_argument("--out", required=True, help="dataset file to write")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="benchmark ladder, CSV output")
    p.add_argument("--problems", help="comma-separated preset names (default: all)")
    p.add_argument("--orderings", default="amd",
                   help="comma-separated ordering flags (default: amd)")
    p.add_argument("--seed", type=int, default=20240901)
    p.add_argument("--out", help="CSV path (default stdout); also writes "
                                 "<path>.pairs.csv of (nnz_L, time)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="dense-oracle pipeline check (n <= 500)")
    p.add_argument("matrix", help="Matrix Market file")
    _add_ordering_flag(p)
    p.set_defaults(func=cmd_verify)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SeldetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
