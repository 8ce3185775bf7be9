"""Command-line front end.

Exit codes: 0 pass, 1 a verification failed, 2 bad input, 3 irrational
eigenvalue or non-orthonormalizable block, 4 operator not self-adjoint.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

from .diagonalize import SymSeriesMatrix, diagonalize, verify
from .errors import (
    HahnSpecError,
    IrrationalEigenvalue,
    NotOrthonormalizable,
    ParseError,
    RadiusOutsideDT,
)
from .fredholm import delta_n_estimate, delta_trend, resolvent_bound_scan
from .operators import is_self_adjoint
from .scalars import DEFAULT_PRECISION, INFINITE, lower_bound
from .spectral import (
    normalized_decomposition,
    random_probes,
    spectral_decompose,
    tail_projection_norms,
    verify_commuting_projection,
    verify_eigenspace_orthogonality,
    verify_eigs_tend_to_zero,
    verify_norm_max,
    verify_normalized,
    verify_reconstruction,
)
from .linalg import OrthoBasis
from .suite import TAGS, run_suite
from .textfmt import format_matrix_json, format_series, format_vector, parse_matrix_json, parse_operator_json

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_IRRATIONAL, EXIT_NOT_SELF_ADJOINT = 0, 1, 2, 3, 4


@dataclass
class RunConfig:
    precision: int = DEFAULT_PRECISION
    seed: int = 0
    grid: int = 8
    input: str | None = None
    format: str = "text"

    def __post_init__(self):
        if self.precision < 4:
            raise ValueError("precision must be at least 4")
        if self.grid < 2:
            raise ValueError("grid must be at least 2")
        if self.format not in ("text", "structured"):
            raise ValueError("format is text or structured")


class Report:
    """Collects (key, value) pairs; renders as aligned text or key: value lines."""

    def __init__(self, command):
        self.items = [("command", command)]

    def add(self, key, value):
        self.items.append((key, value))

    def render(self, fmt):
        if fmt == "structured":
            return "".join(f"{k}: {v}\n" for k, v in self.items)
        width = max(len(k) for k, _ in self.items)
        return "".join(f"{k.ljust(width)}  {v}\n" for k, v in self.items)


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc


def _val(v):
    return "inf" if v == INFINITE else str(v)


def cmd_diagonalize(cfg: RunConfig, mode="orthonormal", split="all"):
    rows = parse_matrix_json(_read(cfg.input))
    try:
        A = SymSeriesMatrix(rows)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    N = cfg.precision
    res = diagonalize(A, N, mode=mode, split=split)
    rep = verify(res, A, N)
    out = Report("diagonalize")
    out.add("precision", N)
    out.add("n", A.n)
    out.add("mode", mode)
    out.add("shift", res.certificate.get("shift"))
    for k, lam in enumerate(res.eigenvalues, 1):
        out.add(f"eigenvalue.{k}", format_series(lam))
    if mode == "orthogonal":
        out.add("gram", " ".join(str(g) for g in res.gram))
    out.add("U", format_matrix_json(res.U.rows))
    out.add("D", format_matrix_json(res.D.rows))
    out.add("U.exact", "yes" if res.certificate.get("exact_U") else "no")
    out.add("verify.orthogonality", _val(rep.orthogonality))
    out.add("verify.residual", _val(rep.residual))
    out.add("verify.offdiag", _val(rep.offdiag))
    out.add("status", "pass" if rep.ok else "FAIL")
    return (EXIT_OK if rep.ok else EXIT_FAIL), out


def cmd_spectral(cfg: RunConfig, probes=20):
    T = parse_operator_json(_read(cfg.input))
    if not is_self_adjoint(T):
        out = Report("spectral")
        out.add("status", "operator is not self-adjoint")
        return EXIT_NOT_SELF_ADJOINT, out
    N = cfg.precision
    dec = spectral_decompose(T, N)
    out = Report("spectral")
    out.add("precision", N)
    out.add("levels", " ".join(str(v) for v in dec.levels) or "(none)")
    for n, ((lam, x), nn) in enumerate(zip(dec.flat, dec.self_inner), 1):
        out.add(f"lambda.{n}", format_series(lam))
        out.add(f"x.{n}", format_vector(x))
        out.add(f"<x,x>.{n}", format_series(nn))
    verdicts = [
        verify_reconstruction(T, dec, random_probes(T.size, probes, cfg.seed)),
        verify_norm_max(T, dec),
        verify_eigenspace_orthogonality(dec),
        verify_eigs_tend_to_zero(dec),
    ]
    vals, tp = tail_projection_norms(T, dec)
    verdicts.append(tp)
    out.add("tail_projection.valuations", " ".join(_val(v) for v in vals) or "(none)")
    for g in dec.groups:
        for p in g:
            verdicts.append(verify_commuting_projection(T, OrthoBasis(p.vectors), N))
    nd = normalized_decomposition(dec)
    verdicts.append(verify_normalized(T, nd))
    for k, why in nd.failures:
        out.add(f"normalize.{k + 1}", why)
    ok = all(verdicts)
    for v in verdicts:
        out.add(f"verdict.{v.name}", ("pass" if v.ok else "FAIL") + (f" ({v.detail})" if v.detail else ""))
    out.add("status", "pass" if ok else "FAIL")
    return (EXIT_OK if ok else EXIT_FAIL), out


def cmd_volumes(cfg: RunConfig, n_max=None):
    T = parse_operator_json(_read(cfg.input))
    if not T.shift.is_zero():
        raise ParseError("volumes need a compactoid operator (no identity shift)")
    n_max = n_max or T.size + 1
    out = Report("volumes")
    out.add("n_max", n_max)
    ok = True
    for n in range(1, n_max + 1):
        est = delta_n_estimate(T, n)
        wit = " ".join(f"e{next(iter(x.entries))}" if len(x.entries) == 1 else format_vector(x)
                       for x in est.witness)
        out.add(f"delta.{n}", f"v >= {_val(est.upper_bound)}, witness v = {_val(est.lower_bound)} [{wit}]")
        if lower_bound(est.lower_bound) < lower_bound(est.upper_bound):
            ok = False
    trend, trend_ok = delta_trend(T, n_max)
    out.add("trend", " ".join(_val(a) for _, a in trend))
    out.add("trend.verdict", "pass" if trend_ok else "FAIL")
    ok = ok and trend_ok
    out.add("status", "pass" if ok else "FAIL")
    return (EXIT_OK if ok else EXIT_FAIL), out


def cmd_scan(cfg: RunConfig, v_r=0):
    T = parse_operator_json(_read(cfg.input))
    out = Report("scan")
    out.add("v_r", v_r)
    out.add("grid", cfg.grid)
    try:
        rep = resolvent_bound_scan(T, v_r, cfg.grid, cfg.precision)
        code = EXIT_OK if rep.certified else EXIT_FAIL
        status = "bounded" if rep.certified else "FAIL"
    except RadiusOutsideDT as exc:
        rep = exc.report
        code = EXIT_OK
        status = "outside D_T: " + ("blow-up observed" if not rep.finite or rep.max_norm_val < 0 else "no blow-up sampled")
    out.add("in_D_T", "yes" if rep.in_dt else "no")
    for p in rep.points:
        nv = "singular" if p.norm_val is None else _val(p.norm_val)
        out.add(f"point {format_series(p.lam)}", f"v(||R||) = {nv} [{p.method}] resid >= {_val(lower_bound(p.residual))}")
    out.add("max_norm_val", _val(rep.max_norm_val))
    out.add("status", status)
    return code, out


def cmd_verify_suite(cfg: RunConfig, mutate=False, size=8, tags=None):
    results = run_suite(tags, cfg.seed, cfg.precision, size, mutate, cfg.grid)
    out = Report("verify-suite")
    out.add("precision", cfg.precision)
    out.add("seed", cfg.seed)
    out.add("mode", "mutate" if mutate else "check")
    bad = 0
    for r in results:
        if mutate:
            # every injected corruption should be caught
            out.add(r.tag, f"detected {r.passed}/{r.total}")
            bad += r.failed
        else:
            out.add(r.tag, f"pass {r.passed} fail {r.failed}")
            bad += r.failed
        for note in r.notes:
            if not note.endswith("WitnessNotFound") or not mutate:
                out.add(f"{r.tag}.note", note)
    out.add("status", "pass" if not bad else "FAIL")
    return (EXIT_OK if not bad else EXIT_FAIL), out


def build_parser():
    p = argparse.ArgumentParser(prog="hahnspec", description="Spectral theory of operators over Q((t)).")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", "-N", type=int, default=DEFAULT_PRECISION, help="work modulo t^N (>= 4)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--grid", type=int, default=8, help="residue witnesses c = 1..grid (>= 2)")
    common.add_argument("--format", choices=("text", "structured"), default="text")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("diagonalize", parents=[common], help="diagonalize a symmetric series matrix")
    d.add_argument("input")
    d.add_argument("--mode", choices=("orthonormal", "orthogonal"), default="orthonormal")
    d.add_argument("--split", choices=("all", "pair"), default="all")

    s = sub.add_parser("spectral", parents=[common], help="spectral decomposition of an operator")
    s.add_argument("input")
    s.add_argument("--probes", type=int, default=20)

    v = sub.add_parser("volumes", parents=[common], help="Delta_n estimates")
    v.add_argument("input")
    v.add_argument("--n-max", type=int, default=None)

    c = sub.add_parser("scan", parents=[common], help="resolvent norms on a ball")
    c.add_argument("input")
    c.add_argument("--radius", type=int, default=0, help="valuation v_r of the radius")

    u = sub.add_parser("verify-suite", parents=[common], help="run the property suites")
    u.add_argument("--mutate", action="store_true", help="corrupt each artifact and count detections")
    u.add_argument("--size", type=int, default=8, help="instances per tag")
    u.add_argument("--tags", nargs="*", choices=TAGS, default=None)
    return p


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_PARSE
    try:
        cfg = RunConfig(args.precision, args.seed, args.grid, getattr(args, "input", None), args.format)
    except ValueError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_PARSE
    try:
        if args.command == "diagonalize":
            code, out = cmd_diagonalize(cfg, args.mode, args.split)
        elif args.command == "spectral":
            code, out = cmd_spectral(cfg, args.probes)
        elif args.command == "volumes":
            code, out = cmd_volumes(cfg, args.n_max)
        elif args.command == "scan":
            code, out = cmd_scan(cfg, args.radius)
        else:
            code, out = cmd_verify_suite(cfg, args.mutate, args.size, args.tags)
    except ParseError as exc:
        print(f"parse error: {exc}", file=stderr)
        return EXIT_PARSE
    except (IrrationalEigenvalue, NotOrthonormalizable) as exc:
        print(f"{type(exc).__name__}: {exc}", file=stderr)
        return EXIT_IRRATIONAL
    except HahnSpecError as exc:
        print(f"{type(exc).__name__}: {exc}", file=stderr)
        return EXIT_FAIL
    stdout.write(out.render(cfg.format))
    return code


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
