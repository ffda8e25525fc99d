"""Command line harness: ``hcnil verify | hc | roots | schur | wick``.

Exit codes: 0 success, 1 usage or input error, 2 statistical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .algebra import load_algebra
from .estimate import Estimate
from .gaussian import NilpotentGaussianSpec, Polynomial, mc_expectation, wick_expectation
from .haar import SamplerConfig, lhs_mc
from .invariants import DSLSyntaxError, parse_invariant
from .rootsys import InvalidCartanMatrix, WeylGroupTooLarge
from .spherical import (
    DegenerateInput,
    NonRegular,
    SphericalProblem,
    generalized_schur,
    hc_f1,
    iz_cross_check,
    rhs_eval,
)

__all__ = ["VerificationReport", "main", "parse_complex", "parse_complex_list", "parse_gauss_polynomial"]


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- literals -----------------------------------------------------------------


def parse_complex(text: str) -> complex:
    """``"1+0.5i"``, ``"-2"``, ``"3i"``; ``j`` is accepted as well."""
    t = text.strip().replace(" ", "")
    if not t:
        raise UsageError("empty number")
    t = re.sub(r"(?<![0-9.])([ij])", r"1\1", t).replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise UsageError(f"cannot parse complex number {text!r}") from None


def parse_complex_list(text: str) -> np.ndarray:
    return np.array([parse_complex(s) for s in text.split(",")], dtype=complex)


def _pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


_POLY_TOKEN = re.compile(
    r"\s*(?:(?P<var>[nc])(?P<idx>\d+)(?:\^(?P<pow>\d+))?"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?[ij]?|[ij](?![0-9]))"
    r"|(?P<op>[-+*]))"
)


def parse_gauss_polynomial(text: str, npos: int) -> Polynomial:
    """Polynomial in ``n1..nP`` and their conjugates ``c1..cP``.

    A term is an optionally signed product of factors joined by ``*``; a
    factor is a real or imaginary literal (``2``, ``0.5i``) or ``nK``/``cK``
    with an optional ``^power``.  Example: ``"2*n1*c1 - 0.5i*n1^2*c1^2"``.
    """
    nv = 2 * npos
    pos, toks = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _POLY_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise UsageError(f"bad polynomial near position {pos}: {text[pos:pos + 10]!r}")
        toks.append(m)
        pos = m.end()
    if not toks:
        raise UsageError("empty polynomial")
    total, term, sign, expect_factor = Polynomial(nv), None, 1, True
    for m in toks:
        if m.group("op"):
            op = m.group("op")
            if op == "*" and not expect_factor:
                expect_factor = True
                continue
            if op in "+-" and (term is not None and not expect_factor or term is None and expect_factor):
                if term is not None:
                    total = total + term
                term, sign, expect_factor = None, (-1 if op == "-" else 1), True
                continue
            raise UsageError(f"unexpected {op!r} in polynomial")
        if not expect_factor:
            raise UsageError("missing '*' between factors")
        if m.group("var"):
            k = int(m.group("idx"))
            if not 1 <= k <= npos:
                raise UsageError(f"variable {m.group(0).strip()!r} out of range 1..{npos}")
            idx = k - 1 + (npos if m.group("var") == "c" else 0)
            f = Polynomial.variable(nv, idx) ** int(m.group("pow") or 1)
        else:
            f = Polynomial.constant(nv, parse_complex(m.group("num")))
        term = (Polynomial.constant(nv, sign) if term is None else term) * f
        expect_factor = False
    if expect_factor:
        raise UsageError("polynomial ends with an operator")
    return total + term


# -- reports ------------------------------------------------------------------


@dataclass
class VerificationReport:
    algebra: str
    H: list
    J: list
    gamma: list
    F: str
    seed: int
    samples: int
    sampler: str
    method: str
    threads: int
    lhs: dict
    rhs: list
    rhs_stderr: float
    breakdown: list
    z_score: float
    tolerance_z: float
    passed: bool
    version: str = __version__
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> VerificationReport:
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> VerificationReport:
        return cls.from_dict(json.loads(text))

    @property
    def lhs_estimate(self) -> Estimate:
        return Estimate.from_dict(self.lhs)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["algebra", "word", "sign", "J_w", "phase_re", "phase_im", "denominator_re", "denominator_im",
                    "nilpotent_re", "nilpotent_im", "lhs_re", "lhs_im", "lhs_stderr", "rhs_re", "rhs_im",
                    "z_score", "passed"])
        for row in self.breakdown:
            w.writerow([self.algebra, " ".join(str(i + 1) for i in row["word"]) or "e", row["sign"],
                        ";".join(f"{a}{b:+}i" for a, b in row["J_w"]), *row["phase"], *row["denominator"],
                        *row["nilpotent"], *self.lhs["value"], self.lhs["stderr"], *self.rhs, self.z_score,
                        self.passed])
        return buf.getvalue()


def _breakdown_rows(bd) -> list[dict]:
    return [
        {
            "word": list(t.word),
            "sign": t.sign,
            "J_w": [_pair(z) for z in t.J_w],
            "phase": _pair(t.phase),
            "denominator": _pair(t.denominator),
            "nilpotent": _pair(t.nilpotent),
            "nilpotent_stderr": t.nilpotent_stderr,
        }
        for t in bd.terms
    ]


# -- subcommands ----------------------------------------------------------------


def _problem(args) -> SphericalProblem:
    alg = load_algebra(args.algebra)
    if args.H is None or args.J is None:
        H0, J0 = alg.default_pair()
    H = parse_complex_list(args.H) if args.H is not None else H0
    J = parse_complex_list(args.J) if args.J is not None else J0
    if len(H) != alg.rank or len(J) != alg.rank:
        raise UsageError(f"{alg.label} needs {alg.rank} coroot coefficients for H and J")
    gamma = parse_complex(args.gamma)
    if gamma == 0:
        raise UsageError("gamma must be non-zero")
    F = parse_invariant(getattr(args, "F", "1"), alg.rep)
    p = SphericalProblem(alg, H, J, gamma, F)
    p.require_regular()
    return p


def _emit(args, text_json: str, text_csv: str | None = None) -> None:
    text = text_csv if args.output == "csv" and text_csv is not None else text_json
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text)
    if not args.quiet:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_verify(args) -> int:
    p = _problem(args)
    alg = p.alg
    sampler = args.sampler or ("qr" if alg.family in "ABCD" else "walk:200")
    try:
        cfg = SamplerConfig.parse(sampler, alg.family, alg.rank, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.method == "gaussian-mc" and complex(p.gamma).imag != 0:
        raise UsageError("gaussian-mc needs real gamma")
    root = np.random.SeedSequence(args.seed)
    ss_lhs, ss_rhs = root.spawn(2)
    lhs = lhs_mc(p, cfg, args.samples, seed=ss_lhs, threads=args.threads)
    bd = rhs_eval(p, args.method, samples=args.samples, seed=ss_rhs)
    se = math.hypot(lhs.stderr, bd.stderr)
    diff = abs(lhs.value - bd.total)
    z = 0.0 if diff == 0 else (diff / se if se > 0 else math.inf)
    report = VerificationReport(
        algebra=alg.label,
        H=[_pair(z_) for z_ in p.H],
        J=[_pair(z_) for z_ in p.J],
        gamma=_pair(p.gamma),
        F=p.F.source,
        seed=args.seed,
        samples=args.samples,
        sampler=sampler,
        method=args.method,
        threads=args.threads,
        lhs=lhs.to_dict(),
        rhs=_pair(bd.total),
        rhs_stderr=bd.stderr,
        breakdown=_breakdown_rows(bd),
        z_score=z,
        tolerance_z=args.tolerance_z,
        passed=bool(z < args.tolerance_z),
        config={
            "representation": alg.rep.kind,
            "index_ratio": alg.rep.index_ratio,
            "sampler_method": cfg.method,
            "walk_steps": cfg.steps if cfg.method == "random-walk" else None,
            "prefactor": _pair(bd.prefactor),
            "simplified_total": _pair(bd.simplified_total),
        },
    )
    _emit(args, report.to_json(), report.to_csv())
    return 0 if report.passed else 2


def cmd_hc(args) -> int:
    p = _problem(args)
    out = {"algebra": p.alg.label, "H": [_pair(z) for z in p.H], "J": [_pair(z) for z in p.J],
           "gamma": _pair(p.gamma), "hc_f1": _pair(hc_f1(p)), "version": __version__}
    if p.alg.family == "A":
        # constant fitted once on the reference pair, then applied here
        H0, J0 = p.alg.default_pair()
        ref = SphericalProblem(p.alg, H0, J0, p.gamma, parse_invariant("1", p.alg.rep))
        _, _, const, _ = iz_cross_check(ref)
        hc, det_val, _, rel = iz_cross_check(p, const)
        out["iz"] = {"determinant": _pair(det_val), "constant": _pair(const), "relative_error": rel}
    row = [out["algebra"], *out["hc_f1"]]
    header = ["algebra", "hc_re", "hc_im"]
    if "iz" in out:
        header += ["det_re", "det_im", "constant_re", "constant_im", "relative_error"]
        row += [*out["iz"]["determinant"], *out["iz"]["constant"], out["iz"]["relative_error"]]
    _emit(args, _dump(out), _rows_csv(header, [row]))
    return 0


def cmd_roots(args) -> int:
    alg = load_algebra(args.algebra)
    rs = alg.rs
    try:
        order = len(alg.weyl)
    except WeylGroupTooLarge as exc:
        order = str(exc)
    roots = [{"coords": list(r.coords), "height": r.height, "positive": r.positive, "norm2": str(rs.norm2(r))}
             for r in rs.roots]
    out = {"algebra": alg.label, "cartan": rs.cartan.as_array().tolist(), "exponents": list(alg.exponents),
           "weyl_order": order, "n_roots": len(rs.roots), "n_positive": rs.n_pos, "roots": roots,
           "version": __version__}
    rows = [[" ".join(map(str, r["coords"])), r["height"], r["positive"], r["norm2"]] for r in roots]
    _emit(args, _dump(out), _rows_csv(["coords", "height", "positive", "norm2"], rows))
    return 0


def _read_matrix(path: str) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise UsageError(f"cannot read matrix file: {exc}") from None
    rows = [[parse_complex(t) for t in re.split(r"[,\s]+", ln.strip()) if t] for ln in lines]
    if not rows or any(len(r) != len(rows) for r in rows):
        raise UsageError("matrix file must hold a square matrix")
    return np.array(rows, dtype=complex)


def cmd_schur(args) -> int:
    alg = load_algebra(args.algebra)
    if alg.rep.kind != "defining":
        raise UsageError("schur needs a classical algebra (defining representation)")
    m = _read_matrix(args.matrix)
    if m.shape[0] != alg.rep.size:
        raise UsageError(f"{alg.label} acts on {alg.rep.size}x{alg.rep.size} matrices, got {m.shape[0]}")
    try:
        M = alg.rep.coefficients(m, tol=1e-9)
    except ValueError as exc:
        raise UsageError(f"matrix is not in {alg.label}: {exc}") from None
    k, H, N = generalized_schur(M, alg)
    rec = k.matrix @ alg.rep(alg.sc.element(h=H) + N) @ k.inverse_matrix()
    out = {
        "algebra": alg.label,
        "k": [[_pair(z) for z in row] for row in k.matrix],
        "H": [_pair(z) for z in np.asarray(H, dtype=complex)],
        "N": [_pair(z) for z in N[alg.rank : alg.rank + alg.rs.n_pos]],
        "residual": float(np.linalg.norm(rec - m, 2)),
        "unitarity_error": k.unitarity_error(),
        "version": __version__,
    }
    rows = [["H", i + 1, *v] for i, v in enumerate(out["H"])] + [["N", i + 1, *v] for i, v in enumerate(out["N"])]
    _emit(args, _dump(out), _rows_csv(["part", "index", "re", "im"], rows))
    return 0


def cmd_wick(args) -> int:
    alg = load_algebra(args.algebra)
    gamma = parse_complex(args.gamma)
    try:
        spec = NilpotentGaussianSpec(alg.rs, gamma)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    P = parse_gauss_polynomial(args.poly, alg.rs.n_pos)
    exact = wick_expectation(P, spec)
    out = {"algebra": alg.label, "gamma": _pair(gamma), "polynomial": args.poly, "exact": _pair(exact),
           "version": __version__}
    row = [alg.label, *out["exact"]]
    header = ["algebra", "exact_re", "exact_im"]
    if args.samples:
        est = mc_expectation(lambda n: P(np.concatenate([n, np.conj(n)], axis=1)), spec, args.samples, args.seed,
                             threads=args.threads)
        out["mc"] = est.to_dict()
        out["z_score"] = est.z_score(exact)
        header += ["mc_re", "mc_im", "mc_stderr", "z_score"]
        row += [*out["mc"]["value"], est.stderr, out["z_score"]]
    _emit(args, _dump(out), _rows_csv(header, [row]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=("json", "csv"), default="json")
    common.add_argument("--quiet", action="store_true", help="do not print the result")
    common.add_argument("--report", metavar="FILE", help="also write the result to FILE")

    problem = argparse.ArgumentParser(add_help=False)
    problem.add_argument("--algebra", required=True, help="label such as A1, B2, G2")
    problem.add_argument("--gamma", default="1.0", help="coupling (complex literal allowed)")
    problem.add_argument("--H", help="coroot coefficients, comma separated, e.g. 1,0.5+0.1i")
    problem.add_argument("--J", help="coroot coefficients, comma separated")

    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--samples", type=int, default=100_000)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--threads", type=int, default=1)

    ap = _Parser(prog="hcnil", description="Verify nilpotent Gaussian formulas for Harish-Chandra integrals.")
    ap.add_argument("--version", action="version", version=f"hcnil {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", parents=[common, problem, mc], help="group average vs Weyl sum")
    v.add_argument("--F", default="1", help='trace-word invariant, e.g. "tr(X Y)"')
    v.add_argument("--method", choices=("exact-wick", "gaussian-mc"), default="exact-wick")
    v.add_argument("--sampler", help="qr or walk:N (default qr for classical, walk:200 otherwise)")
    v.add_argument("--tolerance-z", type=float, default=3.0)
    v.set_defaults(func=cmd_verify)

    h = sub.add_parser("hc", parents=[common, problem], help="closed form for F = 1")
    h.set_defaults(func=cmd_hc)

    r = sub.add_parser("roots", parents=[common], help="root system summary")
    r.add_argument("--algebra", required=True)
    r.set_defaults(func=cmd_roots)

    s = sub.add_parser("schur", parents=[common], help="decompose a matrix as Ad_k(H + N)")
    s.add_argument("--algebra", required=True)
    s.add_argument("--matrix", required=True, metavar="FILE", help="whitespace or comma separated rows")
    s.set_defaults(func=cmd_schur)

    w = sub.add_parser("wick", parents=[common], help="Gaussian expectation on n+")
    w.add_argument("--algebra", required=True)
    w.add_argument("--gamma", default="1.0")
    w.add_argument("--poly", required=True, help='e.g. "n1*c1 + 2*n2^2*c2^2"')
    w.add_argument("--samples", type=int, default=0, help="also estimate by Monte Carlo")
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--threads", type=int, default=1)
    w.set_defaults(func=cmd_wick)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    if getattr(args, "samples", 1) < 0 or (args.command == "verify" and args.samples == 0):
        print("error: samples must be positive", file=sys.stderr)
        return 1
    if getattr(args, "threads", 1) < 1:
        print("error: threads must be at least 1", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except DSLSyntaxError as exc:
        print(f"error: bad invariant expression: {exc}", file=sys.stderr)
    except DegenerateInput as exc:
        print(f"error: degenerate input: {exc}", file=sys.stderr)
    except NonRegular as exc:
        print(f"error: non-regular matrix: {exc}", file=sys.stderr)
    except (InvalidCartanMatrix, WeylGroupTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except ValueError as exc:
        msg = str(exc)
        if msg.startswith("unknown algebra label"):
            print(f"error: unknown algebra: {msg}", file=sys.stderr)
        else:
            print(f"error: {msg}", file=sys.stderr)
    return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
