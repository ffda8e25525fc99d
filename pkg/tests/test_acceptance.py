"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run standalone with ``python3 tests/test_acceptance.py`` or through pytest,
where the lines are repeated in the terminal summary.
"""
import math
import time
from fractions import Fraction

import numpy as np

from acceptance_log import RESULTS, line, record
from hcnil.algebra import load_algebra
from hcnil.chevalley import chevalley_constants
from hcnil.gaussian import (
    Polynomial,
    QuadraticParams,
    moment_complex,
    moment_complex_mc,
    moment_real,
    moment_real_mc,
    z_nplus,
)
from hcnil.haar import SamplerConfig, haar_matrices, lhs_mc
from hcnil.invariants import parse_invariant
from hcnil.rootsys import build_root_system, delta, exponents, weyl_act, weyl_group
from hcnil.spherical import (
    NonRegular,
    SphericalProblem,
    complex_weyl_ratio_check,
    generalized_schur,
    hc_constant,
    hc_f1,
    iz_cross_check,
    rhs_eval,
    weyl_invariance_check,
)
from oracles import coxeter_exponents_oracle, random_regular_pair

Z_TOL = 3.0
STRUCTURE_LABELS = ["A1", "A2", "A3", "A4", "B2", "B3", "B4", "C2", "C3", "C4", "D3", "D4", "F4", "G2"]
# problems of criteria 1 and 2, reused by the constant check of criterion 4
_PROBLEMS: list[SphericalProblem] = []


def _report(number, title, passed, detail):
    print(record(number, title, passed, detail))
    return passed


def _z(est, ref):
    return est.z_score(ref)


# -- 1 ----------------------------------------------------------------------------


def run_criterion_1():
    worst_z, worst_t = 0.0, 0.0
    for F in ("1", "tr(X Y)", "tr(X X Y Y)"):
        p = SphericalProblem.build("A1", np.array([1.0]), np.array([0.7]), 1.0, F)
        _PROBLEMS.append(p)
        t0 = time.perf_counter()
        est = lhs_mc(p, SamplerConfig("A", 1), 100_000, seed=1)
        rhs = rhs_eval(p).total
        worst_t = max(worst_t, time.perf_counter() - t0)
        worst_z = max(worst_z, _z(est, rhs))
    ok = worst_z < Z_TOL and worst_t < 30
    return _report(1, "rank-1 identity", ok, f"max z {worst_z:.2f}, max time {worst_t:.1f}s")


# -- 2 ----------------------------------------------------------------------------


def run_criterion_2():
    worst_z, worst_t = 0.0, 0.0
    rng = np.random.default_rng(2024)
    for label in ("A2", "B2"):
        alg = load_algebra(label)
        H, J, _, _ = random_regular_pair(alg, rng)
        for F in ("1", "tr(X Y)", "tr(X Y X Y)"):
            p = SphericalProblem(alg, H, J, 1.0, parse_invariant(F, alg.rep))
            _PROBLEMS.append(p)
            t0 = time.perf_counter()
            est = lhs_mc(p, SamplerConfig(label[0], 2), 300_000, seed=2)
            rhs = rhs_eval(p).total
            worst_t = max(worst_t, time.perf_counter() - t0)
            worst_z = max(worst_z, _z(est, rhs))
    ok = worst_z < Z_TOL and worst_t < 300
    return _report(2, "rank-2 identity on A2 and B2", ok, f"max z {worst_z:.2f}, max time {worst_t:.1f}s")


# -- 3 ----------------------------------------------------------------------------


def run_criterion_3():
    rng = np.random.default_rng(33)
    alg = load_algebra("A2")
    H, J, _, _ = random_regular_pair(alg, rng)
    p = SphericalProblem(alg, H, J, 1.0, parse_invariant("1", alg.rep))
    z = _z(lhs_mc(p, SamplerConfig("A", 2), 100_000, seed=3), hc_f1(p))
    worst_rel = 0.0
    for label in ("A1", "A2"):
        alg = load_algebra(label)
        const = None
        for _ in range(10):
            H, J = rng.uniform(-1, 1, alg.rank), rng.uniform(-1, 1, alg.rank)
            q = SphericalProblem(alg, H, J, 1.0, parse_invariant("1", alg.rep))
            _, _, c, rel = iz_cross_check(q, const)
            const = c if const is None else const
            worst_rel = max(worst_rel, rel)
    ok = z < Z_TOL and worst_rel < 1e-10
    return _report(3, "closed form for F = 1", ok, f"z {z:.2f}, max determinant rel err {worst_rel:.1e}")


# -- 4 ----------------------------------------------------------------------------


def run_criterion_4():
    a1 = build_root_system("A1")
    err = abs(z_nplus(a1, 1) - math.pi / 4)
    for gamma in (1.0, 0.3, 2.5, 1 + 2j):
        err = max(err, abs(hc_constant(a1, gamma) - 1 / (2 * gamma)))
    if not _PROBLEMS:
        run_criterion_1()
        run_criterion_2()
    worst = 0.0
    for p in _PROBLEMS:
        bd = rhs_eval(p)
        worst = max(worst, abs(bd.total - bd.simplified_total) / abs(bd.total))
    ok = err <= 1e-14 and worst <= 1e-12
    return _report(4, "normalising constants", ok, f"constant err {err:.1e}, two-form rel diff {worst:.1e}")


# -- 5 ----------------------------------------------------------------------------


def _random_poly(rng, nvars=4, max_degree=4, terms=4):
    out = {}
    for _ in range(terms):
        k = [0] * nvars
        for _ in range(rng.integers(0, max_degree + 1)):
            k[rng.integers(nvars)] += 1
        out[tuple(k)] = out.get(tuple(k), 0) + float(rng.integers(-3, 4) or 1)
    return Polynomial(nvars, out)


def run_criterion_5():
    real_qp, complex_qp = QuadraticParams(1.0, 0.3, 0.8), QuadraticParams(0.5, 1.0, 0.3)
    rng = np.random.default_rng(55)
    worst = 0.0
    for k in range(20):
        F = _random_poly(rng)
        sym = moment_real(F, real_qp)
        worst = max(worst, _z(moment_real_mc(F, real_qp, 200_000, 100 + k), sym))
        sym = moment_complex(F, complex_qp)
        worst = max(worst, _z(moment_complex_mc(F, complex_qp, 200_000, 200 + k), sym))
    spot = 0.0
    x, y = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
    for qp in (real_qp, complex_qp):
        d = qp.delta
        for mom in (moment_real, moment_complex):
            spot = max(spot, abs(mom(x * x, qp) - qp.c / (2 * d)), abs(mom(x * y, qp) + qp.b / (2 * d)))
    ok = worst < Z_TOL and spot <= 1e-14
    return _report(5, "Gaussian moments in both domains", ok, f"max z {worst:.2f} over 40 runs, spot err {spot:.1e}")


# -- 6 ----------------------------------------------------------------------------


def run_criterion_6():
    failures = []
    for label in STRUCTURE_LABELS:
        sc = chevalley_constants(label)
        rs = sc.rs
        if sc.jacobi_violations():
            failures.append(f"{label} Jacobi")
        K = sc.killing_matrix
        for a in rs.roots:
            if Fraction(int(K[sc.root_index(a), sc.root_index(-a)])) * rs.norm2(a) != 2:
                failures.append(f"{label} Killing pairing {a}")
                break
        if sorted(exponents(rs)) != coxeter_exponents_oracle(rs.cartan.as_array()):
            failures.append(f"{label} exponents")
    rng = np.random.default_rng(66)
    for label in ("A2", "B2", "G2"):
        rs = build_root_system(label)
        W = weyl_group(rs)
        for _ in range(5):
            H = [Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 6))) for _ in range(rs.rank)]
            d = delta(rs, H)
            if any(delta(rs, weyl_act(w, H)) != w.sign * d for w in W):
                failures.append(f"{label} Delta sign")
                break
    detail = f"{len(STRUCTURE_LABELS)} labels" if not failures else ", ".join(failures)
    return _report(6, "structure layer", not failures, detail)


# -- 7 ----------------------------------------------------------------------------


def run_criterion_7():
    alg = load_algebra("A1")
    r = complex_weyl_ratio_check("1", "tr(X Y)", alg, samples=1_000_000, seed=7)
    inv = weyl_invariance_check("tr(X Y X Y)", alg, np.array([0.8]), 1.0, 200_000, seed=8)
    z_inv = max(z for word, _, z in inv if word)
    ok = r.passed and r.z < Z_TOL and z_inv < Z_TOL
    return _report(7, "complex Weyl integration on A1", ok, f"ratio z {r.z:.2f}, invariance z {z_inv:.2f}")


# -- 8 ----------------------------------------------------------------------------


def run_criterion_8():
    alg = load_algebra("A2")
    rep, sc = alg.rep, alg.sc
    rng = np.random.default_rng(88)
    worst_res = worst_unit = 0.0
    upper = True
    for _ in range(100):
        M = rng.standard_normal(sc.dim) + 1j * rng.standard_normal(sc.dim)
        k, H, N = generalized_schur(M, alg)
        rec = k.matrix @ rep(sc.element(h=H) + N) @ k.matrix.conj().T
        worst_res = max(worst_res, float(np.linalg.norm(rec - rep(M), 2)))
        worst_unit = max(worst_unit, k.unitarity_error())
        upper &= not np.any(np.tril(rep(N)))
    bad = [
        np.zeros((3, 3)),
        np.diag([1.0, 1.0, -2.0]),
        np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]], float),
        np.array([[1, 1, 0], [0, 1, 0], [0, 0, -2]], float),
    ]
    rejected = 0
    for m in bad:
        try:
            generalized_schur(rep.coefficients(m), alg)
        except NonRegular:
            rejected += 1
    ok = worst_res < 1e-9 and worst_unit < 1e-12 and upper and rejected == len(bad)
    detail = f"residual {worst_res:.1e}, unitarity {worst_unit:.1e}, rejected {rejected}/{len(bad)}"
    return _report(8, "generalized Schur on sl3", ok, detail)


# -- 9 ----------------------------------------------------------------------------


def _moment_z(a, b=None):
    if b is None:
        return a.mean(), a.std() / math.sqrt(len(a))
    return abs(a.mean() - b.mean()) / math.hypot(a.std() / math.sqrt(len(a)), b.std() / math.sqrt(len(b)))


def run_criterion_9():
    worst = 0.0
    for N in (2, 3, 4):
        ks = haar_matrices(SamplerConfig("U", N), np.random.default_rng(90 + N), 100_000)
        mean, se = _moment_z(np.abs(ks[:, 0, 0]) ** 2)
        worst = max(worst, abs(mean - 1 / N) / se)
    rng = np.random.default_rng(99)
    walk = haar_matrices(SamplerConfig("U", 2, "random-walk", steps=200), rng, 100_000)
    exact = haar_matrices(SamplerConfig("U", 2), rng, 100_000)
    observables = (
        lambda m: np.abs(m[:, 0, 0]) ** 2,
        lambda m: np.abs(m[:, 1, 0]) ** 2,
        lambda m: np.abs(np.trace(m, axis1=1, axis2=2)) ** 2,
    )
    walk_z = max(_moment_z(f(walk), f(exact)) for f in observables)
    ok = worst < Z_TOL and walk_z < Z_TOL
    return _report(9, "Haar sampler", ok, f"second-moment z {worst:.2f}, walk vs QR z {walk_z:.2f}")


CRITERIA = [run_criterion_1, run_criterion_2, run_criterion_3, run_criterion_4, run_criterion_5,
            run_criterion_6, run_criterion_7, run_criterion_8, run_criterion_9]


def summary_lines():
    return [line(n) for n in sorted(RESULTS)]


def test_criterion_1():
    assert run_criterion_1()


def test_criterion_2():
    assert run_criterion_2()


def test_criterion_3():
    assert run_criterion_3()


def test_criterion_4():
    assert run_criterion_4()


def test_criterion_5():
    assert run_criterion_5()


def test_criterion_6():
    assert run_criterion_6()


def test_criterion_7():
    assert run_criterion_7()


def test_criterion_8():
    assert run_criterion_8()


def test_criterion_9():
    assert run_criterion_9()


if __name__ == "__main__":
    import sys

    results = [run() for run in CRITERIA]
    sys.exit(0 if all(results) else 1)
