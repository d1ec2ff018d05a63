"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line."""

import math
import time

import numpy as np

from radbergman import classify as cl
from radbergman import report as rep
from radbergman.criteria import (
    bloch_norm_scan, default_pairs, equivalence_matrix, hardy_lower_bound_check, hinf_norm_scan,
    tail_criterion_scan,
)
from radbergman.expweights import ClassESpec, drho_consistency_check, exp_family_scan, mismatch_scan
from radbergman.kernel import KernelEvaluator
from radbergman.projection import szego_agreement_check
from radbergman.quad import log_quad
from radbergman.weights import (
    Exponential, LogPerturbed, NuOmega, OmegaNu, Product, Standard, TailOf, log_mixed_tail, log_tail,
)

LP = LogPerturbed(p=-1.0, q=-2.0)
EXP = Exponential(alpha=1.0, beta=1.0, ell=1.0)


def test_szego_coincidence(acceptance):
    t0 = time.perf_counter()
    devs = {w.label(): szego_agreement_check(w, M=8).max_deviation
            for w in (Standard(a=0.0), Standard(a=1.0), EXP)}
    dt = time.perf_counter() - t0
    worst = max(devs.values())
    ok = worst <= 1e-8 and dt < 10
    acceptance(1, "Szego coincidence", ok, f"max deviation {worst:.2e} (<= 1e-8), {dt:.1f} s (< 10 s)")
    assert ok


def test_kernel_oracle(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    K = KernelEvaluator(Standard(a=0.0))
    worst_v = worst_d = 0.0
    n = 0
    while n < 1000:
        z = math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        zeta = math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        t = np.conj(z) * zeta
        if abs(t) > 0.99:
            continue
        n += 1
        exact = 1 / (1 - t) ** 2
        worst_v = max(worst_v, abs(K.eval(z, zeta).value - exact) / abs(exact))
        # d/dz of B_zeta(z) = (1 - z conj(zeta))^-2
        d_exact = 2 * np.conj(zeta) / (1 - z * np.conj(zeta)) ** 3
        worst_d = max(worst_d, abs(K.deriv(z, zeta).value - d_exact) / abs(d_exact))
    dt = time.perf_counter() - t0
    ok = worst_v <= 1e-9 and worst_d <= 1e-8 and dt < 30
    acceptance(2, "kernel oracle", ok, f"value rel err {worst_v:.1e} (<= 1e-9), derivative "
               f"{worst_d:.1e} (<= 1e-8), 1000 pairs, {dt:.1f} s (< 30 s)")
    assert ok


def test_forelli_rudin_threshold(acceptance):
    t0 = time.perf_counter()
    grid = (0.0, 0.5, 1.0, 1.5, 2.0)
    wrong = []
    for b in grid:
        for a in grid:
            r = tail_criterion_scan(Standard(a=b), Standard(a=a))
            want = rep.BOUNDED if b > a else rep.DIVERGENT
            if r.verdict != want or (a == b and r.fit.model != "log"):
                wrong.append(f"(beta={b}, alpha={a}): {r.verdict}/{r.fit.model}")
    dt = time.perf_counter() - t0
    ok = not wrong and dt < 60
    acceptance(3, "Forelli-Rudin threshold", ok,
               f"25 cells, {len(wrong)} wrong {wrong[:3]}, diagonal log growth, {dt:.1f} s (< 60 s)")
    assert ok


def test_equivalence_matrix(acceptance):
    t0 = time.perf_counter()
    rows = equivalence_matrix(default_pairs(), depth=12)
    dt = time.perf_counter() - t0
    problems = []
    for i, row in enumerate(rows):
        if cl.MEMBER != row.classes["nu"]["dhat"]:
            problems.append(f"row {i}: nu not upper doubling")
        problems += [f"row {i}: {msg}" for msg in row.inconsistencies]
        c = row.conditions
        for key in ("nu_I_ii", "nu_I_iii"):
            if c.get(key) is not None and c.get(key) != c["hinf_bounded"]:
                problems.append(f"row {i}: {key} disagrees with hinf")
        if row.scans["hinf"].verdict == rep.BOUNDED:
            if row.classes["nu"]["dcheck"] != cl.MEMBER or row.classes["ratio"]["d"] != cl.MEMBER:
                problems.append(f"row {i}: bounded but nu not lower doubling or ratio not doubling")
        if row.classes["nu"]["dcheck"] == cl.NON_MEMBER and row.scans["hinf"].verdict != rep.DIVERGENT:
            problems.append(f"row {i}: nu not lower doubling but hinf {row.scans['hinf'].verdict}")
        if rep.INCONCLUSIVE == row.scans["hinf"].verdict:
            problems.append(f"row {i}: hinf inconclusive")
    n_bounded = sum(r.scans["hinf"].verdict == rep.BOUNDED for r in rows)
    ok = len(rows) == 8 and not problems and dt < 600
    acceptance(4, "equivalence matrix", ok, f"8 pairs, {n_bounded} bounded, "
               f"{len(problems)} problems {problems[:2]}, {dt:.0f} s (< 600 s)")
    assert ok


def test_hinf_bloch_separation(acceptance):
    t0 = time.perf_counter()
    v = TailOf(base=LP)
    out = []
    for omega in (OmegaNu(base=LP), Standard(a=0.0)):
        h = hinf_norm_scan(omega, v, depth=12)
        b = bloch_norm_scan(omega, v, depth=12)
        out.append((omega.label(), h.verdict, b.verdict))
    dt = time.perf_counter() - t0
    ok = all(h == rep.DIVERGENT and b == rep.BOUNDED for _, h, b in out) and dt < 600
    acceptance(5, "H-infinity / Bloch separation", ok,
               "; ".join(f"{w}: hinf {h}, bloch {b}" for w, h, b in out) + f", {dt:.0f} s (< 600 s)")
    assert ok


def test_hardy_lower_bound(acceptance):
    t0 = time.perf_counter()
    worst = math.inf
    for w in (Standard(a=0.0), Standard(a=1.0), EXP):
        chk = hardy_lower_bound_check(w, (0.5, 0.9, 0.99, 0.999), constant="stated")
        worst = min(worst, float(chk.ratio.min()))
    bound_ok = worst >= 1 - 1e-6
    unit = hinf_norm_scan(Standard(a=0.0), Standard(a=0.0), depth=12)
    dt = time.perf_counter() - t0
    ok = bound_ok and unit.verdict == rep.DIVERGENT and dt < 120
    acceptance(6, "Hardy lower bound", ok,
               f"min L(a)/bound {worst:.3f} (needs >= 1 - 1e-6), v = 1 scan {unit.verdict} "
               f"({unit.fit.model}), {dt:.0f} s (< 120 s)")
    assert ok


def test_classifier_ground_truth(acceptance):
    t0 = time.perf_counter()
    got = {}
    for w in (Standard(a=0.0), Standard(a=1.0), Standard(a=2.0), EXP, LP):
        r = cl.classify(w)
        got[w.label()] = (r.dhat_verdict, r.dcheck_verdict)
    dt = time.perf_counter() - t0
    M, N = cl.MEMBER, cl.NON_MEMBER
    want = {Standard(a=0.0).label(): (M, M), Standard(a=1.0).label(): (M, M),
            Standard(a=2.0).label(): (M, M), EXP.label(): (N, M), LP.label(): (M, N)}
    again = cl.classify(LP).to_dict() == cl.classify(LP).to_dict()
    ok = got == want and again and dt < 30
    acceptance(7, "classifier ground truth", ok,
               f"{sum(got[k] == want[k] for k in want)}/5 correct, deterministic={again}, "
               f"{dt:.1f} s (< 30 s)")
    assert ok


def _log_tail_by_quadrature(spec, r):
    # integrate the density itself, bypassing any closed-form tail
    u0 = -math.log1p(-r)
    return log_quad(spec.log_integrand_u, u0, rtol=1e-13).log_value


def test_exact_construction_identities(acceptance):
    t0 = time.perf_counter()
    # compared as logarithms: the exponential tails underflow near r = 1
    r = 1 - np.geomspace(1.0, 1e-3, 64)
    worst = 0.0
    for nu in (LP, Standard(a=0.0), Standard(a=1.0), EXP):
        for rr in r:
            lt = float(log_tail(nu, rr))
            worst = max(worst, abs(math.expm1(log_mixed_tail(OmegaNu(base=nu), nu, rr) - lt)))
            worst = max(worst, abs(math.expm1(2 * float(log_tail(NuOmega(base=nu), rr)) - lt)))
    # independent check: integrate the constructed densities out to r = 1 - 2^-40
    deep = 1 - np.geomspace(1.0, 2.0 ** -40, 64)
    oracle = 0.0
    for nu in (LP, Standard(a=0.0), Standard(a=1.0)):
        mixed = Product(factors=(OmegaNu(base=nu), TailOf(base=nu, power=-1.0)))
        for rr in deep:
            lt = float(log_tail(nu, rr))
            oracle = max(oracle, abs(math.expm1(_log_tail_by_quadrature(mixed, rr) - lt)))
            oracle = max(oracle, abs(math.expm1(2 * _log_tail_by_quadrature(NuOmega(base=nu), rr) - lt)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and oracle <= 1e-10 and dt < 5
    acceptance(8, "exact-construction identities", ok,
               f"max rel err {worst:.1e} on 64 radii x 4 weights, quadrature oracle {oracle:.1e} "
               f"(both <= 1e-10), {dt:.1f} s (< 5 s)")
    assert ok


def test_exponential_family_scan(acceptance):
    t0 = time.perf_counter()
    spec = ClassESpec(alpha=1.0, beta=1.0, ell=1.0)
    verdicts = {s: exp_family_scan(spec, sigma=s, depth=12).verdict for s in (0.0, 1.0, -1.0)}
    mis = mismatch_scan(2.5, spec, depth=12)
    dt = time.perf_counter() - t0
    ok = all(v == rep.BOUNDED for v in verdicts.values()) and mis.verdict == rep.DIVERGENT and dt < 1200
    acceptance(9, "exponential family scan", ok,
               f"v = w, w rho, w/rho: {list(verdicts.values())}; mismatch {mis.verdict} "
               f"({mis.fit.model}), {dt:.0f} s (< 1200 s)")
    assert ok


def test_drho_consistency(acceptance):
    t0 = time.perf_counter()
    chk = drho_consistency_check(ClassESpec(), n_pairs=100, seed=0)
    dt = time.perf_counter() - t0
    mesh_tol = 0.01
    ok = (chk.max_bound_excess <= 1e-12 and chk.max_change < 0.01 and chk.max_asymmetry <= mesh_tol
          and chk.max_triangle_violation <= mesh_tol and dt < 120)
    acceptance(10, "d_rho consistency", ok,
               f"bound excess {chk.max_bound_excess:.1e}, halving change {chk.max_change:.2%} (< 1%), "
               f"asymmetry {chk.max_asymmetry:.1e}, triangle {chk.max_triangle_violation:.1e} "
               f"(<= {mesh_tol}), {dt:.0f} s (< 120 s)")
    assert ok
