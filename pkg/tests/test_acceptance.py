"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run standalone with ``python3 tests/test_acceptance.py`` or through pytest.
"""

import json
import math
import time

import numpy as np
import pytest

from qfocklab import cli, qcomb
from qfocklab.analysis import (
    VERDICT_FIXED,
    VERDICT_NONFIXED,
    build_model,
    hs_norm_certificate,
    nuclear_certificate,
    split_verdict,
)
from qfocklab.fock import (
    annihilation,
    build_fock,
    creation,
    field,
    gram_adjoint,
    hermite_vector,
    q_commutation_residual,
    vacuum_eval,
)
from qfocklab.modular import (
    build_modular,
    covariance_residual,
    cp_pairing_witness,
    delta_alpha_norm_xi0,
    delta_quarter_norm,
    mixed_vector_mu,
)
from qfocklab.repn import RepresentationSpec, block_projection, build, fixed_projection

RESULTS = {}


def report(number: int, title: str, passed: bool, detail: str, capsys=None):
    line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    RESULTS[number] = passed
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    else:
        print(line)


# 1 -----------------------------------------------------------------------------

def criterion_1():
    t0 = time.perf_counter()
    worst = worst_beta = 0.0
    for lam in (2.0, 4.0, 10.0):
        rep = build(RepresentationSpec(0, (lam,)))
        md = build_modular(build_fock(rep, 0.5, 2))
        for alpha in (0.0, 0.1, 0.25, 0.5, 0.9):
            numeric, closed = delta_alpha_norm_xi0(md, alpha, 0, betas=(0.0, 1.0, 5.0))
            worst = max(worst, abs(numeric[0] - closed))
            worst_beta = max(worst_beta, max(abs(x - numeric[0]) for x in numeric))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and worst_beta <= 1e-12
    return ok, f"max |numeric - closed| = {worst:.2e}, beta spread = {worst_beta:.2e}, {elapsed * 1e3:.1f} ms"


# 2 -----------------------------------------------------------------------------

def criterion_2():
    rep = build(RepresentationSpec(0, (4.0,)))
    md = build_modular(build_fock(rep, 0.5, 2))
    numeric, _ = delta_quarter_norm(md, rep.block_vectors(0)[0])
    err = abs(numeric - math.sqrt(0.8))
    return err <= 1e-12, f"|Delta^(1/4) xi0|_q = {numeric!r}, error vs sqrt(0.8) = {err:.2e}"


# 3 -----------------------------------------------------------------------------

def criterion_3():
    t0 = time.perf_counter()
    rep = build(RepresentationSpec(0, (4.0,)))
    fock = build_fock(rep, 0.5, 12)
    model = build_model(fock, rep.block_vectors(0)[0])
    hs = hs_norm_certificate(model)
    elapsed = time.perf_counter() - t0
    mu = 0.8
    termwise = max(abs(c - mu ** (m / 2)) for m, c in enumerate(hs.coefficients))
    partial = abs(hs.partial - (1 / (1 - mu) - mu ** 13 / (1 - mu)))
    max_coef = abs(hs.max_coefficient - 1)
    ok = termwise <= 1e-12 and partial <= 1e-12 and max_coef <= 1e-12 and elapsed < 1.0
    return ok, (f"termwise {termwise:.2e}, partial {partial:.2e}, max coefficient - 1 = "
                f"{max_coef:.2e}, {elapsed:.2f} s")


# 4 -----------------------------------------------------------------------------

def criterion_4():
    t0 = time.perf_counter()
    rep = build(RepresentationSpec(0, (4.0,)))
    fock = build_fock(rep, 0.5, 12)
    model = build_model(fock, rep.block_vectors(0)[0])
    rng = np.random.Generator(np.random.Philox(4))
    nc = nuclear_certificate(model, rng, samples=100)
    elapsed = time.perf_counter() - t0
    root = math.sqrt(nc.mu)
    gap = abs((nc.closed - nc.partial) - root ** 13 / (1 - root))
    ok = (nc.partial <= nc.closed and gap <= 1e-12 and nc.psi_norm_max <= 1.0
          and nc.cauchy_schwarz_max <= 1.0 and nc.samples == 100 and elapsed < 1.0)
    return ok, (f"partial {nc.partial:.6f} <= closed {nc.closed:.6f}, gap error {gap:.2e}, "
                f"max psi ratio {nc.psi_norm_max:.3f}, {elapsed:.2f} s")


# 5 -----------------------------------------------------------------------------

def criterion_5():
    t0 = time.perf_counter()
    worst_even = worst_odd = 0.0
    catalan_ok = True
    placement_spread = 0.0
    setups = {
        1: [(RepresentationSpec(1, ()), lambda r: r.fixed_vector(0))],
        2: [(RepresentationSpec(0, (4.0,)), lambda r: r.block_vectors(0)[0]),
            (RepresentationSpec(0, (4.0,)), lambda r: r.block_vectors(0)[1]),
            (RepresentationSpec(0, (10.0,)), lambda r: r.block_vectors(0)[0])],
    }
    brute_ok = all(qcomb.moment_polynomial(n) == qcomb.moment_polynomial_bruteforce(n)
                   for n in range(0, 9, 2))
    for q in (-0.5, 0.0, 0.5):
        per_placement = []
        for d, cases in setups.items():
            for spec, pick in cases:
                rep = build(spec)
                fock = build_fock(rep, q, 8)
                xi = pick(rep)
                s = field(fock, xi)
                power = s.power(0)
                values = []
                for n in range(9):
                    if n:
                        power = s @ power
                    v = vacuum_eval(fock, power)
                    values.append(v)
                    if n % 2:
                        worst_odd = max(worst_odd, abs(v))
                    else:
                        worst_even = max(worst_even, abs(v - qcomb.moment_polynomial(n)(q)))
                if q == 0.0:
                    catalan_ok &= [round(values[n].real) for n in (2, 4, 6, 8)] == [1, 2, 5, 14]
                per_placement.append(np.array(values))
        placement_spread = max(placement_spread,
                               max(np.max(np.abs(p - per_placement[0])) for p in per_placement))
    elapsed = time.perf_counter() - t0
    ok = (worst_even <= 1e-9 and worst_odd <= 1e-12 and catalan_ok and brute_ok
          and placement_spread <= 1e-9 and elapsed < 30)
    return ok, (f"even {worst_even:.2e}, odd {worst_odd:.2e}, catalan {catalan_ok}, "
                f"brute force agrees {brute_ok}, placement spread {placement_spread:.2e}, {elapsed:.1f} s")


# 6 -----------------------------------------------------------------------------

def criterion_6():
    worst = 0.0
    for q in (-0.5, 0.5):
        for spec, pick in ((RepresentationSpec(0, (4.0,)), lambda r: r.block_vectors(0)[0]),
                           (RepresentationSpec(1, ()), lambda r: r.fixed_vector(0))):
            rep = build(spec)
            fock = build_fock(rep, q, 8)
            xi = pick(rep)
            for n in range(9):
                value = fock.inner(fock.tensor_power(xi, n), fock.tensor_power(xi, n))
                worst = max(worst, abs(value - qcomb.q_factorial(n)(q)))
    return worst <= 1e-10, f"max |<xi^n, xi^n>_q - [n]_q!| = {worst:.2e}"


# 7 -----------------------------------------------------------------------------

def criterion_7():
    worst = 0.0
    for q in (-0.5, 0.0, 0.5):
        rep = build(RepresentationSpec(1, (4.0,)))
        fock = build_fock(rep, q, 6)
        xi = rep.from_real([0.6, 0.0, 0.8])
        for n in range(7):
            diff = (hermite_vector(fock, xi, n) - fock.tensor_power(xi, n)).flat()
            worst = max(worst, float(np.max(np.abs(diff))))
    return worst <= 1e-10, f"max coefficient error of H_n(s(xi)) Omega vs xi^n = {worst:.2e}"


# 8 -----------------------------------------------------------------------------

def criterion_8():
    t0 = time.perf_counter()
    specs = (RepresentationSpec(1, ()), RepresentationSpec(0, (4.0,)), RepresentationSpec(1, (2.0,)))
    min_eig = math.inf
    adj = comm = cov = 0.0
    cp_min = math.inf
    cp_gap = 0.0
    rng = np.random.Generator(np.random.Philox(8))
    for q in (-0.9, -0.5, 0.0, 0.5, 0.9):
        for spec in specs:
            rep = build(spec)
            for n_cut in range(1, 6):
                fock = build_fock(rep, q, n_cut)
                min_eig = min(min_eig, min(g.min_eigenvalue for g in fock.grams))
            letters = rep.real_basis()
            interior = range(fock.cutoff)
            for x in letters:
                a = annihilation(fock, x)
                adj = max(adj, (gram_adjoint(fock, creation(fock, x)) - a).restrict(interior).frobenius())
                for y in letters:
                    comm = max(comm, q_commutation_residual(fock, x, y))
            md = build_modular(fock)
            xi = rep.from_real(rng.standard_normal(rep.dim))
            for t in (-2.0, -0.5, 0.0, 0.7, 3.0):
                cov = max(cov, covariance_residual(md, xi, t))
            s_ops = [field(fock, x) for x in letters]
            a_ops = [s_ops[0], s_ops[-1] @ s_ops[0]]
            x_ops = [s_ops[-1], s_ops[0] @ s_ops[0]]
            pairing, sq = cp_pairing_witness(md, a_ops, x_ops)
            cp_min = min(cp_min, pairing.real)
            cp_gap = max(cp_gap, abs(pairing - sq))
    elapsed = time.perf_counter() - t0
    ok = (min_eig > 0 and adj < 1e-12 and comm < 1e-12 and cov < 1e-10
          and cp_min >= -1e-9 and cp_gap <= 1e-9 and elapsed < 60)
    return ok, (f"min Gram eigenvalue {min_eig:.3e}, adjointness {adj:.2e}, q-commutation "
                f"{comm:.2e}, covariance {cov:.2e}, CP pairing min {cp_min:.3e} gap {cp_gap:.2e}, "
                f"{elapsed:.1f} s")


# 9 -----------------------------------------------------------------------------

def criterion_9():
    t0 = time.perf_counter()
    rep = build(RepresentationSpec(1, (2.0, 4.0)))
    fock = build_fock(rep, 0.5, 2)
    md = build_modular(fock)
    rng = np.random.Generator(np.random.Philox(9))
    worst_fixed = worst_terms = 0.0
    strict_ok = margin_ok = verdict_ok = True
    top = max(2 * math.sqrt(lam) / (1 + lam) for lam in rep.spec.lambdas)
    for i in range(100):
        if i % 5 == 0:
            x = np.zeros(rep.dim)
            x[0] = rng.choice([-1.0, 1.0])
        elif i % 5 == 1:
            # small but nonzero non-fixed component
            x = np.zeros(rep.dim)
            x[1:] = rng.standard_normal(rep.dim - 1)
            x[1:] *= 10.0 ** rng.uniform(-3, -1) / np.linalg.norm(x[1:])
            x[0] = math.sqrt(1 - np.sum(x[1:] ** 2))
        else:
            x = rng.standard_normal(rep.dim)
        x = x / np.linalg.norm(x)
        xi = rep.from_real(x)
        mu = fock.norm(md.apply_delta(0.25, fock.embed(xi))) ** 2
        nonfixed = xi - fixed_projection(rep, xi)
        nf_norm = float(np.linalg.norm(nonfixed.coords))
        # termwise mixed-vector formula
        terms_numeric = [fock.norm(md.apply_delta(0.25, fock.embed(fixed_projection(rep, xi)))) ** 2]
        terms_closed = [float(np.sum(x[:1] ** 2))]
        for k, lam in enumerate(rep.spec.lambdas):
            part = block_projection(rep, xi, k)
            terms_numeric.append(fock.norm(md.apply_delta(0.25, fock.embed(part))) ** 2)
            i0, j0 = rep.block_indices(k)
            terms_closed.append(2 * math.sqrt(lam) / (1 + lam) * (x[i0] ** 2 + x[j0] ** 2))
        worst_terms = max(worst_terms, max(abs(a - b) for a, b in zip(terms_numeric, terms_closed)),
                          abs(mu - sum(terms_closed)), abs(mu - mixed_vector_mu(rep, xi)))
        if nf_norm == 0.0:
            worst_fixed = max(worst_fixed, abs(mu - 1))
        else:
            strict_ok &= mu < 1
            # 1 - mu >= (1 - top) |non-fixed part|^2
            if nf_norm >= 0.1:
                margin_ok &= 1 - mu >= 1e-6
            strict_ok &= 1 - mu >= (1 - top) * nf_norm ** 2 - 1e-12
        if nf_norm == 0.0 or nf_norm >= 0.1:
            verdict = split_verdict(rep, 0.5, 2, xi, fock=fock, modular=md, samples=5).verdict
            verdict_ok &= verdict == (VERDICT_FIXED if nf_norm == 0.0 else VERDICT_NONFIXED)
    elapsed = time.perf_counter() - t0
    ok = (worst_fixed <= 1e-12 and worst_terms <= 1e-12 and strict_ok and margin_ok
          and verdict_ok and elapsed < 10)
    return ok, (f"fixed |mu - 1| {worst_fixed:.2e}, termwise {worst_terms:.2e}, strict {strict_ok}, "
                f"margin {margin_ok}, verdicts {verdict_ok}, {elapsed:.1f} s")


# 10 ----------------------------------------------------------------------------

CONFIG_10 = {"q": 0.5, "n_fixed": 1, "lambdas": [4], "cutoff": 5,
             "vectors": {"xi0": [0, 1, 0], "s1": [1, 0, 0], "mixed": [1, 1, 0]},
             "t_grid": [0, 1], "n_max_moments": 4, "probe_degree": 1, "seed": 42}


def criterion_10(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps(CONFIG_10))
    codes, blobs = [], []
    for k in range(2):
        out = tmp_path / f"report{k}.json"
        codes.append(cli.main(["report", "--config", str(cfg), "--out", str(out)]))
        blobs.append(out.read_bytes())
    ok = codes == [0, 0] and blobs[0] == blobs[1]
    return ok, f"exit codes {codes}, {len(blobs[0])} bytes, identical {blobs[0] == blobs[1]}"


# pytest wrappers ---------------------------------------------------------------

CRITERIA = [
    (1, "Delta-norm lemma", criterion_1),
    (2, "quarter-power value sqrt(0.8)", criterion_2),
    (3, "Hilbert-Schmidt certificate", criterion_3),
    (4, "nuclearity certificate", criterion_4),
    (5, "moment oracle equivalence", criterion_5),
    (6, "tensor power norm [n]_q!", criterion_6),
    (7, "q-Hermite identity", criterion_7),
    (8, "structural suite", criterion_8),
    (9, "dichotomy sweep", criterion_9),
]


@pytest.mark.parametrize("number,title,fn", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, title, fn, capsys):
    ok, detail = fn()
    report(number, title, ok, detail, capsys)
    assert ok, detail


def test_criterion_10(tmp_path, capsys):
    ok, detail = criterion_10(tmp_path)
    report(10, "byte-identical reports", ok, detail, capsys)
    assert ok, detail


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    for number, title, fn in CRITERIA:
        report(number, title, *fn())
    with tempfile.TemporaryDirectory() as tmp:
        report(10, "byte-identical reports", *criterion_10(Path(tmp)))
    raise SystemExit(0 if all(RESULTS.values()) else 1)
