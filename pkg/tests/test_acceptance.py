"""Acceptance gate.

Each test prints one line ``PASS|FAIL [n] <name>: <measured> (tol <tol>)``
and asserts the same comparison.  Run ``pytest tests/test_acceptance.py -s``
to see the lines, or ``python tests/test_acceptance.py`` for a plain report.
"""
import json
import time

import numpy as np
import pytest

from nehari import cli
from nehari.affine import AffineFunctional, AffineParams, SphereQuadrature
from nehari.fibering import solve_t_c, solve_t_nehari
from nehari.functionals import (BrezisNirenberg, Kirchhoff, Semilinear, eval_lambda_c,
                                eval_phi_lambda, grad_lambda_c)
from nehari.mesh import Grid, laplacian_eigenbasis, lp_norm
from nehari.nonlinearity import PurePower
from nehari.solver import ground_state, minimax_sequence, sweep_c
from nehari import validate as val


def report(num, name, ok, measured, tol, elapsed=None):
    extra = f", {elapsed:.2f} s" if elapsed is not None else ""
    print(f"{'PASS' if ok else 'FAIL'} [{num}] {name}: {measured} (tol {tol}{extra})")
    return ok


def smooth_random(grid, rng, modes=8, noise=0.05):
    basis = np.column_stack([v for _, v in laplacian_eigenbasis(grid, modes)])
    u = basis @ (rng.standard_normal(modes) / np.arange(1, modes + 1))
    return u + noise * rng.standard_normal(grid.size)


def test_1_gradient_identity():
    t0 = time.perf_counter()
    grid = Grid(1, 64)
    model = Semilinear(grid, PurePower(4.0))
    rng = np.random.default_rng(101)
    h, worst = 1e-6, 0.0
    for _ in range(20):
        u, v = smooth_random(grid, rng), rng.standard_normal(grid.size)
        fd = (eval_lambda_c(model, u + h * v, 1.0) - eval_lambda_c(model, u - h * v, 1.0)) / (2 * h)
        an = grad_lambda_c(model, u, 1.0) @ v
        worst = max(worst, abs(fd - an) / abs(an))
    ok = worst <= 1e-6
    report(1, "gradient identity λ_c' = Φ'_λc/I2", ok, f"max rel err {worst:.2e}", 1e-6,
           time.perf_counter() - t0)
    assert ok


def test_2_level_identity():
    grid = Grid(1, 64)
    model = Semilinear(grid, PurePower(4.0))
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(50):
        u = smooth_random(grid, rng)
        c, d = rng.uniform(-5, 5), rng.uniform(-20, 20)
        lhs = eval_phi_lambda(model, u, d)
        rhs = c + (eval_lambda_c(model, u, c) - d) * model.i2(u)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    ok = worst <= 1e-12
    report(2, "level identity Φ_d = c + (λ_c - d) I2", ok, f"max err {worst:.2e}", 1e-12)
    assert ok


def test_3_fibering_closed_forms():
    t0 = time.perf_counter()
    rng = np.random.default_rng(103)
    g1, g3 = Grid(1, 64), Grid(3, 9)
    semi = Semilinear(g1, PurePower(4.0))
    bn = BrezisNirenberg(g3, N=3)
    kir = Kirchhoff(g1, 2.0, -1.0, PurePower(4.0))
    worst = {"semilinear": 0.0, "brezis_nirenberg": 0.0, "kirchhoff": 0.0}
    for _ in range(20):
        c = rng.uniform(0.1, 5.0)
        u = smooth_random(g1, rng)
        t = solve_t_c(semi, u, c).t
        ref = (4 * c / lp_norm(g1, u, 4) ** 4) ** 0.25
        worst["semilinear"] = max(worst["semilinear"], abs(t - ref) / ref)

        w = smooth_random(g3, rng)
        t = solve_t_c(bn, w, c).t
        ref = (3 * c / lp_norm(g3, w, 6) ** 6) ** (1 / 6)
        worst["brezis_nirenberg"] = max(worst["brezis_nirenberg"], abs(t - ref) / ref)

        t = solve_t_nehari(kir, u).t
        ref = (kir.norm(u) ** -1.0 / lp_norm(g1, u, 4) ** 4) ** (1 / 5)
        worst["kirchhoff"] = max(worst["kirchhoff"], abs(t - ref) / ref)
    ok = max(worst.values()) <= 1e-10
    report(3, "fibering closed forms", ok,
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()), 1e-10, time.perf_counter() - t0)
    assert ok


def test_4_bn_constraint():
    grid = Grid(3, 9)
    bn = BrezisNirenberg(grid, N=3)
    rng = np.random.default_rng(104)
    worst = 0.0
    for _ in range(20):
        c = rng.uniform(0.05, 5.0)
        u = smooth_random(grid, rng)
        t = solve_t_c(bn, u, c).t
        worst = max(worst, abs(lp_norm(grid, t * u, 6) ** 6 - 3 * c) / (3 * c))
    ok = worst <= 1e-10
    report(4, "BN constraint ‖t_c u‖^6_6 = Nc", ok, f"max rel err {worst:.2e}", 1e-10)
    assert ok


def test_5_bn_threshold():
    rng = np.random.default_rng(105)
    worst = 0.0
    flips = True
    for _ in range(100):
        N = int(rng.integers(3, 6))
        S = rng.uniform(0.1, 20.0)
        thr = S ** (N / 2) / N
        c = rng.uniform(0.01, 3.0) * thr
        closed, _ = val.bn_threshold(N, S, c)
        scan = val.bn_threshold_scan(N, S, c)
        worst = max(worst, abs(closed - scan) / ((2 / N) * S ** (N / 2) + 2 * c))
        flips &= (val.bn_threshold(N, S, thr)[1] is False
                  and val.bn_threshold(N, S, np.nextafter(thr, 0.0))[1] is True)
    ok = worst <= 1e-8 and flips
    report(5, "BN threshold closed form vs scan", ok,
           f"max rel err {worst:.2e}, flip at S^(N/2)/N {'exact' if flips else 'WRONG'}", 1e-8)
    assert ok


def test_6_oracle_equivalence():
    t0 = time.perf_counter()
    grid = Grid(1, 256)
    model = Semilinear(grid, PurePower(4.0))
    res = ground_state(model, 1.0)
    oracle = val.prescribed_energy_oracle_1d(model.nonlin, 1.0)
    rel = abs(res.lam - oracle.lam) / abs(oracle.lam)
    ok = (oracle.verdict == "pass" and rel <= 1e-3 and res.converged
          and res.residual <= 1e-6 and abs(res.energy_gap) <= 1e-8)
    report(6, "ground state vs shooting oracle", ok,
           f"λ={res.lam:.8f} oracle={oracle.lam:.8f} rel {rel:.1e}, residual {res.residual:.1e}, "
           f"|Φ-c| {abs(res.energy_gap):.1e}", "1e-3 / 1e-6 / 1e-8", time.perf_counter() - t0)
    assert ok


def test_7_level_ordering():
    t0 = time.perf_counter()
    grid = Grid(1, 256)
    model = Semilinear(grid, PurePower(4.0))
    seq = [e.value for e in minimax_sequence(model, 1.0, 5)]
    nondecreasing = all(b >= a for a, b in zip(seq, seq[1:]))
    spread = seq[-1] - seq[0]
    rows = sweep_c(model, [0.25, 0.5, 1.0, 2.0, 4.0])
    lams = [r["lambda_1c"] for r in rows]
    decreasing = all(b < a for a, b in zip(lams, lams[1:])) and all(r["converged"] for r in rows)
    ok = nondecreasing and spread >= 1e-6 and decreasing
    report(7, "minimax ordering and sweep monotonicity", ok,
           f"minimax {[round(x, 4) for x in seq]}, sweep {[round(x, 4) for x in lams]}",
           "spread >= 1e-6", time.perf_counter() - t0)
    assert ok


def test_8_affine():
    t0 = time.perf_counter()
    grid = Grid(2, 31)
    quad = SphereQuadrature(64)
    rng = np.random.default_rng(108)
    errs = {"homogeneity": 0.0, "gradient": 0.0, "scaling": 0.0, "euler": 0.0}
    for p in (2.0, 3.0):
        A = AffineFunctional(grid, PurePower(4.0), AffineParams(p=p), quad)
        for _ in range(5):
            u = smooth_random(grid, rng, modes=10)
            E = A.energy(u)
            for t in (0.3, 2.0, 7.0):
                errs["homogeneity"] = max(errs["homogeneity"], abs(A.energy(t * u) - t * E) / (t * E))
            g = A.grad(u) + A.nonlin.f(u) * grid.cell_volume  # gradient of (1/p)E^p
            v = rng.standard_normal(grid.size)
            h = 1e-6
            fd = ((A.energy(u + h * v) ** p - A.energy(u - h * v) ** p) / p) / (2 * h)
            errs["gradient"] = max(errs["gradient"], abs(fd - g @ v) / abs(g @ v))
            errs["euler"] = max(errs["euler"], abs(g @ u - E**p) / E**p)
    A = AffineFunctional(grid, PurePower(4.0), AffineParams(p=2.0), quad)
    for _ in range(5):
        u = smooth_random(grid, rng, modes=10)
        tu = solve_t_nehari(A, u).t
        for s in (0.5, 2.0, 10.0):
            errs["scaling"] = max(errs["scaling"], abs(solve_t_nehari(A, s * u).t * s - tu) / tu)
    tol = {"homogeneity": 1e-12, "gradient": 1e-5, "scaling": 1e-9, "euler": 1e-8}
    ok = all(errs[k] <= tol[k] for k in tol)
    report(8, "affine energy", ok, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()),
           "1e-12 / 1e-5 / 1e-9 / 1e-8", time.perf_counter() - t0)
    assert ok


def test_9_kirchhoff_degenerate():
    t0 = time.perf_counter()
    grid = Grid(1, 128)
    model = Kirchhoff(grid, 2.0, -1.0, PurePower(4.0))
    res = ground_state(model)
    w = res.u
    lhs = model.norm(w) ** model.theta
    rhs = float(model.nonlin.f(w) @ w) * grid.cell_volume
    rel = abs(lhs - rhs) / abs(rhs)
    ok = res.converged and res.level < 0 and rel <= 1e-9
    report(9, "Kirchhoff θ=-1 ground level and Nehari identity", ok,
           f"level {res.level:.6f}, identity rel err {rel:.1e}", "level < 0, 1e-9",
           time.perf_counter() - t0)
    assert ok


def test_10_validators():
    f4 = PurePower(4.0)
    checks = {
        "f2 increasing passes": val.check_scalar_condition(f4, "f2", {"orientation": "increasing"}).verdict == "pass",
        "f2 decreasing fails": (lambda r: r.verdict == "fail" and r.counterexample is not None)(
            val.check_scalar_condition(f4, "f2", {"orientation": "decreasing"})),
        "f3 p=3 q=1.5 passes": val.check_scalar_condition(PurePower(3.0), "f3", {"q": 1.5}).verdict == "pass",
        "A1-A3 pass": all(r.verdict == "pass" for r in val.check_A_conditions(2.0, 2.0, 3.0, 1.0, 1.0)),
    }
    ok = all(checks.values())
    report(10, "hypothesis validators", ok, ", ".join(f"{k}: {v}" for k, v in checks.items()), "verdicts")
    assert ok


def test_11_determinism(tmp_path):
    cfg = cli.resolve_config({"grid": {"dim": 1, "n": 128}})
    blobs = []
    for k in range(2):
        code, path = cli.run("solve", cfg, tmp_path / f"run{k}")
        assert code == 0
        blobs.append((path / "result.json").read_bytes())
    ok = blobs[0] == blobs[1] and "wall_time" not in json.loads(blobs[0])
    report(11, "solve determinism", ok, "byte-identical" if ok else "DIFFERENT", "exact")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
