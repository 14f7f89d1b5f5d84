"""End-to-end acceptance checks; each prints one pass/fail line."""

from math import pi, sqrt

import numpy as np
import pytest
from scipy import sparse

from magrobin.assembly import assemble, robin_operator
from magrobin.bochner import STANDARD_FIELDS, verify_integrated_bochner, verify_pointwise_bochner
from magrobin.bounds import GAP, a_plus_minus, bound_report, c_of_tau, comparison_check, critical_field, default_slack, quadratic_residual
from magrobin.eigensolve import DEFAULT_TOL, solve_smallest
from magrobin.geometry import Annulus, Disk, SphericalCap, build_mesh
from magrobin.oracles import RadialProblem, bessel_j, dirichlet_disk, disk_robin_spectrum, radial_fd_eigen
from magrobin.pipeline import Problem, error_ratios, ground_state_ratio
from magrobin.potentials import aharonov_bohm, custom, gauge_transform, uniform_field, zero

pytestmark = pytest.mark.slow
DISK = Disk(1)


def test_disk_robin_matches_bessel_oracle(acceptance_line):
    prob = Problem(DISK, zero())
    hs = (1 / 32, 1 / 64, 1 / 128)
    lams = np.array([prob.spectrum(h, 1.0, 5).eigenvalues for h in hs])
    ref = disk_robin_spectrum(1.0, 5)
    err, ratios = error_ratios(lams, ref)
    rel = np.max(err[-1] / ref)
    ok = rel <= 1e-3 and np.all((ratios >= 3) & (ratios <= 5))
    acceptance_line(1, "Robin disk vs Bessel oracle", ok,
                    f"max rel err {rel:.2e} at h=1/128, error ratios {ratios.min():.3f}..{ratios.max():.3f}")
    assert ok


def test_integrated_bochner_battery(acceptance_line):
    worst = 0.0
    for alpha in (zero(), uniform_field(DISK, 1.0)):
        for expr in STANDARD_FIELDS.values():
            led = verify_integrated_bochner(DISK, expr, alpha, quad_order=10)
            worst = max(worst, abs(led.residual) / (1 + abs(led.lhs) + abs(led.rhs)))
    c = verify_integrated_bochner(DISK, "x", zero(), quad_order=10).contributions
    got = np.array([c["H_term"], c["cross_term"], c["II_term"]])
    hand = np.array([-pi, 2 * pi, -pi])
    dev = np.max(np.abs(got - hand))
    ok = worst <= 1e-6 and dev <= 1e-8
    acceptance_line(2, "integrated Bochner identity", ok,
                    f"worst scaled residual {worst:.2e} over 8 cases, f=x boundary terms off by {dev:.1e}")
    assert ok


def test_pointwise_bochner_second_order(acceptance_line):
    rng = np.random.default_rng(2024)
    r = 0.8 * np.sqrt(rng.uniform(size=20))
    t = rng.uniform(0, 2 * pi, size=20)
    pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
    cases = [("x**2*y + I*y", custom("0", "x")), ("(x + I*y)**2*exp(I*x)", uniform_field(DISK, 1.0))]
    ratios = []
    for expr, alpha in cases:
        e1 = verify_pointwise_bochner(expr, alpha, pts, 2e-2)
        e2 = verify_pointwise_bochner(expr, alpha, pts, 1e-2)
        ratios.append(np.max(e1) / np.max(e2))
    ok = all(abs(q - 4) <= 0.5 for q in ratios)
    acceptance_line(3, "pointwise Bochner identity", ok,
                    "residual ratio under step halving " + ", ".join(f"{q:.3f}" for q in ratios))
    assert ok


def _cap_report(tau):
    cap = SphericalCap(pi / 4)
    prob = Problem(cap, uniform_field(cap, 0.2))
    coarse = prob.spectrum(0.05, tau, 10).eigenvalues
    fine = prob.spectrum(0.025, tau, 10).eigenvalues
    curv = prob.curvature()
    s = default_slack(coarse, fine)
    return bound_report(curv.k, tau, 2, prob.field_sup(), curv.H_min, curv.II_min, fine, s, h=0.025), fine, s


def test_cap_spectral_gap(acceptance_line):
    rep, lam, s = _cap_report(1.0)
    in_gap = [c.value for c in rep.classification if c.side == GAP]
    ok = (rep.condition3_ok and rep.ii_tau_ok and rep.gap_ok and not in_gap
          and abs(rep.a_minus - 0.0517) < 1e-4 and abs(rep.a_plus - 1.5483) < 1e-4)
    acceptance_line(4, "gap on the cap", ok,
                    f"m={rep.m:.4f}, (a-, a+)=({rep.a_minus:.4f}, {rep.a_plus:.4f}), "
                    f"lambda_1={lam[0]:.4f}, {len(in_gap)} of 10 in the gap, max slack {s.max():.1e}")
    assert ok


def test_cap_corollary_lower_bound(acceptance_line):
    rep, lam, s = _cap_report(1.2)
    ok = rep.corollary_ok and rep.corollary_verdict is True and lam[0] >= rep.a_plus - s[0]
    acceptance_line(5, "large-tau lower bound on the cap", ok,
                    f"lambda_1={lam[0]:.5f} >= a+ - s = {rep.a_plus - s[0]:.5f}")
    assert ok


def test_robin_neumann_sandwich(acceptance_line):
    h = 1 / 64
    prob = Problem(DISK, uniform_field(DISK, 1.0))
    robin = prob.spectrum(h, 1.0, 5).eigenvalues
    neumann = prob.spectrum(h, 0.0, 5).eigenvalues
    C1, lam1 = ground_state_ratio(prob, h, 1.0)
    verdicts = comparison_check(lam1, C1, neumann, robin, 1e-3 * robin)
    C0, _ = ground_state_ratio(prob, h, 0.0)
    n = build_mesh(DISK, h).n_vertices
    C_const = c_of_tau(np.ones(n))
    bessel = bessel_j(0, sqrt(lam1)) ** 2
    ok = (all(v.passed for v in verdicts) and C_const == 1.0 and abs(C0 - 1) < 1e-12
          and abs(C1 - bessel) < 1e-3)
    margins = min(min(v.margin_lower, v.margin_upper) for v in verdicts)
    acceptance_line(6, "Robin/Neumann comparison", ok,
                    f"smallest margin {margins:.3e}, C(1)={C1:.5f} vs J0^2={bessel:.5f}, C(0)-1={C0 - 1:.1e}")
    assert ok


def test_flux_periodicity(acceptance_line):
    ann = Annulus(0.5, 1.0)
    oracle = {b: radial_fd_eigen(RadialProblem.annulus(0.5, 1.0, tau=1.0, beta=b), 1)[0]
              for b in (0.0, 0.3, 0.5, 1.0, 1.3, 1.5)}
    period = max(abs(oracle[b + 1] - oracle[b]) for b in (0.0, 0.3, 0.5))
    fem = {}
    for b in (0.0, 0.3, 0.5, 1.0, 1.3):
        fem[b] = Problem(ann, aharonov_bohm(ann, b)).spectrum(0.025, 1.0, 1).eigenvalues[0]
    rel = max(abs(fem[b] - oracle[b]) / oracle[b] for b in fem)
    tol = DEFAULT_TOL
    quantized = abs(oracle[1.0] - oracle[0.0]) <= tol
    visible = oracle[0.5] - oracle[0.0] > 10 * tol
    ok = period <= 1e-9 and rel <= 1e-3 and quantized and visible
    acceptance_line(7, "flux periodicity on the annulus", ok,
                    f"oracle period defect {period:.1e}, FEM rel err {rel:.1e}, "
                    f"oracle shift at half flux {oracle[0.5] - oracle[0.0]:.4f}, "
                    f"FEM lambda(1)-lambda(0)={fem[1.0] - fem[0.0]:.1e} (discretization)")
    assert ok


def test_tau_monotone_toward_dirichlet(acceptance_line):
    h = 0.025
    mesh = build_mesh(DISK, h)
    op = assemble(mesh, DISK, zero())
    taus = (0.5, 1, 2, 4, 8, 16, 64)
    lam1 = np.array([solve_smallest(robin_operator(op, t), op.M, 1).eigenvalues[0] for t in taus])
    inner = np.setdiff1d(np.arange(mesh.n_vertices), mesh.boundary_vertices())
    S = sparse.csr_matrix(op.S)[inner][:, inner]
    M = sparse.csr_matrix(op.M)[inner][:, inner]
    lam_dir_h = solve_smallest(S, M, 1).eigenvalues[0]
    j01sq = dirichlet_disk(0, 1)
    allowance = lam_dir_h - j01sq
    gaps = lam_dir_h - lam1
    ok = (np.all(np.diff(lam1) >= 0) and np.all(lam1 <= j01sq + allowance)
          and np.all(np.diff(gaps) < 0))
    acceptance_line(8, "tau monotonicity and Dirichlet limit", ok,
                    f"lambda_1 from {lam1[0]:.4f} to {lam1[-1]:.4f}, Dirichlet {j01sq:.4f} "
                    f"+ allowance {allowance:.1e}, final gap {gaps[-1]:.2e}")
    assert ok


def test_bound_algebra(acceptance_line):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 8))
        k = rng.uniform(0.01, 10.0)
        m = rng.uniform(0, critical_field(k, n))
        for a in a_plus_minus(k, m, n):
            worst = max(worst, abs(quadratic_residual(a, k, m, n)) / max(1.0, k * k))
    reilly = all(a_plus_minus(k, 0.0, n)[1] == pytest.approx(n * k / (n - 1), rel=1e-15)
                 for k in (0.5, 1.0, 3.0) for n in (2, 3, 5))
    lo, hi = a_plus_minus(1.0, critical_field(1.0, 2), 2)
    double = abs(hi - lo) < 1e-6
    ok = worst <= 1e-12 and reilly and double
    acceptance_line(9, "bound algebra", ok,
                    f"worst quadratic residual {worst:.1e}, Reilly {reilly}, critical roots {lo:.6f}, {hi:.6f}")
    assert ok


def test_solver_hygiene(acceptance_line):
    alpha = uniform_field(DISK, 1.0)
    mesh = build_mesh(DISK, 0.1)
    op = assemble(mesh, DISK, alpha)
    A = robin_operator(op, 1.0)
    herm = (abs(A - A.conj().T)).max() == 0 and (abs(op.M - op.M.T)).max() == 0
    dense = solve_smallest(A, op.M, 5, method="dense")
    sp = solve_smallest(A, op.M, 5, method="shift-invert")
    X = sp.eigenvectors
    ortho = np.max(np.abs(X.conj().T @ (op.M @ X) - np.eye(5)))
    agree = np.max(np.abs(dense.eigenvalues - sp.eigenvalues))

    chi = "x*y + x**3/3"
    gauged = gauge_transform(alpha, chi)
    diffs = []
    for h in (1 / 16, 1 / 32, 1 / 64, 1 / 128):
        a = Problem(DISK, alpha).spectrum(h, 1.0, 3).eigenvalues
        b = Problem(DISK, gauged).spectrum(h, 1.0, 3).eigenvalues
        diffs.append(np.abs(a - b))
    diffs = np.array(diffs)
    ratios = diffs[:-1] / diffs[1:]
    ok = herm and ortho <= 1e-8 and agree <= 1e-8 and np.all((ratios >= 3) & (ratios <= 5))
    acceptance_line(10, "solver hygiene", ok,
                    f"Hermitian {herm}, M-orthonormality {ortho:.1e}, dense/sparse {agree:.1e}, "
                    f"gauge ratios {ratios.min():.2f}..{ratios.max():.2f}")
    assert ok
