"""One test per acceptance criterion, each printing a pass/fail line."""

import time
from fractions import Fraction

import numpy as np
from scipy.spatial.transform import Rotation

from qframes.cli import main
from qframes.coord_frame import (
    CoordFrame,
    NoiseSpec,
    analyze,
    canonical_dual,
    expected_recon_error,
    mercedes_benz_frame,
    random_dual,
    reconstruct,
    synthesis_null_space,
)
from qframes.detection import (
    DEFAULT_MC_THRESHOLDS,
    BinaryHypothesis,
    dominates,
    operating_point,
    orientation_sweep,
    qdoc_exact,
    qdoc_monte_carlo,
)
from qframes.estimation import tradeoff_grid
from qframes.herm_space import pure_state
from qframes.povm import (
    PlatonicSpec,
    entf_params,
    ic_check,
    platonic_povm,
    symmetry_rotations,
    tight_ic_check,
    traceless_rep,
)
from qframes.sampling_stats import deviation_moments_analytic, empirical_deviation_moments, raw_moment_offdiagonal

from oracles import deviation_moments_bruteforce

SOLIDS = ["tetrahedron", "octahedron", "cube", "icosahedron"]
DETECTION = BinaryHypothesis(pure_state(0), pure_state(2 * np.pi / 3, np.pi / 3))


def test_criterion_1_frame_identities(acceptance_report):
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    recon_err = null_dot = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(n, 13))
        frame = CoordFrame(rng.standard_normal((m, n)))
        dual = canonical_dual(frame)
        v = rng.standard_normal((20, n))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        for x in v:
            recon_err = max(recon_err, np.linalg.norm(reconstruct(dual, analyze(frame, x)) - x))
        null = synthesis_null_space(frame)
        if null.size:
            null_dot = max(null_dot, np.max(np.abs(null.T @ frame.vectors)))
    elapsed = time.perf_counter() - start
    ok = recon_err <= 1e-10 and null_dot <= 1e-12 and elapsed < 5
    acceptance_report(1, ok, f"max recon error {recon_err:.2e}, max null/range overlap {null_dot:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_2_canonical_dual_optimal(acceptance_report):
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    violations = 0
    min_gap = np.inf
    for f in range(20):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(n + 1, 13))
        frame = CoordFrame(rng.standard_normal((m, n)))
        noise = NoiseSpec.uniform(m, float(rng.uniform(0.1, 2.0)))
        best = expected_recon_error(frame, canonical_dual(frame), noise)
        for k in range(200):
            other = expected_recon_error(frame, random_dual(frame, [202, f, k]), noise)
            violations += other < best
            min_gap = min(min_gap, other - best)
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 10
    acceptance_report(2, ok, f"{violations} violations in 4000 random duals, min excess {min_gap:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_3_mercedes_benz(acceptance_report):
    start = time.perf_counter()
    mb = mercedes_benz_frame()
    dual = canonical_dual(mb)
    exact = expected_recon_error(mb, dual, NoiseSpec.uniform(3, 1.0))
    e = np.random.default_rng(303).standard_normal((100_000, 3))
    err = np.sum((e @ dual.vectors) ** 2, axis=1)
    se = err.std(ddof=1) / np.sqrt(len(err))
    z = (err.mean() - 4 / 3) / se
    elapsed = time.perf_counter() - start
    ok = abs(exact - 4 / 3) <= 1e-15 and abs(z) <= 3 and elapsed < 5
    acceptance_report(3, ok, f"E* = {exact:.15f}, Monte Carlo {err.mean():.5f} (z = {z:+.2f}), {elapsed:.2f}s")
    assert ok


def test_criterion_4_platonic_tight_ic(acceptance_report):
    start = time.perf_counter()
    rng = np.random.default_rng(404)
    worst_res = worst_cn = 0.0
    all_tight = True
    for name in SOLIDS:
        rots = [np.eye(3), *Rotation.random(25, random_state=rng).as_matrix()]
        for r in rots:
            povm = platonic_povm(PlatonicSpec(name, r))
            rep = tight_ic_check(povm)
            all_tight &= rep.is_tight_ic
            worst_res = max(worst_res, rep.residual)
            worst_cn = max(worst_cn, entf_params(traceless_rep(povm)).cn_ma2_residual)
    pair = platonic_povm(PlatonicSpec("antipodal"))
    pair_fails = not ic_check(pair).is_ic and not tight_ic_check(pair).is_tight_ic
    elapsed = time.perf_counter() - start
    ok = all_tight and worst_res <= 1e-12 and worst_cn <= 1e-12 and pair_fails and elapsed < 5
    acceptance_report(
        4, ok, f"max residual {worst_res:.2e}, max |CN-Ma^2| {worst_cn:.2e}, antipodal not IC: {pair_fails}, {elapsed:.2f}s"
    )
    assert ok


def test_criterion_5_moment_oracle(acceptance_report):
    start = time.perf_counter()
    worst = 0.0
    cases = 0
    for m in (1, 2, 3):
        for shots in (1, 2, 3, 4):
            for p in _rational_ps(m):
                _, second = deviation_moments_bruteforce(p, shots)
                got = deviation_moments_analytic([float(x) for x in p], shots).second
                worst = max(worst, np.max(np.abs(got - np.array(second, dtype=float))))
                cases += 1
    emp_ok = True
    for p, shots in (([0.5, 0.3, 0.2], 4), ([0.25, 0.75], 10), ([0.1, 0.2, 0.3, 0.4], 6)):
        _, emp, se = empirical_deviation_moments(p, shots, 100_000, 505)
        emp_ok &= bool(np.all(np.abs(emp - deviation_moments_analytic(p, shots).second) <= 3 * se))
    oracle = deviation_moments_analytic([0.5, 0.5], 4).second[0, 1]
    legacy = raw_moment_offdiagonal([0.5, 0.5], 4)[0, 1]
    _, bf = deviation_moments_bruteforce([Fraction(1, 2), Fraction(1, 2)], 4)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-14 and emp_ok and bf[0][1] == Fraction(-1, 16) and abs(legacy - oracle) > 0.1 and elapsed < 30
    acceptance_report(
        5, ok,
        f"{cases} enumeration cases max diff {worst:.1e}, empirical within 3 SE: {emp_ok}, "
        f"p=(1/2,1/2) L=4 off-diagonal oracle {bf[0][1]} vs (L-1)/L formula {Fraction(legacy).limit_denominator(100)}, "
        f"{elapsed:.2f}s",
    )
    assert ok


def _rational_ps(m):
    if m == 1:
        return [(Fraction(1),)]
    if m == 2:
        return [(Fraction(1, 2), Fraction(1, 2)), (Fraction(1, 5), Fraction(4, 5)), (Fraction(1), Fraction(0))]
    return [(Fraction(1, 3),) * 3, (Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)), (Fraction(0), Fraction(3, 7), Fraction(4, 7))]


def test_criterion_6_estimation_grid(acceptance_report):
    start = time.perf_counter()
    rho = pure_state(2 * np.pi / 3, 0)
    povms = [platonic_povm(PlatonicSpec(m)) for m in (4, 6, 8, 12)]
    grid = tradeoff_grid(povms, [5, 10, 50], rho, trials=10_000, seed=606)
    z = [(s.mean_error_sq - s.predicted_exact) / s.stderr for s in grid]
    ratios = [grid[3 * i + 2].mean_error_sq / grid[3 * i].mean_error_sq for i in range(4)]
    elapsed = time.perf_counter() - start
    within = all(abs(x) <= 3 for x in z)
    scaling = all(abs(r / 0.1 - 1) <= 0.15 for r in ratios)
    ok = within and scaling and elapsed < 120
    acceptance_report(
        6, ok,
        f"max |z| {max(map(abs, z)):.2f} over 12 cells, L=50/L=5 ratios "
        f"{', '.join(f'{r:.3f}' for r in ratios)}, {elapsed:.1f}s",
    )
    assert ok


def test_criterion_7_detection(acceptance_report):
    start = time.perf_counter()
    samples = 100_000
    worst_z = 0.0
    dominance = True
    for m in (4, 6):
        povm = platonic_povm(PlatonicSpec(m))
        curves = {}
        for shots in (5, 10, 20):
            exact = qdoc_exact(DETECTION, povm, shots)
            curves[shots] = exact
            mc = qdoc_monte_carlo(DETECTION, povm, shots, samples, seed=700 + 10 * m + shots)
            for eta, pf, pd in mc.points:
                for got, want in zip((pf, pd), operating_point(exact.levels, eta)):
                    se = np.sqrt(want * (1 - want) / samples)
                    excess = abs(got - want) - 1e-12
                    worst_z = max(worst_z, 0.0 if excess <= 0 else excess / se if se > 0 else np.inf)
        dominance &= dominates(curves[20], curves[5])
    elapsed = time.perf_counter() - start
    ok = worst_z <= 3 and dominance and elapsed < 120
    acceptance_report(
        7, ok,
        f"max |z| {worst_z:.2f} over {len(DEFAULT_MC_THRESHOLDS)} thresholds x 6 curves, "
        f"L=20 dominates L=5: {dominance}, {elapsed:.1f}s",
    )
    assert ok


def test_criterion_8_orientation_sweep(acceptance_report):
    start = time.perf_counter()
    spreads, minima = {}, {}
    sym_err = 0.0
    for m in (4, 6, 8):
        spec = PlatonicSpec(m)
        res = orientation_sweep(DETECTION, spec, 5)
        spreads[m], minima[m] = res.spread, res.pe_min
        canonical = orientation_sweep(DETECTION, spec, 5, np.eye(3)[None]).pe[0]
        sym = orientation_sweep(DETECTION, spec, 5, np.array(symmetry_rotations(m)))
        sym_err = max(sym_err, np.max(np.abs(sym.pe - canonical)))
    elapsed = time.perf_counter() - start
    non_increasing = spreads[4] >= spreads[6] >= spreads[8]
    minima_rise = minima[4] <= minima[6] <= minima[8]
    ok = non_increasing and sym_err <= 1e-12 and elapsed < 180
    acceptance_report(
        8, ok,
        f"spread M=4,6,8: {spreads[4]:.4f}, {spreads[6]:.4f}, {spreads[8]:.4f} "
        f"({'pass' if non_increasing else 'flag'}); min P_e rising with M: {'pass' if minima_rise else 'flag'}; "
        f"symmetry max diff {sym_err:.1e}, {elapsed:.1f}s",
    )
    assert ok


CLI_RUNS = [
    ["verify", "--solid", "icosahedron"],
    ["estimate", "--trials", "300", "--seed", "9"],
    ["qdoc", "--solids", "4", "6", "--shots", "5", "10", "--method", "both", "--samples", "5000", "--seed", "3"],
    ["orient-sweep", "--axes", "20", "--angles", "5"],
    ["moments", "--p", "0.2", "0.3", "0.5", "--shots", "6", "--draws", "20000", "--seed", "4"],
]


def test_criterion_9_cli_determinism(acceptance_report, tmp_path, capsys):
    start = time.perf_counter()
    mismatches = []
    for args in CLI_RUNS:
        outputs = []
        for workers in ("1", "1", "2"):
            out = tmp_path / "run.csv"
            code = main([*args, "--no-clock", "--workers", workers, "-o", str(out)])
            outputs.append((code, out.read_bytes()))
        if len({o for o in outputs}) != 1 or outputs[0][0] != 0:
            mismatches.append(args[0])
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 60
    acceptance_report(9, ok, f"{len(CLI_RUNS)} commands x 3 runs (workers 1, 1, 2), mismatches: {mismatches or 'none'}, {elapsed:.1f}s")
    assert ok
