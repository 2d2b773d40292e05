"""End-to-end acceptance bench.

Ten checks, one per claim the package makes: exact constants and the
rational exponent table, the overlap kernel against closed forms and a
frozen geometric Monte Carlo oracle, generator fidelity for both
backends, the change-of-measure identities, the pathwise energy bound,
the lower-tail inequality, the partition-function growth shape, the
radius scaling exponent at desk scale, the sampler against an
independent reweighting oracle, and byte-level sweep determinism.

Every test prints a single summary line (through the capture-disabled
channel, so it is visible in normal pytest runs) with the measured
margin next to its tolerance.
"""

import json
import math
from fractions import Fraction

import numpy as np
import pytest

from srfbm._oracles import (
    EXPONENT_AUDIT,
    EXPONENT_AUDIT_LOG_CELLS,
    MC_BALL_OVERLAP,
    MC_BALL_OVERLAP_POINTS,
    MC_BALL_OVERLAP_TOL,
)
from srfbm.energy import ball_overlap, path_energies
from srfbm.estimators import (
    check_claim,
    estimate_tail,
    estimate_ZT_importance,
    fit_power_law,
)
from srfbm.fbm import HurstModel, Path, TimeGrid, iter_fbm_batches, sample_fbm_batch
from srfbm.girsanov import (
    TiltSpec,
    add_drift_batch,
    girsanov_constants,
    lambda_star,
    log_rn_weight,
    martingale_M_batch,
    unit_vector,
)
from srfbm.harness import SweepConfig, run_sweep
from srfbm.observables import gyration_radii
from srfbm.params import ModelParams
from srfbm.sampler import ChainConfig, run_chain
from srfbm.scaling import beta_power, lemma_constants, table_exponents
from srfbm.seeds import mix64


def _report(capsys, num, name, ok, detail):
    """One visible line per criterion; then fail the test if not ok."""
    with capsys.disabled():
        print(f"\n[criterion {num:2d}] {'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"criterion {num} ({name}) failed: {detail}"


def test_criterion_01_exact_formulas(capsys):
    gc = girsanov_constants(0.5)
    exact_half = (gc.c1, gc.C_H) == (1.0, 1.0)

    errs = []
    C1, _ = lemma_constants(1)
    errs.append(abs(C1 - 9.0 / 128.0))
    _, K3 = lemma_constants(3)
    errs.append(abs(K3 - 4.0 * math.pi / 3.0))
    for beta, want in ((0.25, 0.5), (1.0, 1.0), (8.0, 4.0)):
        errs.append(abs(beta_power(beta, 0.5, 2.0 / 3.0) - want))
    worst = max(errs)

    cells = 0
    table_ok = True
    for H, row in EXPONENT_AUDIT.items():
        for d, (lo, hi) in zip(range(1, 7), row):
            e = table_exponents(d, H)
            table_ok &= (e.lower, e.upper) == (lo, hi)
            if (d, H) in EXPONENT_AUDIT_LOG_CELLS:
                table_ok &= (e.lower_log, e.upper_log) == (
                    Fraction(-1, d),
                    Fraction(1, 2),
                )
            else:
                table_ok &= e.lower_log == 0 and e.upper_log == 0
            cells += 1
    spot = table_exponents(2, Fraction(1, 4))
    table_ok &= (spot.lower, spot.upper) == (Fraction(7, 16), Fraction(13, 16))
    spot = table_exponents(5, Fraction(2, 3))
    table_ok &= (spot.lower, spot.upper) == (Fraction(2, 9), Fraction(10, 9))

    ok = exact_half and worst <= 1e-12 and table_ok and cells == 30
    _report(
        capsys, 1, "exact-formula suite", ok,
        f"H=1/2 constants exact; max formula error {worst:.1e} (tol 1e-12);"
        f" exponent table {cells}/30 cells exact",
    )


def test_criterion_02_overlap_kernel(capsys):
    r = np.linspace(0.0, 2.5, 2001)
    worst_closed = 0.0
    for d in (1, 2, 3):
        got = ball_overlap(d, r)
        if d == 1:
            want = np.clip(2.0 - r, 0.0, None)
        elif d == 2:
            rc = np.clip(r, 0.0, 2.0)
            want = 2.0 * np.arccos(rc / 2.0) - (rc / 2.0) * np.sqrt(4.0 - rc * rc)
        else:
            rc = np.clip(r, 0.0, 2.0)
            want = (math.pi / 12.0) * (4.0 + rc) * (2.0 - rc) ** 2
        worst_closed = max(worst_closed, float(np.max(np.abs(got - want))))

    worst_mc = max(
        abs(float(ball_overlap(d, rr)) - frozen)
        for (d, rr), frozen in MC_BALL_OVERLAP.items()
    )
    beyond = [float(abs(ball_overlap(d, x))) for d in range(1, 7) for x in (2.0, 2.7, 9.0)]
    zero_beyond = max(beyond) == 0.0

    ok = worst_closed <= 1e-10 and worst_mc <= MC_BALL_OVERLAP_TOL and zero_beyond
    _report(
        capsys, 2, "overlap kernel", ok,
        f"closed-form error {worst_closed:.1e} (tol 1e-10); deviation from the"
        f" {MC_BALL_OVERLAP_POINTS:.0e}-point MC oracle {worst_mc:.1e}"
        f" (tol {MC_BALL_OVERLAP_TOL:.0e}); exactly 0 beyond r = 2",
    )


def test_criterion_03_generator_fidelity(capsys):
    m, n = 10_000, 256
    grid = TimeGrid(T=1.0, n=n)
    idx = np.arange(7, n, 8)  # 32 grid times, every eighth node
    worst_z = 0.0
    for Hi, H in enumerate((0.3, 0.5, 0.7)):
        tt = grid.times[1:][idx]
        cov = 0.5 * (
            tt[:, None] ** (2 * H)
            + tt[None, :] ** (2 * H)
            - np.abs(tt[:, None] - tt[None, :]) ** (2 * H)
        )
        se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov**2) / m)
        for bi, backend in enumerate(("cholesky", "circulant")):
            vals = sample_fbm_batch(
                HurstModel(H=H, d=1), grid, count=m,
                seed=mix64(301, Hi, bi), backend=backend,
            )
            x = vals[:, 1:, 0][:, idx]
            emp = (x.T @ x) / m
            worst_z = max(worst_z, float(np.max(np.abs(emp - cov) / se)))
    ok = worst_z <= 4.0
    _report(
        capsys, 3, "generator fidelity", ok,
        f"empirical covariance, H in {{0.3,0.5,0.7}} x both backends,"
        f" {m} paths, n={n}: max deviation {worst_z:.2f} standard errors (tol 4)",
    )


def test_criterion_04_girsanov_suite(capsys):
    # (a) mean-one weights over 1e5 paths per (H, lam)
    m, n = 100_000, 1024
    grid = TimeGrid(T=1.0, n=n)
    u = unit_vector(1)
    worst_mean_one = 0.0
    for Hi, H in enumerate((0.3, 0.5, 0.7)):
        model = HurstModel(H=H, d=1)
        for li, lam in enumerate((0.25, 0.5)):
            tilt = TiltSpec(lam=lam, u=u)
            s = s2 = 0.0
            for _, vals in iter_fbm_batches(model, grid, m, seed=mix64(401, Hi, li)):
                M = martingale_M_batch(vals, u, grid, H)
                w = np.exp(log_rn_weight(tilt, M, grid.T, H))
                s += w.sum()
                s2 += (w * w).sum()
            mean = s / m
            sd = math.sqrt(max(s2 / m - mean * mean, 0.0))
            worst_mean_one = max(worst_mean_one, abs(mean - 1.0) / (sd / math.sqrt(m)))

    # (b) quadrature accuracy of the martingale's variance at n = 2048
    m_var, n_var = 20_000, 2048
    grid_v = TimeGrid(T=1.0, n=n_var)
    worst_var = worst_var75 = 0.0
    for Hi, H in enumerate((0.3, 0.5, 0.7, 0.75)):
        model = HurstModel(H=H, d=1)
        s = s2 = 0.0
        for _, vals in iter_fbm_batches(model, grid_v, m_var, seed=mix64(402, Hi)):
            M = martingale_M_batch(vals, u, grid_v, H)
            s += M.sum()
            s2 += (M * M).sum()
        var = s2 / m_var - (s / m_var) ** 2
        target = girsanov_constants(H).C_H * grid_v.T ** (2.0 - 2.0 * H)
        rel = abs(var / target - 1.0)
        if H == 0.75:
            worst_var75 = max(worst_var75, rel)
        else:
            worst_var = max(worst_var, rel)

    # (c) mean log-weight under the drifted law = +lam^2/2 * C_H T^(2-2H)
    worst_i2 = 0.0
    m_i2 = 20_000
    for Hi, H in enumerate((0.3, 0.5)):
        model = HurstModel(H=H, d=1)
        lam = 0.5
        tilt = TiltSpec(lam=lam, u=u)
        target = 0.5 * lam**2 * girsanov_constants(H).C_H * grid.T ** (2.0 - 2.0 * H)
        s = s2 = 0.0
        for _, vals in iter_fbm_batches(model, grid, m_i2, seed=mix64(403, Hi)):
            drifted = add_drift_batch(vals, tilt, grid)
            lw = log_rn_weight(tilt, martingale_M_batch(drifted, u, grid, H), grid.T, H)
            s += lw.sum()
            s2 += (lw * lw).sum()
        mean = s / m_i2
        sd = math.sqrt(max(s2 / m_i2 - mean * mean, 0.0))
        worst_i2 = max(worst_i2, abs(mean - target) / (sd / math.sqrt(m_i2)))

    ok = worst_mean_one <= 4.0 and worst_var <= 0.05 and worst_var75 <= 0.10 and worst_i2 <= 4.0
    _report(
        capsys, 4, "change-of-measure suite", ok,
        f"mean-one max {worst_mean_one:.2f} SE (tol 4); Var(M_T) off by"
        f" {100 * worst_var:.2f}% (tol 5%) and {100 * worst_var75:.2f}% at H=0.75"
        f" (tol 10%); drifted mean log-weight max {worst_i2:.2f} SE (tol 4)",
    )


def test_criterion_05_pathwise_claim(capsys):
    grid = TimeGrid(T=8.0, n=256)
    fails = 0
    checked = 0
    worst = math.inf
    for d in (1, 2, 3):
        for Hi, H in enumerate((0.3, 0.5, 0.7)):
            vals = sample_fbm_batch(
                HurstModel(H=H, d=d), grid, count=1000, seed=mix64(501, d, Hi)
            )
            for v in vals:
                holds, margin = check_claim(Path(grid, v))
                fails += not holds
                worst = min(worst, margin)
                checked += 1
    ok = fails == 0 and checked == 9000
    _report(
        capsys, 5, "pathwise energy bound", ok,
        f"{fails}/{checked} failures across (d, H) grid at n=256;"
        f" smallest margin {worst:.2f} (must stay positive)",
    )


def test_criterion_06_lower_tail_bound(capsys):
    mp = ModelParams(d=1, H=0.5, beta=1.0, T=8.0, n=256)
    C_lt, _ = lemma_constants(1)
    m = 100_000
    details = []
    ok = True
    for ri, r in enumerate((1.0, 2.0, 4.0)):
        est = estimate_tail(mp, r, "below", m, seed=mix64(601, ri))
        bound = -C_lt * mp.beta * mp.T**2 / r
        # the estimate must sit below the bound, modulo its own error band
        slack = 4.0 * est.log_std_error if math.isfinite(est.log_value) else 0.0
        ok &= est.log_value <= bound + slack
        shown = f"{est.log_value:.2f}" if math.isfinite(est.log_value) else "-inf"
        details.append(f"r={r:g}: log q^< = {shown} <= {bound:.2f}")
    _report(
        capsys, 6, "lower-tail bound", ok,
        "; ".join(details) + f" ({m} paths each, 4-SE band)",
    )


def test_criterion_07_partition_growth_shape(capsys):
    dt = 0.25
    pts = []
    rel_ses = []
    for Ti, T in enumerate((4.0, 8.0, 16.0, 32.0)):
        mp = ModelParams(d=1, H=0.5, beta=1.0, T=T, n=round(T / dt))
        lam = lambda_star(mp.d, mp.H, mp.beta, mp.T)
        m = 200_000 if T == 4.0 else 50_000
        est = estimate_ZT_importance(
            mp, TiltSpec(lam=lam, u=unit_vector(1)), m, seed=mix64(701, Ti)
        )
        pts.append((T, -est.log_value))
        rel_ses.append(est.log_std_error / abs(est.log_value))
    fit = fit_power_law(pts)
    ok = 0.8 <= fit.exponent <= 1.2
    _report(
        capsys, 7, "partition growth shape", ok,
        f"slope of log(-log Z) vs log T = {fit.exponent:.3f} (need [0.8, 1.2]);"
        f" -log Z = {', '.join(f'{y:.1f}' for _, y in pts)} at T = 4..32;"
        f" worst relative SE {max(rel_ses):.3f}",
    )


def _desk_scale_nu(H, master_seed, tmp_path):
    config = SweepConfig(
        mode="mcmc",
        d=(1,),
        H=(H,),
        beta=(1.0,),
        T=(8.0, 16.0, 32.0, 64.0),
        dt=0.25,
        replicas=8,
        total_samples=512,
        burn_in=2000,
        master_seed=master_seed,
        out=f"nu{int(10 * H)}",
    )
    _, csv_path = run_sweep(config, out_dir=str(tmp_path))
    with open(csv_path) as fh:
        rows = fh.read().splitlines()
    cols = rows[0].split(",")
    pts = []
    for row in rows[1:]:
        vals = dict(zip(cols, row.split(",")))
        pts.append((float(vals["T"]), float(vals["median_r_gyration"])))
    return fit_power_law(pts)


def test_criterion_08_desk_scale_exponent(capsys, tmp_path):
    fit_bm = _desk_scale_nu(0.5, 801, tmp_path)
    fit_rough = _desk_scale_nu(0.3, 802, tmp_path)
    ok = 0.85 <= fit_bm.exponent <= 1.15 and 0.72 <= fit_rough.exponent <= 1.01
    _report(
        capsys, 8, "desk-scale radius exponent", ok,
        f"8 chains x 512 samples, T = 8..64: nu-hat(H=0.5) = {fit_bm.exponent:.3f}"
        f" (need [0.85, 1.15]); nu-hat(H=0.3) = {fit_rough.exponent:.3f}"
        f" (need [0.72, 1.01])",
    )


def test_criterion_09_sampler_oracle(capsys):
    mp = ModelParams(d=1, H=0.5, beta=1.0, T=4.0, n=32)

    # chain side: 8192 retained samples, batch-means standard error
    cfg = ChainConfig(model=mp, total_samples=8192, burn_in=1000, seed=901)
    rg = np.array([s.r_gyration for s in run_chain(cfg)])
    batches = rg.reshape(32, -1).mean(axis=1)
    chain_mean = float(rg.mean())
    chain_se = float(batches.std(ddof=1) / math.sqrt(batches.size))

    # oracle side: importance-free reweighting over 1e6 independent paths
    m = 1_000_000
    sw = swr = sw2 = swr2 = swwr = 0.0
    for _, vals in iter_fbm_batches(mp.model, mp.grid, m, seed=902):
        w = np.exp(-mp.beta * path_energies(vals, mp.dt))
        r = gyration_radii(vals)
        sw += w.sum()
        swr += (w * r).sum()
        sw2 += (w * w).sum()
        swr2 += (w * r) @ (w * r)
        swwr += (w * r) @ w
    ratio = swr / sw
    mean_w = sw / m
    # influence-function variance of the self-normalized mean
    g2 = (swr2 - 2.0 * ratio * swwr + ratio * ratio * sw2) / m
    oracle_se = math.sqrt(g2 / m) / mean_w
    ess = sw * sw / sw2

    gap = abs(chain_mean - ratio)
    combined = math.hypot(chain_se, oracle_se)
    ok = gap <= 4.0 * combined
    _report(
        capsys, 9, "sampler vs reweighting oracle", ok,
        f"chain {chain_mean:.4f} +- {chain_se:.4f} vs oracle {ratio:.4f} +-"
        f" {oracle_se:.4f} over 1e6 paths (ESS {ess:,.0f});"
        f" gap {gap / combined:.2f} combined SEs (tol 4)",
    )


def test_criterion_10_sweep_determinism(capsys, tmp_path):
    config = SweepConfig(
        mode="mcmc",
        d=(1,),
        H=(0.5,),
        beta=(1.0,),
        T=(8.0,),
        dt=0.25,
        replicas=2,
        total_samples=64,
        burn_in=200,
        master_seed=1001,
        out="det",
    )
    paths = []
    for run in ("a", "b"):
        jsonl_path, csv_path = run_sweep(config, out_dir=str(tmp_path / run), workers=2)
        paths.append((jsonl_path, csv_path))
    with open(paths[0][0]) as fh:
        data_a = fh.read().splitlines()[1:]
    with open(paths[1][0]) as fh:
        data_b = fh.read().splitlines()[1:]
    with open(paths[0][1]) as fh:
        csv_a = fh.read()
    with open(paths[1][1]) as fh:
        csv_b = fh.read()
    ok = data_a == data_b and csv_a == csv_b and len(data_a) == 2
    for line in data_a:
        ok &= json.loads(line)["config_digest"] == config.digest()
    _report(
        capsys, 10, "sweep determinism", ok,
        f"re-run reproduced {len(data_a)} data lines and the summary CSV"
        f" byte for byte (timestamps live only in the header line)",
    )
