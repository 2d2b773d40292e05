"""Built-in invariant suite: cross-module checks with PASS/FAIL reporting.

`run_verify` executes, in order: exact-formula checks, the frozen overlap
oracle, backend equivalence and sampled covariance, the mean-one weight
identity, the flat-measure chain invariance, the pathwise lower bound on
the occupation energy, and the rational exponent audit.  Every line prints
the measured margin next to its tolerance; the exit status is 0 only if
every check passes.
"""

from __future__ import annotations

import math
import sys
from fractions import Fraction

import numpy as np

from ._oracles import (
    EXPONENT_AUDIT,
    EXPONENT_AUDIT_LOG_CELLS,
    MC_BALL_OVERLAP,
    MC_BALL_OVERLAP_TOL,
)
from .energy import ball_overlap
from .estimators import check_claim
from .fbm import (
    HurstModel,
    Path,
    TimeGrid,
    fgn_covariance_matrix,
    get_coloring,
    sample_fbm_batch,
)
from .girsanov import girsanov_constants, martingale_M_batch, unit_vector
from .observables import gyration_radii
from .params import ModelParams
from .sampler import ChainConfig, run_chain
from .scaling import beta_power, lemma_constants, table_exponents
from .seeds import mix64

__all__ = ["run_verify"]


def _check_exact_formulas(seed):
    gc = girsanov_constants(0.5)
    if (gc.c1, gc.C_H) != (1.0, 1.0):
        return False, f"constants at H=1/2 gave ({gc.c1}, {gc.C_H}), want (1, 1) exactly"
    errs = []
    C1, _ = lemma_constants(1)
    errs.append(abs(C1 - 9.0 / 128.0))
    _, K3 = lemma_constants(3)
    errs.append(abs(K3 - 4.0 * math.pi / 3.0))
    for beta, want in ((0.25, 0.5), (1.0, 1.0), (8.0, 4.0)):
        errs.append(abs(beta_power(beta, 0.5, 2.0 / 3.0) - want))
    worst = max(errs)
    return worst <= 1e-12, f"max formula error {worst:.2e} (tol 1e-12)"


def _check_overlap_oracle(seed):
    r = np.linspace(0.0, 2.5, 501)
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
    if worst_closed > 1e-10:
        return False, f"closed-form mismatch {worst_closed:.2e} (tol 1e-10) in d<=3"
    beyond = max(float(abs(ball_overlap(d, 2.0 + 0.5 * d))) for d in range(1, 7))
    if beyond != 0.0:
        return False, f"overlap at separation >= 2 gave {beyond}, want exactly 0"
    worst_mc = max(
        abs(float(ball_overlap(d, rr)) - frozen)
        for (d, rr), frozen in MC_BALL_OVERLAP.items()
    )
    ok = worst_mc <= MC_BALL_OVERLAP_TOL
    return ok, (
        f"closed-form error {worst_closed:.2e} (tol 1e-10); Monte Carlo oracle"
        f" deviation {worst_mc:.2e} (tol {MC_BALL_OVERLAP_TOL:.0e})"
    )


def _check_backends(seed):
    # exact part: both colorings reproduce the target covariance as matrices
    n, dt = 64, 0.125
    worst = 0.0
    for H in (0.3, 0.5, 0.7):
        want = fgn_covariance_matrix(H, n, dt)
        chol = get_coloring(H, n, dt, "cholesky").factor
        worst = max(worst, float(np.max(np.abs(chol @ chol.T - want))))
        A = get_coloring(H, n, dt, "circulant").apply(np.eye(2 * n))
        worst = max(worst, float(np.max(np.abs(A @ A.T - want))))
    if worst > 1e-10:
        return False, f"coloring covariance error {worst:.2e} (tol 1e-10)"
    # sampled part: empirical path covariance on a coarse index grid
    m, n_s = 4000, 128
    grid = TimeGrid(T=1.0, n=n_s)
    idx = np.arange(15, n_s, 16)
    t = grid.times[1:]
    worst_z = 0.0
    for H in (0.3, 0.7):
        model = HurstModel(H=H, d=1)
        tt = t[idx]
        cov = 0.5 * (
            tt[:, None] ** (2 * H) + tt[None, :] ** (2 * H)
            - np.abs(tt[:, None] - tt[None, :]) ** (2 * H)
        )
        se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov**2) / m)
        for bk_index, backend in enumerate(("cholesky", "circulant")):
            vals = sample_fbm_batch(model, grid, count=m, seed=mix64(seed, 3, bk_index), backend=backend)
            x = vals[:, 1:, 0][:, idx]
            emp = (x.T @ x) / m
            worst_z = max(worst_z, float(np.max(np.abs(emp - cov) / se)))
    ok = worst_z <= 4.0
    return ok, (
        f"matrix identity error {worst:.2e} (tol 1e-10); sampled covariance"
        f" max deviation {worst_z:.2f} standard errors (tol 4)"
    )


def _check_mean_one(seed):
    m, n = 20_000, 512
    worst = 0.0
    for H in (0.3, 0.5):
        model, grid = HurstModel(H=H, d=1), TimeGrid(T=1.0, n=n)
        lam, u = 0.5, unit_vector(1)
        vals = sample_fbm_batch(model, grid, count=m, seed=mix64(seed, 4), backend="auto")
        M = martingale_M_batch(vals, u, grid, H)
        C_H = girsanov_constants(H).C_H
        w = np.exp(lam * M - 0.5 * lam**2 * C_H * grid.T ** (2.0 - 2.0 * H))
        z = abs(w.mean() - 1.0) / (w.std(ddof=1) / math.sqrt(m))
        worst = max(worst, z)
    return worst <= 4.0, f"|mean weight - 1| max {worst:.2f} standard errors (tol 4)"


def _check_flat_chain(seed):
    # beta = 0: every proposal is accepted and the chain's radius statistics
    # agree with direct sampling from the reference measure
    mp = ModelParams(d=1, H=0.5, beta=0.0, T=4.0, n=64)
    cfg = ChainConfig(
        model=mp, total_samples=512, burn_in=200, seed=mix64(seed, 5), backend="auto"
    )
    samples = run_chain(cfg)
    acc = samples[-1].acceptance_rate
    if acc != 1.0:
        return False, f"acceptance rate {acc} at beta = 0, want exactly 1"
    rg = np.array([s.r_gyration for s in samples])
    direct = gyration_radii(
        sample_fbm_batch(mp.model, mp.grid, count=4000, seed=mix64(seed, 6))
    )
    # chain standard error from 16 batch means (samples are autocorrelated)
    bm = rg.reshape(16, -1).mean(axis=1)
    se = math.hypot(
        bm.std(ddof=1) / math.sqrt(len(bm)),
        direct.std(ddof=1) / math.sqrt(direct.size),
    )
    z = abs(rg.mean() - direct.mean()) / se
    return z <= 6.0, f"acceptance exactly 1; radius gap {z:.2f} standard errors (tol 6)"


def _check_pathwise_claim(seed):
    worst = math.inf
    count = 0
    fails = 0
    for d in (1, 2, 3):
        for H in (0.3, 0.5, 0.7):
            model, grid = HurstModel(H=H, d=d), TimeGrid(T=8.0, n=256)
            vals = sample_fbm_batch(model, grid, count=100, seed=mix64(seed, 7, d))
            for v in vals:
                holds, margin = check_claim(Path(grid, v))
                worst = min(worst, margin)
                count += 1
                fails += not holds
    ok = fails == 0
    return ok, f"{fails}/{count} failures; smallest margin {worst:.3f} (must stay > 0)"


def _check_exponent_table(seed):
    checked = 0
    for H, row in EXPONENT_AUDIT.items():
        for d, (lo, hi) in zip(range(1, 7), row):
            e = table_exponents(d, H)
            if (e.lower, e.upper) != (lo, hi):
                return False, (
                    f"cell (d={d}, H={H}) gave ({e.lower}, {e.upper}),"
                    f" want ({lo}, {hi})"
                )
            if (d, H) in EXPONENT_AUDIT_LOG_CELLS:
                want_logs = (Fraction(-1, d), Fraction(1, 2))
                if (e.lower_log, e.upper_log) != want_logs:
                    return False, f"log powers wrong at (d={d}, H={H})"
            elif e.lower_log != 0 or e.upper_log != 0:
                return False, f"unexpected log factor at (d={d}, H={H})"
            checked += 1
    return checked == 30, f"all {checked}/30 rational cells match exactly"


_CHECKS = [
    ("exact formulas", _check_exact_formulas),
    ("overlap oracle", _check_overlap_oracle),
    ("generator backends and covariance", _check_backends),
    ("mean-one change-of-measure weight", _check_mean_one),
    ("flat-measure chain invariance", _check_flat_chain),
    ("pathwise energy lower bound", _check_pathwise_claim),
    ("exponent table audit", _check_exponent_table),
]


def run_verify(seed: int = 0, file=None) -> int:
    """Run the invariant suite; print one PASS/FAIL line per check.

    Returns 0 if every check passed, 1 otherwise.
    """
    out = file if file is not None else sys.stdout
    all_ok = True
    for name, fn in _CHECKS:
        try:
            ok, detail = fn(seed)
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", file=out)
    print("verify: OK" if all_ok else "verify: FAILED", file=out)
    return 0 if all_ok else 1
