"""Batch front end: config files, seeded parameter sweeps, and persistence.

A sweep config is flat UTF-8 ``key = value`` text.  Blank lines and lines
starting with ``#`` are ignored; list-valued keys take comma-separated
entries.  Keys (defaults in brackets):

================  ============================================================
mode              one of mcmc, naive, importance, tails, verify  [mcmc]
d                 list of dimensions, integers >= 1              (required)
H                 list of Hurst indices in (0, 1)                (required)
beta              list of repulsion strengths >= 0               (required)
T                 list of horizons, each > e                     (required)
dt                grid step; every T must be a multiple          (required)
replicas          independent replicas per grid point            [4]
samples           Monte Carlo draws per replica (non-mcmc)       [10000]
total_samples     retained chain samples per replica (mcmc)      [512]
burn_in           discarded adaptation steps (mcmc)              [1000]
thin              steps between retained samples; 0 = n/8        [0]
pcn_step          initial pCN step size in (0, 1]                [0.25]
adapt_target      burn-in acceptance target in (0, 1)            [0.3]
backend           auto, cholesky, or circulant                   [auto]
master_seed       64-bit sweep seed                              [0]
tail_radius       fixed radius for tails mode; default uses the
                  predicted r_lower / r_upper per point          [predicted]
out               output file stem                               [sweep]
================  ============================================================

`run_sweep` enumerates the Cartesian grid d x H x beta x T (in that key
order), derives the replica seed as mix64(master_seed, point_index,
replica_index), and writes two files under the output directory:

* ``<stem>.jsonl`` — one header object (schema version, timestamp, config
  digest), then one record per (point, replica) sorted by (point_index,
  replica_index).  Data lines contain no timestamps, so re-running an
  identical config reproduces them byte for byte.
* ``<stem>.csv`` — one row per grid point: pooled observables, the log
  partition estimate, and the predicted radius bounds side by side.

On any replica failure both files are kept with a ``.partial`` suffix and
`SweepError` is raised.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from datetime import datetime, timezone

import numpy as np

from .energy import path_energies
from .estimators import _reduce_log_terms
from .fbm import iter_fbm_batches
from .girsanov import (
    TiltSpec,
    add_drift_batch,
    girsanov_constants,
    lambda_star,
    martingale_M_batch,
    unit_vector,
)
from .observables import end_to_end_sq_batch, gyration_radii
from .params import ModelParams
from .sampler import ChainConfig, run_chain
from .scaling import scaling_prediction
from .seeds import mix64

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "SweepError",
    "SweepConfig",
    "RunRecord",
    "parse_config",
    "run_sweep",
]

SCHEMA_VERSION = "srfbm-sweep/1"

MODES = ("mcmc", "naive", "importance", "tails", "verify")
BACKENDS = ("auto", "cholesky", "circulant")

# naive Z estimates are meaningless once the mass variance explodes; past
# this relative standard error the importance estimator is mandatory
NAIVE_REL_SE_LIMIT = 0.30


class ConfigError(ValueError):
    """Malformed or out-of-range sweep configuration."""


class SweepError(RuntimeError):
    """A replica failed; partial outputs were kept with a .partial suffix."""


@dataclass(frozen=True)
class SweepConfig:
    mode: str
    d: tuple[int, ...] = ()
    H: tuple[float, ...] = ()
    beta: tuple[float, ...] = ()
    T: tuple[float, ...] = ()
    dt: float = 0.0
    replicas: int = 4
    samples: int = 10_000
    total_samples: int = 512
    burn_in: int = 1000
    thin: int = 0
    pcn_step: float = 0.25
    adapt_target: float = 0.3
    backend: str = "auto"
    master_seed: int = 0
    tail_radius: float | None = None
    out: str = "sweep"

    def grid_points(self) -> list[ModelParams]:
        """The d x H x beta x T product in key order; index = position here."""
        points = []
        for d in self.d:
            for H in self.H:
                for beta in self.beta:
                    for T in self.T:
                        n = round(T / self.dt)
                        points.append(ModelParams(d=d, H=H, beta=beta, T=T, n=n))
        return points

    def digest(self) -> str:
        key = tuple(getattr(self, f.name) for f in fields(self))
        return hashlib.sha256(repr(key).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class RunRecord:
    """One (grid point, replica) result; field names are the JSONL schema.

    Mode-specific fields hold None where they do not apply, and None also
    stands in for non-finite values (a zero tail mass has log_q = None).
    """

    config_digest: str
    mode: str
    point_index: int
    replica_index: int
    d: int
    H: float
    beta: float
    T: float
    n: int
    seed: int
    samples: int
    r_gyration: float
    energy: float
    end_to_end_sq: float
    acceptance_rate: float | None = None
    pcn_step: float | None = None
    log_Z: float | None = None
    log_Z_se: float | None = None
    lam: float | None = None
    mean_log_weight: float | None = None
    tail_r_below: float | None = None
    log_q_below: float | None = None
    log_q_below_se: float | None = None
    tail_r_above: float | None = None
    log_q_above: float | None = None
    log_q_above_se: float | None = None

    def to_json_line(self) -> str:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None
            return v

        payload = {f.name: clean(getattr(self, f.name)) for f in fields(self)}
        return json.dumps(payload)


# --------------------------------------------------------------------------
# config parsing


def _parse_scalar(key: str, raw: str, line: int, kind: type):
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(
            f"line {line}: {key} expects {'an integer' if kind is int else 'a number'},"
            f" got {raw!r}"
        ) from None
    return raw


def _parse_list(key: str, raw: str, line: int, kind: type) -> tuple:
    items = [s.strip() for s in raw.split(",")]
    if any(not s for s in items):
        raise ConfigError(f"line {line}: {key} has an empty list entry in {raw!r}")
    return tuple(_parse_scalar(key, s, line, kind) for s in items)


_LIST_KEYS = {"d": int, "H": float, "beta": float, "T": float}
_SCALAR_KEYS = {
    "mode": str,
    "dt": float,
    "replicas": int,
    "samples": int,
    "total_samples": int,
    "burn_in": int,
    "thin": int,
    "pcn_step": float,
    "adapt_target": float,
    "backend": str,
    "master_seed": int,
    "tail_radius": float,
    "out": str,
}
_REQUIRED = ("d", "H", "beta", "T", "dt")


def _range_error(line: int, key: str, value, interval: str) -> ConfigError:
    return ConfigError(
        f"line {line}: {key} = {value} out of range; {key} must lie in {interval}"
    )


def parse_config(text: str) -> SweepConfig:
    """Parse and validate flat ``key = value`` config text (see module doc).

    Errors carry line numbers; duplicate keys cite both offending lines;
    range violations name the key and the admissible interval.
    """
    values: dict[str, object] = {}
    first_line: dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key in values:
            raise ConfigError(
                f"duplicate key {key!r} (lines {first_line[key]} and {lineno})"
            )
        if key in _LIST_KEYS:
            values[key] = _parse_list(key, raw, lineno, _LIST_KEYS[key])
        elif key in _SCALAR_KEYS:
            values[key] = _parse_scalar(key, raw, lineno, _SCALAR_KEYS[key])
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        first_line[key] = lineno

        # range checks that can be done per line (so the error carries it)
        if key == "mode" and values[key] not in MODES:
            raise ConfigError(
                f"line {lineno}: mode must be one of {', '.join(MODES)}, got {raw!r}"
            )
        if key == "backend" and values[key] not in BACKENDS:
            raise ConfigError(
                f"line {lineno}: backend must be one of {', '.join(BACKENDS)}, got {raw!r}"
            )
        if key == "d" and any(d < 1 for d in values[key]):
            raise _range_error(lineno, "d", min(values[key]), "[1, inf)")
        if key == "H":
            for h in values[key]:
                if not 0.0 < h < 1.0:
                    raise _range_error(lineno, "H", h, "(0, 1)")
        if key == "beta" and any(b < 0 for b in values[key]):
            raise _range_error(lineno, "beta", min(values[key]), "[0, inf)")
        if key == "dt" and values[key] <= 0:
            raise _range_error(lineno, "dt", values[key], "(0, inf)")
        if key == "replicas" and values[key] < 1:
            raise _range_error(lineno, "replicas", values[key], "[1, inf)")
        if key in ("samples",) and values[key] < 2:
            raise _range_error(lineno, key, values[key], "[2, inf)")
        if key in ("total_samples", "burn_in") and values[key] < 1:
            raise _range_error(lineno, key, values[key], "[1, inf)")
        if key == "thin" and values[key] < 0:
            raise _range_error(lineno, "thin", values[key], "[0, inf)")
        if key == "pcn_step" and not 0.0 < values[key] <= 1.0:
            raise _range_error(lineno, "pcn_step", values[key], "(0, 1]")
        if key == "adapt_target" and not 0.0 < values[key] < 1.0:
            raise _range_error(lineno, "adapt_target", values[key], "(0, 1)")
        if key == "master_seed" and not 0 <= values[key] < 2**64:
            raise _range_error(lineno, "master_seed", values[key], "[0, 2^64)")
        if key == "tail_radius" and values[key] <= 0:
            raise _range_error(lineno, "tail_radius", values[key], "(0, inf)")

    mode = values.setdefault("mode", "mcmc")
    if mode != "verify":
        for key in _REQUIRED:
            if key not in values:
                raise ConfigError(f"missing required key {key!r}")
        dt = values["dt"]
        for T in values["T"]:
            if T <= math.e:
                raise ConfigError(
                    f"line {first_line['T']}: T = {T} out of range; every T must"
                    f" exceed e (about 2.71828) for the scaling predictions"
                )
            k = T / dt
            if abs(k - round(k)) > 1e-9 * max(1.0, k) or round(k) < 2:
                raise ConfigError(
                    f"T = {T} is not an integer multiple (>= 2) of dt = {dt}"
                )
    return SweepConfig(**values)


# --------------------------------------------------------------------------
# replica workers


def _mcmc_replica(
    config: SweepConfig, point_index: int, mp: ModelParams, replica_index: int, seed: int
) -> tuple[RunRecord, np.ndarray]:
    chain = ChainConfig(
        model=mp,
        total_samples=config.total_samples,
        burn_in=config.burn_in,
        thin=config.thin,
        pcn_step=config.pcn_step,
        adapt_target=config.adapt_target,
        seed=seed,
        backend=config.backend,
    )
    samples = run_chain(chain)
    rg = np.array([s.r_gyration for s in samples])
    record = RunRecord(
        config_digest=config.digest(),
        mode=config.mode,
        point_index=point_index,
        replica_index=replica_index,
        d=mp.d,
        H=mp.H,
        beta=mp.beta,
        T=mp.T,
        n=mp.n,
        seed=seed,
        samples=len(samples),
        r_gyration=float(rg.mean()),
        energy=float(np.mean([s.energy for s in samples])),
        end_to_end_sq=float(np.mean([s.end_to_end_sq for s in samples])),
        acceptance_rate=samples[-1].acceptance_rate,
        pcn_step=samples[-1].pcn_step,
    )
    return record, rg


def _mc_replica(
    config: SweepConfig, point_index: int, mp: ModelParams, replica_index: int, seed: int
) -> tuple[RunRecord, None]:
    """One pass over `samples` paths; Z estimate plus reweighted observables.

    Observables are means under the repelled measure: weights proportional
    to exp(-beta E) for plain sampling, divided by the change-of-measure
    weight when drifted.  At lam = 0 the importance path reduces to naive.
    """
    m = config.samples
    grid, H = mp.grid, mp.H
    lam = 0.0
    if config.mode == "importance" and mp.beta > 0:
        lam = lambda_star(mp.d, mp.H, mp.beta, mp.T)
    tilt = TiltSpec(lam=lam, u=unit_vector(mp.d))
    half_qv = 0.5 * lam**2 * girsanov_constants(H).C_H * grid.T ** (2.0 - 2.0 * H)

    log_w = np.zeros(m)
    log_rn_sum = 0.0
    rg = np.empty(m)
    en = np.zeros(m)
    ee = np.empty(m)
    for start, values in iter_fbm_batches(mp.model, grid, m, seed, config.backend):
        b = values.shape[0]
        if lam != 0.0:
            values = add_drift_batch(values, tilt, grid)
            M = martingale_M_batch(values, tilt.u, grid, H)
            log_rn = lam * M - half_qv
            log_w[start : start + b] -= log_rn
            log_rn_sum += float(log_rn.sum())
        if mp.beta:
            en[start : start + b] = path_energies(values, mp.dt)
            log_w[start : start + b] -= mp.beta * en[start : start + b]
        rg[start : start + b] = gyration_radii(values)
        ee[start : start + b] = end_to_end_sq_batch(values)

    z = _reduce_log_terms(log_w, config.mode)
    if config.mode == "naive" and z.rel_std_error > NAIVE_REL_SE_LIMIT:
        raise SweepError(
            f"point {point_index} replica {replica_index}: naive partition estimate"
            f" has relative standard error {z.rel_std_error:.0%} (> "
            f"{NAIVE_REL_SE_LIMIT:.0%}); use mode = importance in this regime"
        )

    # self-normalized means under the repelled measure
    w = np.exp(log_w - log_w.max())
    w /= w.sum()
    record = RunRecord(
        config_digest=config.digest(),
        mode=config.mode,
        point_index=point_index,
        replica_index=replica_index,
        d=mp.d,
        H=mp.H,
        beta=mp.beta,
        T=mp.T,
        n=mp.n,
        seed=seed,
        samples=m,
        r_gyration=float(w @ rg),
        energy=float(w @ en),
        end_to_end_sq=float(w @ ee),
        log_Z=z.log_value,
        log_Z_se=z.log_std_error,
        lam=lam if lam else None,
        mean_log_weight=log_rn_sum / m if lam else None,
    )
    if config.mode == "tails":
        if config.tail_radius is not None:
            r_lo = r_hi = config.tail_radius
        elif mp.beta > 0:
            pred = scaling_prediction(mp.d, mp.H, mp.beta, mp.T)
            r_lo, r_hi = pred.r_lower, pred.r_upper
        else:
            r_lo = r_hi = mp.T**mp.H  # central scale of the free process
        q_lo = _reduce_log_terms(np.where(rg <= r_lo, log_w, -np.inf), "tails_below")
        q_hi = _reduce_log_terms(np.where(rg >= r_hi, log_w, -np.inf), "tails_above")
        record = replace(
            record,
            tail_r_below=r_lo,
            log_q_below=q_lo.log_value,
            log_q_below_se=q_lo.log_std_error,
            tail_r_above=r_hi,
            log_q_above=q_hi.log_value,
            log_q_above_se=q_hi.log_std_error,
        )
    return record, None


def _run_task(config, point_index, mp, replica_index):
    seed = mix64(config.master_seed, point_index, replica_index)
    if config.mode == "mcmc":
        return _mcmc_replica(config, point_index, mp, replica_index, seed)
    return _mc_replica(config, point_index, mp, replica_index, seed)


# --------------------------------------------------------------------------
# output files

_CSV_COLUMNS = [
    "point_index",
    "d",
    "H",
    "beta",
    "T",
    "n",
    "replicas",
    "median_r_gyration",
    "mean_r_gyration",
    "mean_energy",
    "mean_end_to_end_sq",
    "log_Z",
    "log_Z_se",
    "acceptance_rate",
    "r_lower",
    "r_upper",
    "nu_conjectured",
    "regime",
    "sandwich_ok",
]


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def _summary_row(
    config: SweepConfig,
    point_index: int,
    mp: ModelParams,
    records: list[RunRecord],
    pooled_rg: list[np.ndarray],
) -> list[str]:
    if config.mode == "mcmc":
        pool = np.concatenate(pooled_rg)
        median_rg, mean_rg = float(np.median(pool)), float(pool.mean())
        log_Z = log_Z_se = None
        acc = float(np.mean([r.acceptance_rate for r in records]))
    else:
        means = np.array([r.r_gyration for r in records])
        median_rg, mean_rg = float(np.median(means)), float(means.mean())
        k = len(records)
        log_Z = float(np.mean([r.log_Z for r in records]))
        log_Z_se = float(np.sqrt(sum(r.log_Z_se**2 for r in records)) / k)
        acc = None
    if mp.beta > 0:
        pred = scaling_prediction(mp.d, mp.H, mp.beta, mp.T)
        r_lower, r_upper = pred.r_lower, pred.r_upper
        nu, regime = pred.nu_conjectured, pred.regime
        sandwich_ok = r_lower <= r_upper
    else:
        r_lower = r_upper = nu = regime = sandwich_ok = None
    row = {
        "point_index": point_index,
        "d": mp.d,
        "H": mp.H,
        "beta": mp.beta,
        "T": mp.T,
        "n": mp.n,
        "replicas": len(records),
        "median_r_gyration": median_rg,
        "mean_r_gyration": mean_rg,
        "mean_energy": float(np.mean([r.energy for r in records])),
        "mean_end_to_end_sq": float(np.mean([r.end_to_end_sq for r in records])),
        "log_Z": log_Z,
        "log_Z_se": log_Z_se,
        "acceptance_rate": acc,
        "r_lower": r_lower,
        "r_upper": r_upper,
        "nu_conjectured": nu,
        "regime": regime,
        "sandwich_ok": sandwich_ok,
    }
    return [_csv_cell(row[c]) for c in _CSV_COLUMNS]


def _write_outputs(config, records, extras, points, jsonl_path, csv_path):
    header = {
        "schema": SCHEMA_VERSION,
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config_digest": config.digest(),
        "mode": config.mode,
    }
    with open(jsonl_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for rec in records:
            fh.write(rec.to_json_line() + "\n")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(_CSV_COLUMNS) + "\n")
        by_point: dict[int, list[int]] = {}
        for i, rec in enumerate(records):
            by_point.setdefault(rec.point_index, []).append(i)
        for point_index in sorted(by_point):
            idx = by_point[point_index]
            row = _summary_row(
                config,
                point_index,
                points[point_index],
                [records[i] for i in idx],
                [extras[i] for i in idx if extras[i] is not None],
            )
            fh.write(",".join(row) + "\n")


def run_sweep(
    config: SweepConfig, out_dir: str = ".", workers: int = 1
) -> tuple[str, str]:
    """Run every (grid point, replica) task and write JSONL + CSV outputs.

    Returns the two file paths.  Data lines and CSV rows are sorted by
    (point_index, replica_index) regardless of scheduling, so output bytes
    depend only on the config (the header line carries the timestamp).
    """
    if config.mode == "verify":
        raise ConfigError("mode=verify writes no sweep outputs; use the verify command")
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    points = config.grid_points()
    tasks = [
        (point_index, mp, replica_index)
        for point_index, mp in enumerate(points)
        for replica_index in range(config.replicas)
    ]

    results: dict[tuple[int, int], tuple[RunRecord, np.ndarray | None]] = {}
    failure: tuple[int, int, BaseException] | None = None
    if workers == 1:
        for point_index, mp, replica_index in tasks:
            try:
                results[point_index, replica_index] = _run_task(
                    config, point_index, mp, replica_index
                )
            except Exception as exc:
                failure = (point_index, replica_index, exc)
                break
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                (point_index, replica_index): pool.submit(
                    _run_task, config, point_index, mp, replica_index
                )
                for point_index, mp, replica_index in tasks
            }
            for key in futures:
                try:
                    results[key] = futures[key].result()
                except Exception as exc:
                    if failure is None:
                        failure = (*key, exc)
    ordered = sorted(results)
    records = [results[k][0] for k in ordered]
    extras = [results[k][1] for k in ordered]

    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, config.out)
    jsonl_path, csv_path = stem + ".jsonl", stem + ".csv"
    if failure is not None:
        _write_outputs(
            config, records, extras, points, jsonl_path + ".partial", csv_path + ".partial"
        )
        point_index, replica_index, exc = failure
        if isinstance(exc, SweepError):
            raise SweepError(str(exc)) from exc
        raise SweepError(
            f"replica failed at point {point_index} replica {replica_index}: {exc}"
        ) from exc
    _write_outputs(config, records, extras, points, jsonl_path, csv_path)
    return jsonl_path, csv_path
