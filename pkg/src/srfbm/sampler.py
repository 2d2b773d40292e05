"""Metropolis sampling of the repulsion-tilted path measure.

The chain lives on the driving noise xi (i.i.d. standard normal under
the reference law) and uses the preconditioned Crank-Nicolson proposal
sqrt(1-s^2) xi + s eta, which preserves the Gaussian reference exactly
for any step size s in (0, 1].  The Metropolis ratio therefore reduces
to the energy factor alone: accept with probability min(1, exp(-beta
(E' - E))).  Step size adapts multiplicatively toward a target
acceptance rate during burn-in only and is frozen afterwards, keeping
the measured chain honestly Markov.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import energy_fast
from .fbm import Path, get_coloring, noise_to_path
from .observables import end_to_end_sq, radius_of_gyration
from .params import ModelParams
from .seeds import rng_for

__all__ = [
    "ChainConfig",
    "ChainState",
    "ChainSample",
    "pcn_propose",
    "pcn_step",
    "run_chain",
    "initial_state",
]

# Multiplicative adaptation gain; equilibrates the acceptance rate over a
# few hundred burn-in steps.
ADAPT_GAIN = 0.05

# Adaptation driving the step below this is treated as a misconfigured
# chain (target unreachable), not a numerical matter.
MIN_PCN_STEP = 1e-4

# Cached energy is re-derived from scratch at this cadence.
AUDIT_INTERVAL = 1000


class ChainConfigError(ValueError):
    """Invalid chain configuration, or adaptation escaping its bounds."""


@dataclass(frozen=True)
class ChainConfig:
    model: ModelParams
    total_samples: int
    burn_in: int = 1000
    thin: int = 0  # 0 means the n/8 default
    pcn_step: float = 0.25
    adapt_target: float = 0.3
    seed: int = 0
    backend: str = "auto"

    def __post_init__(self):
        if not 0.0 < self.pcn_step <= 1.0:
            raise ChainConfigError(f"pcn_step must lie in (0,1], got {self.pcn_step}")
        if self.burn_in < 1 or self.total_samples < 1:
            raise ChainConfigError("burn_in and total_samples must be >= 1")
        if self.thin < 0:
            raise ChainConfigError(f"thin must be >= 1 (or 0 for default), got {self.thin}")
        if not 0.0 < self.adapt_target < 1.0:
            raise ChainConfigError(f"adapt_target must lie in (0,1), got {self.adapt_target}")

    @property
    def effective_thin(self) -> int:
        return self.thin if self.thin > 0 else max(1, self.model.n // 8)

    def digest(self) -> str:
        m = self.model
        key = (
            m.d, m.H, m.beta, m.T, m.n,
            self.total_samples, self.burn_in, self.effective_thin,
            self.pcn_step, self.adapt_target, self.seed, self.backend,
        )
        return hashlib.sha256(repr(key).encode()).hexdigest()[:16]


@dataclass
class ChainState:
    """Current position plus caches; path and energy always match xi."""

    xi: np.ndarray
    path: Path
    energy: float
    step_count: int = 0
    accept_count: int = 0


@dataclass(frozen=True)
class ChainSample:
    r_gyration: float
    energy: float
    end_to_end_sq: float
    acceptance_rate: float
    pcn_step: float
    step_index: int
    seed: int
    config_digest: str


def pcn_propose(xi: np.ndarray, s: float, rng: np.random.Generator) -> np.ndarray:
    """Autoregressive Gaussian proposal sqrt(1-s^2) xi + s eta."""
    if not 0.0 < s <= 1.0:
        raise ValueError(f"step size must lie in (0,1], got {s}")
    return math.sqrt(1.0 - s * s) * xi + s * rng.standard_normal(xi.shape)


def initial_state(config: ChainConfig, rng: np.random.Generator) -> ChainState:
    model = config.model
    coloring = get_coloring(model.H, model.n, model.dt, config.backend)
    xi = rng.standard_normal((coloring.noise_dim, model.d))
    path = noise_to_path(xi, model.model, model.grid, config.backend)
    return ChainState(xi=xi, path=path, energy=energy_fast(path))


def _try_move(state: ChainState, config: ChainConfig, s: float, rng: np.random.Generator) -> bool:
    """One accept/reject update of state in place; returns acceptance."""
    model = config.model
    xi_new = pcn_propose(state.xi, s, rng)
    path_new = noise_to_path(xi_new, model.model, model.grid, config.backend)
    energy_new = energy_fast(path_new)
    log_ratio = -model.beta * (energy_new - state.energy)
    accept = log_ratio >= 0.0 or rng.random() < math.exp(log_ratio)
    state.step_count += 1
    if accept:
        state.xi = xi_new
        state.path = path_new
        state.energy = energy_new
        state.accept_count += 1
    return accept


def pcn_step(state: ChainState, config: ChainConfig, rng: np.random.Generator) -> ChainState:
    """One Metropolis update at the config's (frozen) step size."""
    _try_move(state, config, config.pcn_step, rng)
    return state


def run_chain(config: ChainConfig):
    """Burn in with step adaptation, freeze, then record thinned samples.

    Returns a list of total_samples ChainSample records.  Fully
    deterministic given config (one seeded generator drives everything).
    """
    model = config.model
    rng = rng_for(config.seed)
    state = initial_state(config, rng)
    digest = config.digest()
    s = config.pcn_step

    for _ in range(config.burn_in):
        accepted = _try_move(state, config, s, rng)
        s = min(1.0, s * math.exp(ADAPT_GAIN * ((1.0 if accepted else 0.0) - config.adapt_target)))
        if s <= MIN_PCN_STEP:
            raise ChainConfigError(
                f"step adaptation collapsed to {s:.2e}; the target acceptance "
                f"rate {config.adapt_target} appears unreachable"
            )
        _maybe_audit(state)

    frozen = replace(config, pcn_step=s)
    measured_accepts = 0
    measured_steps = 0
    samples = []
    thin = config.effective_thin
    for k in range(config.total_samples):
        for _ in range(thin):
            measured_accepts += _try_move(state, frozen, s, rng)
            measured_steps += 1
            _maybe_audit(state)
        samples.append(
            ChainSample(
                r_gyration=radius_of_gyration(state.path),
                energy=state.energy,
                end_to_end_sq=end_to_end_sq(state.path),
                acceptance_rate=measured_accepts / measured_steps,
                pcn_step=s,
                step_index=state.step_count,
                seed=config.seed,
                config_digest=digest,
            )
        )
    return samples


def _maybe_audit(state: ChainState) -> None:
    if state.step_count % AUDIT_INTERVAL != 0:
        return
    fresh = energy_fast(state.path)
    scale = max(abs(fresh), 1e-300)
    if abs(fresh - state.energy) / scale > 1e-9:
        raise RuntimeError(
            f"energy cache drifted: cached {state.energy!r} vs recomputed {fresh!r}"
        )
