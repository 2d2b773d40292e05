"""Bundled model parameters shared by the estimators, sampler, and CLI."""

from __future__ import annotations

from dataclasses import dataclass

from .fbm import HurstModel, TimeGrid

__all__ = ["ModelParams"]


@dataclass(frozen=True)
class ModelParams:
    """One tilted-measure instance: dimension, Hurst index, repulsion
    strength beta, horizon T, and grid resolution n."""

    d: int
    H: float
    beta: float
    T: float
    n: int

    def __post_init__(self):
        # delegate range checks to the component types
        _ = self.model, self.grid
        if self.beta < 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")

    @property
    def model(self) -> HurstModel:
        return HurstModel(H=self.H, d=self.d)

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(T=self.T, n=self.n)

    @property
    def dt(self) -> float:
        return self.grid.dt
