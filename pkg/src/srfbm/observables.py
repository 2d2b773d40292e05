"""Scalar path observables: radius of gyration and end-to-end distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fbm import Path

__all__ = [
    "Observables",
    "radius_of_gyration",
    "end_to_end_sq",
    "compute_observables",
    "gyration_radii",
    "end_to_end_sq_batch",
]


@dataclass(frozen=True)
class Observables:
    r_gyration: float
    end_to_end_sq: float
    path_mean: np.ndarray


def radius_of_gyration(path: Path) -> float:
    """Root mean square distance of the path from its time average.

    Left-endpoint sums throughout (matching the energy quadrature):
    sqrt((1/T) dt sum_k |X_k - Xbar|^2) with Xbar the same left sum,
    which collapses to plain means over the n left nodes.
    """
    pts = path.left_values
    centered = pts - pts.mean(axis=0)
    return float(np.sqrt(np.mean(np.sum(centered**2, axis=1))))


def end_to_end_sq(path: Path) -> float:
    """Squared modulus of the terminal value, |X_T|^2."""
    return float(np.sum(path.values[-1] ** 2))


def compute_observables(path: Path) -> Observables:
    pts = path.left_values
    return Observables(
        r_gyration=radius_of_gyration(path),
        end_to_end_sq=end_to_end_sq(path),
        path_mean=pts.mean(axis=0),
    )


def gyration_radii(values: np.ndarray) -> np.ndarray:
    """Radii of gyration for a batch of path values, (B, n+1, d) -> (B,)."""
    pts = values[:, :-1]
    centered = pts - pts.mean(axis=1, keepdims=True)
    return np.sqrt(np.mean(np.sum(centered**2, axis=2), axis=1))


def end_to_end_sq_batch(values: np.ndarray) -> np.ndarray:
    return np.sum(values[:, -1] ** 2, axis=1)
