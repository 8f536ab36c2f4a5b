"""Radiation pattern dictionary and per-antenna pattern selection.

Each reconfigurable antenna can realize one pattern out of a finite dictionary.
Patterns are real nonnegative gain profiles sampled on the angular grid and
normalized to unit energy across the angular axis (sum of squared gains times
the bin width equals one), so swapping patterns never changes radiated power
and the sampled gain values do not depend on how finely the axis is gridded:
refining the grid refines the sampling of the same physical lobes instead of
silently attenuating them. A selection is kept both in relaxed form (rows on
the probability simplex, used by the continuous optimizer) and rounded
one-hot form (what the hardware actually switches to).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .channel import AngularGrid

__all__ = [
    "PatternDictionary",
    "EmSelection",
    "build_dictionary",
    "conventional_pattern",
    "em_gain",
    "selected_patterns",
    "boresight_selection",
    "dictionary_to_csv",
]

_ENERGY_TOL = 1e-9


@dataclass(frozen=True)
class PatternDictionary:
    """Candidate gain profiles, one per column of ``gains`` (grid.size x n_patterns)."""

    grid: AngularGrid
    gains: np.ndarray
    centers: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "centers", np.asarray(self.centers, dtype=float))
        if g.ndim != 2 or g.shape[0] != self.grid.size:
            raise ValueError(f"gains must be (grid.size, n_patterns), got {g.shape}")
        if g.shape[1] != len(self.centers):
            raise ValueError("one center per pattern required")
        if np.any(g < 0.0):
            raise ValueError("pattern gains must be nonnegative")
        energy = np.sum(g * g, axis=0) * (np.pi / self.grid.size)
        if np.any(np.abs(energy - 1.0) > _ENERGY_TOL):
            raise ValueError(f"pattern energies deviate from 1 by up to {np.max(np.abs(energy - 1.0)):.3g}")

    @property
    def n_patterns(self) -> int:
        return self.gains.shape[1]

    def pattern(self, p: int) -> np.ndarray:
        return self.gains[:, p]


def build_dictionary(grid: AngularGrid, n_patterns: int, beamwidth: float | None = None) -> PatternDictionary:
    """Raised-cosine lobes with evenly spaced centers across (-pi/2, pi/2).

    Pattern p (1-based) is centered at -pi/2 + (p - 1/2)*pi/n_patterns with
    gain max(0, cos((angle - center) * pi / (2*beamwidth))), then normalized to
    unit energy across the angular axis. Default beamwidth is pi/n_patterns.
    Requesting more patterns than grid bins is rejected: such lobes would be
    narrower than one bin and could sample to all zeros.
    """
    if n_patterns < 1:
        raise ValueError(f"n_patterns must be positive, got {n_patterns}")
    if n_patterns > grid.size:
        raise ValueError(f"n_patterns={n_patterns} exceeds grid size {grid.size}")
    if beamwidth is None:
        beamwidth = np.pi / n_patterns
    if beamwidth <= 0.0:
        raise ValueError(f"beamwidth must be positive, got {beamwidth}")
    centers = -np.pi / 2.0 + (np.arange(1, n_patterns + 1) - 0.5) * np.pi / n_patterns
    lobes = np.maximum(0.0, np.cos((grid.angles[:, None] - centers[None, :]) * np.pi / (2.0 * beamwidth)))
    energy = np.sum(lobes * lobes, axis=0) * (np.pi / grid.size)
    if np.any(energy <= 0.0):
        raise ValueError("a pattern has zero energy on this grid; widen the beamwidth or refine the grid")
    return PatternDictionary(grid=grid, gains=lobes / np.sqrt(energy), centers=centers)


def conventional_pattern(grid: AngularGrid) -> np.ndarray:
    """Isotropic unit-energy profile: 1/sqrt(pi) in every bin, any grid size."""
    return np.full(grid.size, 1.0 / np.sqrt(np.pi))


@dataclass(frozen=True)
class EmSelection:
    """Per-antenna pattern choice: ``relaxed`` rows on the simplex, ``rounded`` one-hot."""

    relaxed: np.ndarray
    rounded: np.ndarray

    def __post_init__(self):
        rel = np.asarray(self.relaxed, dtype=float)
        rnd = np.asarray(self.rounded, dtype=float)
        object.__setattr__(self, "relaxed", rel)
        object.__setattr__(self, "rounded", rnd)
        if rel.shape != rnd.shape or rel.ndim != 2:
            raise ValueError("relaxed and rounded must share a 2-D shape")
        if np.any(rel < -1e-9) or np.any(np.abs(rel.sum(axis=1) - 1.0) > 1e-6):
            raise ValueError("relaxed rows must lie on the probability simplex")
        if not np.array_equal(np.sort(rnd, axis=1)[:, :-1], np.zeros_like(rnd[:, :-1])) or np.any(rnd.max(axis=1) != 1.0):
            raise ValueError("rounded rows must be one-hot")
        if np.any(np.argmax(rnd, axis=1) != np.argmax(rel, axis=1)):
            raise ValueError("rounded selection must keep the relaxed argmax")

    @classmethod
    def from_relaxed(cls, relaxed: np.ndarray) -> "EmSelection":
        """Round each row to the argmax pattern; ties resolve to the smaller index."""
        relaxed = np.asarray(relaxed, dtype=float)
        rounded = np.zeros_like(relaxed)
        rounded[np.arange(relaxed.shape[0]), np.argmax(relaxed, axis=1)] = 1.0
        return cls(relaxed=relaxed, rounded=rounded)

    @classmethod
    def from_indices(cls, indices, n_patterns: int) -> "EmSelection":
        indices = np.asarray(indices, dtype=int)
        onehot = np.zeros((indices.size, n_patterns))
        onehot[np.arange(indices.size), indices] = 1.0
        return cls(relaxed=onehot.copy(), rounded=onehot)

    @property
    def pattern_index(self) -> np.ndarray:
        return np.argmax(self.rounded, axis=1)

    @property
    def n_antennas(self) -> int:
        return self.relaxed.shape[0]


def em_gain(selection: EmSelection, dictionary: PatternDictionary, antenna: int, grid_bin: int) -> float:
    """Gain the rounded selection gives antenna ``antenna`` at ``grid_bin``."""
    return float(dictionary.gains[grid_bin, selection.pattern_index[antenna]])


def selected_patterns(dictionary: PatternDictionary, selection: EmSelection) -> np.ndarray:
    """Per-antenna gain rows of the rounded selection, shape (n_antennas, grid.size)."""
    return dictionary.gains[:, selection.pattern_index].T.copy()


def boresight_selection(dictionary: PatternDictionary, n_antennas: int) -> EmSelection:
    """All antennas pick the pattern whose center is nearest broadside (angle 0)."""
    p = int(np.argmin(np.abs(dictionary.centers)))
    return EmSelection.from_indices(np.full(n_antennas, p), dictionary.n_patterns)


def dictionary_to_csv(dictionary: PatternDictionary, fh=None) -> str:
    """Grid angle in column one, then one gain column per pattern."""
    buf = fh if fh is not None else io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["angle_rad"] + [f"pattern_{p}" for p in range(dictionary.n_patterns)])
    for m in range(dictionary.grid.size):
        writer.writerow([f"{dictionary.grid.angles[m]:.12g}"] + [f"{g:.12g}" for g in dictionary.gains[m]])
    return buf.getvalue() if fh is None else ""
