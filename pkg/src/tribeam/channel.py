"""Clustered mmWave downlink channel with a virtual angular-domain grid.

The propagation model is a half-wavelength ULA at the transmitter. Each user
sees a small number of scattering clusters, each contributing a few rays whose
departure angles deviate from the cluster nominal by a Gaussian spread. Every
ray is tagged with the grid bin nearest to its departure angle so that
per-antenna radiation patterns (gains sampled on the same grid) can be applied
multiplicatively without any array-response recomputation.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AngularGrid",
    "ClusterParams",
    "ChannelRealization",
    "steering_vector",
    "draw_realization",
    "assemble_full_channel",
    "realizations_to_csv",
]


@dataclass(frozen=True)
class AngularGrid:
    """Uniform grid of candidate departure angles over (-pi/2, pi/2].

    Bin m (0-based) sits at -pi/2 + pi*(m+1)/size, so the grid is strictly
    increasing and its last bin sits at pi/2 (up to roundoff).
    """

    size: int
    angles: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"grid size must be positive, got {self.size}")
        ang = -np.pi / 2.0 + np.pi * np.arange(1, self.size + 1) / self.size
        object.__setattr__(self, "angles", ang)

    def nearest_bin(self, theta):
        """Index of the grid angle closest to theta (ties go to the smaller index).

        Accepts a scalar or an array and clamps inputs to [-pi/2, pi/2].
        """
        th = np.clip(np.asarray(theta, dtype=float), -np.pi / 2.0, np.pi / 2.0)
        dist = np.abs(th[..., None] - self.angles)
        idx = np.argmin(dist, axis=-1)
        return idx if idx.ndim else int(idx)


def steering_vector(theta: float, n_antennas: int) -> np.ndarray:
    """ULA steering vector at departure angle theta for d = lambda/2.

    Entry n (0-based) is exp(-1j * pi * n * sin(theta)).
    """
    if n_antennas < 1:
        raise ValueError(f"n_antennas must be positive, got {n_antennas}")
    return np.exp(-1j * np.pi * np.arange(n_antennas) * np.sin(theta))


@dataclass(frozen=True)
class ClusterParams:
    """Static scattering geometry for all users of one scenario.

    Arrays are indexed (user, cluster). ``ref_loss_db`` and ``ref_distance``
    anchor the distance-based gain model; the per-cluster linear amplitude is
    exactly 10**(-ref_loss_db/10) * (distance/ref_distance)**(-path_exponent)
    and is exposed through :meth:`gain` so it is always reproducible from the
    stored geometry.
    """

    nominal_aod: np.ndarray
    angle_spread: np.ndarray
    distance: np.ndarray
    path_exponent: np.ndarray
    rays_per_cluster: int
    ref_loss_db: float = 30.0
    ref_distance: float = 1.0

    def __post_init__(self):
        for name in ("nominal_aod", "angle_spread", "distance", "path_exponent"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        shape = self.nominal_aod.shape
        for name in ("angle_spread", "distance", "path_exponent"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} shape {getattr(self, name).shape} != nominal_aod shape {shape}")
        if self.rays_per_cluster < 1:
            raise ValueError(f"rays_per_cluster must be positive, got {self.rays_per_cluster}")
        if np.any(np.abs(self.nominal_aod) > np.pi / 2.0 + 1e-12):
            raise ValueError("nominal AoDs must lie in [-pi/2, pi/2]")
        if np.any(self.angle_spread < 0.0):
            raise ValueError("angle spreads must be nonnegative")
        if np.any(self.distance <= 0.0):
            raise ValueError("distances must be positive")

    @property
    def n_users(self) -> int:
        return self.nominal_aod.shape[0]

    @property
    def n_clusters(self) -> int:
        return self.nominal_aod.shape[1]

    @property
    def n_paths(self) -> int:
        return self.n_clusters * self.rays_per_cluster

    def gain(self) -> np.ndarray:
        """Per-cluster linear amplitude, shape (n_users, n_clusters)."""
        return 10.0 ** (-self.ref_loss_db / 10.0) * (self.distance / self.ref_distance) ** (-self.path_exponent)

    @classmethod
    def draw(cls, n_users, n_clusters, rays_per_cluster, rng, *, angle_spread=np.pi / 36.0,
             distance_range=(50.0, 100.0), exponent_range=(2.5, 3.0),
             aod_range=(-np.pi / 2.0, np.pi / 2.0), ref_loss_db=30.0, ref_distance=1.0):
        """Sample a random scenario: nominal AoDs, distances and exponents iid uniform."""
        rng = np.random.default_rng(rng)
        shape = (n_users, n_clusters)
        return cls(
            nominal_aod=rng.uniform(aod_range[0], aod_range[1], shape),
            angle_spread=np.full(shape, float(angle_spread)),
            distance=rng.uniform(distance_range[0], distance_range[1], shape),
            path_exponent=rng.uniform(exponent_range[0], exponent_range[1], shape),
            rays_per_cluster=int(rays_per_cluster),
            ref_loss_db=float(ref_loss_db),
            ref_distance=float(ref_distance),
        )


@dataclass(frozen=True)
class ChannelRealization:
    """One user's drawn rays: angles, phases, amplitudes and grid bins, all length L."""

    grid: AngularGrid
    aod: np.ndarray
    phase: np.ndarray
    gain: np.ndarray
    grid_bin: np.ndarray

    def __post_init__(self):
        n = len(self.aod)
        for name in ("phase", "gain", "grid_bin"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length {len(getattr(self, name))} != aod length {n}")

    @property
    def n_paths(self) -> int:
        return len(self.aod)

    def ray_coefficients(self) -> np.ndarray:
        """Complex per-ray coefficients gain * exp(1j*phase), shape (L,)."""
        return self.gain * np.exp(1j * self.phase)

    def spatial_channel(self, n_antennas: int) -> np.ndarray:
        """Per-ray spatial blocks stacked in path order, shape (L*n_antennas,)."""
        coef = self.ray_coefficients()
        blocks = [coef[l] * steering_vector(self.aod[l], n_antennas) for l in range(self.n_paths)]
        return np.concatenate(blocks)

    def pattern_free(self, n_antennas: int) -> np.ndarray:
        """Spatial channel with unit antenna gain everywhere, shape (n_antennas,)."""
        coef = self.ray_coefficients()
        steer = np.exp(-1j * np.pi * np.outer(np.arange(n_antennas), np.sin(self.aod)))
        return steer @ coef


def draw_realization(params: ClusterParams, grid: AngularGrid, seed) -> list[ChannelRealization]:
    """Draw one small-scale realization for every user.

    Each ray's departure angle is the cluster nominal plus a Gaussian deviation
    (std = angle_spread), clamped to [-pi/2, pi/2]; its phase is uniform on
    [0, 2pi) and its amplitude is the parent cluster's gain. Returns one
    :class:`ChannelRealization` per user. The same seed reproduces the same
    draw bit for bit.
    """
    rng = np.random.default_rng(seed)
    gains = params.gain()
    out = []
    for k in range(params.n_users):
        nominal = np.repeat(params.nominal_aod[k], params.rays_per_cluster)
        spread = np.repeat(params.angle_spread[k], params.rays_per_cluster)
        amp = np.repeat(gains[k], params.rays_per_cluster)
        aod = np.clip(nominal + rng.normal(0.0, 1.0, nominal.size) * spread, -np.pi / 2.0, np.pi / 2.0)
        phase = rng.uniform(0.0, 2.0 * np.pi, nominal.size)
        out.append(ChannelRealization(
            grid=grid, aod=aod, phase=phase, gain=amp,
            grid_bin=np.asarray(grid.nearest_bin(aod), dtype=int),
        ))
    return out


def assemble_full_channel(real: ChannelRealization, antenna_patterns: np.ndarray) -> np.ndarray:
    """Reduce one user's pattern-weighted channel to antenna dimensions.

    ``antenna_patterns`` holds each antenna's radiation gains on the grid,
    shape (n_antennas, grid.size). Entry n of the result is
    sum_l patterns[n, bin_l] * gain_l * exp(1j*phase_l) * exp(-1j*pi*n*sin(aod_l)),
    i.e. the effective channel seen through the per-antenna patterns.
    """
    antenna_patterns = np.asarray(antenna_patterns, dtype=float)
    if antenna_patterns.ndim != 2:
        raise ValueError(f"antenna_patterns must be 2-D, got shape {antenna_patterns.shape}")
    if antenna_patterns.shape[1] != real.grid.size:
        raise ValueError(
            f"antenna_patterns sampled on {antenna_patterns.shape[1]} bins but realization grid has {real.grid.size}"
        )
    n_antennas = antenna_patterns.shape[0]
    coef = real.ray_coefficients()
    steer = np.exp(-1j * np.pi * np.outer(np.arange(n_antennas), np.sin(real.aod)))
    gains = antenna_patterns[:, real.grid_bin]
    return np.einsum("nl,l,nl->n", gains, coef, steer)


def realizations_to_csv(reals, fh=None) -> str:
    """Write per-ray rows (user, path, aod, phase, gain, grid_bin) as CSV."""
    buf = fh if fh is not None else io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["user", "path", "aod_rad", "phase_rad", "gain", "grid_bin"])
    for k, real in enumerate(reals):
        for l in range(real.n_paths):
            writer.writerow([
                k, l, f"{real.aod[l]:.12g}", f"{real.phase[l]:.12g}",
                f"{real.gain[l]:.12g}", int(real.grid_bin[l]),
            ])
    return buf.getvalue() if fh is None else ""
