"""Shared oracles for the test suite.

The reference constructions here are deliberately naive: explicit Python
loops, dense block matrices and per-entry selector matrices. They recompute
what the library computes with vectorized shortcuts, so agreement between the
two is evidence the shortcuts are right, not a tautology.
"""

import numpy as np
import pytest

from tribeam.channel import AngularGrid, ChannelRealization, steering_vector


def rng_for(*parts):
    """Deterministic generator from a structured seed sequence."""
    return np.random.default_rng(list(parts))


def random_realization(rng, grid: AngularGrid, n_paths: int, amp_scale: float = 1.0) -> ChannelRealization:
    """Random rays with uniform angles, uniform phases and O(amp_scale) gains."""
    aod = rng.uniform(-np.pi / 2.0, np.pi / 2.0, n_paths)
    return ChannelRealization(
        grid=grid,
        aod=aod,
        phase=rng.uniform(0.0, 2.0 * np.pi, n_paths),
        gain=amp_scale * rng.uniform(0.1, 1.0, n_paths),
        grid_bin=np.asarray(grid.nearest_bin(aod), dtype=int),
    )


def random_patterns(rng, n_antennas: int, grid_size: int) -> np.ndarray:
    """Arbitrary nonnegative per-antenna gain profiles (no energy constraint)."""
    return rng.uniform(0.0, 2.0, size=(n_antennas, grid_size))


def block_reduced_channel(real: ChannelRealization, antenna_patterns: np.ndarray) -> np.ndarray:
    """Reduced channel via the full block construction, one brick at a time.

    Builds the tall pattern matrix (grid.size * n_antennas x n_antennas) whose
    column n carries antenna n's gain profile in its own row block, then for
    every path forms the explicit bin-selector matrix, multiplies the two into
    the per-path diagonal gain matrix and applies it to that path's weighted
    steering vector. No einsum, no fancy indexing.
    """
    patterns = np.asarray(antenna_patterns, dtype=float)
    n_antennas, m = patterns.shape
    f_em = np.zeros((m * n_antennas, n_antennas))
    for n in range(n_antennas):
        for b in range(m):
            f_em[n * m + b, n] = patterns[n, b]
    coef = real.ray_coefficients()
    h = np.zeros(n_antennas, dtype=complex)
    for l in range(real.n_paths):
        sel = np.zeros((m * n_antennas, n_antennas))
        for n in range(n_antennas):
            sel[n * m + int(real.grid_bin[l]), n] = 1.0
        gain_diag = sel.T @ f_em
        h = h + coef[l] * (gain_diag @ steering_vector(real.aod[l], n_antennas))
    return h


def literal_link_matrix(h_users, f_rf, f_bb) -> np.ndarray:
    """V[k, j] = h_k^H (analog @ digital) column j, by per-entry loops."""
    cascade = np.asarray(f_bb) if f_rf is None else np.asarray(f_rf) @ np.asarray(f_bb)
    k_users = len(h_users)
    n_streams = cascade.shape[1]
    v = np.zeros((k_users, n_streams), dtype=complex)
    for k in range(k_users):
        for j in range(n_streams):
            acc = 0.0 + 0.0j
            for n in range(cascade.shape[0]):
                acc += np.conj(h_users[k][n]) * cascade[n, j]
            v[k, j] = acc
    return v


def literal_sinr_rates(h_users, f_rf, f_bb, noise_var):
    """Per-user SINRs and rates from the literal link matrix."""
    v = literal_link_matrix(h_users, f_rf, f_bb)
    noise = np.broadcast_to(np.asarray(noise_var, dtype=float), (len(h_users),))
    sinr = np.zeros(len(h_users))
    for k in range(len(h_users)):
        sig = abs(v[k, k]) ** 2
        interf = sum(abs(v[k, j]) ** 2 for j in range(v.shape[1]) if j != k)
        sinr[k] = sig / (interf + noise[k])
    return sinr, np.log2(1.0 + sinr)


@pytest.fixture
def grid60():
    return AngularGrid(60)


@pytest.fixture
def grid16():
    return AngularGrid(16)
