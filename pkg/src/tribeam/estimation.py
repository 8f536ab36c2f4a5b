"""Statistical and instantaneous channel acquisition.

Long timescale: spatial channel samples accumulated over frames form a sample
covariance whose Capon angular power spectrum locates the scattering cluster
cores (nominal angle plus amplitude per cluster).

Medium timescale: the reduced channel behind the active radiation patterns is
recovered from a short pilot burst by orthogonal matching pursuit on a
pattern-aware dictionary whose columns combine per-antenna pattern gains at a
grid bin with the array steering at the same bin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import AngularGrid, steering_vector

__all__ = [
    "CovarianceAccumulator",
    "ApsEstimate",
    "SparseEstimate",
    "capon_spectrum",
    "find_spectrum_peaks",
    "accumulate_and_aps",
    "refined_dictionary",
    "steering_dictionary",
    "pilot_observe",
    "omp_recover",
    "effective_channel",
    "pattern_free_sample",
]


class CovarianceAccumulator:
    """Running sum of outer products h h^H with a sample counter."""

    def __init__(self, n_antennas: int):
        if n_antennas < 1:
            raise ValueError(f"n_antennas must be positive, got {n_antennas}")
        self.n_antennas = n_antennas
        self._sum = np.zeros((n_antennas, n_antennas), dtype=complex)
        self.count = 0

    def add(self, sample: np.ndarray) -> None:
        sample = np.asarray(sample)
        if sample.shape != (self.n_antennas,):
            raise ValueError(f"sample shape {sample.shape} != ({self.n_antennas},)")
        self._sum += np.outer(sample, sample.conj())
        self.count += 1

    def covariance(self, normalizer: int | None = None) -> np.ndarray:
        """Hermitian PSD average; ``normalizer`` overrides the sample count."""
        if self.count == 0 and normalizer is None:
            raise ValueError("no samples accumulated")
        n = self.count if normalizer is None else int(normalizer)
        if n <= 0:
            raise ValueError(f"normalizer must be positive, got {n}")
        cov = self._sum / n
        return 0.5 * (cov + cov.conj().T)


@dataclass(frozen=True)
class ApsEstimate:
    """Capon spectrum with detected cluster cores (angles and amplitudes)."""

    spectrum: np.ndarray
    peak_bins: np.ndarray
    cluster_aods: np.ndarray
    cluster_gains: np.ndarray

    @property
    def n_clusters(self) -> int:
        return len(self.peak_bins)


def capon_spectrum(cov: np.ndarray, grid: AngularGrid, loading: float = 1e-6) -> np.ndarray:
    """Minimum-variance spectrum 1 / (e^H R^-1 e) over the grid.

    The covariance is diagonally loaded by loading * trace(R)/n before
    inversion so rank-deficient sample covariances stay usable.
    """
    cov = np.asarray(cov)
    n = cov.shape[0]
    loaded = cov + (loading * np.real(np.trace(cov)) / n) * np.eye(n)
    steer = np.exp(-1j * np.pi * np.outer(np.arange(n), np.sin(grid.angles)))
    solved = np.linalg.solve(loaded, steer)
    denom = np.real(np.sum(steer.conj() * solved, axis=0))
    return 1.0 / denom


def find_spectrum_peaks(spectrum: np.ndarray, *, threshold: float = 0.1, guard_bins: int = 3,
                        max_peaks: int | None = None) -> np.ndarray:
    """Strongest local maxima above threshold*max, separated by a bin guard.

    Grid endpoints count as peaks when they dominate their single neighbor.
    Returns bin indices sorted by descending power.
    """
    rho = np.asarray(spectrum, dtype=float)
    m = rho.size
    if m == 0:
        return np.zeros(0, dtype=int)
    left = np.r_[-np.inf, rho[:-1]]
    right = np.r_[rho[1:], -np.inf]
    local = (rho >= left) & (rho >= right) & (rho >= threshold * rho.max())
    candidates = np.flatnonzero(local)
    candidates = candidates[np.argsort(-rho[candidates], kind="stable")]
    picked = []
    for c in candidates:
        if max_peaks is not None and len(picked) >= max_peaks:
            break
        if all(abs(c - p) > guard_bins for p in picked):
            picked.append(int(c))
    return np.asarray(picked, dtype=int)


def accumulate_and_aps(samples, grid: AngularGrid, *, max_clusters: int | None = None,
                       threshold: float = 0.1, guard_bins: int = 3, loading: float = 1e-6,
                       normalizer: int | None = None) -> ApsEstimate:
    """Capon spectrum of the sample covariance plus cluster-core readout.

    ``samples`` is an iterable of pattern-free spatial channel vectors. Each
    detected peak yields a cluster core at the peak's grid angle with amplitude
    sqrt(peak power); this calibration returns the true amplitude for a single
    on-grid path in the noiseless many-sample limit.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("at least one sample is required")
    acc = CovarianceAccumulator(len(samples[0]))
    for s in samples:
        acc.add(s)
    cov = acc.covariance(normalizer=normalizer)
    rho = capon_spectrum(cov, grid, loading=loading)
    peaks = find_spectrum_peaks(rho, threshold=threshold, guard_bins=guard_bins, max_peaks=max_clusters)
    return ApsEstimate(
        spectrum=rho,
        peak_bins=peaks,
        cluster_aods=grid.angles[peaks],
        cluster_gains=np.sqrt(np.maximum(rho[peaks], 0.0)),
    )


def refined_dictionary(antenna_patterns: np.ndarray, grid: AngularGrid):
    """Pattern-aware sensing dictionary, one column per grid bin.

    Column m is the elementwise product of each antenna's gain at bin m with
    the steering vector at the bin angle, normalized to unit norm. Bins where
    every active pattern has zero gain cannot be sensed; they are left as zero
    columns and flagged in the returned boolean mask.
    """
    antenna_patterns = np.asarray(antenna_patterns, dtype=float)
    if antenna_patterns.shape[1] != grid.size:
        raise ValueError(
            f"antenna_patterns sampled on {antenna_patterns.shape[1]} bins but grid has {grid.size}"
        )
    n_antennas = antenna_patterns.shape[0]
    steer = np.exp(-1j * np.pi * np.outer(np.arange(n_antennas), np.sin(grid.angles)))
    atoms = antenna_patterns * steer
    norms = np.linalg.norm(atoms, axis=0)
    zero_mask = norms < 1e-12
    atoms = atoms.astype(complex)
    atoms[:, ~zero_mask] /= norms[~zero_mask]
    atoms[:, zero_mask] = 0.0
    return atoms, zero_mask


def steering_dictionary(grid: AngularGrid, n_antennas: int) -> np.ndarray:
    """Pattern-agnostic comparator: unit-norm steering columns only."""
    steer = np.exp(-1j * np.pi * np.outer(np.arange(n_antennas), np.sin(grid.angles)))
    return steer / np.sqrt(n_antennas)


def pilot_observe(h_rf: np.ndarray, n_pilots: int, n_chains: int, phase_bits: int,
                  noise_var: float, seed):
    """Simulate a downlink-training burst observed through random analog combining.

    Every pilot uses a fresh combining matrix whose entries are drawn uniformly
    from the quantized constant-modulus set (modulus 1/sqrt(n_antennas),
    2**phase_bits phases). Returns the stacked observation y (n_chains*n_pilots,)
    and the stacked combiner W (n_antennas, n_chains*n_pilots) with
    y = W^H h_rf + stacked combined noise.
    """
    h_rf = np.asarray(h_rf)
    n_antennas = h_rf.size
    if n_pilots < 1 or n_chains < 1:
        raise ValueError("n_pilots and n_chains must be positive")
    if phase_bits < 1:
        raise ValueError(f"phase_bits must be positive, got {phase_bits}")
    rng = np.random.default_rng(seed)
    levels = np.exp(2j * np.pi * np.arange(2 ** phase_bits) / (2 ** phase_bits)) / np.sqrt(n_antennas)
    w = levels[rng.integers(0, len(levels), (n_antennas, n_chains * n_pilots))]
    noise = rng.normal(0.0, 1.0, (n_antennas, n_pilots)) + 1j * rng.normal(0.0, 1.0, (n_antennas, n_pilots))
    noise *= np.sqrt(noise_var / 2.0)
    y = w.conj().T @ h_rf
    for i in range(n_pilots):
        cols = slice(i * n_chains, (i + 1) * n_chains)
        y[cols] += w[:, cols].conj().T @ noise[:, i]
    return y, w


@dataclass(frozen=True)
class SparseEstimate:
    """OMP output: selected bins, their coefficients and the rebuilt channel."""

    support: tuple
    coeffs: np.ndarray
    h_rf: np.ndarray
    residual_norms: tuple
    rank_deficient: bool = False

    @property
    def dominant_bin(self) -> int:
        return int(self.support[int(np.argmax(np.abs(self.coeffs)))])


def omp_recover(y: np.ndarray, combiner: np.ndarray, dictionary: np.ndarray, sparsity: int,
                residual_tol: float = 1e-3, zero_mask: np.ndarray | None = None) -> SparseEstimate:
    """Orthogonal matching pursuit on the combined dictionary Q = W^H A.

    Greedily picks the column with maximum |correlation| against the residual,
    refits all selected coefficients by least squares and stops after
    ``sparsity`` atoms or once the residual drops below residual_tol * ||y||.
    A rank-deficient refit drops the newest atom, stops early and is flagged.
    """
    y = np.asarray(y)
    q = combiner.conj().T @ dictionary
    if q.shape[1] < sparsity:
        raise ValueError(f"dictionary has {q.shape[1]} columns, fewer than sparsity {sparsity}")
    blocked = np.zeros(q.shape[1], dtype=bool) if zero_mask is None else np.asarray(zero_mask, dtype=bool).copy()
    support: list[int] = []
    coeffs = np.zeros(0, dtype=complex)
    residual = y.copy()
    norms = [float(np.linalg.norm(residual))]
    y_norm = norms[0]
    rank_deficient = False
    while len(support) < sparsity and norms[-1] > residual_tol * y_norm:
        corr = np.abs(q.conj().T @ residual)
        corr[blocked] = -1.0
        pick = int(np.argmax(corr))
        if corr[pick] < 0.0:
            break
        support.append(pick)
        blocked[pick] = True
        sub = q[:, support]
        sol, _, rank, _ = np.linalg.lstsq(sub, y, rcond=None)
        if rank < len(support):
            support.pop()
            rank_deficient = True
            break
        coeffs = sol
        residual = y - sub @ sol
        norms.append(float(np.linalg.norm(residual)))
    if not support:
        raise ValueError("OMP selected no atoms; observation may be all zeros")
    h_rf = dictionary[:, support] @ coeffs
    return SparseEstimate(
        support=tuple(support), coeffs=coeffs, h_rf=h_rf,
        residual_norms=tuple(norms), rank_deficient=rank_deficient,
    )


def effective_channel(h_rf: np.ndarray, f_rf: np.ndarray) -> np.ndarray:
    """Digital-domain channel H^H F_RF; ``h_rf`` has one user per column."""
    h_rf = np.asarray(h_rf)
    if h_rf.ndim == 1:
        h_rf = h_rf[:, None]
    return h_rf.conj().T @ f_rf


def pattern_free_sample(h_rf: np.ndarray, antenna_patterns: np.ndarray, dominant_bin: int,
                        min_gain: float = 0.2):
    """Divide the per-antenna gains at the dominant bin back out of h_rf.

    The equalizer is clipped at ``min_gain`` so antennas whose pattern barely
    illuminates that bin do not blow the sample up; they contribute a tapered
    (attenuated) entry instead. The default floor sits at roughly a third of
    the isotropic profile's gain (1/sqrt(pi)), well below any lobe's peak, so
    it only engages out on pattern skirts. Returns None (sample skipped) only
    when no antenna illuminates the bin above the floor, i.e. the sample
    carries no usable spatial information at that direction.
    """
    gains = np.asarray(antenna_patterns, dtype=float)[:, dominant_bin]
    if np.all(gains <= min_gain):
        return None
    return np.asarray(h_rf) / np.maximum(gains, min_gain)
