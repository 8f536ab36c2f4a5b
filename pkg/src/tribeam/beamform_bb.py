"""Short-timescale digital precoding (regularized channel inversion)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["DigitalBeamformer", "mmse_digital", "fully_digital_baseline"]


@dataclass(frozen=True)
class DigitalBeamformer:
    """Digital precoder columns per user plus the power actually radiated."""

    weights: np.ndarray
    power_used: float
    degenerate: bool = False


def mmse_digital(h_eff: np.ndarray, noise_diag: np.ndarray, f_rf: np.ndarray | None,
                 total_power: float) -> DigitalBeamformer:
    """MMSE precoder H^H (H H^H + diag(noise))^-1, scaled to the power budget.

    ``h_eff`` is the users-by-chains effective channel. The scale is chosen so
    the cascade through the analog stage radiates exactly ``total_power``
    (``f_rf`` = None means an identity analog stage). An all-zero channel
    cannot be normalized; the zero precoder is returned with the degenerate
    flag set instead of dividing by zero.
    """
    h_eff = np.asarray(h_eff)
    if not np.all(np.isfinite(h_eff)):
        raise ValueError("effective channel contains non-finite entries")
    if total_power <= 0.0:
        raise ValueError(f"total_power must be positive, got {total_power}")
    noise_diag = np.asarray(noise_diag, dtype=float)
    k = h_eff.shape[0]
    if noise_diag.shape != (k,):
        raise ValueError(f"noise_diag shape {noise_diag.shape} != ({k},)")
    gram = h_eff @ h_eff.conj().T + np.diag(noise_diag)
    unscaled = np.linalg.solve(gram, h_eff).conj().T
    cascade = unscaled if f_rf is None else np.asarray(f_rf) @ unscaled
    norm = np.linalg.norm(cascade)
    if norm < 1e-300:
        return DigitalBeamformer(weights=np.zeros_like(unscaled), power_used=0.0, degenerate=True)
    weights = np.sqrt(total_power) / norm * unscaled
    return DigitalBeamformer(weights=weights, power_used=float(total_power), degenerate=False)


def fully_digital_baseline(h_full: np.ndarray, noise_diag: np.ndarray, total_power: float) -> DigitalBeamformer:
    """MMSE precoding directly at the antennas (no analog stage)."""
    return mmse_digital(h_full, noise_diag, None, total_power)
