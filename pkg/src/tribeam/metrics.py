"""Ground-truth performance accounting: rates, pilot budgets, estimation error."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .channel import assemble_full_channel

__all__ = [
    "BeamformerSet",
    "RateReport",
    "MetricsRecord",
    "PilotLedger",
    "sum_rate",
    "pilot_ledger",
    "nmse",
    "records_to_csv",
    "RECORD_COLUMNS",
]


@dataclass(frozen=True)
class BeamformerSet:
    """Everything the transmitter applies: per-antenna patterns, analog and digital stages.

    ``analog`` = None means a fully digital transmitter (``digital`` acts on
    antennas directly).
    """

    antenna_patterns: np.ndarray
    analog: np.ndarray | None
    digital: np.ndarray


@dataclass(frozen=True)
class RateReport:
    sinr: np.ndarray
    rates: np.ndarray
    sum_rate: float


def sum_rate(beamformers: BeamformerSet, realizations, noise_var) -> RateReport:
    """Per-user SINR and rates against the true drawn channels.

    SINR never uses estimates: the channel is reassembled from the realization
    and the patterns actually deployed, exactly as the receiver would see it.
    """
    cascade = beamformers.digital if beamformers.analog is None else beamformers.analog @ beamformers.digital
    n_users = len(realizations)
    noise = np.broadcast_to(np.asarray(noise_var, dtype=float), (n_users,))
    v = np.empty((n_users, cascade.shape[1]), dtype=complex)
    for k, real in enumerate(realizations):
        h = assemble_full_channel(real, beamformers.antenna_patterns)
        v[k] = h.conj() @ cascade
    sig = np.abs(np.diag(v)) ** 2
    interf = np.sum(np.abs(v) ** 2, axis=1) - sig
    sinr = sig / (interf + noise)
    rates = np.log2(1.0 + sinr)
    return RateReport(sinr=sinr, rates=rates, sum_rate=float(np.sum(rates)))


@dataclass(frozen=True)
class PilotLedger:
    """Total training symbols for one trial plus the per-slot-cost variant.

    ``total`` follows the closed-form budget that counts one effective-channel
    symbol per user per slot; ``chain_scaled_total`` instead charges
    n_chains per user-slot, which differs whenever n_chains != n_users
    (``chains_match_users`` flags that case).
    """

    total: int
    chain_scaled_total: int
    chains_match_users: bool


def pilot_ledger(super_frames: int, frames: int, slots: int, n_users: int, n_pilots: int,
                 n_chains: int, mode: str) -> PilotLedger:
    """Closed-form pilot budgets.

    mode "tri": statistical sampling once per frame plus per-slot effective
    CSI, (n_users*n_pilots + n_users*slots) * frames * super_frames.
    mode "real-time": full re-estimation every slot,
    (n_users*n_pilots + n_users) * slots * frames * super_frames.
    """
    for name, val in (("super_frames", super_frames), ("frames", frames), ("slots", slots),
                      ("n_users", n_users), ("n_pilots", n_pilots), ("n_chains", n_chains)):
        if val < 1:
            raise ValueError(f"{name} must be positive, got {val}")
    if mode == "tri":
        total = (n_users * n_pilots + n_users * slots) * frames * super_frames
        chain_scaled = (n_users * n_pilots + n_chains * slots) * frames * super_frames
    elif mode == "real-time":
        total = (n_users * n_pilots + n_users) * slots * frames * super_frames
        chain_scaled = (n_users * n_pilots + n_chains) * slots * frames * super_frames
    else:
        raise ValueError(f"unknown ledger mode {mode!r}; expected 'tri' or 'real-time'")
    return PilotLedger(total=int(total), chain_scaled_total=int(chain_scaled),
                       chains_match_users=(n_chains == n_users))


def nmse(h_true: np.ndarray, h_est: np.ndarray) -> float:
    """Normalized squared error ||est - true||^2 / ||true||^2."""
    h_true = np.asarray(h_true)
    denom = float(np.sum(np.abs(h_true) ** 2))
    if denom == 0.0:
        raise ValueError("reference channel has zero norm")
    return float(np.sum(np.abs(np.asarray(h_est) - h_true) ** 2)) / denom


@dataclass(frozen=True)
class MetricsRecord:
    """One slot's ground-truth outcome."""

    super_frame: int
    frame: int
    slot: int
    sinr: tuple
    rates: tuple
    sum_rate: float
    power_used: float
    pilots: int
    est_nmse: float


RECORD_COLUMNS = ("super_frame", "frame", "slot", "sum_rate", "power_used", "pilots", "est_nmse")


def records_to_csv(records, fh=None, n_users: int | None = None) -> str:
    """Fixed-order CSV: slot coordinates, aggregates, then per-user SINR and rate."""
    records = list(records)
    if n_users is None:
        n_users = len(records[0].sinr) if records else 0
    buf = fh if fh is not None else io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(RECORD_COLUMNS) + [f"sinr_{k}" for k in range(n_users)] + [f"rate_{k}" for k in range(n_users)]
    writer.writerow(header)
    for r in records:
        row = [r.super_frame, r.frame, r.slot, f"{r.sum_rate:.12g}", f"{r.power_used:.12g}",
               r.pilots, f"{r.est_nmse:.12g}"]
        row += [f"{x:.12g}" for x in r.sinr] + [f"{x:.12g}" for x in r.rates]
        writer.writerow(row)
    return buf.getvalue() if fh is None else ""
