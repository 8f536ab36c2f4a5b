"""Tri-timescale Monte-Carlo simulator.

Time is organized as super-frames (channel statistics coherent), frames
(instantaneous reduced channel coherent) and slots (effective digital channel
coherent). Per super-frame the radiation patterns are re-optimized from
accumulated statistics, per frame the reduced channel is re-estimated from
pilots and the analog stage takes one stochastic update, per slot the digital
stage is recomputed. Baseline variants shortcut parts of that pipeline but
always share the same drawn channels at equal seeds, so variant comparisons
are paired trial by trial.

All reported rates are ground truth: they are evaluated on the actually drawn
channels through the actually deployed beamformers, never on estimates.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .beamform_bb import fully_digital_baseline, mmse_digital
from .beamform_em import EmProblemInstance, optimize_radiation
from .beamform_rf import (SscaState, fixed_subarray_mask, random_selection,
                          selection_basis, ssca_step)
from .channel import AngularGrid, ClusterParams, assemble_full_channel, draw_realization
from .config import ExperimentConfig
from .estimation import (capon_spectrum, CovarianceAccumulator, effective_channel,
                         find_spectrum_peaks, omp_recover, pattern_free_sample,
                         pilot_observe, refined_dictionary)
from .metrics import BeamformerSet, MetricsRecord, pilot_ledger, nmse, sum_rate
from .patterns import boresight_selection, build_dictionary, conventional_pattern, selected_patterns

__all__ = [
    "TimescaleSchedule",
    "ArchitectureVariant",
    "VARIANTS",
    "SweepCell",
    "run_trial",
    "run_sweep",
    "draw_scenario",
    "variant_pilot_total",
    "mean_rate_last_super_frame",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimescaleSchedule:
    """Counts of super-frames, frames per super-frame and slots per frame."""

    super_frames: int
    frames: int
    slots: int
    seed: int = 0
    trials: int = 1

    def __post_init__(self):
        for name in ("super_frames", "frames", "slots", "trials"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @classmethod
    def from_config(cls, cfg: ExperimentConfig) -> "TimescaleSchedule":
        return cls(super_frames=cfg.super_frames, frames=cfg.frames, slots=cfg.slots,
                   seed=cfg.seed, trials=cfg.trials)


@dataclass(frozen=True)
class ArchitectureVariant:
    """Antenna type, analog architecture and update cadence of one scheme."""

    name: str
    antenna: str      # "reconfigurable" | "conventional"
    analog: str       # "dynamic" | "fixed" | "fully-digital"
    timescales: str   # "tri" | "two" | "real-time"

    def __post_init__(self):
        if self.antenna not in ("reconfigurable", "conventional"):
            raise ValueError(f"unknown antenna type {self.antenna!r}")
        if self.analog not in ("dynamic", "fixed", "fully-digital"):
            raise ValueError(f"unknown analog architecture {self.analog!r}")
        if self.timescales not in ("tri", "two", "real-time"):
            raise ValueError(f"unknown timescale mode {self.timescales!r}")
        if (self.analog == "fully-digital") != (self.timescales == "real-time"):
            raise ValueError("fully-digital variants are exactly the real-time ones")


VARIANTS = {
    "RA-DS": ArchitectureVariant("RA-DS", "reconfigurable", "dynamic", "tri"),
    "RA-FS": ArchitectureVariant("RA-FS", "reconfigurable", "fixed", "tri"),
    "RA-FD": ArchitectureVariant("RA-FD", "reconfigurable", "fully-digital", "real-time"),
    "CA-DS": ArchitectureVariant("CA-DS", "conventional", "dynamic", "two"),
    "CA-FS": ArchitectureVariant("CA-FS", "conventional", "fixed", "two"),
    "CA-FD": ArchitectureVariant("CA-FD", "conventional", "fully-digital", "real-time"),
}


def draw_scenario(cfg: ExperimentConfig, trial: int, *, angle_center: float | None = None,
                  distance: float | None = None) -> ClusterParams:
    """Random cluster geometry for one trial; optional pinned angle or distance.

    With ``angle_center`` set, cluster nominals are laid out around it with a
    small per-user and per-cluster stagger instead of being drawn uniformly.
    """
    rng = np.random.default_rng([cfg.seed, trial, 3])
    params = ClusterParams.draw(
        cfg.n_users, cfg.clusters, cfg.rays_per_cluster, rng,
        angle_spread=cfg.angle_spread_rad,
        distance_range=(cfg.distance_min_m, cfg.distance_max_m),
        exponent_range=(cfg.exponent_min, cfg.exponent_max),
        ref_loss_db=cfg.ref_loss_db, ref_distance=cfg.ref_distance_m,
    )
    updates = {}
    if angle_center is not None:
        users = np.arange(cfg.n_users) - (cfg.n_users - 1) / 2.0
        clus = np.arange(cfg.clusters) - (cfg.clusters - 1) / 2.0
        aod = angle_center + np.deg2rad(4.0) * users[:, None] + np.deg2rad(10.0) * clus[None, :]
        updates["nominal_aod"] = np.clip(aod, -np.pi / 2.0, np.pi / 2.0)
    if distance is not None:
        updates["distance"] = np.full((cfg.n_users, cfg.clusters), float(distance))
    if updates:
        params = ClusterParams(
            nominal_aod=updates.get("nominal_aod", params.nominal_aod),
            angle_spread=params.angle_spread,
            distance=updates.get("distance", params.distance),
            path_exponent=params.path_exponent,
            rays_per_cluster=params.rays_per_cluster,
            ref_loss_db=params.ref_loss_db,
            ref_distance=params.ref_distance,
        )
    return params


def _initial_digital(f_rf: np.ndarray | None, n_antennas: int, n_chains: int, n_users: int,
                     total_power: float) -> np.ndarray:
    """Identity-shaped digital stage scaled to the power budget."""
    if f_rf is None:
        w = np.eye(n_antennas, n_users, dtype=complex)
        return np.sqrt(total_power) / np.linalg.norm(w) * w
    w = np.eye(n_chains, n_users, dtype=complex)
    return np.sqrt(total_power) / np.linalg.norm(f_rf @ w) * w


def _steering_digital(cluster_aods, cluster_gains, n_antennas: int,
                      total_power: float) -> np.ndarray:
    """Per-user conjugate steering toward the strongest cluster core.

    A statistics-only digital stage that spans every antenna with
    user-separated directions, used inside the pattern-selection objective
    where no trustworthy instantaneous beamformer exists yet.
    """
    n_users = len(cluster_aods)
    w = np.zeros((n_antennas, n_users), dtype=complex)
    ant = np.arange(n_antennas)
    for k in range(n_users):
        aods = np.asarray(cluster_aods[k], dtype=float)
        gains = np.asarray(cluster_gains[k], dtype=float)
        if aods.size == 0:
            continue
        best = int(np.argmax(gains))
        w[:, k] = np.exp(1j * np.pi * ant * np.sin(aods[best])) / np.sqrt(n_antennas)
    norm = np.linalg.norm(w)
    if norm == 0.0:
        w = np.eye(n_antennas, n_users, dtype=complex)
        norm = np.linalg.norm(w)
    return np.sqrt(total_power) / norm * w


def _genie_patterns(params: ClusterParams, dictionary, cfg: ExperimentConfig) -> np.ndarray:
    """Pattern selection from true cluster cores, alternating with a matched
    fully-digital stage on the cluster-core channel for a few rounds."""
    n_t, n_users = cfg.n_antennas, params.n_users
    noise_w = cfg.noise_watts
    aods, gains = list(params.nominal_aod), list(params.gain())
    digital = _steering_digital(aods, gains, n_t, cfg.pt_watts)
    patterns = None
    ant = np.arange(n_t)
    for _ in range(3):
        instance = EmProblemInstance.from_clusters(aods, gains, dictionary, None, digital, noise_w)
        em = optimize_radiation(
            instance, penalty_start=cfg.penalty_start, penalty_growth=cfg.penalty_growth,
            penalty_cap=cfg.penalty_cap, outer_tol=cfg.outer_tol, inner_tol=cfg.inner_tol,
            max_outer=cfg.max_outer, max_inner=cfg.max_inner)
        patterns = em.antenna_patterns
        core = np.zeros((n_users, n_t), dtype=complex)
        for k in range(n_users):
            bins = dictionary.grid.nearest_bin(np.asarray(aods[k]))
            steer = np.exp(-1j * np.pi * np.outer(ant, np.sin(np.asarray(aods[k]))))
            core[k] = (patterns[:, np.asarray(bins, dtype=int)] * steer) @ np.asarray(gains[k])
        bb = fully_digital_baseline(core, np.full(n_users, noise_w), cfg.pt_watts)
        if bb.degenerate:
            break
        digital = bb.weights
    return patterns


def _estimate_clusters(acc: CovarianceAccumulator, grid: AngularGrid, cfg: ExperimentConfig,
                       normalizer: int, max_clusters: int):
    empty = np.zeros(0), np.zeros(0)
    if acc.count == 0:
        return empty
    cov = acc.covariance(normalizer=normalizer)
    if np.trace(cov).real <= 0.0:
        return empty
    rho = capon_spectrum(cov, grid, loading=cfg.capon_loading)
    peaks = find_spectrum_peaks(rho, threshold=cfg.peak_threshold,
                                guard_bins=cfg.peak_guard_bins, max_peaks=max_clusters)
    return grid.angles[peaks], np.sqrt(np.maximum(rho[peaks], 0.0))


def run_trial(schedule: TimescaleSchedule, params: ClusterParams, variant: ArchitectureVariant,
              cfg: ExperimentConfig, trial: int = 0) -> list[MetricsRecord]:
    """Simulate one trial and return one ground-truth record per slot."""
    grid = AngularGrid(cfg.grid_bins)
    n_t = cfg.n_antennas
    n_users = params.n_users
    n_rf = cfg.n_chains if cfg.n_chains > 0 else n_users
    noise_w = cfg.noise_watts
    noise_diag = np.full(n_users, noise_w)
    pt = cfg.pt_watts
    fully_digital = variant.analog == "fully-digital"

    dictionary = build_dictionary(grid, cfg.n_patterns, cfg.beamwidth_rad)
    if variant.antenna == "reconfigurable":
        antenna_patterns = selected_patterns(dictionary, boresight_selection(dictionary, n_t))
    else:
        antenna_patterns = np.tile(conventional_pattern(grid), (n_t, 1))

    if fully_digital:
        basis = mask = rf_sel = ssca = None
        f_rf = None
    else:
        basis = selection_basis(n_t, n_rf, cfg.phase_bits)
        mask = fixed_subarray_mask(n_t, n_rf, cfg.phase_bits) if variant.analog == "fixed" else None
        # both subarray flavors start from the same balanced chain split with
        # seeded random phases; only the exploration set differs afterwards
        start_mask = fixed_subarray_mask(n_t, n_rf, cfg.phase_bits)
        rf_sel = random_selection(n_t, n_rf, cfg.phase_bits, [cfg.seed, trial, 7], start_mask)
        rf_start = rf_sel.rounded
        ssca = SscaState.initial(n_t, n_rf, cfg.phase_bits, mask, start=rf_start)
        f_rf = rf_sel.f_rf
    digital = _initial_digital(f_rf, n_t, n_rf, n_users, pt)

    accumulators = [CovarianceAccumulator(n_t) for _ in range(n_users)]
    est_h = np.zeros((n_t, n_users), dtype=complex)
    have_estimate = False
    latest_nmse = float("nan")
    true_gains = params.gain()
    records: list[MetricsRecord] = []

    for t_l in range(1, schedule.super_frames + 1):
        patterns_refreshed = False
        # long timescale: re-optimize patterns from statistics
        if variant.antenna == "reconfigurable":
            if variant.timescales == "real-time":
                if t_l == 1:
                    # genie upper bound: true cluster cores with an alternating
                    # digital stage; statistics are trial-static so once suffices
                    antenna_patterns = _genie_patterns(params, dictionary, cfg)
            elif t_l >= 2:
                aods, gains = [], []
                for k in range(n_users):
                    a, g = _estimate_clusters(accumulators[k], grid, cfg,
                                              normalizer=t_l * schedule.frames,
                                              max_clusters=params.n_clusters)
                    aods.append(a)
                    gains.append(g)
                # a user without spectrum peaks contributes nothing yet; only
                # skip the refresh when nobody has usable statistics
                usable = any(a.size > 0 for a in aods)
                if usable:
                    neutral = _steering_digital(aods, gains, n_t, pt)
                    instance = EmProblemInstance.from_clusters(
                        aods, gains, dictionary, None, neutral, noise_w)
                    em = optimize_radiation(
                        instance, penalty_start=cfg.penalty_start, penalty_growth=cfg.penalty_growth,
                        penalty_cap=cfg.penalty_cap, outer_tol=cfg.outer_tol, inner_tol=cfg.inner_tol,
                        max_outer=cfg.max_outer, max_inner=cfg.max_inner)
                    antenna_patterns = em.antenna_patterns
                    patterns_refreshed = True
                else:
                    log.warning("trial %d super-frame %d: no spectrum peaks, keeping patterns", trial, t_l)

        if ssca is not None and patterns_refreshed:
            # the recursion weight indexes frames within a super-frame: restart
            # the selection recursion whenever the pattern stage has shifted
            # the channel statistics it was learning
            ssca = SscaState.initial(n_t, n_rf, cfg.phase_bits, mask, start=rf_start)

        for t_m in range(1, schedule.frames + 1):
            frame_reals = draw_realization(params, grid, [cfg.seed, trial, t_l, t_m, 11])
            true_h = _true_reduced(frame_reals, antenna_patterns)

            estimates_ran = (variant.timescales == "tri") or (variant.timescales == "two" and t_m == 1)
            if not fully_digital and estimates_ran:
                atoms, zero_mask = refined_dictionary(antenna_patterns, grid)
                per_user_nmse = []
                for k in range(n_users):
                    h_true_k = true_h[:, k]
                    sig = float(np.sum(np.abs(h_true_k) ** 2)) / n_t
                    try:
                        if sig <= 0.0:
                            raise ValueError("zero channel energy")
                        pilot_noise = sig / 10.0 ** (cfg.pilot_snr_db / 10.0)
                        y, w = pilot_observe(h_true_k, cfg.n_pilots, n_rf, cfg.phase_bits,
                                             pilot_noise, [cfg.seed, trial, t_l, t_m, 13, k])
                        est = omp_recover(y, w, atoms, sparsity=params.n_paths,
                                          residual_tol=cfg.omp_residual_tol, zero_mask=zero_mask)
                    except (ValueError, np.linalg.LinAlgError) as exc:
                        log.warning("trial %d sf %d frame %d user %d: estimation failed (%s), "
                                    "reusing previous estimate", trial, t_l, t_m, k, exc)
                        if have_estimate and sig > 0.0:
                            per_user_nmse.append(nmse(h_true_k, est_h[:, k]))
                        else:
                            per_user_nmse.append(float("nan"))
                        continue
                    est_h[:, k] = est.h_rf
                    per_user_nmse.append(nmse(h_true_k, est.h_rf))
                    if variant.timescales == "tri" and variant.antenna == "reconfigurable":
                        sample = pattern_free_sample(est.h_rf, antenna_patterns, est.dominant_bin)
                        if sample is not None:
                            accumulators[k].add(sample)
                have_estimate = True
                finite = [v for v in per_user_nmse if np.isfinite(v)]
                latest_nmse = float(np.mean(finite)) if finite else float("nan")
                ssca, rf_sel = ssca_step(ssca, basis, est_h, digital, noise_w,
                                         prox_weight=cfg.prox_weight, penalty=cfg.boolean_penalty,
                                         step_exponent=cfg.step_exponent)
                f_rf = rf_sel.f_rf
            elif fully_digital:
                latest_nmse = 0.0  # real-time baseline: slot CSI taken exact

            for t_s in range(1, schedule.slots + 1):
                slot_reals = draw_realization(params, grid, [cfg.seed, trial, t_l, t_m, t_s, 17])
                h_slot = _true_reduced(slot_reals, antenna_patterns)
                try:
                    if fully_digital:
                        bb = fully_digital_baseline(h_slot.conj().T, noise_diag, pt)
                    else:
                        h_eff = effective_channel(h_slot, f_rf)
                        bb = mmse_digital(h_eff, noise_diag, f_rf, pt)
                except np.linalg.LinAlgError as exc:
                    raise RuntimeError(
                        f"digital stage failed at trial {trial}, super-frame {t_l}, "
                        f"frame {t_m}, slot {t_s}") from exc
                digital = bb.weights
                report = sum_rate(BeamformerSet(antenna_patterns, f_rf, bb.weights),
                                  slot_reals, noise_w)
                pilots = n_users
                if variant.timescales == "real-time":
                    pilots = n_users * cfg.n_pilots + n_users
                elif t_s == 1 and estimates_ran:
                    pilots += n_users * cfg.n_pilots
                records.append(MetricsRecord(
                    super_frame=t_l, frame=t_m, slot=t_s,
                    sinr=tuple(float(x) for x in report.sinr),
                    rates=tuple(float(x) for x in report.rates),
                    sum_rate=report.sum_rate, power_used=bb.power_used,
                    pilots=int(pilots), est_nmse=latest_nmse))
    return records


def _true_reduced(realizations, antenna_patterns) -> np.ndarray:
    return np.column_stack([assemble_full_channel(r, antenna_patterns) for r in realizations])


def mean_rate_last_super_frame(records) -> float:
    """Steady-state figure: mean sum rate over the final super-frame's slots."""
    last = max(r.super_frame for r in records)
    vals = [r.sum_rate for r in records if r.super_frame == last]
    return float(np.mean(vals))


def variant_pilot_total(variant: ArchitectureVariant, schedule: TimescaleSchedule,
                        n_users: int, n_pilots: int, n_chains: int) -> int:
    """Training budget for a whole trial under the variant's update cadence."""
    if variant.timescales in ("tri", "real-time"):
        return pilot_ledger(schedule.super_frames, schedule.frames, schedule.slots,
                            n_users, n_pilots, n_chains, variant.timescales).total
    # two-timescale: statistical sampling once per super-frame, effective CSI per slot
    return (n_users * n_pilots * schedule.super_frames
            + n_users * schedule.slots * schedule.frames * schedule.super_frames)


@dataclass(frozen=True)
class SweepCell:
    """Aggregated result of (axis value, variant) over paired trials."""

    axis: str
    value: float
    variant: str
    mean_rate: float
    std_rate: float
    trial_rates: tuple
    pilot_total: int


def _axis_config(cfg: ExperimentConfig, axis: str, value):
    angle = distance = None
    if axis == "pt_dbm":
        cfg = cfg.replace(pt_dbm=float(value))
    elif axis == "grid_bins":
        cfg = cfg.replace(grid_bins=int(value))
    elif axis == "n_antennas":
        cfg = cfg.replace(n_antennas=int(value))
    elif axis == "n_users":
        cfg = cfg.replace(n_users=int(value))
    elif axis == "frames":
        total = cfg.frames * cfg.slots
        if total % int(value) != 0:
            raise ValueError(f"frames value {value} must divide total slots {total} to keep the horizon fixed")
        cfg = cfg.replace(frames=int(value), slots=total // int(value))
    elif axis == "user_angle":
        angle = float(value)
    elif axis == "user_distance":
        distance = float(value)
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")
    return cfg, angle, distance


def _sweep_trial(axis: str, value, variant_name: str, cfg: ExperimentConfig, trial: int) -> float:
    cfg_v, angle, distance = _axis_config(cfg, axis, value)
    params = draw_scenario(cfg_v, trial, angle_center=angle, distance=distance)
    schedule = TimescaleSchedule.from_config(cfg_v)
    records = run_trial(schedule, params, VARIANTS[variant_name], cfg_v, trial)
    return mean_rate_last_super_frame(records)


def run_sweep(axis: str, values, variants, cfg: ExperimentConfig,
              trials: int | None = None) -> list[SweepCell]:
    """Monte-Carlo sweep along one axis; trials are paired across variants.

    Every (value, variant, trial) cell derives its randomness from the config
    seed and the trial index only, so all variants face identical channels and
    the aggregation order never changes results. With cfg.workers > 1 the
    cells run in a process pool.
    """
    trials = cfg.trials if trials is None else trials
    tasks = [(axis, value, name, cfg, trial)
             for value in values for name in variants for trial in range(trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            flat = list(pool.map(_sweep_trial, *zip(*tasks)))
    else:
        flat = [_sweep_trial(*t) for t in tasks]
    cells = []
    i = 0
    for value in values:
        for name in variants:
            rates = flat[i:i + trials]
            i += trials
            cfg_v, _, _ = _axis_config(cfg, axis, value)
            schedule = TimescaleSchedule.from_config(cfg_v)
            n_users = cfg_v.n_users
            n_rf = cfg_v.n_chains if cfg_v.n_chains > 0 else n_users
            cells.append(SweepCell(
                axis=axis, value=float(value), variant=name,
                mean_rate=float(np.mean(rates)), std_rate=float(np.std(rates, ddof=1)) if trials > 1 else 0.0,
                trial_rates=tuple(rates),
                pilot_total=variant_pilot_total(VARIANTS[name], schedule, n_users, cfg_v.n_pilots, n_rf),
            ))
    return cells
