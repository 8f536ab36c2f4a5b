"""Experiment configuration: defaults, presets, file parsing and validation.

The config file is INI-style with sections mirroring the package modules.
Human-facing units (dBm, degrees) are converted exactly once, here; everything
downstream works in watts and radians.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "dbm_to_watts",
    "load_config",
    "apply_overrides",
    "apply_preset",
    "normalized_text",
    "PRESETS",
]


class ConfigError(ValueError):
    """Invalid configuration; message names the offending field."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class ExperimentConfig:
    # sim
    n_antennas: int = 32
    n_chains: int = 0  # 0 resolves to the user count
    n_users: int = 2
    super_frames: int = 10
    frames: int = 50
    slots: int = 200
    trials: int = 50
    pt_dbm: float = 30.0
    noise_dbm: float = -70.0
    seed: int = 1
    workers: int = 1
    # channel
    grid_bins: int = 180
    clusters: int = 2
    rays_per_cluster: int = 3
    angle_spread_deg: float = 5.0
    ref_loss_db: float = 30.0
    ref_distance_m: float = 1.0
    distance_min_m: float = 50.0
    distance_max_m: float = 100.0
    exponent_min: float = 2.5
    exponent_max: float = 3.0
    carrier_ghz: float = 28.0
    # patterns
    n_patterns: int = 7
    beamwidth_deg: float = 0.0  # 0 resolves to 180/n_patterns degrees
    # estimation
    n_pilots: int = 16
    pilot_snr_db: float = 10.0
    omp_residual_tol: float = 1e-3
    capon_loading: float = 1e-6
    peak_threshold: float = 0.1
    peak_guard_bins: int = 3
    # beamform_em
    penalty_start: float = 1e-2
    penalty_growth: float = 2.0
    penalty_cap: float = 1e2
    outer_tol: float = 1e-4
    inner_tol: float = 1e-6
    max_outer: int = 50
    max_inner: int = 500
    # beamform_rf
    phase_bits: int = 3
    prox_weight: float = 1.0
    boolean_penalty: float = 0.1
    step_exponent: float = 0.6
    # experiments
    variants: str = "RA-DS,RA-FS,RA-FD,CA-DS,CA-FS,CA-FD"
    pt_sweep_dbm: str = "20,25,30,35,40"
    m_sweep: str = "12,24,60,120"
    frames_sweep: str = "10,20,40"
    nt_sweep: str = "8,16,32"
    users_sweep: str = "1,2,3"
    angle_sweep_deg: str = "-60,-30,0,30,60"
    distance_sweep_m: str = "50,62.5,75,87.5,100"
    snr_sweep_db: str = "0,10,20"
    nmse_trials: int = 200

    # derived quantities (converted exactly once)

    @property
    def pt_watts(self) -> float:
        return dbm_to_watts(self.pt_dbm)

    @property
    def noise_watts(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    @property
    def chains(self) -> int:
        return self.n_chains if self.n_chains > 0 else self.n_users

    @property
    def angle_spread_rad(self) -> float:
        return np.deg2rad(self.angle_spread_deg)

    @property
    def beamwidth_rad(self) -> float | None:
        return None if self.beamwidth_deg <= 0.0 else float(np.deg2rad(self.beamwidth_deg))

    def replace(self, **kwargs) -> "ExperimentConfig":
        return dataclasses.replace(self, **kwargs)

    def float_list(self, attr: str) -> list[float]:
        return [float(x) for x in getattr(self, attr).split(",") if x.strip()]

    def int_list(self, attr: str) -> list[int]:
        return [int(x) for x in getattr(self, attr).split(",") if x.strip()]

    def variant_list(self) -> list[str]:
        return [v.strip() for v in self.variants.split(",") if v.strip()]


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _fraction(v):
    return 0.0 < v < 1.0


# (section, key) -> (attribute, converter, range check, requirement text)
_FIELDS = {
    ("sim", "n_antennas"): ("n_antennas", int, _positive, "positive integer"),
    ("sim", "n_chains"): ("n_chains", int, _nonneg, "0 (match users) or positive integer"),
    ("sim", "n_users"): ("n_users", int, _positive, "positive integer"),
    ("sim", "super_frames"): ("super_frames", int, _positive, "positive integer"),
    ("sim", "frames"): ("frames", int, _positive, "positive integer"),
    ("sim", "slots"): ("slots", int, _positive, "positive integer"),
    ("sim", "trials"): ("trials", int, _positive, "positive integer"),
    ("sim", "pt_dbm"): ("pt_dbm", float, lambda v: -50.0 <= v <= 80.0, "dBm in [-50, 80]"),
    ("sim", "noise_dbm"): ("noise_dbm", float, lambda v: -200.0 <= v <= 30.0, "dBm in [-200, 30]"),
    ("sim", "seed"): ("seed", int, _nonneg, "nonnegative integer"),
    ("sim", "workers"): ("workers", int, _positive, "positive integer"),
    ("channel", "grid_bins"): ("grid_bins", int, _positive, "positive integer"),
    ("channel", "clusters"): ("clusters", int, _positive, "positive integer"),
    ("channel", "rays_per_cluster"): ("rays_per_cluster", int, _positive, "positive integer"),
    ("channel", "angle_spread_deg"): ("angle_spread_deg", float, lambda v: 0.0 <= v <= 90.0, "degrees in [0, 90]"),
    ("channel", "ref_loss_db"): ("ref_loss_db", float, lambda v: 0.0 <= v <= 200.0, "dB in [0, 200]"),
    ("channel", "ref_distance_m"): ("ref_distance_m", float, _positive, "positive meters"),
    ("channel", "distance_min_m"): ("distance_min_m", float, _positive, "positive meters"),
    ("channel", "distance_max_m"): ("distance_max_m", float, _positive, "positive meters"),
    ("channel", "exponent_min"): ("exponent_min", float, _positive, "positive"),
    ("channel", "exponent_max"): ("exponent_max", float, _positive, "positive"),
    ("channel", "carrier_ghz"): ("carrier_ghz", float, _positive, "positive GHz"),
    ("patterns", "n_patterns"): ("n_patterns", int, _positive, "positive integer"),
    ("patterns", "beamwidth_deg"): ("beamwidth_deg", float, lambda v: 0.0 <= v <= 180.0, "degrees in [0, 180] (0 = auto)"),
    ("estimation", "n_pilots"): ("n_pilots", int, _positive, "positive integer"),
    ("estimation", "pilot_snr_db"): ("pilot_snr_db", float, lambda v: -40.0 <= v <= 80.0, "dB in [-40, 80]"),
    ("estimation", "omp_residual_tol"): ("omp_residual_tol", float, _positive, "positive"),
    ("estimation", "capon_loading"): ("capon_loading", float, _positive, "positive"),
    ("estimation", "peak_threshold"): ("peak_threshold", float, _fraction, "fraction in (0, 1)"),
    ("estimation", "peak_guard_bins"): ("peak_guard_bins", int, _nonneg, "nonnegative integer"),
    ("beamform_em", "penalty_start"): ("penalty_start", float, _positive, "positive"),
    ("beamform_em", "penalty_growth"): ("penalty_growth", float, lambda v: v >= 1.0, "at least 1"),
    ("beamform_em", "penalty_cap"): ("penalty_cap", float, _positive, "positive"),
    ("beamform_em", "outer_tol"): ("outer_tol", float, _positive, "positive"),
    ("beamform_em", "inner_tol"): ("inner_tol", float, _positive, "positive"),
    ("beamform_em", "max_outer"): ("max_outer", int, _positive, "positive integer"),
    ("beamform_em", "max_inner"): ("max_inner", int, _positive, "positive integer"),
    ("beamform_rf", "phase_bits"): ("phase_bits", int, lambda v: 1 <= v <= 8, "integer in [1, 8]"),
    ("beamform_rf", "prox_weight"): ("prox_weight", float, _positive, "positive"),
    ("beamform_rf", "boolean_penalty"): ("boolean_penalty", float, _nonneg, "nonnegative"),
    ("beamform_rf", "step_exponent"): ("step_exponent", float, _fraction, "fraction in (0, 1)"),
    ("experiments", "variants"): ("variants", str, None, "comma-separated variant names"),
    ("experiments", "pt_sweep_dbm"): ("pt_sweep_dbm", str, None, "comma-separated dBm values"),
    ("experiments", "m_sweep"): ("m_sweep", str, None, "comma-separated grid sizes"),
    ("experiments", "frames_sweep"): ("frames_sweep", str, None, "comma-separated frame counts"),
    ("experiments", "nt_sweep"): ("nt_sweep", str, None, "comma-separated antenna counts"),
    ("experiments", "users_sweep"): ("users_sweep", str, None, "comma-separated user counts"),
    ("experiments", "angle_sweep_deg"): ("angle_sweep_deg", str, None, "comma-separated degrees"),
    ("experiments", "distance_sweep_m"): ("distance_sweep_m", str, None, "comma-separated meters"),
    ("experiments", "snr_sweep_db"): ("snr_sweep_db", str, None, "comma-separated dB values"),
    ("experiments", "nmse_trials"): ("nmse_trials", int, _positive, "positive integer"),
}

_ATTR_TO_SECTION_KEY = {attr: (sec, key) for (sec, key), (attr, _, _, _) in _FIELDS.items()}

PRESETS = {
    "default": {},
    "desk_scale": {
        "n_antennas": 16,
        "grid_bins": 60,
        "super_frames": 3,
        "frames": 20,
        "slots": 50,
        "trials": 20,
    },
}


def _convert(section, key, raw, conv, check, need):
    try:
        value = conv(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"field [{section}] {key}: cannot parse {raw!r} as {conv.__name__}") from None
    if check is not None and not check(value):
        raise ConfigError(f"field [{section}] {key}: value {value!r} out of range, expected {need}")
    return value


def _cross_checks(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.distance_min_m > cfg.distance_max_m:
        raise ConfigError("field [channel] distance_min_m: must not exceed distance_max_m")
    if cfg.exponent_min > cfg.exponent_max:
        raise ConfigError("field [channel] exponent_min: must not exceed exponent_max")
    if cfg.n_patterns > cfg.grid_bins:
        raise ConfigError("field [patterns] n_patterns: must not exceed [channel] grid_bins")
    if cfg.chains > cfg.n_antennas:
        raise ConfigError("field [sim] n_chains: must not exceed n_antennas")
    for attr in ("pt_sweep_dbm", "angle_sweep_deg", "distance_sweep_m", "snr_sweep_db"):
        sec, key = _ATTR_TO_SECTION_KEY[attr]
        try:
            cfg.float_list(attr)
        except ValueError:
            raise ConfigError(f"field [{sec}] {key}: expected comma-separated numbers") from None
    for attr in ("m_sweep", "frames_sweep", "nt_sweep", "users_sweep"):
        sec, key = _ATTR_TO_SECTION_KEY[attr]
        try:
            values = cfg.int_list(attr)
        except ValueError:
            raise ConfigError(f"field [{sec}] {key}: expected comma-separated integers") from None
        if any(v < 1 for v in values):
            raise ConfigError(f"field [{sec}] {key}: entries must be positive")
    return cfg


def load_config(path: str | None = None, text: str | None = None,
                base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse an INI config file (or literal text) on top of ``base`` and validate."""
    cfg = base if base is not None else ExperimentConfig()
    if path is None and text is None:
        return _cross_checks(cfg)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        if text is not None:
            parser.read_string(text)
        else:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    updates = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if (section, key) not in _FIELDS:
                known = sorted({s for s, _ in _FIELDS})
                if section not in known:
                    raise ConfigError(f"unknown section [{section}]; known sections: {', '.join(known)}")
                raise ConfigError(f"unknown field [{section}] {key}")
            attr, conv, check, need = _FIELDS[(section, key)]
            updates[attr] = _convert(section, key, raw, conv, check, need)
    return _cross_checks(cfg.replace(**updates))


def apply_overrides(cfg: ExperimentConfig, overrides) -> ExperimentConfig:
    """Apply 'section.key=value' strings on top of a config."""
    updates = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        target, raw = item.split("=", 1)
        if "." not in target:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        section, key = target.split(".", 1)
        section, key = section.strip(), key.strip()
        if (section, key) not in _FIELDS:
            raise ConfigError(f"unknown field [{section}] {key} in override {item!r}")
        attr, conv, check, need = _FIELDS[(section, key)]
        updates[attr] = _convert(section, key, raw.strip(), conv, check, need)
    return _cross_checks(cfg.replace(**updates))


def apply_preset(cfg: ExperimentConfig, preset: str) -> ExperimentConfig:
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; available: {', '.join(sorted(PRESETS))}")
    return _cross_checks(cfg.replace(**PRESETS[preset]))


def normalized_text(cfg: ExperimentConfig) -> str:
    """INI rendering of the effective config plus resolved physical units."""
    sections: dict[str, list[tuple[str, str]]] = {}
    for (section, key), (attr, _, _, _) in _FIELDS.items():
        sections.setdefault(section, []).append((key, str(getattr(cfg, attr))))
    buf = io.StringIO()
    for section in ("sim", "channel", "patterns", "estimation", "beamform_em", "beamform_rf", "experiments"):
        buf.write(f"[{section}]\n")
        for key, value in sections[section]:
            buf.write(f"{key} = {value}\n")
        buf.write("\n")
    buf.write("[derived]\n")
    buf.write(f"pt_watts = {cfg.pt_watts:.12g}\n")
    buf.write(f"noise_watts = {cfg.noise_watts:.12g}\n")
    buf.write(f"n_chains_effective = {cfg.chains}\n")
    buf.write(f"angle_spread_rad = {cfg.angle_spread_rad:.12g}\n")
    bw = cfg.beamwidth_rad
    buf.write(f"beamwidth_rad = {(np.pi / cfg.n_patterns if bw is None else bw):.12g}\n")
    return buf.getvalue()


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Nested {section: {key: value}} echo used in run summaries."""
    out: dict[str, dict] = {}
    for (section, key), (attr, _, _, _) in _FIELDS.items():
        out.setdefault(section, {})[key] = getattr(cfg, attr)
    out["derived"] = {
        "pt_watts": cfg.pt_watts,
        "noise_watts": cfg.noise_watts,
        "n_chains_effective": cfg.chains,
        "angle_spread_rad": cfg.angle_spread_rad,
    }
    return out
