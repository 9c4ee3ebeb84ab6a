"""Configuration and shared domain types for the RIS-aided hybrid precoding simulator.

Everything downstream (channel synthesis, the solver, baselines, the sweep
harness) consumes the value types defined here. All types are plain frozen
dataclasses: validate once, then copy and share freely across trial workers.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Optional

import numpy as np

__all__ = [
    "AnalogStructure",
    "ChannelSet",
    "ConfigError",
    "IterationRecord",
    "IterationTrace",
    "PrecoderSolution",
    "SystemConfig",
    "config_from_file",
    "config_from_mapping",
    "noise_variance",
    "validate_config",
]


class ConfigError(ValueError):
    """A configuration invariant is violated."""


class AnalogStructure(enum.Enum):
    """How RF chains connect to the transmit antennas.

    FULLY_CONNECTED: every RF chain drives all M antennas through phase
    shifters; analog entries have modulus sqrt(1/M).
    PARTIALLY_CONNECTED: RF chain n drives a disjoint block of M/N_RF
    antennas; non-zero analog entries have modulus sqrt(N_RF/M).
    """

    FULLY_CONNECTED = "FullyConnected"
    PARTIALLY_CONNECTED = "PartiallyConnected"


_STRUCTURE_ALIASES = {
    "fullyconnected": AnalogStructure.FULLY_CONNECTED,
    "full": AnalogStructure.FULLY_CONNECTED,
    "partiallyconnected": AnalogStructure.PARTIALLY_CONNECTED,
    "pcs": AnalogStructure.PARTIALLY_CONNECTED,
}


def parse_structure(text: str) -> AnalogStructure:
    """Parse an analog-structure name ("FullyConnected"/"full", "PartiallyConnected"/"pcs")."""
    try:
        return _STRUCTURE_ALIASES[text.strip().lower()]
    except KeyError:
        raise ConfigError(
            f"unknown analog_structure {text!r}; expected FullyConnected or PartiallyConnected"
        ) from None


@dataclass(frozen=True)
class SystemConfig:
    """Scalar parameters of one simulated downlink.

    Attributes:
        M: BS antenna count (ULA).
        N_RF: RF-chain count at the BS.
        K: number of single-antenna users.
        R: RIS element count (arranged as a sqrt(R) x sqrt(R) UPA).
        L_B: propagation paths on the BS-RIS link.
        L_I: propagation paths on each RIS-UE link.
        P: total transmit power, linear watts.
        snr_db: SNR in dB; the noise variance is derived from it and never
            stored independently (see :func:`noise_variance`).
        d_over_lambda: antenna spacing over carrier wavelength.
        analog_structure: fully- or partially-connected analog precoder.
        seed: 64-bit master RNG seed.
        max_iters: iteration cap for the alternating solver.
        tol: relative objective-change convergence tolerance.
    """

    M: int = 48
    N_RF: int = 6
    K: int = 6
    R: int = 100
    L_B: int = 5
    L_I: int = 5
    P: float = 1.0
    snr_db: float = -10.0
    d_over_lambda: float = 0.5
    analog_structure: AnalogStructure = AnalogStructure.FULLY_CONNECTED
    seed: int = 0
    max_iters: int = 200
    tol: float = 1e-5

    @property
    def sigma2(self) -> float:
        """Noise variance implied by ``snr_db`` and ``K``."""
        return noise_variance(self.snr_db, self.K)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["analog_structure"] = self.analog_structure.value
        return d


def noise_variance(snr_db: float, K: int) -> float:
    """Invert SNR = 10 log10(1 / (K sigma^2)) to the noise variance sigma^2.

    Args:
        snr_db: SNR in dB.
        K: user count, >= 1.

    Returns:
        sigma^2 > 0 such that re-applying the SNR definition recovers snr_db.
    """
    if K < 1:
        raise ConfigError(f"K must be >= 1, got {K}")
    return 10.0 ** (-snr_db / 10.0) / K


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Check every SystemConfig invariant; return cfg unchanged if all hold.

    Raises:
        ConfigError: naming the violated invariant.
    """
    if not (cfg.K <= cfg.N_RF <= cfg.M):
        raise ConfigError(
            f"K <= N_RF <= M violated: K={cfg.K}, N_RF={cfg.N_RF}, M={cfg.M}"
        )
    if cfg.K < 1:
        raise ConfigError(f"K must be >= 1, got {cfg.K}")
    if cfg.R < 1:
        raise ConfigError(f"R must be >= 1, got {cfg.R}")
    if math.isqrt(cfg.R) ** 2 != cfg.R:
        raise ConfigError(f"R not a perfect square: {cfg.R} (RIS is a sqrt(R) x sqrt(R) UPA)")
    if cfg.L_B < 1 or cfg.L_I < 1:
        raise ConfigError(f"L_B and L_I must be >= 1, got L_B={cfg.L_B}, L_I={cfg.L_I}")
    if not cfg.P > 0:
        raise ConfigError(f"P must be positive, got {cfg.P}")
    if cfg.d_over_lambda <= 0:
        raise ConfigError(f"d_over_lambda must be positive, got {cfg.d_over_lambda}")
    if cfg.analog_structure is AnalogStructure.PARTIALLY_CONNECTED and cfg.M % cfg.N_RF != 0:
        raise ConfigError(
            f"PartiallyConnected requires N_RF to divide M exactly: M={cfg.M}, N_RF={cfg.N_RF}"
        )
    if cfg.max_iters < 1:
        raise ConfigError(f"max_iters must be >= 1, got {cfg.max_iters}")
    if not cfg.tol > 0:
        raise ConfigError(f"tol must be positive, got {cfg.tol}")
    return cfg


_INT_FIELDS = {"M", "N_RF", "K", "R", "L_B", "L_I", "seed", "max_iters"}
_FLOAT_FIELDS = {"P", "snr_db", "d_over_lambda", "tol"}


def config_from_mapping(values: Mapping[str, str | int | float | AnalogStructure]) -> SystemConfig:
    """Build a validated SystemConfig from a flat key-value mapping.

    Keys are exactly the SystemConfig field names; unknown keys are rejected.
    """
    kwargs: dict = {}
    for key, raw in values.items():
        if key in _INT_FIELDS:
            kwargs[key] = int(raw)
        elif key in _FLOAT_FIELDS:
            kwargs[key] = float(raw)
        elif key == "analog_structure":
            kwargs[key] = raw if isinstance(raw, AnalogStructure) else parse_structure(str(raw))
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return validate_config(SystemConfig(**kwargs))


def config_from_file(path: str | Path, overrides: Optional[Mapping[str, str]] = None) -> SystemConfig:
    """Read a flat ``key = value`` config file, apply overrides, validate.

    Lines starting with ``#`` and blank lines are ignored; ``key value``
    (whitespace-separated) is accepted as well as ``key = value``.
    """
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" in stripped:
            key, _, val = stripped.partition("=")
        else:
            parts = stripped.split(None, 1)
            if len(parts) != 2:
                raise ConfigError(f"{path}:{lineno}: cannot parse line {line!r}")
            key, val = parts
        values[key.strip()] = val.strip()
    if overrides:
        values.update(overrides)
    return config_from_mapping(values)


@dataclass(frozen=True)
class ChannelSet:
    """One channel realization.

    Attributes:
        H_B: RIS-BS channel, shape (R, M).
        H_I: stacked RIS-UE channels, shape (K, R); row k is the conjugate
            transpose of user k's RIS-UE channel vector.
        H_D: optional direct BS-UE channel, shape (K, M); only the no-RIS
            baseline consumes it.
    """

    H_B: np.ndarray
    H_I: np.ndarray
    H_D: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        R, M = self.H_B.shape
        K, R2 = self.H_I.shape
        if R2 != R:
            raise ValueError(f"H_I has {R2} columns but H_B has {R} rows")
        if self.H_D is not None and self.H_D.shape != (K, M):
            raise ValueError(f"H_D shape {self.H_D.shape} != ({K}, {M})")
        for name, mat in (("H_B", self.H_B), ("H_I", self.H_I), ("H_D", self.H_D)):
            if mat is not None and not np.all(np.isfinite(mat)):
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def R(self) -> int:
        return self.H_B.shape[0]

    @property
    def M(self) -> int:
        return self.H_B.shape[1]

    @property
    def K(self) -> int:
        return self.H_I.shape[0]


@dataclass(frozen=True)
class PrecoderSolution:
    """Converged precoders and RIS phases for one channel realization.

    Attributes:
        F_RF: analog precoder, shape (M, N_RF). Identity for fully-digital
            baseline schemes.
        F_BB: normalized digital precoder, shape (N_RF, K); the transmitted
            precoder is F_RF @ F_BB with squared Frobenius norm K.
        F_BB_bar: pre-normalization digital precoder (zeta * F_BB).
        Psi: RIS reflection coefficients, length R.
        zeta: positive receive-side gain, ||F_RF @ F_BB_bar||_F / sqrt(K).
    """

    F_RF: np.ndarray
    F_BB: np.ndarray
    F_BB_bar: np.ndarray
    Psi: np.ndarray
    zeta: float


@dataclass(frozen=True)
class IterationRecord:
    """Objective and step bookkeeping for one alternating iteration.

    ``mse_digital``/``mse_analog``/``mse_ris`` are the modified-MSE values
    after the digital, analog, and RIS sub-steps. A skipped sub-step repeats
    the preceding value and records ``None`` for its step size.
    """

    iteration: int
    mse_digital: float
    mse_analog: float
    mse_ris: float
    alpha_analog: Optional[float]
    alpha_ris: Optional[float]
    max_constraint_residual: float


@dataclass
class IterationTrace:
    """Per-iteration history of one solver run. Sub-step objective values
    are non-increasing along the flattened sequence."""

    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[IterationRecord]:
        return iter(self.records)

    def final_mse(self) -> float:
        if not self.records:
            raise ValueError("empty trace")
        return self.records[-1].mse_ris

    def objective_sequence(self) -> list[float]:
        """All sub-step objective values, flattened in execution order."""
        seq: list[float] = []
        for rec in self.records:
            seq.extend((rec.mse_digital, rec.mse_analog, rec.mse_ris))
        return seq

    def max_increase(self) -> float:
        """Largest positive jump between consecutive sub-step objectives (0 if none)."""
        seq = self.objective_sequence()
        if len(seq) < 2:
            return 0.0
        return max(0.0, max(b - a for a, b in zip(seq, seq[1:])))

    def max_constraint_residual(self) -> float:
        return max((rec.max_constraint_residual for rec in self.records), default=0.0)

    def to_jsonl(self) -> str:
        """Serialize one record per line for convergence plotting."""
        return "".join(json.dumps(asdict(rec), sort_keys=True) + "\n" for rec in self.records)

    def write_jsonl(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8", newline="\n")
