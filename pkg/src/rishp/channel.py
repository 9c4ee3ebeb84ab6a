"""Geometric mmWave channel synthesis with seeded randomness.

Each link is a scaled sum of rank-one steering-vector outer products with
circularly-symmetric complex Gaussian path gains (limited-scattering
narrowband model):

    H_B  = sqrt(M R / L_B) * sum_l  xi_l * a_UPA(az_l, el_l) a_ULA(psi_l)^H
    h_Ik = sqrt(R / L_I)   * sum_l  gamma_kl * a_UPA(theta_kl, phi_l)

H_I stacks h_Ik^H as rows; the optional direct channel H_D uses the same form
with length-M ULA responses. Path gains are CN(0, 1) and all angles are drawn
i.i.d. uniform on [-pi/2, pi/2], which keeps every sin/cos argument in the
front half-space.

Reproducibility contract: every synthesizer consumes its Generator in a fixed
documented order (see the draw_* functions), so a trial stream yields
bit-identical channels for a fixed seed, and appending the direct channel does
not perturb the two-hop draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import ChannelSet, SystemConfig

__all__ = [
    "PathParams",
    "bs_ris_from_paths",
    "direct_from_paths",
    "draw_bs_ris_paths",
    "draw_direct_paths",
    "draw_ris_ue_paths",
    "dump_channel_set",
    "load_channel_set",
    "ris_ue_from_paths",
    "synth_bs_ris",
    "synth_channel_set",
    "synth_direct",
    "synth_ris_ue",
    "ula_response",
    "upa_response",
]

_HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class PathParams:
    """Gain and angles of one propagation path.

    Only the angles meaningful for the link are used: the BS-RIS link uses
    the arrival pair (UPA side) plus the azimuth departure (ULA side); the
    RIS-UE links use the departure pair; the direct link uses the departure
    azimuth only. Unused angles stay 0.
    """

    gain: complex
    aoa_azimuth: float = 0.0
    aoa_elevation: float = 0.0
    aod_azimuth: float = 0.0
    aod_elevation: float = 0.0


def ula_response(N: int, d_over_lambda: float, azimuth: float) -> np.ndarray:
    """Unit-norm uniform linear array response.

    Entry n (0-based) is (1/sqrt(N)) * exp(j 2 pi d/lambda n sin(azimuth)).
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    n = np.arange(N)
    phase = 2.0 * np.pi * d_over_lambda * n * np.sin(azimuth)
    return np.exp(1j * phase) / np.sqrt(N)


def upa_response(N: int, d_over_lambda: float, azimuth: float, elevation: float) -> np.ndarray:
    """Unit-norm uniform planar array response on a sqrt(N) x sqrt(N) grid.

    Flat index i = p*sqrt(N) + q (p-major), with entry
    (1/sqrt(N)) * exp(j 2 pi d/lambda (p sin(azimuth) sin(elevation) + q cos(elevation))).
    """
    side = math.isqrt(N)
    if side * side != N:
        raise ValueError(f"N must be a perfect square, got {N}")
    i = np.arange(N)
    p = i // side
    q = i % side
    phase = 2.0 * np.pi * d_over_lambda * (
        p * (np.sin(azimuth) * np.sin(elevation)) + q * np.cos(elevation)
    )
    return np.exp(1j * phase) / np.sqrt(N)


def _complex_gains(rng: np.random.Generator, n: int) -> np.ndarray:
    # CN(0, 1): real draws first, then imaginary, each variance 1/2.
    re = rng.standard_normal(n)
    im = rng.standard_normal(n)
    return (re + 1j * im) / np.sqrt(2.0)


def _angles(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.uniform(-_HALF_PI, _HALF_PI, n)


def draw_bs_ris_paths(cfg: SystemConfig, rng: np.random.Generator) -> list[PathParams]:
    """Draw the L_B BS-RIS paths.

    Stream order: gains (real then imaginary), arrival azimuths, arrival
    elevations, departure azimuths.
    """
    gains = _complex_gains(rng, cfg.L_B)
    aoa_az = _angles(rng, cfg.L_B)
    aoa_el = _angles(rng, cfg.L_B)
    aod_az = _angles(rng, cfg.L_B)
    return [
        PathParams(gain=complex(gains[l]), aoa_azimuth=aoa_az[l],
                   aoa_elevation=aoa_el[l], aod_azimuth=aod_az[l])
        for l in range(cfg.L_B)
    ]


def bs_ris_from_paths(cfg: SystemConfig, paths: list[PathParams]) -> np.ndarray:
    """Assemble the (R, M) RIS-BS channel from explicit path parameters."""
    H = np.zeros((cfg.R, cfg.M), dtype=complex)
    for path in paths:
        a_ris = upa_response(cfg.R, cfg.d_over_lambda, path.aoa_azimuth, path.aoa_elevation)
        a_bs = ula_response(cfg.M, cfg.d_over_lambda, path.aod_azimuth)
        H += path.gain * np.outer(a_ris, a_bs.conj())
    return np.sqrt(cfg.M * cfg.R / len(paths)) * H


def synth_bs_ris(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw one (R, M) RIS-BS channel realization."""
    return bs_ris_from_paths(cfg, draw_bs_ris_paths(cfg, rng))


def draw_ris_ue_paths(cfg: SystemConfig, rng: np.random.Generator) -> list[list[PathParams]]:
    """Draw the L_I RIS-UE paths for each of the K users.

    The departure elevations are shared across users (one per path); gains
    and departure azimuths are per-user. Stream order: shared elevations,
    then per user: gains (real, imaginary), azimuths.
    """
    aod_el = _angles(rng, cfg.L_I)
    per_user: list[list[PathParams]] = []
    for _ in range(cfg.K):
        gains = _complex_gains(rng, cfg.L_I)
        aod_az = _angles(rng, cfg.L_I)
        per_user.append([
            PathParams(gain=complex(gains[l]), aod_azimuth=aod_az[l], aod_elevation=aod_el[l])
            for l in range(cfg.L_I)
        ])
    return per_user


def ris_ue_from_paths(cfg: SystemConfig, per_user: list[list[PathParams]]) -> np.ndarray:
    """Assemble the (K, R) stacked RIS-UE channel; row k is h_Ik^H."""
    H = np.zeros((cfg.K, cfg.R), dtype=complex)
    for k, paths in enumerate(per_user):
        h = np.zeros(cfg.R, dtype=complex)
        for path in paths:
            h += path.gain * upa_response(cfg.R, cfg.d_over_lambda,
                                          path.aod_azimuth, path.aod_elevation)
        H[k] = np.sqrt(cfg.R / len(paths)) * h.conj()
    return H


def synth_ris_ue(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw one (K, R) stacked RIS-UE channel realization."""
    return ris_ue_from_paths(cfg, draw_ris_ue_paths(cfg, rng))


def draw_direct_paths(cfg: SystemConfig, rng: np.random.Generator) -> list[list[PathParams]]:
    """Draw L_I direct BS-UE paths per user. Stream order per user: gains
    (real, imaginary), then departure azimuths."""
    per_user: list[list[PathParams]] = []
    for _ in range(cfg.K):
        gains = _complex_gains(rng, cfg.L_I)
        aod_az = _angles(rng, cfg.L_I)
        per_user.append([
            PathParams(gain=complex(gains[l]), aod_azimuth=aod_az[l])
            for l in range(cfg.L_I)
        ])
    return per_user


def direct_from_paths(cfg: SystemConfig, per_user: list[list[PathParams]]) -> np.ndarray:
    """Assemble the (K, M) direct channel; row k is h_Dk^H."""
    H = np.zeros((cfg.K, cfg.M), dtype=complex)
    for k, paths in enumerate(per_user):
        h = np.zeros(cfg.M, dtype=complex)
        for path in paths:
            h += path.gain * ula_response(cfg.M, cfg.d_over_lambda, path.aod_azimuth)
        H[k] = np.sqrt(cfg.M / len(paths)) * h.conj()
    return H


def synth_direct(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw one (K, M) direct BS-UE channel realization."""
    return direct_from_paths(cfg, draw_direct_paths(cfg, rng))


def synth_channel_set(cfg: SystemConfig, rng: np.random.Generator,
                      include_direct: bool = False) -> ChannelSet:
    """Draw one full channel realization from a single stream.

    Consumption order: H_B, H_I, then H_D (only when requested), so enabling
    the direct channel never perturbs the two-hop draws.
    """
    H_B = synth_bs_ris(cfg, rng)
    H_I = synth_ris_ue(cfg, rng)
    H_D = synth_direct(cfg, rng) if include_direct else None
    return ChannelSet(H_B=H_B, H_I=H_I, H_D=H_D)


def _format_row(row: np.ndarray) -> str:
    return " ".join(f"{v.real!r},{v.imag!r}" for v in row)


def _parse_row(line: str, width: int) -> np.ndarray:
    pairs = line.split()
    if len(pairs) != width:
        raise ValueError(f"expected {width} entries per row, got {len(pairs)}")
    out = np.empty(width, dtype=complex)
    for i, pair in enumerate(pairs):
        re_s, _, im_s = pair.partition(",")
        out[i] = complex(float(re_s), float(im_s))
    return out


def dump_channel_set(channels: ChannelSet, path: str | Path) -> None:
    """Write a ChannelSet as text: header ``R M K has_direct``, then the rows
    of H_B, H_I, and (optionally) H_D as space-separated ``re,im`` pairs.

    Uses shortest round-trip float formatting, lossless at 17 significant
    digits.
    """
    lines = [f"{channels.R} {channels.M} {channels.K} {int(channels.H_D is not None)}"]
    lines.extend(_format_row(row) for row in channels.H_B)
    lines.extend(_format_row(row) for row in channels.H_I)
    if channels.H_D is not None:
        lines.extend(_format_row(row) for row in channels.H_D)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def load_channel_set(path: str | Path) -> ChannelSet:
    """Read a ChannelSet written by :func:`dump_channel_set`."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty channel file")
    header = lines[0].split()
    if len(header) != 4:
        raise ValueError(f"{path}: malformed header {lines[0]!r}")
    R, M, K, has_direct = (int(x) for x in header)
    expected = 1 + R + K + (K if has_direct else 0)
    if len(lines) != expected:
        raise ValueError(f"{path}: expected {expected} lines, got {len(lines)}")
    cursor = 1
    H_B = np.vstack([_parse_row(lines[cursor + r], M) for r in range(R)])
    cursor += R
    H_I = np.vstack([_parse_row(lines[cursor + k], R) for k in range(K)])
    cursor += K
    H_D = None
    if has_direct:
        H_D = np.vstack([_parse_row(lines[cursor + k], M) for k in range(K)])
    return ChannelSet(H_B=H_B, H_I=H_I, H_D=H_D)
