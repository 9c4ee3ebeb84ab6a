"""Comparison schemes for the joint hybrid-precoding / RIS design.

Four baselines bracket the proposed scheme:

  * upper-bound: fully-digital BS precoding with the RIS coefficients relaxed
    from the constant-modulus set to the unit l2 ball of equal total budget.
    (The relaxation keeps the diagonal RIS structure; the ball reading of a
    "fully digital" surface is an interpretation and is pinned here.)
  * fd-opt-ris:  fully-digital BS precoding, constant-modulus RIS coefficients
    optimized by the same gradient-projection step as the main solver.
  * hp-rnd-ris:  hybrid BS precoding with the RIS frozen at random feasible
    phases.
  * hp-no-ris:   hybrid BS precoding over the direct BS-UE channel, no RIS.

All runners emit the same (PrecoderSolution, IterationTrace) schema as the
main solver; fully-digital schemes report an identity analog precoder.
"""

from __future__ import annotations

import enum
from dataclasses import replace
from typing import Optional

import numpy as np

from .model import (
    AnalogStructure,
    ChannelSet,
    IterationTrace,
    PrecoderSolution,
    SystemConfig,
    validate_config,
)
from .solver import (
    SolverState,
    alternating_descent,
    fd_precoder,
    finalize_solution,
    init_analog_precoder,
    init_ris_phases,
    run_algorithm1,
)

__all__ = [
    "ALL_SCHEMES",
    "BASELINE_SCHEMES",
    "Scheme",
    "fd_precoder",
    "run_fd_opt_ris",
    "run_no_ris",
    "run_rnd_ris",
    "run_scheme",
    "run_upper_bound",
]


class Scheme(enum.Enum):
    """Selectable transmit designs: the proposed scheme in both analog
    structures plus the four comparison baselines."""

    PROPOSED_FULL = "proposed-full"
    PROPOSED_PCS = "proposed-pcs"
    UP_BOUND = "upper-bound"
    FD_OPT_RIS = "fd-opt-ris"
    RND_RIS = "hp-rnd-ris"
    NO_RIS = "hp-no-ris"

    @classmethod
    def from_name(cls, name: str) -> "Scheme":
        for scheme in cls:
            if scheme.value == name:
                return scheme
        raise ValueError(
            f"unknown scheme {name!r}; expected one of "
            + ", ".join(s.value for s in cls)
        )


BASELINE_SCHEMES = (Scheme.UP_BOUND, Scheme.FD_OPT_RIS, Scheme.RND_RIS, Scheme.NO_RIS)
ALL_SCHEMES = tuple(Scheme)


def _fd_state(channels: ChannelSet, cfg: SystemConfig, rng: np.random.Generator,
              psi0: Optional[np.ndarray]) -> SolverState:
    psi = init_ris_phases(cfg.R, rng) if psi0 is None else np.asarray(psi0, dtype=complex)
    F_RF = np.eye(cfg.M, dtype=complex)
    return SolverState.from_channels(channels.H_I, channels.H_B, psi, F_RF,
                                     cfg.P, cfg.K, cfg.sigma2)


def run_fd_opt_ris(
    channels: ChannelSet,
    cfg: SystemConfig,
    rng: Optional[np.random.Generator] = None,
    psi0: Optional[np.ndarray] = None,
) -> tuple[PrecoderSolution, IterationTrace]:
    """Fully-digital precoding alternated with constant-modulus RIS steps.

    ``psi0`` overrides the random-phase RIS initialization (used for
    per-realization relaxation-chain comparisons).
    """
    validate_config(cfg)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    state = _fd_state(channels, cfg, rng, psi0)
    trace = alternating_descent(state, cfg.max_iters, cfg.tol,
                                analog=None, ris_mode="modulus")
    return finalize_solution(state), trace


def run_upper_bound(
    channels: ChannelSet,
    cfg: SystemConfig,
    rng: Optional[np.random.Generator] = None,
    psi0: Optional[np.ndarray] = None,
) -> tuple[PrecoderSolution, IterationTrace]:
    """Fully-digital precoding with ball-relaxed RIS coefficients.

    The per-element modulus constraint is replaced by ||Psi||_2 <= 1 (the
    same total reflection budget); the RIS step projects onto that ball.
    """
    validate_config(cfg)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    state = _fd_state(channels, cfg, rng, psi0)
    trace = alternating_descent(state, cfg.max_iters, cfg.tol,
                                analog=None, ris_mode="ball")
    return finalize_solution(state), trace


def run_rnd_ris(
    channels: ChannelSet,
    cfg: SystemConfig,
    rng: Optional[np.random.Generator] = None,
) -> tuple[PrecoderSolution, IterationTrace]:
    """Hybrid precoding with the RIS frozen at random feasible phases."""
    validate_config(cfg)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    F_RF = init_analog_precoder(cfg, rng)
    psi = init_ris_phases(cfg.R, rng)
    state = SolverState.from_channels(channels.H_I, channels.H_B, psi, F_RF,
                                      cfg.P, cfg.K, cfg.sigma2)
    trace = alternating_descent(state, cfg.max_iters, cfg.tol,
                                analog=cfg.analog_structure, ris_mode=None)
    return finalize_solution(state), trace


def run_no_ris(
    channels: ChannelSet,
    cfg: SystemConfig,
    rng: Optional[np.random.Generator] = None,
) -> tuple[PrecoderSolution, IterationTrace]:
    """Hybrid precoding over the direct BS-UE channel, RIS absent.

    The returned Psi is the (unused) random initialization, kept only so all
    schemes share one solution schema.
    """
    validate_config(cfg)
    if channels.H_D is None:
        raise ValueError("hp-no-ris requires a ChannelSet with the direct channel H_D")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    F_RF = init_analog_precoder(cfg, rng)
    psi = init_ris_phases(cfg.R, rng)
    state = SolverState.from_effective(channels.H_D, F_RF, cfg.P, cfg.K,
                                       cfg.sigma2, psi=psi)
    trace = alternating_descent(state, cfg.max_iters, cfg.tol,
                                analog=cfg.analog_structure, ris_mode=None)
    return finalize_solution(state), trace


def run_scheme(
    scheme: Scheme,
    channels: ChannelSet,
    cfg: SystemConfig,
    rng: Optional[np.random.Generator] = None,
) -> tuple[PrecoderSolution, IterationTrace]:
    """Dispatch one scheme on one channel realization.

    The proposed variants force the corresponding analog structure; the
    hybrid baselines inherit cfg.analog_structure.
    """
    if scheme is Scheme.PROPOSED_FULL:
        return run_algorithm1(
            channels, replace(cfg, analog_structure=AnalogStructure.FULLY_CONNECTED), rng)
    if scheme is Scheme.PROPOSED_PCS:
        return run_algorithm1(
            channels, replace(cfg, analog_structure=AnalogStructure.PARTIALLY_CONNECTED), rng)
    if scheme is Scheme.UP_BOUND:
        return run_upper_bound(channels, cfg, rng)
    if scheme is Scheme.FD_OPT_RIS:
        return run_fd_opt_ris(channels, cfg, rng)
    if scheme is Scheme.RND_RIS:
        return run_rnd_ris(channels, cfg, rng)
    if scheme is Scheme.NO_RIS:
        return run_no_ris(channels, cfg, rng)
    raise ValueError(f"unhandled scheme {scheme}")
