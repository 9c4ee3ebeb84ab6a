"""Alternating minimization of the modified MSE with gradient-projection steps.

The transmit design problem couples a digital precoder, a constant-modulus
analog precoder, and constant-modulus RIS reflection coefficients. Each outer
iteration performs three block updates on the modified-MSE objective

    mse_bar(H, F) = P - (2P/K) Re tr(H F) + (P/K) ||H F||_F^2 + s2 ||F||_F^2

with F = F_RF @ F_BB_bar and H the effective K x M downlink channel:

  1. digital: exact minimizer over F_BB_bar via a Hermitian positive-definite
     solve (never an explicit inverse);
  2. analog:  one gradient step followed by entry-wise projection back onto
     the constant-modulus set, with the step size fixed at the reciprocal of
     a Lipschitz-type majorization constant so the objective cannot increase;
  3. RIS:     the same gradient-projection construction on the diagonal
     reflection coefficients.

Because each block update minimizes (or majorize-minimizes) the shared
objective, the per-sub-step objective sequence is non-increasing; the driver
enforces this at runtime and aborts with diagnostics on violations beyond
DESCENT_TOL, which guards against gradient-sign mistakes.

Gradients are taken with respect to conjugate coordinates, so for a
perturbation D the objective changes by 2 Re tr(G^H D) to first order.

Per-iteration cost is dominated by the digital solve and analog gradient,
O(M^2 (K + N_RF)), plus O(K R (M + R)) for the channel refresh and the RIS
gradient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
import scipy.linalg

from .model import (
    AnalogStructure,
    ChannelSet,
    IterationRecord,
    IterationTrace,
    PrecoderSolution,
    SystemConfig,
    validate_config,
)

__all__ = [
    "DESCENT_TOL",
    "DegenerateChannelError",
    "DescentError",
    "SolverState",
    "alternating_descent",
    "analog_constraint_residual",
    "effective_channel",
    "fd_precoder",
    "finalize_solution",
    "grad_analog",
    "grad_ris",
    "init_analog_precoder",
    "init_ris_phases",
    "mse_bar",
    "pcs_support_mask",
    "project_constant_modulus",
    "project_norm_ball",
    "regularized_gram",
    "ris_constraint_residual",
    "run_algorithm1",
    "step_bound_analog",
    "step_bound_ris",
    "update_analog",
    "update_analog_pcs",
    "update_digital",
    "update_ris",
]

# Tolerated numerical objective increase per sub-step; larger jumps abort.
DESCENT_TOL = 1e-9

RisMode = Literal["modulus", "ball"]


class DegenerateChannelError(ValueError):
    """The channel (or the precoder it induces) is identically zero."""


class DescentError(RuntimeError):
    """A sub-step increased the objective beyond DESCENT_TOL."""


def _sqnorm(x: np.ndarray) -> float:
    return float(np.vdot(x, x).real)


def effective_channel(H_I: np.ndarray, psi: np.ndarray, H_B: np.ndarray) -> np.ndarray:
    """Compose the K x M downlink channel H_I @ diag(psi) @ H_B."""
    return H_I @ (psi[:, None] * H_B)


def regularized_gram(H: np.ndarray, K: int, P: float, sigma2: float) -> np.ndarray:
    """Noise-regularized channel Gram matrix H^H H + (K sigma2 / P) I."""
    M = H.shape[1]
    return H.conj().T @ H + (K * sigma2 / P) * np.eye(M)


def mse_bar(H: np.ndarray, F_bar: np.ndarray, P: float, K: int, sigma2: float) -> float:
    """Modified MSE of the scaled precoder F_bar over channel H.

    Equals P - (2P/K) Re tr(F_bar^H H^H) + (P/K) ||H F_bar||_F^2
    + sigma2 ||F_bar||_F^2. Nonnegative for any feasible arguments.
    """
    HF = H @ F_bar
    return float(
        P
        - (2.0 * P / K) * np.trace(HF).real
        + (P / K) * _sqnorm(HF)
        + sigma2 * _sqnorm(F_bar)
    )


def update_digital(
    H: np.ndarray,
    F_RF: np.ndarray,
    P: float,
    K: int,
    sigma2: float,
    xi: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Exact minimizer of the modified MSE over the scaled digital precoder.

    Solves [F_RF^H Xi F_RF] X = (H F_RF)^H with Xi = H^H H + (K sigma2/P) I
    through a Hermitian positive-definite factorization.

    Raises:
        numpy.linalg.LinAlgError: if the system is singular (possible only
            for sigma2 = 0 combined with a rank-deficient F_RF).
    """
    G = H @ F_RF
    if xi is not None:
        A = F_RF.conj().T @ (xi @ F_RF)
    else:
        A = G.conj().T @ G + (K * sigma2 / P) * (F_RF.conj().T @ F_RF)
    try:
        return scipy.linalg.solve(A, G.conj().T, assume_a="pos")
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"digital update system is singular ({exc}); "
            "requires sigma2 > 0 or a full-column-rank analog precoder"
        ) from None


def fd_precoder(H: np.ndarray, P: float, K: int, sigma2: float,
                xi: Optional[np.ndarray] = None) -> np.ndarray:
    """Fully-digital regularized precoder (H^H H + (K sigma2/P) I)^{-1} H^H.

    The digital update specialized to an identity analog precoder; the
    unconstrained minimizer of the modified MSE over all M x K precoders.
    """
    if xi is None:
        xi = regularized_gram(H, K, P, sigma2)
    try:
        return scipy.linalg.solve(xi, H.conj().T, assume_a="pos")
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"fully-digital precoder system is singular ({exc}); requires sigma2 > 0"
        ) from None


@dataclass
class SolverState:
    """Mutable working set of the alternating solver for one realization.

    Caches the effective channel H and the regularized Gram matrix xi; both
    are refreshed whenever psi changes so they stay consistent with
    (H_I, psi, H_B). When the effective channel is externally fixed (direct
    link only), H_I/H_B/psi-dependence is absent and refresh is a no-op.
    Single-owner: mutate sequentially within one trial only.
    """

    P: float
    K: int
    sigma2: float
    F_RF: np.ndarray
    F_BB_bar: np.ndarray
    psi: np.ndarray
    H: np.ndarray
    xi: np.ndarray
    H_I: Optional[np.ndarray] = None
    H_B: Optional[np.ndarray] = None
    t: int = 0

    @classmethod
    def from_channels(
        cls,
        H_I: np.ndarray,
        H_B: np.ndarray,
        psi: np.ndarray,
        F_RF: np.ndarray,
        P: float,
        K: int,
        sigma2: float,
        F_BB_bar: Optional[np.ndarray] = None,
    ) -> "SolverState":
        H = effective_channel(H_I, psi, H_B)
        if F_BB_bar is None:
            F_BB_bar = np.zeros((F_RF.shape[1], K), dtype=complex)
        return cls(P=P, K=K, sigma2=sigma2, F_RF=F_RF, F_BB_bar=F_BB_bar,
                   psi=psi, H=H, xi=regularized_gram(H, K, P, sigma2),
                   H_I=H_I, H_B=H_B)

    @classmethod
    def from_effective(
        cls,
        H: np.ndarray,
        F_RF: np.ndarray,
        P: float,
        K: int,
        sigma2: float,
        psi: Optional[np.ndarray] = None,
        F_BB_bar: Optional[np.ndarray] = None,
    ) -> "SolverState":
        """State over a fixed effective channel (no RIS dependence)."""
        if F_BB_bar is None:
            F_BB_bar = np.zeros((F_RF.shape[1], K), dtype=complex)
        if psi is None:
            psi = np.zeros(0, dtype=complex)
        return cls(P=P, K=K, sigma2=sigma2, F_RF=F_RF, F_BB_bar=F_BB_bar,
                   psi=psi, H=H, xi=regularized_gram(H, K, P, sigma2))

    def set_psi(self, psi: np.ndarray) -> None:
        """Replace the RIS coefficients and refresh the cached H and xi."""
        self.psi = psi
        if self.H_I is not None and self.H_B is not None:
            self.H = effective_channel(self.H_I, psi, self.H_B)
            self.xi = regularized_gram(self.H, self.K, self.P, self.sigma2)

    def gamma_bar(self) -> np.ndarray:
        """RIS-input signature H_B @ F_RF @ F_BB_bar of the current precoders."""
        if self.H_B is None:
            raise ValueError("state has no RIS-side channel")
        return self.H_B @ (self.F_RF @ self.F_BB_bar)

    def objective(self) -> float:
        return mse_bar(self.H, self.F_RF @ self.F_BB_bar, self.P, self.K, self.sigma2)


def grad_analog(state: SolverState) -> np.ndarray:
    """Conjugate-coordinate gradient of the modified MSE in the analog precoder.

    (P/K) [Xi F_RF F_BB_bar - H^H] F_BB_bar^H; for a perturbation D the
    objective changes by 2 Re tr(G^H D) to first order.
    """
    resid = state.xi @ (state.F_RF @ state.F_BB_bar) - state.H.conj().T
    return (state.P / state.K) * (resid @ state.F_BB_bar.conj().T)


def step_bound_analog(H: np.ndarray, F_BB_bar: np.ndarray, P: float, K: int,
                      sigma2: float) -> float:
    """Majorization constant for the analog step; any step <= its reciprocal
    cannot increase the objective.

    Equals ((P/K) ||H||_F^2 + sigma2) * ||F_BB_bar||_F^2.

    Raises:
        ValueError: for a zero digital precoder (step undefined; callers
            skip the analog step) or a degenerate zero bound.
    """
    f2 = _sqnorm(F_BB_bar)
    if f2 == 0.0:
        raise ValueError("zero digital precoder: analog step size undefined")
    bound = ((P / K) * _sqnorm(H) + sigma2) * f2
    if not bound > 0.0:
        raise ValueError(f"degenerate analog step bound {bound}")
    return bound


def project_constant_modulus(Z: np.ndarray, modulus: float,
                             previous: np.ndarray) -> np.ndarray:
    """Entry-wise projection onto the constant-modulus set: modulus * e^{j angle(Z)}.

    The argument of an exactly-zero entry is undefined; such entries retain
    the phase of ``previous``, which keeps the iterate feasible and preserves
    the fixed-point property of zero-step updates.
    """
    Z = np.asarray(Z)
    phase = np.where(Z == 0, np.angle(np.asarray(previous)), np.angle(Z))
    return modulus * np.exp(1j * phase)


def project_norm_ball(v: np.ndarray, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection onto the l2 ball of the given radius."""
    nrm = float(np.linalg.norm(v))
    if nrm <= radius:
        return v
    return v * (radius / nrm)


def update_analog(state: SolverState, alpha_analog: float) -> np.ndarray:
    """One gradient-projection step of the fully-connected analog precoder.

    Steps along the negative gradient and projects every entry back to
    modulus sqrt(1/M). With alpha_analog at most the reciprocal analog step
    bound the objective cannot increase.
    """
    M = state.F_RF.shape[0]
    Z = state.F_RF - alpha_analog * grad_analog(state)
    return project_constant_modulus(Z, np.sqrt(1.0 / M), previous=state.F_RF)


def pcs_support_mask(M: int, N_RF: int) -> np.ndarray:
    """Boolean (M, N_RF) mask of the block-diagonal partially-connected support.

    RF chain n (0-based) drives the antenna block n*(M/N_RF) .. (n+1)*(M/N_RF)-1.
    """
    if M % N_RF != 0:
        raise ValueError(f"N_RF must divide M exactly: M={M}, N_RF={N_RF}")
    block = M // N_RF
    mask = np.zeros((M, N_RF), dtype=bool)
    for n in range(N_RF):
        mask[n * block:(n + 1) * block, n] = True
    return mask


def update_analog_pcs(state: SolverState, alpha_analog: float) -> np.ndarray:
    """Gradient-projection step of the partially-connected analog precoder.

    Uses the same gradient matrix as the fully-connected step, but only its
    block-support entries move; those are projected to modulus sqrt(N_RF/M)
    and all off-block entries are exactly zero.
    """
    M, N_RF = state.F_RF.shape
    mask = pcs_support_mask(M, N_RF)
    Z = state.F_RF - alpha_analog * grad_analog(state)
    out = np.zeros_like(state.F_RF)
    out[mask] = project_constant_modulus(Z[mask], np.sqrt(N_RF / M),
                                         previous=state.F_RF[mask])
    return out


def grad_ris(H_I: np.ndarray, psi: np.ndarray, gamma_bar: np.ndarray,
             P: float, K: int) -> np.ndarray:
    """Conjugate-coordinate gradient of the modified MSE in the RIS coefficients.

    The diagonal of (P/K) H_I^H (H_I diag(psi) gamma_bar - I_K) gamma_bar^H,
    with gamma_bar = H_B F_RF F_BB_bar; only diagonal perturbations matter,
    so only the diagonal is formed.
    """
    T = H_I @ (psi[:, None] * gamma_bar) - np.eye(K)
    A = H_I.conj().T @ T
    return (P / K) * np.einsum("rk,rk->r", A, gamma_bar.conj())


def step_bound_ris(gamma_bar: np.ndarray, H_I: np.ndarray, P: float, K: int) -> float:
    """Majorization constant for the RIS step: (P/K) ||gamma_bar||_F^2 ||H_I||_F^2.

    Raises:
        ValueError: for a zero gamma_bar (step undefined; callers skip the
            RIS step) or a degenerate zero bound (e.g. P = 0).
    """
    g2 = _sqnorm(gamma_bar)
    if g2 == 0.0:
        raise ValueError("zero precoded RIS input: RIS step size undefined")
    bound = (P / K) * g2 * _sqnorm(H_I)
    if not bound > 0.0:
        raise ValueError(f"degenerate RIS step bound {bound}")
    return bound


def update_ris(state: SolverState, alpha_ris: float,
               gamma_bar: Optional[np.ndarray] = None) -> np.ndarray:
    """One gradient-projection step of the RIS coefficients onto modulus sqrt(1/R).

    Zero-argument entries retain their previous phase. With alpha_ris at most
    the reciprocal RIS step bound the objective cannot increase.
    """
    if gamma_bar is None:
        gamma_bar = state.gamma_bar()
    R = state.psi.shape[0]
    delta = -grad_ris(state.H_I, state.psi, gamma_bar, state.P, state.K)
    Z = state.psi + alpha_ris * delta
    return project_constant_modulus(Z, np.sqrt(1.0 / R), previous=state.psi)


def analog_constraint_residual(F_RF: np.ndarray, structure: AnalogStructure) -> float:
    """Worst-case deviation of the analog precoder from its feasible set."""
    M, N_RF = F_RF.shape
    if structure is AnalogStructure.FULLY_CONNECTED:
        return float(np.max(np.abs(np.abs(F_RF) - np.sqrt(1.0 / M))))
    mask = pcs_support_mask(M, N_RF)
    on = float(np.max(np.abs(np.abs(F_RF[mask]) - np.sqrt(N_RF / M))))
    off = float(np.max(np.abs(F_RF[~mask]))) if N_RF > 1 else 0.0
    return max(on, off)


def ris_constraint_residual(psi: np.ndarray) -> float:
    """Worst-case deviation of the RIS coefficients from modulus sqrt(1/R)."""
    R = psi.shape[0]
    return float(np.max(np.abs(np.abs(psi) - np.sqrt(1.0 / R))))


def init_analog_precoder(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Feasible random-phase analog precoder. Fully connected draws M*N_RF
    phases (row-major); partially connected draws one phase per antenna."""
    if cfg.analog_structure is AnalogStructure.FULLY_CONNECTED:
        phases = rng.uniform(0.0, 2.0 * np.pi, (cfg.M, cfg.N_RF))
        return np.sqrt(1.0 / cfg.M) * np.exp(1j * phases)
    mask = pcs_support_mask(cfg.M, cfg.N_RF)
    F = np.zeros((cfg.M, cfg.N_RF), dtype=complex)
    F[mask] = np.sqrt(cfg.N_RF / cfg.M) * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, cfg.M))
    return F


def init_ris_phases(R: int, rng: np.random.Generator) -> np.ndarray:
    """Random-phase RIS coefficients of modulus sqrt(1/R)."""
    return np.sqrt(1.0 / R) * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, R))


def _check_descent(previous: float, current: float, step: str, iteration: int) -> None:
    if current > previous + DESCENT_TOL:
        raise DescentError(
            f"objective increased at iteration {iteration} ({step} step): "
            f"{previous!r} -> {current!r} (+{current - previous:.3e})"
        )


def alternating_descent(
    state: SolverState,
    max_iters: int,
    tol: float,
    analog: Optional[AnalogStructure],
    ris_mode: Optional[RisMode],
) -> IterationTrace:
    """Drive block updates until the relative objective change drops below tol.

    Args:
        state: initialized solver state; mutated in place.
        max_iters: outer-iteration cap.
        tol: relative objective-change threshold between consecutive
            iterations.
        analog: analog-precoder structure to optimize, or None to keep F_RF
            fixed (fully-digital schemes).
        ris_mode: "modulus" projects the RIS step onto the constant-modulus
            set, "ball" onto the unit l2 ball (relaxed upper bound), None
            skips the RIS step.

    Returns:
        The per-iteration trace. Sub-step objective values are checked to be
        non-increasing within DESCENT_TOL; violations raise DescentError.
    """
    if not state.sigma2 > 0:
        raise ValueError(f"sigma2 must be positive, got {state.sigma2}")
    if not np.any(state.H):
        raise DegenerateChannelError("effective channel is identically zero")
    fully_digital = analog is None
    trace = IterationTrace()
    prev: Optional[float] = None
    for t in range(1, max_iters + 1):
        state.t = t
        if fully_digital:
            state.F_BB_bar = fd_precoder(state.H, state.P, state.K, state.sigma2,
                                         xi=state.xi)
        else:
            state.F_BB_bar = update_digital(state.H, state.F_RF, state.P, state.K,
                                            state.sigma2, xi=state.xi)
        m_digital = state.objective()
        if prev is not None:
            _check_descent(prev, m_digital, "digital", t)

        alpha_analog: Optional[float] = None
        m_analog = m_digital
        if not fully_digital and _sqnorm(state.F_BB_bar) > 0.0:
            tau = step_bound_analog(state.H, state.F_BB_bar, state.P, state.K,
                                    state.sigma2)
            alpha_analog = 1.0 / tau
            if analog is AnalogStructure.FULLY_CONNECTED:
                state.F_RF = update_analog(state, alpha_analog)
            else:
                state.F_RF = update_analog_pcs(state, alpha_analog)
            m_analog = state.objective()
            _check_descent(m_digital, m_analog, "analog", t)

        alpha_ris: Optional[float] = None
        m_ris = m_analog
        if ris_mode is not None:
            gamma_bar = state.gamma_bar()
            if _sqnorm(gamma_bar) > 0.0:
                bound = step_bound_ris(gamma_bar, state.H_I, state.P, state.K)
                alpha_ris = 1.0 / bound
                if ris_mode == "modulus":
                    state.set_psi(update_ris(state, alpha_ris, gamma_bar=gamma_bar))
                else:
                    delta = -grad_ris(state.H_I, state.psi, gamma_bar, state.P, state.K)
                    state.set_psi(project_norm_ball(state.psi + alpha_ris * delta))
                m_ris = state.objective()
                _check_descent(m_analog, m_ris, "ris", t)

        residual = 0.0
        if not fully_digital:
            residual = analog_constraint_residual(state.F_RF, analog)
        if state.psi.size:
            if ris_mode == "ball":
                residual = max(residual, max(0.0, float(np.linalg.norm(state.psi)) - 1.0))
            else:
                residual = max(residual, ris_constraint_residual(state.psi))

        trace.records.append(IterationRecord(
            iteration=t,
            mse_digital=m_digital,
            mse_analog=m_analog,
            mse_ris=m_ris,
            alpha_analog=alpha_analog,
            alpha_ris=alpha_ris,
            max_constraint_residual=residual,
        ))
        if prev is not None and abs(prev - m_ris) / max(prev, 1e-12) < tol:
            break
        prev = m_ris
    return trace


def finalize_solution(state: SolverState) -> PrecoderSolution:
    """Split the scaled digital precoder into the gain zeta and the
    power-normalized F_BB with ||F_RF F_BB||_F^2 = K."""
    F_bar = state.F_RF @ state.F_BB_bar
    zeta = float(np.linalg.norm(F_bar)) / np.sqrt(state.K)
    if zeta == 0.0:
        raise DegenerateChannelError("converged precoder is identically zero")
    return PrecoderSolution(
        F_RF=state.F_RF.copy(),
        F_BB=state.F_BB_bar / zeta,
        F_BB_bar=state.F_BB_bar.copy(),
        Psi=state.psi.copy(),
        zeta=zeta,
    )


def run_algorithm1(
    channels: ChannelSet,
    cfg: SystemConfig,
    rng: Optional[np.random.Generator] = None,
) -> tuple[PrecoderSolution, IterationTrace]:
    """Joint hybrid-precoder / RIS-phase design by alternating minimization.

    Initializes the analog precoder and RIS coefficients with random phases
    (drawn from ``rng``, analog first), then loops digital, analog, and RIS
    updates with step sizes fixed at the reciprocal majorization bounds until
    the relative objective change drops below cfg.tol or cfg.max_iters is hit.
    Finally splits off the gain zeta so the returned digital precoder meets
    the transmit power constraint exactly.

    Raises:
        DegenerateChannelError: if the composed channel is identically zero.
    """
    validate_config(cfg)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    sigma2 = cfg.sigma2
    F_RF = init_analog_precoder(cfg, rng)
    psi = init_ris_phases(cfg.R, rng)
    state = SolverState.from_channels(channels.H_I, channels.H_B, psi, F_RF,
                                      cfg.P, cfg.K, sigma2)
    trace = alternating_descent(state, cfg.max_iters, cfg.tol,
                                analog=cfg.analog_structure, ris_mode="modulus")
    return finalize_solution(state), trace
