"""Uplink-downlink duality transforms for compression-based C-RAN.

Given a design in one direction, the dual design keeps the beamformers, solves a
K x K linear SINR system for the powers, and sets quantization noise so that
every per-user rate, every per-RRH fronthaul rate and the sum power are equal
in both directions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import (
    ChannelMatrix,
    DownlinkDesign,
    InvalidDesignError,
    UplinkDesign,
    beamformed_power,
    downlink_sinr_terms,
    uplink_received_power,
    uplink_sinr_terms,
)

#: fronthaul SNR used to park an uplink RRH that the downlink design leaves unused
IDLE_RRH_ETA = 1e-12


class DualityError(RuntimeError):
    """The transform hit an inconsistency that a valid input design cannot produce."""


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class CouplingSystem:
    """SINR coupling data ``(D, A, tau)`` for fixed beamformers.

    The powers of a design with these SINR targets solve
    ``(I - diag(D) A) p = noise_power * diag(D) (1 + tau)`` in the uplink and
    ``(I - diag(D) A) p = noise_power * diag(D) 1`` in the downlink.
    """

    D: np.ndarray
    A: np.ndarray
    tau: np.ndarray
    eta: np.ndarray
    gammas: np.ndarray

    @property
    def DA(self) -> np.ndarray:
        return self.D[:, None] * self.A


def _check_eta(eta) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    if np.any(~(eta > 0)):
        raise ValueError("fronthaul SNR eta must be positive")
    return eta


def quantization_from_fronthaul_ul(ch: ChannelMatrix, powers, eta, noise_power: float) -> np.ndarray:
    """Uplink quantization noise that makes RRH ``m`` use exactly ``log2(1 + eta_m)`` bits."""
    eta = _check_eta(eta)
    return (uplink_received_power(ch, powers) + noise_power) / eta


def quantization_from_fronthaul_dl(powers, beamformers, eta) -> tuple[np.ndarray, np.ndarray]:
    """Downlink quantization noise for fronthaul rates ``log2(1 + eta_m)``.

    Returns ``(q, degenerate)``; ``degenerate[m]`` marks an RRH with no
    beamformed power, whose quantization noise is 0 and fronthaul rate 0.
    """
    eta = _check_eta(eta)
    carried = beamformed_power(powers, beamformers)
    return carried / eta, carried == 0


def _pair_gains(ch: ChannelMatrix, beamformers) -> np.ndarray:
    # g[i, j] = |b_i^H h_j|^2
    return np.abs(np.asarray(beamformers).conj().T @ ch.entries) ** 2


def _diag_factor(g, gammas):
    own = np.diag(g)
    gammas = np.asarray(gammas, dtype=float)
    bad = (own == 0) & (gammas > 0)
    if np.any(bad):
        raise InvalidDesignError(f"beamformer orthogonal to own channel for users {np.flatnonzero(bad).tolist()}")
    D = np.zeros_like(own)
    np.divide(gammas, own, out=D, where=gammas > 0)
    return D


def build_coupling_ul(ch: ChannelMatrix, beamformers, eta, gammas) -> CouplingSystem:
    """Uplink coupling matrix.

    ``A[i, j] = |w_i^H h_j|^2 [i != j] + sum_m |h_{m,j}|^2 |w_{i,m}|^2 / eta_m``.
    Infinite ``eta`` entries are allowed (lossless fronthaul).
    """
    eta = _check_eta(eta)
    w2 = np.abs(np.asarray(beamformers)) ** 2  # M x K
    g = _pair_gains(ch, beamformers)
    comp = (w2 / eta[:, None]).T @ ch.gains  # comp[i, j] = sum_m |w_{i,m}|^2 |h_{m,j}|^2 / eta_m
    A = g + comp
    np.fill_diagonal(A, np.diag(comp))
    tau = (w2 / eta[:, None]).sum(axis=0)
    return CouplingSystem(_diag_factor(g, gammas), A, tau, eta, np.asarray(gammas, dtype=float))


def build_coupling_dl(ch: ChannelMatrix, beamformers, eta, gammas) -> CouplingSystem:
    """Downlink coupling matrix.

    ``A[i, j] = |v_j^H h_i|^2 [i != j] + sum_m |h_{m,i}|^2 |v_{j,m}|^2 / eta_m``;
    with the same beamformers this is the transpose of the uplink matrix.
    """
    eta = _check_eta(eta)
    v2 = np.abs(np.asarray(beamformers)) ** 2
    g = _pair_gains(ch, beamformers)  # g[j, i] = |v_j^H h_i|^2
    comp = ch.gains.T @ (v2 / eta[:, None])  # comp[i, j] = sum_m |h_{m,i}|^2 |v_{j,m}|^2 / eta_m
    A = g.T + comp
    np.fill_diagonal(A, np.diag(comp))
    tau = (v2 / eta[:, None]).sum(axis=0)
    return CouplingSystem(_diag_factor(g, gammas), A, tau, eta, np.asarray(gammas, dtype=float))


def spectral_radius(A, tol: float = 1e-12, max_iters: int = 10_000) -> float:
    """Perron root of a square nonnegative matrix.

    Power iteration; if it stalls, matrices up to 4 x 4 fall back to the roots
    of the characteristic polynomial, larger ones raise ``ConvergenceError``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("spectral_radius needs a square matrix")
    if not np.all(np.isfinite(A)) or np.any(A < 0):
        raise ValueError("spectral_radius needs a finite nonnegative matrix")
    if A.shape[0] == 0:
        return 0.0
    rho, _, ok = kernels.perron_root(A, tol, max_iters)
    if ok:
        return float(max(rho, 0.0))
    if A.shape[0] <= 4:
        return float(np.max(np.abs(np.roots(np.poly(A)))))
    raise ConvergenceError(f"power iteration did not settle in {max_iters} iterations")


def _solve_dual_powers(system: CouplingSystem, rhs_extra: np.ndarray, noise_power: float) -> np.ndarray:
    """Solve ``(I - D A^T) p = noise_power * D * rhs_extra`` on the users with positive targets."""
    active = system.gammas > 0
    p = np.zeros(system.gammas.size)
    if not np.any(active):
        return p
    D = system.D[active]
    At = system.A[np.ix_(active, active)].T
    DAt = D[:, None] * At
    rho = spectral_radius(DAt)
    if rho >= 1.0:
        raise DualityError(f"coupling spectral radius {rho:.6g} >= 1 for a design that claims feasibility")
    try:
        sol = np.linalg.solve(np.eye(D.size) - DAt, noise_power * D * rhs_extra[active])
    except np.linalg.LinAlgError as exc:
        raise DualityError("singular SINR system") from exc
    if np.any(sol < 0):
        raise DualityError("dual power solution has negative entries")
    p[active] = sol
    return p


def _check_active_powers(powers, gammas):
    wasted = (powers > 0) & ~(gammas > 0)
    if np.any(wasted):
        raise InvalidDesignError(
            f"users {np.flatnonzero(wasted).tolist()} transmit power but achieve zero rate"
        )


def achieved_sinr_ul(ch: ChannelMatrix, d: UplinkDesign, noise_power: float) -> np.ndarray:
    s, i = uplink_sinr_terms(ch, d, noise_power)
    return s / i


def achieved_sinr_dl(ch: ChannelMatrix, d: DownlinkDesign, noise_power: float) -> np.ndarray:
    s, i = downlink_sinr_terms(ch, d, noise_power)
    return s / i


def ul_to_dl(ch: ChannelMatrix, noise_power: float, ul: UplinkDesign) -> DownlinkDesign:
    """Map an uplink design to a downlink design with identical rates, fronthaul rates and sum power."""
    gammas = achieved_sinr_ul(ch, ul, noise_power)
    _check_active_powers(ul.powers, gammas)
    # 2^C - 1 straight from the achieved fronthaul rate, without the log round trip
    eta = (uplink_received_power(ch, ul.powers) + noise_power) / ul.quant_noise
    system = build_coupling_ul(ch, ul.beamformers, eta, gammas)
    p_dl = _solve_dual_powers(system, np.ones(ch.K), noise_power)
    q_dl, _ = quantization_from_fronthaul_dl(p_dl, ul.beamformers, eta)
    return DownlinkDesign(p_dl, ul.beamformers.copy(), q_dl)


def dl_to_ul(ch: ChannelMatrix, noise_power: float, dl: DownlinkDesign) -> UplinkDesign:
    """Map a downlink design to an uplink design with identical rates, fronthaul rates and sum power.

    An RRH that carries no downlink power cannot be matched exactly (its
    downlink fronthaul rate is zero); the uplink parks it at a negligible
    fronthaul rate, and no active user's receiver touches it.
    """
    gammas = achieved_sinr_dl(ch, dl, noise_power)
    _check_active_powers(dl.powers, gammas)
    carried = beamformed_power(dl.powers, dl.beamformers)
    live = carried > 0
    eta = np.full(ch.M, np.inf)
    eta[live] = carried[live] / dl.quant_noise[live]
    system = build_coupling_dl(ch, dl.beamformers, eta, gammas)
    p_ul = _solve_dual_powers(system, 1.0 + system.tau, noise_power)
    eta_ul = np.where(live, eta, IDLE_RRH_ETA)
    q_ul = quantization_from_fronthaul_ul(ch, p_ul, eta_ul, noise_power)
    return UplinkDesign(p_ul, dl.beamformers.copy(), q_ul)
