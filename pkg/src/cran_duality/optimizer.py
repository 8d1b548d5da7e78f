"""Sum-power minimization under per-user rate targets and per-RRH fronthaul caps.

The uplink problem is solved globally by fixed-point iteration of the MMSE
interference map with fronthaul links used at capacity; the downlink optimum
is then built from the uplink optimum with :func:`~cran_duality.duality.ul_to_dl`.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .duality import build_coupling_ul, quantization_from_fronthaul_ul, ul_to_dl
from .model import (
    ChannelMatrix,
    DownlinkDesign,
    PerformanceReport,
    UplinkDesign,
    evaluate,
    normalize_columns,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RateTargets:
    targets: np.ndarray

    def __post_init__(self):
        r = np.array(self.targets, dtype=float).reshape(-1)
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise ValueError("rate targets must be finite and nonnegative")
        r.setflags(write=False)
        object.__setattr__(self, "targets", r)

    @property
    def sinr(self) -> np.ndarray:
        return np.expm1(self.targets * np.log(2.0))


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-10
    max_iters: int = 10_000
    divergence_power: float | None = None  # None: 1e12 * noise power

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")

    def blowup(self, noise_power: float) -> float:
        if self.divergence_power is None:
            return 1e12 * noise_power
        return self.divergence_power


@dataclass(frozen=True)
class SolveResult:
    design: UplinkDesign | DownlinkDesign | None
    iterations: int
    converged: bool
    infeasible: bool
    report: PerformanceReport | None = None
    diagnostic: str = ""

    @property
    def indeterminate(self) -> bool:
        return not (self.converged or self.infeasible)


def _as_targets(targets) -> RateTargets:
    return targets if isinstance(targets, RateTargets) else RateTargets(targets)


def saturation_eta(caps) -> np.ndarray:
    """Fronthaul SNR ``2^C - 1`` of links used at capacity ``C``."""
    return np.expm1(np.asarray(caps, dtype=float) * np.log(2.0))


def _check_inputs(ch: ChannelMatrix, targets: RateTargets, caps, noise_power):
    caps = np.asarray(caps, dtype=float)
    if targets.targets.size != ch.K:
        raise ValueError(f"{targets.targets.size} rate targets for {ch.K} users")
    if caps.shape != (ch.M,) or np.any(~(caps > 0)):
        raise ValueError("fronthaul caps must be positive, one per RRH")
    if not noise_power > 0:
        raise ValueError("noise power must be positive")
    dead = (np.linalg.norm(ch.entries, axis=0) == 0) & (targets.targets > 0)
    if np.any(dead):
        raise ValueError(f"zero channel for users {np.flatnonzero(dead).tolist()} with positive rate targets")
    return caps


def mmse_receivers(ch: ChannelMatrix, powers, quant_noise, noise_power: float) -> np.ndarray:
    """Unit-norm MMSE receive beamformers, phase-canonicalized.

    ``w_k`` is proportional to ``(sum_{j != k} p_j h_j h_j^H + diag(q) + noise I)^{-1} h_k``.
    """
    H = ch.entries
    p = np.asarray(powers, dtype=float)
    q = np.asarray(quant_noise, dtype=float)
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("powers and quantization noise must be nonnegative")
    full = (H * p) @ H.conj().T + np.diag(q + noise_power)
    w = np.empty_like(H)
    for k in range(ch.K):
        cov = full - p[k] * np.outer(H[:, k], H[:, k].conj())
        w[:, k] = np.linalg.solve(cov, H[:, k])
    return normalize_columns(w)


def interference_map(ch: ChannelMatrix, powers, targets, caps, noise_power: float) -> np.ndarray:
    """Minimal power each user needs to hit its target given the others' powers.

    Quantization noise follows the powers with every fronthaul link saturated,
    and each user is decoded with its MMSE receiver.
    """
    targets = _as_targets(targets)
    caps = _check_inputs(ch, targets, caps, noise_power)
    p = np.asarray(powers, dtype=float)
    if p.shape != (ch.K,) or np.any(p < 0):
        raise ValueError("powers must be nonnegative, one per user")
    return kernels.gamma_map(ch.entries, p, targets.sinr, saturation_eta(caps), float(noise_power))


def uplink_design_at(ch: ChannelMatrix, powers, caps, noise_power: float) -> UplinkDesign:
    """Uplink design for given powers: saturated fronthaul and MMSE receivers."""
    q = quantization_from_fronthaul_ul(ch, powers, saturation_eta(caps), noise_power)
    return UplinkDesign(powers, mmse_receivers(ch, powers, q, noise_power), q)


def _refine(ch: ChannelMatrix, p, targets: RateTargets, caps, noise_power: float):
    """Exact powers for the receivers at ``p``: solve the linear SINR system once.

    The fixed-point iterates approach the optimum from below, so the raw
    iterate misses the targets by roughly the stopping tolerance. With the
    receivers held at their MMSE values the target SINRs are linear in the
    powers. Returns ``None`` if the solve does not land next to ``p``.
    """
    eta = saturation_eta(caps)
    q = quantization_from_fronthaul_ul(ch, p, eta, noise_power)
    w = mmse_receivers(ch, p, q, noise_power)
    active = targets.targets > 0
    try:
        sys_ = build_coupling_ul(ch, w, eta, targets.sinr)
    except ValueError:
        return None
    DA = sys_.DA[np.ix_(active, active)]
    rhs = noise_power * sys_.D[active] * (1.0 + sys_.tau[active])
    try:
        sol = np.linalg.solve(np.eye(DA.shape[0]) - DA, rhs)
    except np.linalg.LinAlgError:
        return None
    out = np.zeros_like(p)
    out[active] = sol
    if not np.all(np.isfinite(out)) or np.any(out < 0):
        return None
    if np.max(np.abs(out - p) / np.maximum(out, noise_power * 1e-15)) > 1e-6:
        return None
    return out


def fixed_point_solve(ch: ChannelMatrix, targets, caps, noise_power: float,
                      opts: SolverOptions | None = None) -> SolveResult:
    """Globally minimize uplink sum power by iterating the interference map from zero."""
    opts = opts or SolverOptions()
    targets = _as_targets(targets)
    caps = _check_inputs(ch, targets, caps, noise_power)
    if not np.any(targets.targets > 0):
        design = uplink_design_at(ch, np.zeros(ch.K), caps, noise_power)
        return SolveResult(design, 0, True, False, evaluate(ch, design, noise_power))

    p, iters, status = kernels.fixed_point(
        ch.entries, targets.sinr, saturation_eta(caps), float(noise_power),
        opts.tolerance, opts.max_iters, opts.blowup(noise_power),
    )
    log.debug("fixed point: status=%d after %d iterations (%s backend)", status, iters, kernels.BACKEND)
    if status == kernels.DIVERGED:
        return SolveResult(
            None, iters, False, True,
            diagnostic=f"power iterate exceeded {opts.blowup(noise_power):.6g} after {iters} iterations",
        )
    if status == kernels.MAX_ITERS:
        return SolveResult(
            None, iters, False, False,
            diagnostic=f"no convergence within {opts.max_iters} iterations (max power {np.max(p):.6g})",
        )
    refined = _refine(ch, p, targets, caps, noise_power)
    if refined is None:
        log.debug("linear refinement rejected; keeping the raw fixed point")
    else:
        p = refined
    design = uplink_design_at(ch, p, caps, noise_power)
    return SolveResult(design, iters, True, False, evaluate(ch, design, noise_power))


def solve_downlink_min_power(ch: ChannelMatrix, targets, caps, noise_power: float,
                             opts: SolverOptions | None = None) -> SolveResult:
    """Downlink sum-power minimum via the uplink optimum and the duality transform."""
    ul = fixed_point_solve(ch, targets, caps, noise_power, opts)
    if not ul.converged:
        return ul
    dl = ul_to_dl(ch, noise_power, ul.design)
    return SolveResult(dl, ul.iterations, True, False, evaluate(ch, dl, noise_power), ul.diagnostic)
