"""Domain types and closed-form performance expressions for uplink/downlink C-RAN.

Channels are stored once, as the uplink ``M x K`` matrix ``H`` whose column
``k`` is the collective channel ``h_k`` of user ``k``; the downlink channel is
its conjugate transpose. All rates are in bits per channel use and all powers
are linear.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

Direction = Literal["ul", "dl"]

#: tolerance on ``|w|^2 - 1`` enforced after internal normalization
NORM_TOL_STRICT = 1e-12
#: tolerance on ``|w|^2 - 1`` accepted in feasibility verdicts
NORM_TOL_FEASIBLE = 1e-9


class DimensionError(ValueError):
    """Array shapes of a channel and a design do not agree."""


class InvalidDesignError(ValueError):
    """A design violates its invariants or produces non-finite quantities."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ChannelMatrix:
    """Uplink channel gains ``h[m, k]`` from user ``k`` to RRH ``m``."""

    entries: np.ndarray

    def __post_init__(self):
        h = np.array(self.entries, dtype=complex)
        if h.ndim != 2 or h.shape[0] < 1 or h.shape[1] < 1:
            raise DimensionError(f"channel must be a non-empty M x K matrix, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("channel entries must be finite")
        object.__setattr__(self, "entries", _frozen(h))

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    @property
    def K(self) -> int:
        return self.entries.shape[1]

    @property
    def gains(self) -> np.ndarray:
        """``|h[m, k]|^2`` as an ``M x K`` real array."""
        return np.abs(self.entries) ** 2


@dataclass(frozen=True)
class SystemParams:
    """Noise power, per-RRH fronthaul capacities and the sum-power budget.

    ``power_budget=None`` means unbounded (pure duality transforms).
    """

    noise_power: float
    fronthaul_caps: np.ndarray
    power_budget: float | None = None

    def __post_init__(self):
        caps = np.array(self.fronthaul_caps, dtype=float).reshape(-1)
        if not (np.isfinite(self.noise_power) and self.noise_power > 0):
            raise ValueError("noise power must be positive")
        if caps.size == 0 or not np.all(np.isfinite(caps)) or np.any(caps <= 0):
            raise ValueError("fronthaul capacity must be positive")
        if self.power_budget is not None and not (self.power_budget > 0):
            raise ValueError("power budget must be positive or unbounded")
        object.__setattr__(self, "noise_power", float(self.noise_power))
        object.__setattr__(self, "fronthaul_caps", _frozen(caps))

    @property
    def M(self) -> int:
        return self.fronthaul_caps.size


def _check_design_arrays(powers, beamformers, quant_noise, allow_zero_q):
    p = np.array(powers, dtype=float).reshape(-1)
    w = np.array(beamformers, dtype=complex)
    q = np.array(quant_noise, dtype=float).reshape(-1)
    if w.ndim != 2:
        raise DimensionError("beamformers must be an M x K matrix")
    M, K = w.shape
    if p.size != K or q.size != M:
        raise DimensionError(
            f"powers ({p.size}) / quantization noise ({q.size}) do not match beamformers {w.shape}"
        )
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(w)) and np.all(np.isfinite(q))):
        raise InvalidDesignError("design entries must be finite")
    if np.any(p < 0):
        raise InvalidDesignError("powers must be nonnegative")
    if allow_zero_q:
        if np.any(q < 0):
            raise InvalidDesignError("quantization noise must be nonnegative")
    elif np.any(q <= 0):
        raise InvalidDesignError("quantization noise must be strictly positive")
    return _frozen(p), _frozen(w), _frozen(q)


@dataclass(frozen=True)
class UplinkDesign:
    """User powers, receive beamformers (columns of ``beamformers``) and RRH quantization noise."""

    powers: np.ndarray
    beamformers: np.ndarray
    quant_noise: np.ndarray

    def __post_init__(self):
        p, w, q = _check_design_arrays(self.powers, self.beamformers, self.quant_noise, False)
        object.__setattr__(self, "powers", p)
        object.__setattr__(self, "beamformers", w)
        object.__setattr__(self, "quant_noise", q)

    direction = "ul"


@dataclass(frozen=True)
class DownlinkDesign:
    """User powers, transmit beamformers and RRH quantization noise.

    ``quant_noise[m] == 0`` is allowed only for an RRH that carries no
    beamformed power at all; its fronthaul rate is then zero.
    """

    powers: np.ndarray
    beamformers: np.ndarray
    quant_noise: np.ndarray

    def __post_init__(self):
        p, v, q = _check_design_arrays(self.powers, self.beamformers, self.quant_noise, True)
        carried = beamformed_power(p, v)
        if np.any((q == 0) & (carried > 0)):
            raise InvalidDesignError("zero quantization noise at an RRH that carries power")
        object.__setattr__(self, "powers", p)
        object.__setattr__(self, "beamformers", v)
        object.__setattr__(self, "quant_noise", q)

    direction = "dl"


@dataclass(frozen=True)
class PerformanceReport:
    user_rates: np.ndarray
    fronthaul_rates: np.ndarray
    sum_power: float
    direction: Direction


@dataclass(frozen=True)
class FeasibilityVerdict:
    """Outcome of :func:`check_feasible`; slacks are ``limit - usage`` (negative means violated)."""

    feasible: bool
    power_slack: float
    fronthaul_slack: np.ndarray
    norm_slack: np.ndarray = field(repr=False)


def normalize_columns(w: np.ndarray) -> np.ndarray:
    """Scale every column to unit norm and rotate its largest entry onto the positive real axis.

    All-zero columns are replaced by the first canonical basis vector.
    """
    w = np.array(w, dtype=complex)
    out = np.zeros_like(w)
    for k in range(w.shape[1]):
        col = w[:, k]
        nrm = np.linalg.norm(col)
        if nrm == 0:
            out[0, k] = 1.0
            continue
        col = col / nrm
        i = np.argmax(np.abs(col))
        out[:, k] = col * (abs(col[i]) / col[i])
        out[i, k] = abs(col[i])
    return out


def beamformed_power(powers, beamformers) -> np.ndarray:
    """Per-RRH beamformed signal power ``sum_i p_i |v_{i,m}|^2``."""
    return (np.abs(beamformers) ** 2) @ np.asarray(powers, dtype=float)


def _check_dims(ch: ChannelMatrix, d) -> None:
    if d.beamformers.shape != ch.entries.shape:
        raise DimensionError(
            f"design beamformers {d.beamformers.shape} do not match channel {ch.entries.shape}"
        )


def _finite(x: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise InvalidDesignError(f"non-finite {what}")
    return x


def uplink_sinr_terms(ch: ChannelMatrix, d: UplinkDesign, noise_power: float):
    """Return ``(signal, interference_plus_noise)`` per user for the uplink rate expression."""
    _check_dims(ch, d)
    g = np.abs(d.beamformers.conj().T @ ch.entries) ** 2  # g[k, i] = |w_k^H h_i|^2
    noise = (np.abs(d.beamformers) ** 2).T @ d.quant_noise + noise_power
    signal = np.diag(g) * d.powers
    np.fill_diagonal(g, 0.0)
    interference = g @ d.powers + noise
    return signal, interference


def downlink_sinr_terms(ch: ChannelMatrix, d: DownlinkDesign, noise_power: float):
    """Return ``(signal, interference_plus_noise)`` per user for the downlink rate expression."""
    _check_dims(ch, d)
    g = np.abs(d.beamformers.conj().T @ ch.entries) ** 2  # g[i, k] = |v_i^H h_k|^2
    noise = ch.gains.T @ d.quant_noise + noise_power
    signal = np.diag(g) * d.powers
    np.fill_diagonal(g, 0.0)
    interference = g.T @ d.powers + noise
    return signal, interference


def _rates(signal, interference):
    signal = _finite(signal, "signal power")
    interference = _finite(interference, "interference power")
    return np.log2(1.0 + signal / interference)


def uplink_user_rates(ch: ChannelMatrix, d: UplinkDesign, noise_power: float) -> np.ndarray:
    """Per-user uplink rates with linear decoding and interference treated as noise."""
    return _rates(*uplink_sinr_terms(ch, d, noise_power))


def downlink_user_rates(ch: ChannelMatrix, d: DownlinkDesign, noise_power: float) -> np.ndarray:
    """Per-user downlink rates with linear encoding."""
    return _rates(*downlink_sinr_terms(ch, d, noise_power))


def uplink_received_power(ch: ChannelMatrix, powers) -> np.ndarray:
    """Per-RRH received signal power ``sum_i p_i |h_{m,i}|^2`` (noise excluded)."""
    return ch.gains @ np.asarray(powers, dtype=float)


def uplink_fronthaul_rates(ch: ChannelMatrix, powers, quant_noise, noise_power: float) -> np.ndarray:
    q = np.asarray(quant_noise, dtype=float)
    if np.any(q <= 0):
        raise InvalidDesignError("quantization noise must be strictly positive")
    p = np.asarray(powers, dtype=float)
    if p.shape != (ch.K,) or q.shape != (ch.M,):
        raise DimensionError("powers / quantization noise do not match the channel")
    return _finite(np.log2(1.0 + (uplink_received_power(ch, p) + noise_power) / q), "fronthaul rate")


def downlink_fronthaul_rates(d: DownlinkDesign) -> np.ndarray:
    """Per-RRH downlink fronthaul rates; an RRH without beamformed power has rate 0."""
    carried = beamformed_power(d.powers, d.beamformers)
    q = d.quant_noise
    out = np.zeros_like(q)
    live = carried > 0
    out[live] = np.log2(1.0 + carried[live] / q[live])
    return out


def uplink_sum_power(powers) -> float:
    return float(np.sum(powers))


def downlink_sum_power(d: DownlinkDesign) -> float:
    """Sum of user powers plus quantization noise powers, which the RRHs also radiate."""
    return float(np.sum(d.powers) + np.sum(d.quant_noise))


def evaluate(ch: ChannelMatrix, design, noise_power: float) -> PerformanceReport:
    if isinstance(design, UplinkDesign):
        return PerformanceReport(
            user_rates=uplink_user_rates(ch, design, noise_power),
            fronthaul_rates=uplink_fronthaul_rates(ch, design.powers, design.quant_noise, noise_power),
            sum_power=uplink_sum_power(design.powers),
            direction="ul",
        )
    if isinstance(design, DownlinkDesign):
        return PerformanceReport(
            user_rates=downlink_user_rates(ch, design, noise_power),
            fronthaul_rates=downlink_fronthaul_rates(design),
            sum_power=downlink_sum_power(design),
            direction="dl",
        )
    raise TypeError(f"not a design: {type(design).__name__}")


def check_feasible(
    ch: ChannelMatrix,
    params: SystemParams,
    design,
    direction: Direction | None = None,
    rtol: float = 1e-12,
) -> FeasibilityVerdict:
    """Test a design against the sum-power budget, the fronthaul caps and unit-norm beamformers.

    ``rtol`` absorbs floating-point rounding when a constraint is met with
    equality (e.g. a saturated fronthaul link).
    """
    if direction is not None and direction != design.direction:
        raise ValueError(f"design is {design.direction}, requested {direction}")
    _check_dims(ch, design)
    if params.M != ch.M:
        raise DimensionError("fronthaul caps do not match the number of RRHs")
    rep = evaluate(ch, design, params.noise_power)
    if params.power_budget is None:
        power_slack = np.inf
    else:
        power_slack = params.power_budget - rep.sum_power
    fh_slack = params.fronthaul_caps - rep.fronthaul_rates
    norm_slack = NORM_TOL_FEASIBLE - np.abs(np.sum(np.abs(design.beamformers) ** 2, axis=0) - 1.0)
    ok = (
        power_slack >= -rtol * max(rep.sum_power, 1.0)
        and bool(np.all(fh_slack >= -rtol * np.maximum(params.fronthaul_caps, 1.0)))
        and bool(np.all(norm_slack >= 0))
    )
    return FeasibilityVerdict(bool(ok), float(power_slack), fh_slack, norm_slack)
