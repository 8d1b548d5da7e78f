"""Numerical witnesses for the duality and optimality claims.

Everything here is deterministic given a seed. Random channels and designs are
drawn from NumPy's ``PCG64`` generator; per-instance substreams come from
``SeedSequence(seed).spawn``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .duality import dl_to_ul, quantization_from_fronthaul_dl, quantization_from_fronthaul_ul, ul_to_dl
from .model import (
    ChannelMatrix,
    Direction,
    DownlinkDesign,
    SystemParams,
    UplinkDesign,
    beamformed_power,
    check_feasible,
    evaluate,
    normalize_columns,
)
from .optimizer import RateTargets, interference_map, saturation_eta

GENERATOR = "numpy.PCG64"


def substreams(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(n)]


def random_channel(M: int, K: int, rng: np.random.Generator) -> ChannelMatrix:
    """I.i.d. circularly-symmetric complex Gaussian gains with unit variance."""
    h = (rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))) / np.sqrt(2.0)
    return ChannelMatrix(h)


def random_beamformers(M: int, K: int, rng: np.random.Generator) -> np.ndarray:
    return normalize_columns(rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K)))


def random_uplink_design(ch: ChannelMatrix, noise_power: float, caps, rng: np.random.Generator,
                         total_power: float | None = None) -> UplinkDesign:
    """Random powers and receivers with every fronthaul link used at its cap."""
    p = rng.uniform(0.05, 2.0, ch.K) * noise_power
    if total_power is not None:
        p *= total_power / p.sum()
    w = random_beamformers(ch.M, ch.K, rng)
    q = quantization_from_fronthaul_ul(ch, p, saturation_eta(caps), noise_power)
    return UplinkDesign(p, w, q)


def random_downlink_design(ch: ChannelMatrix, caps, rng: np.random.Generator,
                           total_power: float | None = None, noise_power: float = 1.0) -> DownlinkDesign:
    """Random powers and precoders with every fronthaul link used at its cap."""
    p = rng.uniform(0.05, 2.0, ch.K) * noise_power
    v = random_beamformers(ch.M, ch.K, rng)
    eta = saturation_eta(caps)
    q, _ = quantization_from_fronthaul_dl(p, v, eta)
    if total_power is not None:
        scale = total_power / (p.sum() + q.sum())
        p, q = p * scale, q * scale
    return DownlinkDesign(p, v, q)


def relative_gap(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    den = np.maximum(np.abs(a), np.abs(b))
    out = np.zeros(np.broadcast(a, b).shape)
    np.divide(np.abs(a - b), den, out=out, where=den > 0)
    return out


@dataclass(frozen=True)
class DualityReport:
    """Worst relative mismatch between a design and its dual.

    RRHs that the downlink side leaves without power have no matching
    fronthaul rate and are excluded from ``max_fronthaul_gap``.
    """

    max_rate_gap: float
    max_fronthaul_gap: float
    power_gap: float
    tol: float
    idle_rrhs: int = 0
    dual: UplinkDesign | DownlinkDesign | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return max(self.max_rate_gap, self.max_fronthaul_gap, self.power_gap) <= self.tol


def validate_duality(ch: ChannelMatrix, noise_power: float, design, direction: Direction | None = None,
                     tol: float = 1e-8) -> DualityReport:
    direction = direction or design.direction
    if direction != design.direction:
        raise ValueError(f"design is {design.direction}, requested {direction}")
    dual = ul_to_dl(ch, noise_power, design) if direction == "ul" else dl_to_ul(ch, noise_power, design)
    a = evaluate(ch, design, noise_power)
    b = evaluate(ch, dual, noise_power)
    dl = dual if direction == "ul" else design
    live = beamformed_power(dl.powers, dl.beamformers) > 0
    fh = relative_gap(a.fronthaul_rates[live], b.fronthaul_rates[live])
    return DualityReport(
        max_rate_gap=float(np.max(relative_gap(a.user_rates, b.user_rates), initial=0.0)),
        max_fronthaul_gap=float(np.max(fh, initial=0.0)),
        power_gap=float(relative_gap(a.sum_power, b.sum_power)),
        tol=tol,
        idle_rrhs=int(np.sum(~live)),
        dual=dual,
    )


@dataclass(frozen=True)
class PropertyVerdict:
    holds: bool
    checked: int
    counterexample: dict | None = None


def interference_function_properties(ch: ChannelMatrix, targets, caps, noise_power: float,
                                     n_samples: int, seed: int) -> PropertyVerdict:
    """Sample positivity, monotonicity and scalability of the interference map.

    Pairs ``p <= p'`` and scalings ``alpha > 1`` are drawn log-uniformly
    around the noise level.
    """
    targets = targets if isinstance(targets, RateTargets) else RateTargets(targets)
    pos = targets.targets > 0
    rng = substreams(seed, 1)[0]
    K = ch.K

    def gm(p):
        return interference_map(ch, p, targets, caps, noise_power)

    for i in range(n_samples):
        p = noise_power * 10.0 ** rng.uniform(-3, 2, K)
        p_hi = p * (1.0 + 10.0 ** rng.uniform(-6, 1, K) * (rng.random(K) < 0.7))
        alpha = 1.0 + 10.0 ** rng.uniform(-2, 1)
        g, g_hi, g_scaled = gm(p), gm(p_hi), gm(alpha * p)
        if np.any(g[pos] <= 0) or np.any(g[~pos] != 0):
            return PropertyVerdict(False, i, {"axiom": "positivity", "p": p, "gamma": g})
        if np.any(g_hi < g):
            return PropertyVerdict(False, i, {"axiom": "monotonicity", "p": p, "p_hi": p_hi})
        if np.any(alpha * g[pos] <= g_scaled[pos]):
            return PropertyVerdict(False, i, {"axiom": "scalability", "p": p, "alpha": alpha})
    return PropertyVerdict(True, n_samples)


def _mmse_sinr_batch(H, P, eta, noise_power):
    """Uplink SINR of every user at explicit MMSE receivers, for a batch of power vectors.

    ``P`` has shape ``(N, K)``. Uses a full per-user covariance solve and the
    ratio-of-quadratic-forms SINR, independent of the interference-map kernel.
    """
    N, K = P.shape
    M = H.shape[0]
    q = (P @ (np.abs(H) ** 2).T + noise_power) / eta  # N x M
    outer = H.T[:, :, None] * H.T.conj()[:, None, :]  # K x M x M
    full = np.einsum("nk,kab->nab", P, outer)
    full[:, np.arange(M), np.arange(M)] += q + noise_power
    sinr = np.empty((N, K))
    for k in range(K):
        cov = full - P[:, k, None, None] * outer[k]
        w = np.linalg.solve(cov, np.broadcast_to(H[:, k], (N, M))[:, :, None])[:, :, 0]
        sig = P[:, k] * np.abs(w.conj() @ H[:, k]) ** 2
        den = np.real(np.einsum("na,nab,nb->n", w.conj(), cov, w))
        sinr[:, k] = sig / den
    return sinr


@dataclass(frozen=True)
class BruteForceResult:
    sum_power: float
    powers: np.ndarray | None
    feasible: bool


def brute_force_min_power(ch: ChannelMatrix, targets, caps, noise_power: float,
                          grid_step: float = 1e-3, span: tuple[float, float] = (1e-6, 1e6)) -> BruteForceResult:
    """Grid-search oracle for the uplink sum-power minimum with at most two active users.

    The first active user's power runs over a geometric grid with ratio
    ``1 + grid_step`` (after a coarse pass), so the result overshoots the
    optimum by a relative amount of order ``grid_step``. For two active users
    the second power is the smallest meeting its own target at each grid
    point (bisection), and the first user's target is then checked.
    """
    targets = targets if isinstance(targets, RateTargets) else RateTargets(targets)
    gam = targets.sinr
    active = np.flatnonzero(gam > 0)
    if active.size == 0:
        return BruteForceResult(0.0, np.zeros(ch.K), True)
    if active.size > 2:
        raise ValueError("brute force supports at most two users with positive targets")
    H = ch.entries[:, active]
    gam = gam[active]
    eta = saturation_eta(caps)
    lo, hi = span[0] * noise_power, span[1] * noise_power

    def best_on(grid):
        if active.size == 1:
            s = _mmse_sinr_batch(H, grid[:, None], eta, noise_power)[:, 0]
            ok = s >= gam[0]
            if not np.any(ok):
                return None
            i = int(np.argmax(ok))
            return grid[i], np.array([grid[i]])
        p1 = grid
        a = np.zeros_like(p1)
        b = np.full_like(p1, hi)
        reach = _mmse_sinr_batch(H, np.column_stack([p1, b]), eta, noise_power)[:, 1] >= gam[1]
        for _ in range(200):
            mid = 0.5 * (a + b)
            ok2 = _mmse_sinr_batch(H, np.column_stack([p1, mid]), eta, noise_power)[:, 1] >= gam[1]
            b = np.where(ok2, mid, b)
            a = np.where(ok2, a, mid)
            if np.all(b - a <= 1e-13 * b):
                break
        P = np.column_stack([p1, b])
        s = _mmse_sinr_batch(H, P, eta, noise_power)
        ok = reach & (s[:, 0] >= gam[0]) & (s[:, 1] >= gam[1])
        if not np.any(ok):
            return None
        tot = np.where(ok, P.sum(axis=1), np.inf)
        i = int(np.argmin(tot))
        return tot[i], P[i]

    coarse_ratio = 1.01
    coarse = lo * coarse_ratio ** np.arange(int(np.ceil(np.log(hi / lo) / np.log(coarse_ratio))) + 1)
    found = best_on(coarse)
    if found is None:
        return BruteForceResult(np.inf, None, False)
    centre = found[1][0]
    n_fine = int(np.ceil(2 * np.log(coarse_ratio) / np.log1p(grid_step)))
    fine = centre / coarse_ratio ** 2 * (1.0 + grid_step) ** np.arange(2 * n_fine + 1)
    fine_found = best_on(fine)
    total, pw = fine_found if fine_found is not None and fine_found[0] <= found[0] else found
    powers = np.zeros(ch.K)
    powers[active] = pw
    return BruteForceResult(float(total), powers, True)


@dataclass(frozen=True)
class RegionSample:
    direction: Direction
    rates: list[np.ndarray]
    seed: int
    count: int
    designs: list = field(default_factory=list, repr=False)


def sample_rate_region(ch: ChannelMatrix, params: SystemParams, direction: Direction, n: int,
                       seed: int) -> RegionSample:
    """Draw ``n`` random feasible designs and return their rate tuples.

    Each design spends a uniformly random fraction of the power budget and
    uses every fronthaul link at capacity.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if params.power_budget is None:
        raise ValueError("rate-region sampling needs a finite power budget")
    rates, designs = [], []
    for rng in substreams(seed, n):
        budget = params.power_budget * rng.uniform(1e-3, 1.0)
        if direction == "ul":
            d = random_uplink_design(ch, params.noise_power, params.fronthaul_caps, rng, budget)
        else:
            d = random_downlink_design(ch, params.fronthaul_caps, rng, budget, params.noise_power)
        verdict = check_feasible(ch, params, d, direction)
        if not verdict.feasible:
            raise RuntimeError("sampled design is infeasible")
        rates.append(evaluate(ch, d, params.noise_power).user_rates)
        designs.append(d)
    return RegionSample(direction, rates, seed, n, designs)


def random_instance(rng: np.random.Generator, max_M: int = 8, max_K: int = 8,
                    cap_range: tuple[float, float] = (0.5, 6.0)):
    """Draw ``(channel, caps)`` with ``M, K`` uniform on ``1..max``."""
    M = int(rng.integers(1, max_M + 1))
    K = int(rng.integers(1, max_K + 1))
    return random_channel(M, K, rng), rng.uniform(*cap_range, M)


def _mixed_uplink_design(ch, noise_power, caps, rng):
    d = random_uplink_design(ch, noise_power, caps, rng)
    if rng.random() < 0.5:
        # MMSE receivers couple users more tightly than random ones
        from .optimizer import mmse_receivers

        d = UplinkDesign(d.powers, mmse_receivers(ch, d.powers, d.quant_noise, noise_power), d.quant_noise)
    return d


@dataclass(frozen=True)
class EnsembleSummary:
    instances: int
    passed: int
    max_rate_gap: float
    max_fronthaul_gap: float
    max_power_gap: float
    max_roundtrip_gap: float
    tol: float

    @property
    def all_passed(self) -> bool:
        return self.passed == self.instances


def duality_ensemble(n: int, seed: int, tol: float = 1e-8, noise_power: float = 1.0) -> EnsembleSummary:
    """Run both transforms and the round trip on ``n`` random instances.

    An instance passes when the uplink-to-downlink map, the downlink-to-uplink
    map and the round trip back to the starting uplink design all stay within
    ``tol``.
    """
    worst = np.zeros(4)
    passed = 0
    for rng in substreams(seed, n):
        ch, caps = random_instance(rng)
        ul = _mixed_uplink_design(ch, noise_power, caps, rng)
        dl = random_downlink_design(ch, caps, rng, noise_power=noise_power)
        r1 = validate_duality(ch, noise_power, ul, "ul", tol)
        r2 = validate_duality(ch, noise_power, dl, "dl", tol)
        back = dl_to_ul(ch, noise_power, r1.dual)
        rt = max(np.max(relative_gap(back.powers, ul.powers)), np.max(relative_gap(back.quant_noise, ul.quant_noise)))
        gaps = np.array([
            max(r1.max_rate_gap, r2.max_rate_gap),
            max(r1.max_fronthaul_gap, r2.max_fronthaul_gap),
            max(r1.power_gap, r2.power_gap),
            rt,
        ])
        worst = np.maximum(worst, gaps)
        passed += bool(np.all(gaps <= tol))
    return EnsembleSummary(n, passed, *map(float, worst), tol)


def properties_ensemble(n: int, samples: int, seed: int, noise_power: float = 1.0) -> tuple[int, PropertyVerdict | None]:
    """Check the interference-map axioms on ``n`` random instances with positive targets.

    Returns the number of instances checked and the first failing verdict, if any.
    """
    for i, rng in enumerate(substreams(seed, n)):
        ch, caps = random_instance(rng)
        targets = rng.uniform(0.05, 3.0, ch.K)
        v = interference_function_properties(ch, targets, caps, noise_power, samples, int(rng.integers(2**63)))
        if not v.holds:
            return i + 1, v
    return n, None
