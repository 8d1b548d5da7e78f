"""Scenario files: TOML with ``[system]``, ``[channel]``, ``[targets]`` and ``[design]`` tables.

Example::

    [system]
    M = 1
    K = 1
    noise_power = 1.0
    fronthaul_caps = [1.0]
    power_budget = "unbounded"

    [channel]
    # h[m][k] = [re, im], one RRH per row
    h = [
      [[1.0, 0.0]],
    ]

    [targets]
    rates = [0.415037499278844]

    [design]
    direction = "ul"
    powers = [1.0]
    beamformers = [
      [[1.0, 0.0]],
    ]
    quant_noise = [2.0]
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import (
    ChannelMatrix,
    DimensionError,
    DownlinkDesign,
    InvalidDesignError,
    SystemParams,
    UplinkDesign,
)
from .optimizer import RateTargets
from .verify import GENERATOR, random_channel, substreams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ScenarioError(ValueError):
    """Invalid scenario file; ``line`` is 1-based when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.message = message
        self.path = path
        self.line = line
        where = str(path) if path is not None else "<scenario>"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class Scenario:
    channel: ChannelMatrix
    params: SystemParams
    targets: RateTargets | None = None
    design: UplinkDesign | DownlinkDesign | None = None

    @property
    def M(self) -> int:
        return self.channel.M

    @property
    def K(self) -> int:
        return self.channel.K


def _locate(text: str, section: str, key: str) -> int | None:
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        head = re.match(r"^\[([^\]]+)\]", line)
        if head:
            current = head.group(1).strip()
            continue
        if current == section and re.match(rf"^{re.escape(key)}\s*=", line):
            return lineno
    return None


def _section_line(text: str, section: str) -> int | None:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.strip() == f"[{section}]":
            return lineno
    return None


def _complex_matrix(value, rows: int, cols: int, what: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{what} must be a {rows} x {cols} array of [re, im] pairs") from exc
    if arr.shape != (rows, cols, 2):
        raise DimensionError(f"{what} has shape {arr.shape[:-1] if arr.ndim == 3 else arr.shape}, expected ({rows}, {cols})")
    return arr[..., 0] + 1j * arr[..., 1]


def _vector(value, n: int, what: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{what} must be a list of numbers") from exc
    if arr.ndim == 0 and n == 1:
        arr = arr.reshape(1)
    if arr.shape != (n,):
        raise DimensionError(f"{what} has {arr.size} entries, expected {n}")
    return arr


def loads_scenario(text: str, path=None) -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ScenarioError(f"malformed scenario: {exc}", path, int(m.group(1)) if m else None) from exc

    def need(section, key):
        if section not in doc:
            raise ScenarioError(f"missing section [{section}]", path)
        if key not in doc[section]:
            raise ScenarioError(f"missing field '{key}' in [{section}]", path, _section_line(text, section))
        return doc[section][key]

    def guarded(section, key, fn):
        try:
            return fn(need(section, key))
        except ScenarioError:
            raise
        except (ValueError, TypeError) as exc:
            raise ScenarioError(str(exc), path, _locate(text, section, key)) from exc

    def positive_int(v):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ValueError("must be a positive integer")
        return v

    M = guarded("system", "M", positive_int)
    K = guarded("system", "K", positive_int)

    def noise(v):
        v = float(v)
        if not (np.isfinite(v) and v > 0):
            raise ValueError("noise power must be positive")
        return v

    def caps(v):
        c = _vector(v, M, "fronthaul_caps")
        if not np.all(np.isfinite(c)) or np.any(c <= 0):
            raise ValueError("fronthaul capacity must be positive")
        return c

    def budget(v):
        if isinstance(v, str):
            if v != "unbounded":
                raise ValueError('power_budget must be a positive number or "unbounded"')
            return None
        v = float(v)
        if not (v > 0):
            raise ValueError("power budget must be positive")
        return v

    sigma2 = guarded("system", "noise_power", noise)
    C = guarded("system", "fronthaul_caps", caps)
    P = guarded("system", "power_budget", budget) if "power_budget" in doc.get("system", {}) else None
    params = SystemParams(sigma2, C, P)
    channel = guarded("channel", "h", lambda v: ChannelMatrix(_complex_matrix(v, M, K, "channel h")))

    targets = None
    if "targets" in doc:
        targets = guarded("targets", "rates", lambda v: RateTargets(_vector(v, K, "rates")))

    design = None
    if "design" in doc:
        def direction(v):
            if v not in ("ul", "dl"):
                raise ValueError('design direction must be "ul" or "dl"')
            return v

        kind = guarded("design", "direction", direction)
        powers = guarded("design", "powers", lambda v: _vector(v, K, "powers"))
        beams = guarded("design", "beamformers", lambda v: _complex_matrix(v, M, K, "beamformers"))
        quant = guarded("design", "quant_noise", lambda v: _vector(v, M, "quant_noise"))
        cls = UplinkDesign if kind == "ul" else DownlinkDesign
        try:
            design = cls(powers, beams, quant)
        except (InvalidDesignError, DimensionError) as exc:
            raise ScenarioError(str(exc), path, _section_line(text, "design")) from exc
        norms = np.sum(np.abs(design.beamformers) ** 2, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ScenarioError("beamformers must have unit norm", path, _locate(text, "design", "beamformers"))
    return Scenario(channel, params, targets, design)


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", path) from exc
    return loads_scenario(text, path)


def _num(x: float) -> str:
    return repr(float(x))


def _vec(a) -> str:
    return "[" + ", ".join(_num(x) for x in np.asarray(a).reshape(-1)) + "]"


def _cmat(a) -> str:
    rows = []
    for row in np.asarray(a):
        rows.append("  [" + ", ".join(f"[{_num(z.real)}, {_num(z.imag)}]" for z in row) + "],")
    return "[\n" + "\n".join(rows) + "\n]"


def dumps_scenario(sc: Scenario, comment: str | None = None) -> str:
    out = []
    if comment:
        out += [f"# {line}" for line in comment.splitlines()]
        out.append("")
    budget = '"unbounded"' if sc.params.power_budget is None else _num(sc.params.power_budget)
    out += [
        "[system]",
        f"M = {sc.M}",
        f"K = {sc.K}",
        f"noise_power = {_num(sc.params.noise_power)}",
        f"fronthaul_caps = {_vec(sc.params.fronthaul_caps)}",
        f"power_budget = {budget}",
        "",
        "[channel]",
        "# h[m][k] = [re, im], one RRH per row",
        f"h = {_cmat(sc.channel.entries)}",
    ]
    if sc.targets is not None:
        out += ["", "[targets]", f"rates = {_vec(sc.targets.targets)}"]
    if sc.design is not None:
        d = sc.design
        out += [
            "",
            "[design]",
            f'direction = "{d.direction}"',
            f"powers = {_vec(d.powers)}",
            f"beamformers = {_cmat(d.beamformers)}",
            f"quant_noise = {_vec(d.quant_noise)}",
        ]
    return "\n".join(out) + "\n"


def generate_scenario(M: int, K: int, seed: int, noise_power: float = 1.0, caps=2.0,
                      budget: float | None = None, targets=None) -> Scenario:
    """Random scenario with i.i.d. unit-variance complex Gaussian channel gains.

    The channel is drawn from the first ``SeedSequence(seed)`` substream of
    ``numpy.PCG64``; ``caps`` may be a scalar or one value per RRH.
    """
    if M < 1 or K < 1:
        raise ValueError("M and K must be at least 1")
    rng = substreams(seed, 1)[0]
    ch = random_channel(M, K, rng)
    caps = np.broadcast_to(np.asarray(caps, dtype=float), (M,)).copy()
    tg = None if targets is None else RateTargets(np.broadcast_to(np.asarray(targets, dtype=float), (K,)))
    return Scenario(ch, SystemParams(noise_power, caps, budget), tg)


GENERATOR_INFO = f"{GENERATOR} (numpy {np.__version__}), SeedSequence substreams"
