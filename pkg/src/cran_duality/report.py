"""Human (``table``) and machine (``records``) renderings of results.

``records`` output is one ``key=value`` pair per line with stable field names;
array entries are written as ``name.index=value``. Floats carry twelve digits
after the decimal point, switching to exponent notation outside ``[1e-4, 1e12)``.
"""
from __future__ import annotations

import numpy as np

from .model import DownlinkDesign, PerformanceReport, UplinkDesign
from .optimizer import SolveResult
from .verify import DualityReport, PropertyVerdict, RegionSample

FORMATS = ("table", "records")


def fmt_float(x: float) -> str:
    x = float(x)
    if x == 0.0:
        return "0.000000000000"
    if not np.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    if 1e-4 <= abs(x) < 1e12:
        return f"{x:.12f}"
    return f"{x:.12e}"


def _value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v).replace("\n", " ")


def _flatten(key, v, out):
    if isinstance(v, np.ndarray) or isinstance(v, (list, tuple)):
        arr = np.asarray(v)
        if np.iscomplexobj(arr):
            for idx in np.ndindex(arr.shape):
                name = ".".join([key, *map(str, idx)])
                out.append((name + ".re", _value(arr[idx].real)))
                out.append((name + ".im", _value(arr[idx].imag)))
        else:
            for idx in np.ndindex(arr.shape):
                out.append((".".join([key, *map(str, idx)]), _value(arr[idx].item())))
    else:
        out.append((key, _value(v)))


def _design_fields(prefix, d):
    return [
        (f"{prefix}.direction", d.direction),
        (f"{prefix}.powers", d.powers),
        (f"{prefix}.beamformers", d.beamformers),
        (f"{prefix}.quant_noise", d.quant_noise),
    ]


def _perf_fields(r: PerformanceReport):
    return [
        ("direction", r.direction),
        ("sum_power", r.sum_power),
        ("user_rates", r.user_rates),
        ("fronthaul_rates", r.fronthaul_rates),
    ]


def result_fields(result) -> list[tuple[str, object]]:
    """Flatten any supported result object into ordered ``(name, value)`` pairs."""
    if isinstance(result, SolveResult):
        status = "converged" if result.converged else ("infeasible" if result.infeasible else "indeterminate")
        fields = [
            ("status", status),
            ("converged", result.converged),
            ("infeasible", result.infeasible),
            ("iterations", result.iterations),
        ]
        if result.report is not None:
            fields += _perf_fields(result.report)
        if result.design is not None:
            fields += _design_fields("design", result.design)
        if result.diagnostic:
            fields.append(("diagnostic", result.diagnostic))
        return fields
    if isinstance(result, DualityReport):
        return [
            ("pass", result.passed),
            ("tol", result.tol),
            ("max_rate_gap", result.max_rate_gap),
            ("max_fronthaul_gap", result.max_fronthaul_gap),
            ("power_gap", result.power_gap),
            ("idle_rrhs", result.idle_rrhs),
        ]
    if isinstance(result, PropertyVerdict):
        fields = [("holds", result.holds), ("checked", result.checked)]
        if result.counterexample:
            fields.append(("counterexample.axiom", result.counterexample["axiom"]))
        return fields
    if isinstance(result, RegionSample):
        return [
            ("direction", result.direction),
            ("seed", result.seed),
            ("count", result.count),
            ("rates", np.array(result.rates)),
        ]
    if isinstance(result, (UplinkDesign, DownlinkDesign)):
        return _design_fields("design", result)
    if isinstance(result, PerformanceReport):
        return _perf_fields(result)
    if isinstance(result, dict):
        return list(result.items())
    raise TypeError(f"cannot report {type(result).__name__}")


def emit_report(result, fmt: str = "records", header: dict | None = None) -> str:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    pairs: list[tuple[str, str]] = []
    for k, v in list((header or {}).items()) + result_fields(result):
        _flatten(k, v, pairs)
    if fmt == "records":
        return "".join(f"{k}={v}\n" for k, v in pairs)
    width = max((len(k) for k, _ in pairs), default=0)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in pairs)
