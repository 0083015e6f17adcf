"""Experiment configuration, orchestration, and machine-readable reporting.

Config files are JSON with an integer ``schema_version`` (currently 1) and
tagged records::

    {
      "schema_version": 1,
      "model": {
        "premium_rate": 2.0,
        "claim":  {"kind": "exponential", "mean": 1.0},
        "mixing": {"atoms": [[1.0, 0.3], [0.5, 0.7]], "density": null}
      },
      "rule": {"rule": "threshold", "depth": 1.0},
      "mode": "compare",
      "method": "ladder_mc",
      "u_grid": [0.0, 1.0, 5.0, 10.0],
      "n": 1000000,
      "seed": 20260810,
      "workers": 1
    }

Claim kinds: exponential(mean), pareto(shape, scale), gamma(shape, scale),
mixture(weights, components).  Mixing: atoms [[location, mass], ...] plus an
optional density, kind uniform(lo, hi, weight, declare_endpoint) or
endpoint_power(upper, width, order, weight).  Rules: classical,
threshold(depth), exp_absorption(rate), table(y, w, flags...).

Modes: simulate (estimates only), asymptotics (constants dump), compare
(estimates joined with the applicable regime prediction), table (compare
plus a monotone-trend summary).  Methods: ladder_mc, tilted_is,
quadrature_exact (exponential claims only); for tilted_is, ``n`` counts
replications per stratum.

Outputs: ``<mode>.csv`` with fixed columns
u,mean,std_error,prediction,ratio,ci_low,ci_high,method (floats printed with
17 significant digits) and ``report.json`` echoing the config (minus
execution-only fields) plus every computed constant.  Identical config and
seed give byte-identical outputs at any worker count.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import asymptotics
from .distributions import (Exponential, Gamma, Mixture, MixingDistribution,
                            Pareto, TailClass, atom_mixing,
                            endpoint_power_mixing, uniform_mixing)
from .errors import ConfigError, DomainError, HypothesisViolation
from .ladder import RiskModel, estimate_modified
from .quadrature import integrate
from .rare_event import is_estimate_mixed
from .rules import (Classical, DeficitThreshold, ExponentialAbsorption,
                    Regime, Tabulated, check_hypotheses)

SCHEMA_VERSION = 1
MODES = ("simulate", "asymptotics", "compare", "table")
METHODS = ("ladder_mc", "tilted_is", "quadrature_exact")


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _need(record, key, kind, where):
    if key not in record:
        raise ConfigError(f"{where}: missing '{key}'")
    val = record[key]
    if kind is float and isinstance(val, (int, float)) \
            and not isinstance(val, bool):
        return float(val)
    if kind is int and isinstance(val, int) and not isinstance(val, bool):
        return val
    if isinstance(val, kind) and not isinstance(val, bool):
        return val
    raise ConfigError(f"{where}: '{key}' must be {kind.__name__}")


def _build_claim(record):
    kind = _need(record, "kind", str, "claim")
    try:
        if kind == "exponential":
            return Exponential(mean=_need(record, "mean", float, "claim"))
        if kind == "pareto":
            return Pareto(shape=_need(record, "shape", float, "claim"),
                          scale=_need(record, "scale", float, "claim"))
        if kind == "gamma":
            return Gamma(shape=_need(record, "shape", float, "claim"),
                         scale=_need(record, "scale", float, "claim"))
        if kind == "mixture":
            comps = tuple(_build_claim(c)
                          for c in _need(record, "components", list, "claim"))
            return Mixture(weights=tuple(_need(record, "weights", list, "claim")),
                           components=comps)
    except DomainError as exc:
        raise ConfigError(f"claim: {exc}") from exc
    raise ConfigError(f"claim: unknown kind '{kind}'")


def _build_mixing(record):
    atoms = tuple((float(l), float(p))
                  for l, p in record.get("atoms", ()))
    dens = record.get("density")
    try:
        if dens is None:
            return atom_mixing(atoms)
        kind = _need(dens, "kind", str, "mixing.density")
        if kind == "uniform":
            return uniform_mixing(
                lo=_need(dens, "lo", float, "mixing.density"),
                hi=_need(dens, "hi", float, "mixing.density"),
                weight=float(dens.get("weight", 1.0)),
                atoms=atoms,
                declare_endpoint=bool(dens.get("declare_endpoint", False)))
        if kind == "endpoint_power":
            return endpoint_power_mixing(
                upper=_need(dens, "upper", float, "mixing.density"),
                width=_need(dens, "width", float, "mixing.density"),
                order=_need(dens, "order", float, "mixing.density"),
                weight=float(dens.get("weight", 1.0)),
                atoms=atoms)
    except DomainError as exc:
        raise ConfigError(f"mixing: {exc}") from exc
    raise ConfigError(f"mixing.density: unknown kind '{kind}'")


def _build_rule(record):
    tag = _need(record, "rule", str, "rule")
    try:
        if tag == "classical":
            return Classical()
        if tag == "threshold":
            return DeficitThreshold(depth=_need(record, "depth", float, "rule"))
        if tag == "exp_absorption":
            return ExponentialAbsorption(rate=_need(record, "rate", float, "rule"))
        if tag == "table":
            return Tabulated(
                grid_y=tuple(_need(record, "y", list, "rule")),
                grid_w=tuple(_need(record, "w", list, "rule")),
                is_monotone=bool(record.get("is_monotone", True)),
                is_continuous=bool(record.get("is_continuous", True)),
                limit_at_minus_infinity_is_one=bool(
                    record.get("limit_at_minus_infinity_is_one", True)))
    except DomainError as exc:
        raise ConfigError(f"rule: {exc}") from exc
    raise ConfigError(f"rule: unknown tag '{tag}'")


@dataclass(frozen=True)
class ExperimentConfig:
    model: RiskModel
    rule: object
    mode: str
    method: str
    u_grid: tuple
    n: int
    seed: int
    workers: int
    out_dir: str | None
    raw: dict  # validated config as parsed, for the report echo


def parse_config(data):
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version {version!r} not supported (expected {SCHEMA_VERSION})")
    model_rec = _need(data, "model", dict, "config")
    try:
        model = RiskModel(
            premium_rate=_need(model_rec, "premium_rate", float, "model"),
            claim=_build_claim(_need(model_rec, "claim", dict, "model")),
            mixing=_build_mixing(_need(model_rec, "mixing", dict, "model")))
    except DomainError as exc:
        raise ConfigError(f"model: {exc}") from exc
    rule = _build_rule(data.get("rule", {"rule": "classical"}))
    mode = data.get("mode", "compare")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}")
    method = data.get("method", "ladder_mc")
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}")
    u_grid = tuple(float(u) for u in data.get("u_grid", ()))
    if mode != "asymptotics":
        if not u_grid:
            raise ConfigError("u_grid must be nonempty")
        if any(u < 0 for u in u_grid) or any(np.diff(u_grid) <= 0):
            raise ConfigError("u_grid must be nonnegative and strictly increasing")
    n = data.get("n", 0 if mode == "asymptotics" else None)
    if mode != "asymptotics" and method != "quadrature_exact":
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ConfigError("n must be an integer >= 1")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) \
            or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    workers = data.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError("workers must be an integer >= 1")
    echo = {k: v for k, v in data.items() if k not in ("workers", "out_dir")}
    return ExperimentConfig(model=model, rule=rule, mode=mode, method=method,
                            u_grid=u_grid, n=(n or 0), seed=seed,
                            workers=workers, out_dir=data.get("out_dir"),
                            raw=echo)


def load_config(path, overrides=()):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    for item in overrides:
        data = apply_override(data, item)
    return parse_config(data)


def apply_override(data, item):
    """Apply one 'dotted.key=json_value' override to the raw config dict."""
    if "=" not in item:
        raise ConfigError(f"override '{item}' is not key=value")
    key, _, text = item.partition("=")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    node = data
    parts = key.split(".")
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value
    return data


# ---------------------------------------------------------------------------
# regime selection and predictions
# ---------------------------------------------------------------------------

def select_regime(model):
    """The applicable asymptotic regime for a model, or HypothesisViolation."""
    if model.claim.tail_class is TailClass.SUBEXPONENTIAL_INTEGRATED_TAIL:
        return Regime.HEAVY_TAIL
    mixing = model.mixing
    if mixing.endpoint_atom_mass > 0:
        return Regime.LIGHT_ENDPOINT_ATOM
    dens = mixing.density
    if dens is not None and dens.expansion is not None:
        return Regime.LIGHT_ENDPOINT_DENSITY
    raise HypothesisViolation(
        "no applicable regime: light-tailed mixing with neither an endpoint "
        "atom nor a declared endpoint density expansion",
        failed=("regime_selection",))


def predict(model, rule, u, regime=None):
    """Regime prediction of the modified ruin probability at capital u."""
    regime = select_regime(model) if regime is None else regime
    if regime is Regime.HEAVY_TAIL:
        return asymptotics.heavy_prediction(model, rule, u)
    if regime is Regime.LIGHT_ENDPOINT_ATOM:
        return asymptotics.atom_prediction(model, rule, u)[0]
    return asymptotics.sharp_prediction(model, rule, u)[0]


def regime_constants(model, rule):
    """Constants dictionary for the report, keyed by role."""
    regime = select_regime(model)
    out = {"regime": regime.value,
           "claim_mean": model.claim.mean,
           "upper_endpoint": model.mixing.upper_endpoint}
    if regime is Regime.HEAVY_TAIL:
        check_hypotheses(rule, regime).raise_if_failed()
        out["heavy_prefactor"] = asymptotics.heavy_prefactor(model)
        return out
    check_hypotheses(rule, regime).raise_if_failed()
    l1 = model.mixing.upper_endpoint
    r1 = asymptotics.adjustment_coefficient(model, l1)
    out["adjustment"] = r1
    out["cramer"] = asymptotics.cramer_constant(model, l1, adjustment=r1)
    out["ratio_constant"] = asymptotics.limiting_ratio_constant(model, l1, rule)
    if regime is Regime.LIGHT_ENDPOINT_ATOM:
        out["endpoint_atom_mass"] = model.mixing.endpoint_atom_mass
        asymptotics.atom_prediction(model, rule, 1.0)  # runs the gap checks
    else:
        reg = asymptotics.endpoint_regularity(model)
        out.update(slope=reg.slope, amplitude=reg.amplitude, order=reg.order,
                   window=reg.window, gap=reg.gap)
    return out


# ---------------------------------------------------------------------------
# exact quadrature oracle for exponential claims
# ---------------------------------------------------------------------------

def severity_weight_mean_exponential(rule, mean):
    """Integral of w(-x) against the Exponential(mean) deficit law.

    By memorylessness the deficit given ruin is Exponential(mean) at every
    capital and intensity, so this single constant carries the whole
    modified/classical ratio for exponential claims.
    """
    if isinstance(rule, Classical):
        return 1.0
    cut = 50.0 * mean
    floor = 1e-300

    def f(x):
        return float(rule.weight(-max(x, floor))) * math.exp(-x / mean) / mean

    val = integrate(f, 0.0, cut, abs_tol=1e-12, points=rule.breakpoints())
    # deficits beyond the cutoff carry weight ~ w(-cut); the tail mass is
    # exp(-50), far below every tolerance in use
    return val + float(rule.weight(-cut)) * math.exp(-cut / mean)


def quadrature_exact_mixed(model, rule, u):
    """Exact (to quadrature tolerance) modified mixed ruin probability for
    exponential claims:

        psi(u) = C_w * integral of (l*mean/c) exp(-(1/mean - l/c) u) G(dl).

    The integrand is evaluated relative to the endpoint decay exp(-R1*u) so
    deep-tail values (u in the hundreds) lose no precision to underflow.
    """
    if not isinstance(model.claim, Exponential):
        raise DomainError("quadrature oracle requires exponential claims")
    model.require_net_profit()
    mean = model.claim.mean
    c = model.premium_rate
    l1 = model.mixing.upper_endpoint
    r1 = 1.0 / mean - l1 / c
    cw = severity_weight_mean_exponential(rule, mean)

    def scaled(ell):
        ell = np.asarray(ell, dtype=float)
        gap = (l1 - ell) / c  # R(ell) - R1
        return (ell * mean / c) * np.exp(-gap * u)

    return cw * math.exp(-r1 * u) * model.mixing.integrate(scaled, tol=1e-12)


# ---------------------------------------------------------------------------
# runs and reporting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    u: float
    mean: float
    std_error: float
    prediction: float | None
    ratio: float | None
    ci_low: float | None
    ci_high: float | None
    method: str
    n: int


def _estimate_at(config, u):
    model, rule = config.model, config.rule
    if config.method == "ladder_mc":
        est = estimate_modified(model, rule, u, config.n, config.seed,
                                workers=config.workers)
        return est.mean, est.std_error, est.n
    if config.method == "tilted_is":
        if model.mixing.density is not None:
            est = is_estimate_mixed(model, rule, u, config.n, config.seed)
        else:
            est = is_estimate_mixed(model, rule, u, config.n, config.seed,
                                    cells=0)
        return est.mean, est.std_error, est.n
    value = quadrature_exact_mixed(model, rule, u)
    return value, 0.0, 0


def trend_statistic(ratios):
    """Fraction of successive ratio pairs moving toward 1."""
    ratios = [r for r in ratios if r is not None and math.isfinite(r)]
    if len(ratios) < 2:
        return float("nan")
    moves = sum(1 for a, b in zip(ratios, ratios[1:])
                if abs(b - 1.0) < abs(a - 1.0))
    return moves / (len(ratios) - 1)


def _rows_for(config, with_prediction):
    regime = select_regime(config.model) if with_prediction else None
    rows = []
    for u in config.u_grid:
        mean, se, n = _estimate_at(config, u)
        pred = ratio = lo = hi = None
        if with_prediction:
            pred = predict(config.model, config.rule, u, regime=regime)
            if pred > 0:
                ratio = mean / pred
                z = 1.959963984540054
                lo = (mean - z * se) / pred
                hi = (mean + z * se) / pred
        rows.append(ComparisonRow(u=u, mean=mean, std_error=se,
                                  prediction=pred, ratio=ratio, ci_low=lo,
                                  ci_high=hi, method=config.method, n=n))
    return rows


def _fmt(x):
    return "" if x is None else format(float(x), ".17g")


def write_rows_csv(rows, path):
    lines = ["u,mean,std_error,prediction,ratio,ci_low,ci_high,method"]
    for r in rows:
        lines.append(",".join([
            _fmt(r.u), _fmt(r.mean), _fmt(r.std_error), _fmt(r.prediction),
            _fmt(r.ratio), _fmt(r.ci_low), _fmt(r.ci_high), r.method]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def run(config, out_dir=None):
    """Execute one experiment; returns the report dict and writes
    <mode>.csv (except asymptotics mode) plus report.json to out_dir."""
    out_dir = out_dir or config.out_dir or "."
    report = {"schema_version": SCHEMA_VERSION, "config": config.raw}
    rows = None
    if config.mode == "asymptotics":
        report["constants"] = regime_constants(config.model, config.rule)
    else:
        with_prediction = config.mode in ("compare", "table")
        if with_prediction:
            report["constants"] = regime_constants(config.model, config.rule)
        else:
            config.model.require_net_profit()
        rows = _rows_for(config, with_prediction)
        report["rows"] = [
            {"u": r.u, "mean": r.mean, "std_error": r.std_error,
             "prediction": r.prediction, "ratio": r.ratio,
             "ci_low": r.ci_low, "ci_high": r.ci_high, "method": r.method,
             "n": r.n}
            for r in rows]
        if config.mode == "table":
            report["trend_statistic"] = trend_statistic(
                [r.ratio for r in rows])
    os.makedirs(out_dir, exist_ok=True)
    if rows is not None:
        write_rows_csv(rows, os.path.join(out_dir, f"{config.mode}.csv"))
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report
