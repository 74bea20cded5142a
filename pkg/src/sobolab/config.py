"""Structured text configs: sections [params], [distribution], [sweep].

The exact field names below are the interchange contract of the CLI; see
``sobolab --help`` for the same list.

[params]
    k, p, d                 Sobolev order, integrability, dimension.

[distribution]
    radius                  domain ball radius (default 1.0)
    density                 uniform | parabolic
    tilt                    parabolic tilt in [0, 1)
    sigma                   constant | quadratic
    sigma_a, sigma_b        constant: sigma(x) = sigma_a;
                            quadratic: sigma(x)^2 = sigma_a + sigma_b ||x||^2
    ground_truth            zero | bumps
    bumps                   one bump per line: d center coords, radius, weight

[sweep]
    id                      output file stem
    kind                    norm_vs_n | delta_subset | weighted_delta_sum |
                            risk_vs_n | risk_vs_gamma | morrey
    n_grid                  whitespace-separated increasing sizes (>= 4)
    trials                  per-n repetitions (>= 5)
    seed                    master seed (CLI --seed overrides)
    shrink                  fixed shrink for risk_vs_n bumps
    shrink_grid             shrink values for risk_vs_gamma
    beta                    weighted-sum exponent, in (0, d/2)
    predictor               bump | kernel | bayes
    nu, lengthscale         kernel family parameters
    mc_samples              Monte Carlo budget per risk estimate
    plateau_ratio           plateau contract ratio (default 0.2)
    risk_floor              plateau contract floor (default 0.01)
"""

from __future__ import annotations

import configparser

import numpy as np

from .bump import BumpSum, SobolevParams
from .errors import ConfigInvalid, SobolabError
from .experiments import SweepConfig
from .model import DistributionSpec


def _read_ini(path):
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigInvalid(f"config file not found: {path}") from None
    except configparser.Error as exc:
        raise ConfigInvalid(f"{path}: {exc}") from None
    return parser


def _get(parser, section, key, cast, default=None, required=False):
    if not parser.has_option(section, key):
        if required:
            raise ConfigInvalid(f"{section}.{key}: required field missing")
        return default
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except (TypeError, ValueError):
        raise ConfigInvalid(
            f"{section}.{key}: cannot parse {raw!r}"
        ) from None


def _parse_bumps(raw, d):
    centers, radii, weights = [], [], []
    for lineno, line in enumerate(raw.strip().splitlines(), 1):
        parts = line.split()
        if len(parts) != d + 2:
            raise ConfigInvalid(
                f"distribution.bumps: line {lineno} needs {d + 2} numbers "
                f"(center x{d}, radius, weight), got {len(parts)}"
            )
        try:
            nums = [float(v) for v in parts]
        except ValueError:
            raise ConfigInvalid(
                f"distribution.bumps: line {lineno} is not numeric"
            ) from None
        centers.append(nums[:d])
        radii.append(nums[d])
        weights.append(nums[d + 1])
    if not centers:
        raise ConfigInvalid("distribution.bumps: at least one bump required")
    return BumpSum(centers=np.asarray(centers), radii=np.asarray(radii),
                   weights=np.asarray(weights))


def parse_params(parser):
    if not parser.has_section("params"):
        raise ConfigInvalid("params: section missing")
    k = _get(parser, "params", "k", int, required=True)
    p = _get(parser, "params", "p", float, required=True)
    d = _get(parser, "params", "d", int, required=True)
    try:
        return SobolevParams(k=k, p=p, d=d)
    except SobolabError as exc:
        raise ConfigInvalid(f"params: {exc}") from None


def parse_distribution(parser, params):
    section = "distribution"
    if not parser.has_section(section):
        raise ConfigInvalid("distribution: section missing")
    kind = _get(parser, section, "ground_truth", str, default="zero").strip()
    if kind == "zero":
        ground_truth = None
    elif kind == "bumps":
        raw = _get(parser, section, "bumps", str, required=True)
        ground_truth = _parse_bumps(raw, params.d)
    else:
        raise ConfigInvalid(
            f"distribution.ground_truth: expected zero|bumps, got {kind!r}"
        )
    try:
        return DistributionSpec(
            params=params,
            radius=_get(parser, section, "radius", float, default=1.0),
            density=_get(parser, section, "density", str,
                         default="uniform").strip(),
            tilt=_get(parser, section, "tilt", float, default=0.0),
            ground_truth=ground_truth,
            sigma_kind=_get(parser, section, "sigma", str,
                            default="constant").strip(),
            sigma_a=_get(parser, section, "sigma_a", float, default=1.0),
            sigma_b=_get(parser, section, "sigma_b", float, default=0.0),
        )
    except SobolabError as exc:
        raise ConfigInvalid(f"distribution: {exc}") from None


def _float_tuple(raw):
    return tuple(float(v) for v in raw.split())


def _int_tuple(raw):
    return tuple(int(v) for v in raw.split())


def parse_sweep(parser, params, spec, seed_override=None):
    section = "sweep"
    if not parser.has_section(section):
        raise ConfigInvalid("sweep: section missing")
    seed = seed_override
    if seed is None:
        seed = _get(parser, section, "seed", int, default=None)
    config = SweepConfig(
        config_id=_get(parser, section, "id", str, default="sweep").strip(),
        kind=_get(parser, section, "kind", str, required=True).strip(),
        params=params,
        spec=spec,
        n_grid=_get(parser, section, "n_grid", _int_tuple, default=()),
        trials=_get(parser, section, "trials", int, default=20),
        master_seed=seed,
        shrink=_get(parser, section, "shrink", float, default=1.0),
        shrink_grid=_get(parser, section, "shrink_grid", _float_tuple,
                         default=(1.0, 0.7, 0.5, 0.35, 0.25)),
        beta=_get(parser, section, "beta", float, default=None),
        predictor=_get(parser, section, "predictor", str,
                       default="bump").strip(),
        kernel_nu=_get(parser, section, "nu", float, default=None),
        kernel_lengthscale=_get(parser, section, "lengthscale", float,
                                default=1.0),
        mc_samples=_get(parser, section, "mc_samples", int, default=200_000),
        plateau_ratio=_get(parser, section, "plateau_ratio", float,
                           default=0.2),
        risk_floor=_get(parser, section, "risk_floor", float, default=0.01),
    )
    return config.validate()


def load_distribution(path):
    """(params, spec) from a config with [params] and [distribution]."""
    parser = _read_ini(path)
    params = parse_params(parser)
    return params, parse_distribution(parser, params)


def load_sweep(path, seed_override=None):
    """Full sweep config from a file with all three sections."""
    parser = _read_ini(path)
    params = parse_params(parser)
    spec = parse_distribution(parser, params)
    return parse_sweep(parser, params, spec, seed_override=seed_override)
