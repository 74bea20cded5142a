"""Population excess-risk estimation.

Under squared loss with centered Gaussian noise the excess risk of a
predictor f is exactly ||f - g||^2_{L^2(mu)}, so the Monte Carlo estimator
integrates the pointwise regret (f(X) - g(X))^2 over input samples only;
never sampling labels removes the noise variance from the estimator.

For bump interpolants on the uniform pure-noise model the same quantity has
a closed form (disjoint supports plus the bump scaling law), which serves
as the oracle the Monte Carlo path is checked against.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .bump import bump_eval, l2_modulus
from .errors import UnsupportedSpec
from .model import sample_points

_CHUNK = 65536


@dataclass(frozen=True)
class RiskEstimate:
    mean: float
    stderr: float
    samples: int
    method: str

    def within(self, other_value, k=3.0):
        """|mean - other_value| <= k * stderr (stderr 0 means exact)."""
        return abs(self.mean - other_value) <= k * self.stderr


def _mc_moments(value_fn, spec, m, seed, threads=1, chunk=_CHUNK):
    """Chunked Monte Carlo first/second moments with fixed reduction order.

    Every chunk draws from its own substream keyed by (seed, chunk index),
    so the result is independent of the thread count.
    """
    m = int(m)
    starts = list(range(0, m, chunk))

    def one(job):
        index, start = job
        size = min(chunk, m - start)
        rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
        xs = sample_points(spec, size, rng)
        vals = value_fn(xs, rng)
        return float(np.sum(vals)), float(np.sum(vals * vals)), size

    jobs = list(enumerate(starts))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, jobs))
    else:
        parts = [one(job) for job in jobs]
    total = 0.0
    total_sq = 0.0
    count = 0
    for s, s2, c in parts:
        total += s
        total_sq += s2
        count += c
    mean = total / count
    if count > 1:
        var = max(total_sq - count * mean * mean, 0.0) / (count - 1)
    else:
        var = 0.0
    return mean, math.sqrt(var / count), count


def excess_risk_mc(predictor, spec, m, seed, threads=1):
    """(1/m) sum_j (predictor(X_j) - g(X_j))^2 over X_j ~ mu_x."""
    if m < 100:
        raise UnsupportedSpec(f"need at least 100 Monte Carlo samples, got {m}")

    def values(xs, _rng):
        return (np.asarray(predictor(xs)) - spec.g_values(xs)) ** 2

    mean, stderr, count = _mc_moments(values, spec, m, seed, threads=threads)
    return RiskEstimate(mean=mean, stderr=stderr, samples=count,
                        method="monte-carlo")


def excess_risk_loss_gap_mc(predictor, spec, m, seed, threads=1):
    """Joint estimate of E[loss(predictor)] - E[loss(g)], labels sampled.

    Same target as :func:`excess_risk_mc` by total expectation, but with the
    label noise left in; used to cross-check the variance-reduced estimator.
    """
    if m < 100:
        raise UnsupportedSpec(f"need at least 100 Monte Carlo samples, got {m}")

    def values(xs, rng):
        g = spec.g_values(xs)
        y = g + rng.standard_normal(len(xs)) * np.sqrt(spec.sigma_sq_values(xs))
        pred = np.asarray(predictor(xs))
        return (pred - y) ** 2 - (g - y) ** 2

    mean, stderr, count = _mc_moments(values, spec, m, seed, threads=threads)
    return RiskEstimate(mean=mean, stderr=stderr, samples=count,
                        method="monte-carlo-loss-gap")


def bayes_risk_mc(spec, m, seed, threads=1):
    """Monte Carlo estimate of the Bayes risk E[sigma(X)^2]."""
    if m < 100:
        raise UnsupportedSpec(f"need at least 100 Monte Carlo samples, got {m}")

    def values(xs, _rng):
        return np.asarray(spec.sigma_sq_values(xs), dtype=float)

    mean, stderr, count = _mc_moments(values, spec, m, seed, threads=threads)
    return RiskEstimate(mean=mean, stderr=stderr, samples=count,
                        method="monte-carlo")


def _clipped_bump_l2_1d(center, radius, domain_radius):
    """integral over Omega of psi^2 for a bump truncated by the interval."""
    lo = max(center - radius, -domain_radius)
    hi = min(center + radius, domain_radius)
    if hi <= lo:
        return 0.0
    c = np.array([center])

    def integrand(pts):
        v = bump_eval(c, radius, pts)
        return v * v

    value, _, _ = quadrature.adaptive_box(
        integrand, [(lo, hi)], rel_tol=1e-10, start_panels=2, max_doublings=8
    )
    return value


def excess_risk_semianalytic(f, spec):
    """Exact L^2(mu) risk of a bump interpolant on uniform pure noise.

    With g = 0 and uniform density, disjoint supports give

        ||f||^2_{L^2(mu)} = sum_i y_i^2 integral_Omega psi_i^2 / |Omega|,

    where interior bumps contribute the scaled modulus r_i^d M_2 exactly
    and (in d = 1) bumps truncated by the boundary contribute a
    deterministic one-dimensional quadrature over the clipped interval.
    """
    if spec.ground_truth is not None:
        raise UnsupportedSpec("semi-analytic risk requires ground truth g = 0")
    if spec.density != "uniform":
        raise UnsupportedSpec("semi-analytic risk requires the uniform density")
    d = f.dim
    reach = np.linalg.norm(f.centers, axis=1) + f.support_radii
    crossing = reach > spec.radius
    if np.any(crossing) and d != 1:
        raise UnsupportedSpec(
            "supports crossing the boundary are only handled in d = 1"
        )
    m2 = l2_modulus(d)
    interior = ~crossing
    value = float(np.sum(
        f.weights[interior] ** 2 * f.support_radii[interior] ** d)) * m2
    for i in np.nonzero(crossing)[0]:
        value += f.weights[i] ** 2 * _clipped_bump_l2_1d(
            float(f.centers[i, 0]), float(f.support_radii[i]), spec.radius)
    return RiskEstimate(mean=value / spec.volume, stderr=0.0, samples=0,
                        method="semi-analytic")
