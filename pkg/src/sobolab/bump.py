"""Smooth bump functions and their exact W^{k,p} norms.

The radial profile is the canonical C-infinity step built from
``h(s) = exp(-1/s)``:

    phi(t) = S((1 - t) / (3/4)),   S(s) = h(s) / (h(s) + h(1 - s)),

so ``phi = 1`` on [0, 1/4], ``phi = 0`` on [1, inf), and the scaled bump
``psi_delta(x) = phi(||x - c||^2 / delta^2)`` equals 1 on the half-radius
ball and vanishes outside radius ``delta``.

Derivatives of any mixed order up to 3 come from nested forward-mode jets
(:mod:`sobolab.jets`); reference moduli ``M_alpha = integral |D^alpha
psi_1|^p`` are computed once by adaptive Gauss-Legendre quadrature, after
which every seminorm of every scaled bump follows from the change of
variables

    integral |D^alpha psi_delta|^p = delta^(d - |alpha| p) * M_alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from . import quadrature
from .errors import (
    InvalidRange,
    MismatchedLengths,
    NonpositiveRadius,
    UnknownMultiIndex,
    UnsupportedDimension,
    UnsupportedOrder,
)
from .jets import Jet, nilpotent_series, jet_exp, jet_recip

PLATEAU_END = 0.25
SUPPORT_END = 1.0
MAX_ORDER = 3

_STEP_SCALE = 1.0 / (SUPPORT_END - PLATEAU_END)  # 4/3


@dataclass(frozen=True)
class SobolevParams:
    """The (k, p, d) triple in the supercritical regime kp > d."""

    k: int
    p: float
    d: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise UnsupportedDimension(f"d must be 1, 2 or 3, got {self.d}")
        if not (isinstance(self.k, int) and 1 <= self.k):
            raise UnsupportedOrder(f"k must be a positive integer, got {self.k}")
        if self.k > MAX_ORDER:
            raise UnsupportedOrder(f"derivative orders capped at {MAX_ORDER}")
        if not (1.0 <= self.p < math.inf):
            raise InvalidRange(f"p must lie in [1, inf), got {self.p}")
        if self.k * self.p <= self.d:
            raise InvalidRange(
                f"need kp > d for pointwise evaluation, got kp={self.k * self.p}"
            )

    @property
    def strict_range(self):
        """True iff k in (d/p, 1.5 d/p), the regime of the scaling laws."""
        return self.d / self.p < self.k < 1.5 * self.d / self.p


def multi_indices(d, k):
    """All multi-indices alpha with |alpha| <= k, sorted by (|alpha|, alpha)."""
    idx = [a for a in product(range(k + 1), repeat=d) if sum(a) <= k]
    return sorted(idx, key=lambda a: (sum(a), a))


# -- profile ----------------------------------------------------------------


def _smoothstep_values(s):
    """S(s) on arrays, with the flat branches handled exactly."""
    s = np.asarray(s, dtype=float)
    mid = (s > 0.0) & (s < 1.0)
    safe = np.where(mid, s, 0.5)
    h1 = np.exp(-1.0 / safe)
    h2 = np.exp(-1.0 / (1.0 - safe))
    vals = h1 / (h1 + h2)
    return np.where(s <= 0.0, 0.0, np.where(s >= 1.0, 1.0, vals))


def profile_values(t):
    """phi(t), vectorized."""
    t = np.asarray(t, dtype=float)
    return _smoothstep_values((1.0 - t) * _STEP_SCALE)


def _smoothstep_taylor(s_jet):
    """S applied to a univariate jet, branch-masked on the constant term."""
    s0 = s_jet.value
    mid = (s0 > 0.0) & (s0 < 1.0)
    safe_coef = s_jet.coef.copy()
    safe_coef[0] = np.where(mid, s0, 0.5)
    s = Jet(s_jet.orders, safe_coef)
    h1 = jet_exp(-jet_recip(s))
    h2 = jet_exp(-jet_recip(1.0 - s))
    out = (h1 * jet_recip(h1 + h2)).coef
    out *= mid  # flat branches: all derivatives vanish
    out[0] += np.where(s0 >= 1.0, 1.0, 0.0)
    return out


def profile_taylor(t, order):
    """Taylor coefficients phi^(j)(t)/j! for j = 0..order, stacked first."""
    if not (0 <= order <= MAX_ORDER):
        raise UnsupportedOrder(f"profile derivatives implemented up to {MAX_ORDER}")
    t = np.asarray(t, dtype=float)
    jt = Jet.variable(t, order)
    return _smoothstep_taylor((1.0 - jt) * _STEP_SCALE)


def profile_eval(t, derivative_order=0):
    """phi^(j)(t) for j <= 3; scalar in, scalar out."""
    j = int(derivative_order)
    if not (0 <= j <= MAX_ORDER):
        raise UnsupportedOrder(f"profile derivatives implemented up to {MAX_ORDER}")
    coefs = profile_taylor(np.asarray(t, dtype=float), j)
    out = coefs[j] * math.factorial(j)
    return float(out) if out.ndim == 0 else out


# -- scaled bumps ------------------------------------------------------------


def _radial_sq(x, center, delta):
    x = np.asarray(x, dtype=float)
    diff = (x - center) / delta
    out = diff[..., 0] * diff[..., 0]
    for jax in range(1, diff.shape[-1]):
        out = out + diff[..., jax] * diff[..., jax]
    return out


def bump_eval(center, delta, x):
    """psi_delta centered at ``center``, evaluated at ``x`` (batched)."""
    if not delta > 0.0:
        raise NonpositiveRadius(f"bump radius must be positive, got {delta}")
    center = np.asarray(center, dtype=float)
    return profile_values(_radial_sq(x, center, delta))


def bump_partial(alpha, center, delta, x):
    """Exact mixed partial D^alpha psi_delta at ``x`` via nested jets."""
    if not delta > 0.0:
        raise NonpositiveRadius(f"bump radius must be positive, got {delta}")
    center = np.asarray(center, dtype=float)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != center.shape[-1]:
        raise MismatchedLengths(
            f"multi-index length {len(alpha)} != dimension {center.shape[-1]}"
        )
    if any(a < 0 for a in alpha):
        raise UnsupportedOrder("multi-index entries must be nonnegative")
    total = sum(alpha)
    if total > MAX_ORDER:
        raise UnsupportedOrder(f"mixed partials implemented up to order {MAX_ORDER}")
    if total == 0:
        return bump_eval(center, delta, x)

    x = np.asarray(x, dtype=float)
    w = (x - center) / delta
    batch = w.shape[:-1]
    active = [j for j, a in enumerate(alpha) if a > 0]
    orders = tuple(alpha[j] for j in active)

    # u(x) = ||x - c||^2 / delta^2 as an exact polynomial jet in the
    # active coordinates.
    coef = np.zeros(tuple(o + 1 for o in orders) + batch)
    u0 = w[..., 0] * w[..., 0]
    for jax in range(1, w.shape[-1]):
        u0 = u0 + w[..., jax] * w[..., jax]
    coef[(0,) * len(orders)] = u0
    for pos, jax in enumerate(active):
        one = [0] * len(orders)
        one[pos] = 1
        coef[tuple(one)] = 2.0 * w[..., jax] / delta
        if orders[pos] >= 2:
            two = [0] * len(orders)
            two[pos] = 2
            coef[tuple(two)] = 1.0 / (delta * delta)
    u = Jet(orders, coef)

    outer = profile_taylor(u0, total)  # phi coefficients at u0
    res = nilpotent_series(list(outer), u.nilpotent())
    scale = math.prod(math.factorial(a) for a in alpha)
    out = res.coef[orders] * scale
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BumpSum:
    """A finite sum of disjointly supported bumps, sum_i w_i psi_{r_i}.

    This is the ground-truth/interpolant building block: disjoint supports
    make every norm computation a sum over the individual bumps.
    """

    centers: np.ndarray
    radii: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        centers = np.atleast_2d(np.array(self.centers, dtype=float))
        radii = np.atleast_1d(np.array(self.radii, dtype=float))
        weights = np.atleast_1d(np.array(self.weights, dtype=float))
        if not (len(centers) == len(radii) == len(weights)):
            raise MismatchedLengths("centers, radii, weights must align")
        if np.any(radii <= 0.0):
            raise NonpositiveRadius("all support radii must be positive")
        for arr in (centers, radii, weights):
            arr.flags.writeable = False
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "weights", weights)
        for i in range(len(centers)):
            for j in range(i + 1, len(centers)):
                gap = float(np.linalg.norm(centers[i] - centers[j]))
                if gap < radii[i] + radii[j]:
                    raise MismatchedLengths(
                        f"supports of bumps {i} and {j} overlap"
                    )

    @property
    def n(self):
        return len(self.weights)

    @property
    def dim(self):
        return self.centers.shape[1]

    @property
    def sup_abs(self):
        """sup |f|: bumps peak at their weights and never overlap."""
        return float(np.max(np.abs(self.weights), initial=0.0))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for c, r, w in zip(self.centers, self.radii, self.weights):
            out = out + w * bump_eval(c, float(r), x)
        return float(out) if out.ndim == 0 else out

    def partial(self, alpha, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for c, r, w in zip(self.centers, self.radii, self.weights):
            out = out + w * bump_partial(alpha, c, float(r), x)
        return float(out) if out.ndim == 0 else out


# -- reference moduli ---------------------------------------------------------


@dataclass(frozen=True)
class ReferenceModuli:
    """Table of M_alpha = integral |D^alpha psi_1|^p over |alpha| <= k."""

    params: SobolevParams
    table: dict
    panels: dict = field(default_factory=dict)
    est_error: dict = field(default_factory=dict)
    rel_tol: float = 1e-8

    def modulus(self, alpha):
        alpha = tuple(int(a) for a in alpha)
        try:
            return self.table[alpha]
        except KeyError:
            raise UnknownMultiIndex(
                f"multi-index {alpha} not in the table (k={self.params.k})"
            ) from None

    @property
    def indices(self):
        return sorted(self.table, key=lambda a: (sum(a), a))


def integrate_partial_power(alpha, p, delta, rel_tol=1e-8, max_doublings=6,
                            order=quadrature.GL_ORDER):
    """Adaptive quadrature of integral |D^alpha psi_delta|^p over R^d.

    Independent of the scaling shortcut: the integrand is evaluated at the
    requested delta, over [0, delta]^d (the integrand is even in every
    coordinate), and only then compared against delta^(d-|alpha|p) M_alpha
    by callers that test the identity.
    """
    alpha = tuple(int(a) for a in alpha)
    d = len(alpha)
    center = np.zeros(d)

    def integrand(pts):
        return np.abs(bump_partial(alpha, center, delta, pts)) ** p

    value, panels, err = quadrature.adaptive_box(
        integrand, [(0.0, delta)] * d, rel_tol=rel_tol,
        start_panels=1, max_doublings=max_doublings, order=order,
    )
    scale = 2.0 ** d
    return scale * value, panels, scale * err


def integrate_partial_power_fixed(alpha, p, delta, panels,
                                  order=quadrature.GL_ORDER):
    """Like :func:`integrate_partial_power` but at a fixed panel count.

    Useful when a converged panel count is already known (for example from
    the moduli metadata) and re-running the refinement ladder would only
    repeat work.
    """
    alpha = tuple(int(a) for a in alpha)
    d = len(alpha)
    center = np.zeros(d)

    def integrand(pts):
        return np.abs(bump_partial(alpha, center, delta, pts)) ** p

    value = quadrature.integrate_box(
        integrand, [(0.0, delta)] * d, panels, order=order
    )
    return 2.0 ** d * value


def reference_moduli(params, rel_tol=1e-8, max_doublings=6,
                     order=quadrature.GL_ORDER):
    """Compute the full M_alpha table for ``params`` deterministically.

    psi_1 is radial, so M_alpha is exactly invariant under permutations of
    alpha; only one representative per permutation class is integrated and
    the value is shared across the class.
    """
    table, panels, errs = {}, {}, {}
    by_class = {}
    for alpha in multi_indices(params.d, params.k):
        rep = tuple(sorted(alpha))
        if rep not in by_class:
            by_class[rep] = integrate_partial_power(
                alpha, params.p, 1.0, rel_tol=rel_tol,
                max_doublings=max_doublings, order=order,
            )
        value, n_panels, err = by_class[rep]
        table[alpha] = value
        panels[alpha] = n_panels
        errs[alpha] = err
    return ReferenceModuli(params=params, table=table, panels=panels,
                           est_error=errs, rel_tol=rel_tol)


def scaled_seminorm(alpha, delta, moduli):
    """Exact integral |D^alpha psi_delta|^p = delta^(d-|alpha|p) M_alpha."""
    if not delta > 0.0:
        raise NonpositiveRadius(f"bump radius must be positive, got {delta}")
    m = moduli.modulus(alpha)
    params = moduli.params
    return delta ** (params.d - sum(alpha) * params.p) * m


def bump_norm(delta, moduli):
    """Exact W^{k,p} norm of psi_delta: sum_alpha (scaled seminorm)^(1/p).

    Bounded by ``moduli_constant(moduli) * (1 + delta^((d-kp)/p))`` for
    delta <= 1 (for large delta the plateau's L^p mass grows like
    delta^(d/p) instead).
    """
    if not delta > 0.0:
        raise NonpositiveRadius(f"bump radius must be positive, got {delta}")
    p = moduli.params.p
    return sum(scaled_seminorm(a, delta, moduli) ** (1.0 / p)
               for a in moduli.indices)


def moduli_constant(moduli):
    """C_M = sum_alpha max(M_alpha^(1/p), 1), the profile-dependent constant
    in the small-radius norm bound."""
    p = moduli.params.p
    return sum(max(m ** (1.0 / p), 1.0) for m in moduli.table.values())


@lru_cache(maxsize=None)
def l2_modulus(d, rel_tol=1e-9):
    """integral psi_1^2 over R^d (the alpha = 0, p = 2 modulus)."""
    center = np.zeros(d)

    def integrand(pts):
        v = bump_eval(center, 1.0, pts)
        return v * v

    value, _, _ = quadrature.adaptive_box(
        integrand, [(0.0, 1.0)] * d, rel_tol=rel_tol, start_panels=1,
        max_doublings=7,
    )
    return 2.0 ** d * value


# -- cache file --------------------------------------------------------------


def save_moduli(moduli, path):
    """Key-value cache: one line per multi-index, hex-float full precision."""
    params = moduli.params
    lines = [
        "# sobolab reference moduli",
        f"# k={params.k} p={params.p!r} d={params.d} "
        f"rel_tol={moduli.rel_tol!r} order={quadrature.GL_ORDER}",
    ]
    for alpha in moduli.indices:
        lines.append(
            f"# meta {' '.join(map(str, alpha))} panels={moduli.panels.get(alpha, 0)} "
            f"err={float(moduli.est_error.get(alpha, 0.0)).hex()}"
        )
    for alpha in moduli.indices:
        lines.append(
            f"{' '.join(map(str, alpha))} {float(moduli.table[alpha]).hex()}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_moduli(path):
    header = {}
    meta_panels, meta_err, table = {}, {}, {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("# meta "):
                parts = line[len("# meta "):].split()
                alpha = tuple(int(v) for v in parts[:-2])
                meta_panels[alpha] = int(parts[-2].split("=", 1)[1])
                meta_err[alpha] = float.fromhex(parts[-1].split("=", 1)[1])
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        key, val = tok.split("=", 1)
                        header[key] = val
                continue
            parts = line.split()
            alpha = tuple(int(v) for v in parts[:-1])
            table[alpha] = float.fromhex(parts[-1])
    try:
        params = SobolevParams(k=int(header["k"]), p=float(header["p"]),
                               d=int(header["d"]))
        rel_tol = float(header.get("rel_tol", 1e-8))
    except KeyError as exc:
        raise MismatchedLengths(f"{path}: missing header field {exc}") from None
    return ReferenceModuli(params=params, table=table, panels=meta_panels,
                           est_error=meta_err, rel_tol=rel_tol)
