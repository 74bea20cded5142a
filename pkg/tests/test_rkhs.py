import math

import numpy as np
import pytest

from sobolab import rkhs
from sobolab.errors import UnsupportedNu, UnsupportedSpec
from sobolab.geometry import Dataset

from conftest import random_dataset


class TestKernelEval:
    def test_diagonal(self):
        for nu in (0.5, 1.5):
            spec = rkhs.KernelSpec(nu=nu)
            assert rkhs.kernel_eval(spec, 0.0) == 1.0

    def test_exponential_value(self):
        spec = rkhs.KernelSpec(nu=0.5, lengthscale=1.0)
        assert rkhs.kernel_eval(spec, 1.0) == pytest.approx(math.exp(-1.0))

    def test_matern32_value(self):
        spec = rkhs.KernelSpec(nu=1.5, lengthscale=2.0)
        t = math.sqrt(3.0) * 0.8 / 2.0
        assert rkhs.kernel_eval(spec, 0.8) == pytest.approx(
            (1.0 + t) * math.exp(-t), rel=1e-14)

    def test_range(self):
        spec = rkhs.KernelSpec(nu=1.5)
        r = np.linspace(0, 10, 1000)
        v = rkhs.kernel_eval(spec, r)
        assert np.all((0.0 < v) & (v <= 1.0))

    def test_unsupported_nu(self):
        with pytest.raises(UnsupportedNu):
            rkhs.KernelSpec(nu=2.5)

    def test_positive_definite_on_random_points(self):
        rng = np.random.default_rng(2)
        pts = rng.uniform(-1, 1, size=(50, 3))
        for nu in (0.5, 1.5):
            k = rkhs.kernel_matrix(rkhs.KernelSpec(nu=nu), pts)
            assert np.array_equal(k, k.T)
            assert np.linalg.eigvalsh(k).min() > 0.0


class TestMinNormInterpolant:
    def test_single_point_closed_form(self):
        ds = Dataset(points=np.array([[0.0], [50.0]]),
                     labels=np.array([1.0, 0.0]))
        u = rkhs.min_norm_interpolant(ds, rkhs.KernelSpec(nu=0.5))
        # far-away zero-label point decouples: u(x) ~ exp(-|x|) near 0
        for x in (0.0, 0.5, 1.0, 2.0):
            assert u(np.array([x])) == pytest.approx(math.exp(-abs(x)),
                                                     abs=1e-10)

    def test_two_point_hand_solved(self):
        ds = Dataset(points=np.array([[0.0], [1.0]]),
                     labels=np.array([2.0, -1.0]))
        spec = rkhs.KernelSpec(nu=0.5)
        u = rkhs.min_norm_interpolant(ds, spec)
        # 2x2 closed-form inverse oracle
        e = math.exp(-1.0)
        det = 1.0 - e * e
        want = np.array([(2.0 - e * -1.0) / det, (-1.0 - e * 2.0) / det])
        assert np.allclose(u.coefficients, want, rtol=1e-10)

    def test_residual_contract_randomized(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(2, 60))
            d = int(rng.integers(1, 4))
            ds = random_dataset(rng, n, d)
            u = rkhs.min_norm_interpolant(ds, rkhs.KernelSpec(nu=0.5))
            resid = np.abs(u(ds.points) - ds.labels)
            assert resid.max() <= rkhs.RESIDUAL_TOL

    def test_dense_cap(self):
        rng = np.random.default_rng(4)
        ds = random_dataset(rng, 4097, 1)
        with pytest.raises(UnsupportedSpec):
            rkhs.min_norm_interpolant(ds, rkhs.KernelSpec(nu=0.5))


class TestRkhsNorm:
    def test_single_point_unit(self):
        ds = Dataset(points=np.array([[0.0], [80.0]]),
                     labels=np.array([1.0, 0.0]))
        u = rkhs.min_norm_interpolant(ds, rkhs.KernelSpec(nu=0.5))
        assert rkhs.rkhs_norm(u) == pytest.approx(1.0, abs=1e-9)

    def test_label_scaling(self):
        rng = np.random.default_rng(9)
        ds = random_dataset(rng, 30, 2)
        scaled = Dataset(points=ds.points, labels=2.5 * ds.labels)
        spec = rkhs.KernelSpec(nu=1.5)
        a = rkhs.rkhs_norm(rkhs.min_norm_interpolant(ds, spec))
        b = rkhs.rkhs_norm(rkhs.min_norm_interpolant(scaled, spec))
        assert b == pytest.approx(2.5 * a, rel=1e-8)

    def test_superset_with_consistent_labels_preserves_norm(self):
        # min-norm over more constraints cannot be cheaper; when the extra
        # labels come from the current solution, the solution is unchanged
        rng = np.random.default_rng(10)
        ds = random_dataset(rng, 40, 2)
        spec = rkhs.KernelSpec(nu=0.5)
        u = rkhs.min_norm_interpolant(ds, spec)
        extra = rng.uniform(-1, 1, size=(10, 2))
        sup = Dataset(points=np.vstack([ds.points, extra]),
                      labels=np.concatenate([ds.labels, u(extra)]))
        v = rkhs.min_norm_interpolant(sup, spec)
        nu_, nv = rkhs.rkhs_norm(u), rkhs.rkhs_norm(v)
        assert nv >= nu_ - 1e-8
        assert nv == pytest.approx(nu_, rel=1e-8)
        probes = rng.uniform(-1, 1, size=(50, 2))
        assert np.allclose(u(probes), v(probes), atol=1e-7)
