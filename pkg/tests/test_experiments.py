import math

import numpy as np
import pytest

from sobolab import bump, config, experiments, model
from sobolab.errors import (
    ConfigInvalid,
    InvalidBeta,
    InvalidRange,
    UnsupportedExactVariant,
)
from sobolab.experiments import (
    SweepConfig,
    derive_seed,
    fit_loglog,
    morrey_check,
    morrey_exact_trial,
)


MINIMAL_INI = """
[params]
k = 1
p = 1.25
d = 1

[distribution]
radius = 1.0
density = uniform
sigma = constant
sigma_a = 1.0

[sweep]
id = mini
kind = norm_vs_n
n_grid = 32 64 128 256
trials = 5
seed = 4242
"""


def small_config(params, spec, **overrides):
    base = dict(config_id="t", kind="norm_vs_n", params=params, spec=spec,
                n_grid=(32, 64, 128, 256), trials=5, master_seed=7)
    base.update(overrides)
    return SweepConfig(**base)


class TestSeedDerivation:
    def test_stable_and_distinct(self):
        a = derive_seed(1, 64, 0)
        assert a == derive_seed(1, 64, 0)
        assert a != derive_seed(1, 64, 1)
        assert a != derive_seed(2, 64, 0)


class TestFit:
    def test_exact_power_law(self):
        ns = [10, 100, 1000, 10000]
        vals = [3.0 * n ** 1.7 for n in ns]
        fit = fit_loglog(ns, vals)
        assert fit.slope == pytest.approx(1.7, abs=1e-12)
        assert fit.slope_stderr == pytest.approx(0.0, abs=1e-10)
        assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-10)


class TestValidation:
    def test_beta_boundary_rejected(self, params_d2):
        spec = model.DistributionSpec(params=params_d2)
        cfg = small_config(params_d2, spec, kind="weighted_delta_sum",
                           beta=1.0)  # = d/2
        with pytest.raises(ConfigInvalid, match="beta"):
            cfg.validate()

    def test_beta_runtime_guard(self, params_d2):
        spec = model.DistributionSpec(params=params_d2)
        cfg = small_config(params_d2, spec, kind="weighted_delta_sum",
                           beta=0.8)
        object.__setattr__(cfg, "beta", 1.0)
        with pytest.raises((InvalidBeta, ConfigInvalid)):
            experiments.sweep_weighted_delta_sum(cfg)

    def test_short_grid_rejected(self, params_d1, pure_noise_d1):
        cfg = small_config(params_d1, pure_noise_d1, n_grid=(8, 16, 32))
        with pytest.raises(ConfigInvalid, match="n_grid"):
            cfg.validate()

    def test_missing_seed(self, params_d1, pure_noise_d1):
        cfg = small_config(params_d1, pure_noise_d1, master_seed=None)
        with pytest.raises(ConfigInvalid, match="seed"):
            cfg.validate()

    def test_norm_sweep_needs_strict_range(self, pure_noise_d1):
        loose = bump.SobolevParams(k=1, p=3.0, d=1)
        spec = model.DistributionSpec(params=loose)
        cfg = small_config(loose, spec)
        with pytest.raises(InvalidRange):
            experiments.sweep_norm_vs_n(cfg)

    def test_shrink_grid_rejected(self, params_d1, pure_noise_d1):
        cfg = small_config(params_d1, pure_noise_d1, kind="risk_vs_gamma",
                           shrink_grid=(1.0, 0.0))
        with pytest.raises(ConfigInvalid, match="shrink_grid"):
            cfg.validate()


class TestSweeps:
    def test_norm_sweep_contracts(self, params_d1, pure_noise_d1, moduli_d1):
        cfg = small_config(params_d1, pure_noise_d1)
        res = experiments.sweep_norm_vs_n(cfg, moduli=moduli_d1)
        assert res.all_passed
        assert res.fits["norm_p"].slope == pytest.approx(1.25, abs=0.3)

    def test_zero_labels_flat(self, params_d1, moduli_d1, monkeypatch):
        # doubling n with all labels zero keeps norm^p at zero
        cfg = small_config(params_d1,
                           model.DistributionSpec(params=params_d1))
        real_sample = model.sample

        def zero_label_sample(spec, n, seed):
            ds = real_sample(spec, n, seed)
            from sobolab.geometry import Dataset
            return Dataset(points=ds.points, labels=np.zeros(n))

        monkeypatch.setattr(model, "sample", zero_label_sample)
        res = experiments.sweep_delta_and_subset(cfg)  # labels all zero
        sizes = [r["value"] for r in res.rows if r["metric"] == "subset_size"]
        assert all(s == 0 for s in sizes)  # W never fires without noise

    def test_delta_sweep_contracts(self, params_d1, pure_noise_d1):
        cfg = small_config(params_d1, pure_noise_d1,
                           n_grid=(64, 128, 256, 512, 1024), trials=10)
        res = experiments.sweep_delta_and_subset(cfg)
        by_name = {c.name: c for c in res.contracts}
        assert by_name["delta_subset.min_delta_slope"].passed
        assert by_name["delta_subset.size_frequency"].passed

    def test_weighted_sweep(self, params_d2):
        spec = model.DistributionSpec(params=params_d2)
        cfg = small_config(params_d2, spec, kind="weighted_delta_sum",
                           beta=0.8, n_grid=(64, 128, 256, 512), trials=8)
        res = experiments.sweep_weighted_delta_sum(cfg)
        assert res.all_passed
        assert res.fits["weighted_delta_sum"].slope == pytest.approx(
            1.4, abs=0.3)

    def test_bayes_control(self, params_d1, pure_noise_d1):
        cfg = small_config(params_d1, pure_noise_d1, kind="risk_vs_n",
                           predictor="bayes", mc_samples=1000)
        res = experiments.sweep_risk_vs_n(cfg)
        by_name = {c.name: c for c in res.contracts}
        assert by_name["risk_vs_n.bayes_control"].passed

    def test_contract_failure_reported(self, params_d1, pure_noise_d1,
                                       moduli_d1):
        cfg = small_config(params_d1, pure_noise_d1, kind="risk_vs_n",
                           mc_samples=2000, risk_floor=1e9)
        res = experiments.sweep_risk_vs_n(cfg, moduli=moduli_d1)
        assert not res.all_passed


class TestMorrey:
    def test_constant_function_trivial(self, params_d1):
        u = bump.BumpSum(centers=[[0.0]], radii=[0.3], weights=[0.0])
        lhs, rhs = morrey_exact_trial(u, 0.1, 0.2, 0.3, params_d1.p)
        assert lhs == 0.0
        assert rhs >= 0.0

    def test_single_unit_bump_hand_case(self):
        # u = psi with support radius 1; x1 = 0.8 sits off the plateau so
        # the oscillation is genuinely positive
        u = bump.BumpSum(centers=[[0.0]], radii=[1.0], weights=[1.0])
        lhs, rhs = morrey_exact_trial(u, 0.0, 0.8, 0.9, 2.0)
        assert lhs <= rhs + 1e-9
        assert lhs > 0.0

    def test_exact_variant_randomized(self, params_d1):
        rep = morrey_check(params_d1, trials=500, seed=11)
        assert rep.variant == "exact"
        assert rep.violations == []

    def test_diagnostic_variant(self, params_d2):
        rep = morrey_check(params_d2, trials=2, seed=13)
        assert rep.variant == "diagnostic"
        assert rep.passed
        assert rep.ratio_fine_max > 0.0

    def test_exact_variant_unavailable(self, params_d3):
        with pytest.raises(UnsupportedExactVariant):
            morrey_check(params_d3, trials=5, seed=1, variant="exact")


class TestRunAndPersistence:
    def test_minimal_config_files(self, tmp_path, moduli_d1):
        ini = tmp_path / "cfg.ini"
        ini.write_text(MINIMAL_INI)
        cfg = config.load_sweep(ini)
        res = experiments.run(cfg, tmp_path / "out", moduli=moduli_d1)
        assert res.all_passed
        rows = (tmp_path / "out" / "mini_rows.csv").read_text().splitlines()
        assert rows[0] == "sweep,n,trial,seed,metric,value,stderr"
        assert len(rows) > 1
        summary = (tmp_path / "out" / "mini_summary.json").read_text()
        assert '"all_passed": true' in summary
        assert (tmp_path / "out" / "mini_norm_p.dat").exists()

    def test_rerun_byte_identical_across_threads(self, tmp_path, moduli_d1):
        ini = tmp_path / "cfg.ini"
        ini.write_text(MINIMAL_INI)
        cfg = config.load_sweep(ini)
        experiments.run(cfg, tmp_path / "a", threads=1, moduli=moduli_d1)
        experiments.run(cfg, tmp_path / "b", threads=4, moduli=moduli_d1)
        for name in ("mini_rows.csv", "mini_summary.json", "mini_norm_p.dat"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()

    def test_json_lines_format(self, tmp_path, moduli_d1):
        ini = tmp_path / "cfg.ini"
        ini.write_text(MINIMAL_INI)
        cfg = config.load_sweep(ini)
        experiments.run(cfg, tmp_path / "out", fmt="json-lines",
                        moduli=moduli_d1)
        import json
        lines = (tmp_path / "out" / "mini_rows.jsonl").read_text().splitlines()
        row = json.loads(lines[0])
        assert set(row) == set(experiments.CSV_COLUMNS)

    def test_seed_override(self, tmp_path):
        ini = tmp_path / "cfg.ini"
        ini.write_text(MINIMAL_INI)
        cfg = config.load_sweep(ini, seed_override=99)
        assert cfg.master_seed == 99

    def test_config_beta_boundary_message_names_field(self, tmp_path):
        ini = tmp_path / "cfg.ini"
        ini.write_text(MINIMAL_INI.replace(
            "kind = norm_vs_n", "kind = weighted_delta_sum\nbeta = 0.5"))
        with pytest.raises(ConfigInvalid, match="beta"):
            config.load_sweep(ini)

    def test_config_bumps_parse(self, tmp_path, params_d1):
        ini = tmp_path / "cfg.ini"
        ini.write_text("""
[params]
k = 1
p = 1.25
d = 1

[distribution]
ground_truth = bumps
bumps =
    0.0 0.2 1.5
    0.6 0.1 -0.5
sigma = quadratic
sigma_a = 0.25
sigma_b = 0.5
""")
        params, spec = config.load_distribution(ini)
        assert params == params_d1
        assert spec.ground_truth.n == 2
        assert spec.sigma_min == 0.5
        assert spec.g_values(np.array([0.0])) == 1.5
