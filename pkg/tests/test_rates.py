import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qsl_lab.errors import DomainError
from qsl_lab.rates import (
    LinearInterpolant,
    TabulatedRates,
    amplitude_damping_model,
    build_model,
    cp_oscillating_model,
    pdiv_crossover_model,
    pure_dephasing_model,
    rates_from_table,
    read_rate_table,
    sign_violation_model,
    zero_model,
)

DENSE_T = np.linspace(0.0, 100.0, 200_001)


class TestCpOscillating:
    def test_value_at_zero(self):
        _, g1, g2, g3 = cp_oscillating_model(8, 5).rates(0.0)
        # 8 + 8 * 5 / sqrt(4 * 64 + 25)
        assert g1 == pytest.approx(8 + 40 / math.sqrt(281), abs=1e-14)
        assert g1 == pytest.approx(10.3862, abs=1e-4)
        assert g2 == pytest.approx(5.6138, abs=1e-4)
        assert g1 + g2 == 16.0
        assert g3 == 0.0

    @pytest.mark.parametrize("nu, omega", [(8, 5), (1, 0), (2, 10), (0.3, 7.5)])
    def test_rates_sum_to_twice_nu(self, nu, omega):
        _, g1, g2, _ = cp_oscillating_model(nu, omega).rates(DENSE_T)
        assert_allclose(g1 + g2, 2 * nu, atol=1e-12 * nu)

    def test_zero_frequency_is_constant(self):
        _, g1, g2, _ = cp_oscillating_model(3.0, 0.0).rates(DENSE_T[:1000])
        assert_allclose(g1, 3.0)
        assert_allclose(g2, 3.0)

    @pytest.mark.parametrize("nu, omega", [(8, 5), (1, 0), (2, 10)])
    def test_rates_bounded_by_zero_and_twice_nu(self, nu, omega):
        _, g1, g2, _ = cp_oscillating_model(nu, omega).rates(DENSE_T)
        for g in (g1, g2):
            assert g.min() >= -1e-12
            assert g.max() <= 2 * nu + 1e-12

    @pytest.mark.parametrize("nu, omega", [(0, 1), (-1, 1), (1, -0.1)])
    def test_domain(self, nu, omega):
        with pytest.raises(DomainError):
            cp_oscillating_model(nu, omega)


class TestPdivCrossover:
    def test_value_at_zero(self):
        _, g1, g2, g3 = pdiv_crossover_model(0.5).rates(0.0)
        assert (g1, g2, g3) == (1.0, 1.0, 0.25)

    @pytest.mark.parametrize("k", [0.0, 0.5, 1.0, 2.5])
    def test_dissipativity_margin_closed_form(self, k):
        _, g1, g2, g3 = pdiv_crossover_model(k).rates(DENSE_T)
        assert_allclose(np.sqrt(g1 * g2), np.exp(-3 * DENSE_T / 8), rtol=1e-14, atol=0)
        margin = np.sqrt(g1 * g2) + 2 * g3
        closed = np.exp(-3 * DENSE_T / 8) * (1 + k * np.cos(2 * DENSE_T))
        assert_allclose(margin, closed, atol=1e-14, rtol=0)

    def test_critical_witness_point(self):
        t = np.pi / 2
        _, g1, g2, g3 = pdiv_crossover_model(1.0).rates(t)
        assert g3 == pytest.approx(-0.5 * np.exp(-3 * np.pi / 16), abs=1e-15)
        assert abs(np.sqrt(g1 * g2) + 2 * g3) <= 1e-15

    def test_domain(self):
        with pytest.raises(DomainError):
            pdiv_crossover_model(-0.1)


class TestSignViolation:
    def test_negative_rate_for_small_k(self):
        _, g1, g2, _ = sign_violation_model(0.5).rates(np.pi / 2)
        assert g1 == pytest.approx(np.exp(-np.pi / 4) * (0.5 - 1))
        assert g1 < 0 and g2 == g1

    def test_non_negative_for_k_one(self):
        _, g1, _, _ = sign_violation_model(1.0).rates(DENSE_T)
        assert g1.min() >= 0.0

    def test_value_at_zero(self):
        _, g1, g2, g3 = sign_violation_model(1.0).rates(0.0)
        assert (g1, g2, g3) == (2.0, 2.0, 1.0)


class TestSimpleModels:
    def test_amplitude_damping_constant(self):
        w, g1, g2, g3 = amplitude_damping_model(1.0).rates(np.linspace(0, 5, 11))
        assert_allclose(g2, 1.0)
        assert not np.any(g1) and not np.any(g3) and not np.any(w)

    def test_amplitude_damping_function(self):
        _, _, g2, _ = amplitude_damping_model(lambda t: np.exp(-t)).rates(np.log(2))
        assert g2 == pytest.approx(0.5)

    def test_amplitude_damping_scalar_only_callable(self):
        _, _, g2, _ = amplitude_damping_model(math.exp).rates(np.array([0.0, 1.0]))
        assert_allclose(g2, [1.0, math.e])

    def test_amplitude_damping_tabulated(self):
        model = amplitude_damping_model(LinearInterpolant([0, 1], [1, 0]))
        assert model.rates(0.5)[2] == pytest.approx(0.5)

    def test_pure_dephasing(self):
        w, g1, g2, g3 = pure_dephasing_model(1.0).rates(np.array([0.0, 3.0]))
        assert_allclose(g3, 1.0)
        assert not np.any(g1) and not np.any(g2)

    def test_builtins_finite_on_long_horizon(self):
        t = np.linspace(0, 100, 10_001)
        for model in (cp_oscillating_model(8, 5), pdiv_crossover_model(1.0), sign_violation_model(0.5), zero_model()):
            assert all(np.all(np.isfinite(r)) for r in model.rates(t))

    def test_non_finite_rates_rejected(self):
        model = amplitude_damping_model(lambda t: np.log(t - 1.0))
        with pytest.raises(DomainError):
            with np.errstate(invalid="ignore"):
                model.rates(0.0)


class TestTables:
    def test_linear_interpolation(self):
        f = LinearInterpolant([0, 2], [1, 3])
        assert f(1.0) == pytest.approx(2.0)

    def test_out_of_range(self):
        f = LinearInterpolant([0, 2], [1, 3])
        with pytest.raises(DomainError):
            f(3.0)

    @pytest.mark.parametrize(
        "knots, values",
        [([0.0], [1.0]), ([0, 1, 1], [1, 2, 3]), ([0, 2, 1], [1, 2, 3]), ([0, 1], [1, np.inf])],
    )
    def test_bad_tables(self, knots, values):
        with pytest.raises(DomainError):
            LinearInterpolant(knots, values)

    def test_rates_from_table(self):
        table = TabulatedRates(t=np.array([0.0, 2.0]), gamma1=np.array([0.0, 2.0]), gamma2=np.array([1.0, 3.0]), gamma3=np.array([0.0, 0.0]))
        model = rates_from_table(table)
        w, g1, g2, g3 = model.rates(1.0)
        assert (float(w), float(g1), float(g2), float(g3)) == (0.0, 1.0, 2.0, 0.0)
        with pytest.raises(DomainError):
            model.rates(3.0)

    def test_read_csv(self, tmp_path):
        path = tmp_path / "rates.csv"
        path.write_text("t,gamma1,gamma2,gamma3,omega\n0,0,1,0,0.5\n2,0,3,0,0.5\n", encoding="utf-8")
        model = rates_from_table(read_rate_table(path))
        w, _, g2, _ = model.rates(1.0)
        assert float(g2) == pytest.approx(2.0)
        assert float(w) == pytest.approx(0.5)

    def test_read_csv_missing_column(self, tmp_path):
        path = tmp_path / "rates.csv"
        path.write_text("t,gamma1,gamma2\n0,0,1\n1,0,1\n", encoding="utf-8")
        with pytest.raises(DomainError, match="gamma3"):
            read_rate_table(path)

    def test_read_csv_single_row(self, tmp_path):
        path = tmp_path / "rates.csv"
        path.write_text("t,gamma1,gamma2,gamma3\n0,0,1,0\n", encoding="utf-8")
        with pytest.raises(DomainError):
            rates_from_table(read_rate_table(path))


def test_build_model_by_name():
    model = build_model("cp-osc", nu=8, omega=5)
    assert model.params == {"nu": 8.0, "omega": 5.0}
    with pytest.raises(DomainError, match="choose from"):
        build_model("nosuch")
    with pytest.raises(DomainError, match="needs parameters"):
        build_model("pdiv-crossover")


def test_builtin_models_pickle():
    import pickle

    model = pdiv_crossover_model(0.5)
    clone = pickle.loads(pickle.dumps(model))
    t = np.linspace(0, 3, 7)
    for a, b in zip(model.rates(t), clone.rates(t)):
        assert_allclose(a, b)
