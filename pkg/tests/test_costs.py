import numpy as np
import pytest

from stopbed.costs import ConstantCost, QuadraticCost, TableCost, cost_from_dict
from stopbed.errors import ConfigError


class TestCosts:
    def test_constant_broadcasts_over_batch(self):
        c = ConstantCost(-0.25)
        np.testing.assert_array_equal(c(np.zeros((5, 2))), np.full(5, -0.25))
        assert c(np.array(1.0)) == -0.25

    def test_quadratic(self):
        c = QuadraticCost(2.0)
        np.testing.assert_allclose(c(np.array([[0.1, -0.2], [0.0, 0.0]])), [-0.1, 0.0])
        assert c(np.array(0.5)) == pytest.approx(-0.5)

    def test_table_uses_stage(self):
        c = TableCost((-0.1, -0.2, -0.3))
        assert float(c(np.zeros(1), k=2)) == -0.3

    @pytest.mark.parametrize("cost", [ConstantCost(-0.5), QuadraticCost(0.3), TableCost((-1.0, 0.0))])
    def test_dict_roundtrip(self, cost):
        assert cost_from_dict(cost.to_dict()) == cost

    def test_bare_number_is_constant(self):
        assert cost_from_dict(-0.8) == ConstantCost(-0.8)

    def test_rejects_bad_input(self):
        with pytest.raises(ConfigError):
            ConstantCost(float("nan"))
        with pytest.raises(ConfigError):
            cost_from_dict({"kind": "cubic"})
        with pytest.raises(ConfigError):
            TableCost((0.0, float("inf")))
