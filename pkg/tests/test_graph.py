import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wsbmtest.errors import EdgeListError
from wsbmtest.graph import (EdgeListOptions, WeightedGraph, dichotomize, elementwise_power,
                            format_edge_list, parse_edge_list, read_edge_list)

from conftest import random_graph


class TestWeightedGraph:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            WeightedGraph(np.array([[0, 1, 0], [2, 0, 0], [0, 0, 0]], dtype=float))

    def test_rejects_nonzero_diagonal(self):
        w = np.ones((3, 3))
        with pytest.raises(ValueError):
            WeightedGraph(w)

    def test_rejects_small_and_nonfinite(self):
        with pytest.raises(ValueError):
            WeightedGraph(np.zeros((2, 2)))
        w = np.zeros((3, 3))
        w[0, 1] = w[1, 0] = np.nan
        with pytest.raises(ValueError):
            WeightedGraph(w)

    def test_immutable(self):
        g = WeightedGraph(np.zeros((3, 3)))
        with pytest.raises(ValueError):
            g.weights[0, 1] = 1.0

    def test_from_upper_roundtrip(self, rng):
        g = random_graph(rng, 6)
        assert WeightedGraph.from_upper(6, g.upper_values()) == g


class TestParse:
    def test_basic(self):
        g = parse_edge_list("1 2 3.5\n2 3 1.0\n")
        assert g.n == 3
        assert g.weights[0, 1] == 3.5 and g.weights[1, 2] == 1.0 and g.weights[0, 2] == 0.0

    def test_duplicate_sum(self):
        g = parse_edge_list("1 2 1.0\n2 1 2.0\n3 1 0.5\n")
        assert g.weights[0, 1] == 3.0

    @pytest.mark.parametrize("policy,expected", [("max", 2.0), ("last", 2.0), ("sum", 3.0)])
    def test_duplicate_policies(self, policy, expected):
        g = parse_edge_list("1 2 1.0\n2 1 2.0\n1 3 1\n", EdgeListOptions(duplicates=policy))
        assert g.weights[0, 1] == expected

    def test_duplicate_error_policy(self):
        with pytest.raises(EdgeListError):
            parse_edge_list("1 2 1\n2 1 1\n1 3 1\n", EdgeListOptions(duplicates="error"))

    def test_comments_commas_and_extra_columns(self):
        g = parse_edge_list("% header\n# more\n1,2,4.0,1999\n\n2 3 5 extra\n")
        assert g.weights[0, 1] == 4.0 and g.weights[1, 2] == 5.0

    def test_zero_based(self):
        g = parse_edge_list("0 1 1\n1 2 2\n", EdgeListOptions(index_base=0))
        assert g.n == 3 and g.weights[1, 2] == 2.0

    @pytest.mark.parametrize("text", ["1 2\n", "a 2 1\n", "1 2 x\n", "0 2 1\n", "2 2 1\n", "1 2 1\n"])
    def test_malformed(self, text):
        with pytest.raises(EdgeListError):
            parse_edge_list(text)

    def test_file_objects(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("1 2 1\n2 3 2\n")
        assert read_edge_list(p) == parse_edge_list(io.StringIO("1 2 1\n2 3 2\n"))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(3, 9), st.integers(0, 2**31 - 1))
    def test_roundtrip(self, n, seed):
        rng = np.random.default_rng(seed)
        w = np.triu(rng.standard_normal((n, n)) * (rng.random((n, n)) < 0.6), 1)
        g = WeightedGraph(w + w.T)
        assert parse_edge_list(format_edge_list(g)) == g


class TestTransforms:
    def test_dichotomize(self):
        w = np.zeros((3, 3))
        w[0, 1] = w[1, 0] = 0.5
        w[0, 2] = w[2, 0] = 2.0
        a = dichotomize(WeightedGraph(w), 1.0).weights
        assert a[0, 1] == 0 and a[0, 2] == 1
        # strict inequality
        assert dichotomize(WeightedGraph(w), 2.0).weights[0, 2] == 0

    def test_dichotomize_saturates(self, rng):
        g = random_graph(rng, 5)
        a = dichotomize(g, -1.0).weights
        assert np.all(a + np.eye(5) == 1)

    def test_dichotomize_monotone(self, rng):
        g = random_graph(rng, 8)
        prev = dichotomize(g, 0.0).weights
        for t0 in np.linspace(0.05, 1.0, 12):
            cur = dichotomize(g, t0).weights
            assert np.all(cur <= prev)
            prev = cur

    def test_dichotomize_exponential_fraction(self):
        rng = np.random.default_rng(7)
        n = 600
        w = np.triu(rng.exponential(1.0, (n, n)), 1)
        frac = dichotomize(WeightedGraph(w + w.T), np.log(2)).upper_values().mean()
        assert abs(frac - 0.5) < 0.01

    def test_elementwise_power(self, rng):
        g = random_graph(rng, 5)
        assert np.array_equal(elementwise_power(g, 1), g.weights)
        assert np.allclose(elementwise_power(g, 2), g.weights * g.weights, rtol=0, atol=0)
        w = np.zeros((3, 3))
        w[0, 1] = w[1, 0] = 2.0
        assert elementwise_power(WeightedGraph(w), 3)[0, 1] == 8.0
        with pytest.raises(ValueError):
            elementwise_power(g, 0)
