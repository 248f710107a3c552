"""Tests for the discrete random variables of weak schemes."""

import math
import sys
from pathlib import Path

# Add package directories to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))
sys.path.insert(0, str(Path(__file__).parent.parent.parent / "common"))

import numpy as np
import pytest

from stochrk.schemes.randoms import sample_weak_randoms, weak_pair_matrix
from stochrk_common.exceptions import GridError


class TestSampleWeakRandoms:
    """Distribution and pair matrix of the weak variables."""

    def test_support(self) -> None:
        h = 0.04
        w = sample_weak_randoms(np.random.default_rng(0), 3, h, (500,))
        r = math.sqrt(3 * h)
        assert set(np.unique(w.Ihat)) <= {-r, 0.0, r}
        assert set(np.unique(w.Itil)) <= {-math.sqrt(h), math.sqrt(h)}
        assert w.Ihat2.shape == (500, 3, 3)
        assert w.m == 3

    def test_three_point_probabilities(self) -> None:
        w = sample_weak_randoms(np.random.default_rng(1), 1, 0.1, (100_000,))
        assert np.mean(w.Ihat == 0.0) == pytest.approx(2 / 3, abs=0.01)
        assert np.mean(w.Ihat > 0.0) == pytest.approx(1 / 6, abs=0.01)

    def test_gaussian_moments(self) -> None:
        h = 0.1
        w = sample_weak_randoms(np.random.default_rng(2), 2, h, (200_000,))
        assert np.mean(w.Ihat**2) == pytest.approx(h, rel=0.02)
        assert np.mean(w.Ihat**4) == pytest.approx(3 * h * h, rel=0.03)
        assert abs(np.mean(w.Ihat**3)) < 0.02 * h**1.5

    def test_reproducible(self) -> None:
        a = sample_weak_randoms(np.random.default_rng(5), 2, 0.1, (10,))
        b = sample_weak_randoms(np.random.default_rng(5), 2, 0.1, (10,))
        np.testing.assert_array_equal(a.Ihat2, b.Ihat2)

    def test_nonpositive_step(self) -> None:
        with pytest.raises(GridError):
            sample_weak_randoms(np.random.default_rng(0), 2, 0.0)


class TestWeakPairMatrix:
    """Pairwise terms built from Ihat and Itil."""

    def test_example(self) -> None:
        h = 0.25
        Ihat = np.array([math.sqrt(0.75), 0.0])
        Itil = np.array([0.5, -0.5])
        pair = weak_pair_matrix(Ihat, Itil, h)

        assert pair[0, 0] == pytest.approx((0.75 - h) / 2)
        assert pair[1, 1] == pytest.approx(-h / 2)
        # k < l uses Itil^k, k > l uses Itil^l
        assert pair[0, 1] == pytest.approx(-0.5 * 0.5 / 2)
        assert pair[1, 0] == pytest.approx(0.5 * 0.5 / 2)

    def test_pair_sum_identity(self) -> None:
        """Ihat^{kl} + Ihat^{lk} = Ihat^k Ihat^l for k != l."""
        w = sample_weak_randoms(np.random.default_rng(3), 4, 0.1, (50,))
        total = w.Ihat2 + np.swapaxes(w.Ihat2, -1, -2)
        outer = w.Ihat[..., :, None] * w.Ihat[..., None, :]
        off = ~np.eye(4, dtype=bool)
        np.testing.assert_allclose(total[:, off], outer[:, off], rtol=0, atol=1e-15)

    def test_diagonal(self) -> None:
        w = sample_weak_randoms(np.random.default_rng(4), 3, 0.2, (20,))
        diag = np.diagonal(w.Ihat2, axis1=-2, axis2=-1)
        np.testing.assert_allclose(diag, (w.Ihat**2 - 0.2) / 2, rtol=0, atol=1e-15)
