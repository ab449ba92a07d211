import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fatoulab.circle import CircleGrid, QuadratureReport, constant, cosine, grid_for, indicator, power_singularity
from fatoulab.convolution import (
    ConvergenceTrace,
    convergence_trace,
    convolve_at,
    convolve_grid,
    cyclic_convolve,
    lambda_sup_deviation,
)
from fatoulab.functionals import default_ladder, power_log
from fatoulab.kernels import POISSON, frac_poisson


class TestConvolution:
    @given(st.floats(0.1, 0.98), st.integers(0, 5), st.floats(-math.pi, math.pi))
    @settings(max_examples=30, deadline=None)
    def test_poisson_multiplier(self, r, k, x):
        # P_r * cos(k.) = r^k cos(k x)
        g = grid_for(r, 1024)
        val = convolve_at(POISSON.slice(r), cosine(k), x, g)
        assert val == pytest.approx(r ** k * math.cos(k * x), abs=1e-10)

    def test_fft_matches_direct(self):
        r = 0.99
        g = CircleGrid(2 ** 12 * 2)
        s = POISSON.slice(r)
        f = cosine(2)
        fast = convolve_grid(s, f, g).samples
        idx = np.arange(0, g.n, 97)
        slow = np.array([convolve_at(s, f, g.nodes[i], g) for i in idx])
        assert np.max(np.abs(fast[idx] - slow)) < 1e-10

    def test_cyclic_convolve_delta(self):
        # convolving with a discrete delta (weight 1/h at node 0) returns the kernel
        n = 16
        h = 2 * math.pi / n
        k = np.random.default_rng(0).normal(size=n)
        w = np.zeros(n)
        w[0] = 1 / h
        assert np.allclose(cyclic_convolve(k, w, h), k)

    def test_report(self):
        rep = convolve_at(POISSON.slice(0.5), indicator(-0.3, 0.3), 0.0, CircleGrid(256), report=True)
        assert isinstance(rep, QuadratureReport)
        exact = POISSON.slice(0.5).mass(0.3)
        # the doubled-grid gap overestimates the remaining error
        assert abs(rep.value - exact) <= rep.refinement_error
        assert rep.refinement_error < 1e-4

    def test_resolution_enforced(self):
        with pytest.raises(ValueError, match="too coarse"):
            convolve_at(POISSON.slice(0.99), cosine(1), 0.0, CircleGrid(64))

    def test_preserves_constants(self):
        for fam in (POISSON, frac_poisson(0.5)):
            g = grid_for(0.9, 2048)
            out = convolve_grid(fam.slice(0.9, g), constant(3.0), g).samples
            assert np.allclose(out, 3.0, atol=1e-10)

    def test_singular_weights_rejected(self):
        # sampling a singular function at its pole has no finite cell value
        from fatoulab.circle import PeriodicFunction

        f = PeriodicFunction("analytic", lambda x: np.divide(1.0, np.abs(x), where=x != 0,
                                                             out=np.full(np.shape(x), np.inf)))
        with pytest.raises(ValueError, match="non-finite"):
            convolve_at(POISSON.slice(0.5), f, 0.0, CircleGrid(128))


class TestDeviation:
    def test_constant_has_zero_deviation(self):
        d = lambda_sup_deviation(POISSON, constant(2.0), power_log(1, 1, 0), 1.0, 0.99)
        assert d < 1e-12

    def test_cos_deviation_closed_form(self):
        # sup over |theta - x| < lam of |r cos theta - cos x| at x = 0 is 1 - r cos lam
        r = 0.9
        lam = power_log(1, 1, 0)
        lr = lam(r)
        d = lambda_sup_deviation(POISSON, cosine(1), lam, 0.0, r)
        assert d == pytest.approx(1 - r * math.cos(lr), rel=1e-6)

    def test_wide_window_uses_fft_path(self):
        # lambda(0.9) = 3 * 0.1^0.01 = 2.93 spans far more than 129 nodes
        r = 0.9
        lam = power_log(3.0, 0.01, 0)
        d = lambda_sup_deviation(POISSON, cosine(1), lam, 0.0, r)
        assert d == pytest.approx(1 - r * math.cos(lam(r)), rel=1e-6)

    def test_target_override(self):
        d = lambda_sup_deviation(POISSON, constant(1.0), power_log(1, 1, 0), 0.0, 0.9, target=0.5)
        assert d == pytest.approx(0.5, abs=1e-12)

    def test_bad_lambda(self):
        from fatoulab.functionals import tabulated

        lam = tabulated([0.5, 0.6], [1.0, 1.0])
        with pytest.raises(ValueError):
            lambda_sup_deviation(POISSON, constant(1.0), lam, float("nan"), 0.55)


class TestTrace:
    def test_trace_decreases_for_smooth_data(self):
        lad = default_ladder(3, 9)
        tr = convergence_trace(POISSON, cosine(1), power_log(1, 1, 0), 0.3, lad)
        assert tr.monotone_tail(5)
        assert tr.sup_deviation[-1] < 1e-2

    def test_power_singularity_converges_at_pi(self):
        tr = convergence_trace(frac_poisson(0.5), power_singularity(0.25), power_log(1, 1, 2), math.pi,
                               default_ladder(3, 10))
        assert tr.monotone_tail(4)

    def test_csv(self, tmp_path):
        tr = ConvergenceTrace(0.0, np.array([0.5, 0.9]), np.array([0.5, 0.1]), np.array([0.2, 0.1]))
        path = tmp_path / "t.csv"
        tr.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "r,lambda,sup_deviation"
        assert len(lines) == 3

    def test_validation(self):
        with pytest.raises(ValueError):
            ConvergenceTrace(0.0, np.array([0.9, 0.5]), np.array([0.5, 0.1]), np.array([0.2, 0.1]))
        with pytest.raises(ValueError):
            convergence_trace(POISSON, cosine(1), power_log(1, 1, 0), 0.0, [0.9, 0.5])
