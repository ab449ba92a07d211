import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ellipkm1

from fatoulab.circle import CircleGrid, grid_for
from fatoulab.kernels import (
    POISSON,
    c_phi_estimate,
    check_identity_axioms,
    custom_family,
    family_from_spec,
    frac_poisson,
    load_kernel_table,
    majorant_mass,
    normalizer,
    poisson_raw,
)

TWO_PI = 2 * math.pi


def c_half_closed_form(r):
    # integral of P_r^(1/2) = (1 - r^2)^(1/2) * 4 K(k) / (1 + r), k^2 = 4r/(1+r)^2;
    # ellipkm1 takes 1 - k^2 = ((1-r)/(1+r))^2 without cancellation
    return math.sqrt(1 - r * r) * 4 * ellipkm1(((1 - r) / (1 + r)) ** 2) / (1 + r)


class TestPoisson:
    @pytest.mark.parametrize("r", [0.5, 0.9, 0.99])
    def test_unit_mass(self, r):
        g = grid_for(r, 2 ** 12)
        s = POISSON.slice(r)
        assert g.h * s.evaluate(g.nodes).sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("r", [0.3, 0.5, 0.9, 0.999])
    def test_sup_norm_closed_form(self, r):
        s = POISSON.slice(r)
        assert s.sup_norm == pytest.approx((1 + r) / (TWO_PI * (1 - r)), rel=1e-14)
        assert s.evaluate(0.0) == pytest.approx(s.sup_norm, rel=1e-12)

    def test_value_at_zero_half(self):
        assert POISSON.slice(0.5).evaluate(0.0) == pytest.approx(3 / TWO_PI, rel=1e-15)

    @given(st.floats(0.05, 0.995), st.floats(0.0, math.pi))
    @settings(max_examples=50)
    def test_even_and_positive(self, r, x):
        s = POISSON.slice(r)
        assert s.evaluate(x) == pytest.approx(s.evaluate(-x), rel=1e-13)
        assert s.evaluate(x) > 0

    @given(st.floats(0.05, 0.995), st.floats(0.0, math.pi), st.floats(0.0, math.pi))
    @settings(max_examples=50)
    def test_mass_monotone_and_bounded(self, r, a, b):
        s = POISSON.slice(r)
        lo, hi = sorted((a, b))
        assert -1e-15 <= s.mass(lo) <= s.mass(hi) + 1e-15 <= 1 + 1e-12

    def test_mass_matches_quadrature(self):
        r, a = 0.9, 0.4
        s = POISSON.slice(r)
        t = np.linspace(-a, a, 200001)
        assert s.mass(a) == pytest.approx(np.trapezoid(s.evaluate(t), t), rel=1e-8)

    def test_rejects_r_outside(self):
        with pytest.raises(ValueError):
            POISSON.slice(1.0)
        with pytest.raises(ValueError):
            POISSON.slice(0.0)


class TestFracPoisson:
    @pytest.mark.parametrize("r", [0.5, 0.9, 0.99, 0.999])
    def test_normalizer_elliptic_oracle(self, r):
        assert normalizer(0.5, r) == pytest.approx(c_half_closed_form(r), rel=1e-11)

    @pytest.mark.parametrize("r", [0.5, 0.9])
    def test_grid_normalizer_agrees(self, r):
        assert normalizer(0.5, r, grid_for(r, 2 ** 14)) == pytest.approx(normalizer(0.5, r), rel=1e-10)

    def test_alpha_one_is_poisson(self):
        fam = frac_poisson(1.0)
        x = np.linspace(-3, 3, 11)
        assert np.allclose(fam.slice(0.8).evaluate(x), POISSON.slice(0.8).evaluate(x), rtol=1e-10)

    def test_unit_mass(self):
        r = 0.99
        g = grid_for(r, 2 ** 14)
        s = frac_poisson(0.5).slice(r, g)
        assert g.h * s.evaluate(g.nodes).sum() == pytest.approx(1.0, abs=1e-10)
        assert s.mass(math.pi) == pytest.approx(1.0, abs=1e-10)

    def test_sup_norm(self):
        r = 0.9
        s = frac_poisson(0.5).slice(r)
        assert s.sup_norm == pytest.approx(math.sqrt((1 + r) / (1 - r)) / c_half_closed_form(r), rel=1e-11)

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            frac_poisson(1.5)
        with pytest.raises(ValueError):
            normalizer(0.0, 0.5)


class TestMajorant:
    @given(st.floats(0.05, 0.99), st.floats(0.0, math.pi))
    @settings(max_examples=40)
    def test_majorant_dominates(self, r, x):
        s = frac_poisson(0.5).slice(r)
        assert s.majorant_at(x) >= abs(s.evaluate(x)) - 1e-15

    def test_builtin_majorant_mass_is_one(self):
        for fam in (POISSON, frac_poisson(0.5)):
            r = 0.9
            g = grid_for(r, 4096)
            assert majorant_mass(fam.slice(r, g), g) == pytest.approx(1.0, abs=1e-9)

    def test_custom_oscillating_majorant(self):
        # a signed kernel: the majorant is the suffix sup of |phi|
        fam = custom_family(lambda r, x: (1 - r) * np.cos(3 * x) + 1 / TWO_PI, "wiggle")
        s = fam.slice(0.5)
        g = CircleGrid(256)
        m = s.majorant_samples(g)
        half = g.n // 2
        assert np.all(np.diff(m[: half + 1]) <= 1e-15)
        assert np.all(m >= np.abs(s.evaluate(g.nodes)) - 1e-15)
        assert not s.monotone

    def test_c_phi_estimate(self):
        assert c_phi_estimate(POISSON, [0.5, 0.9, 0.99]) == pytest.approx(1.0, abs=1e-9)
        with pytest.raises(ValueError):
            c_phi_estimate(POISSON, [])


class TestAxioms:
    def test_poisson_passes(self):
        rep = check_identity_axioms(POISSON, 1 - 2.0 ** -np.arange(3, 9), (math.pi / 4, math.pi))
        assert rep.ok
        assert rep.phi1_deviation.max() < 1e-12
        assert np.all(np.diff(rep.phi2_profile, axis=1) <= 0)

    def test_mass_violation_flagged(self):
        fam = custom_family(lambda r, x: 2 * poisson_raw(r, x) / TWO_PI, "double")
        rep = check_identity_axioms(fam, [0.5, 0.75])
        assert not rep.ok
        assert any(f.startswith("Phi1") for f in rep.flags)

    def test_growing_tail_flagged(self):
        # mass stays 1 but the value near pi grows with r
        fam = custom_family(lambda r, x: (1 - r * np.cos(x)) / TWO_PI, "tail")
        rep = check_identity_axioms(fam, [0.5, 0.75], (math.pi / 2, 3.0))
        assert any(f.startswith("Phi2") for f in rep.flags)

    def test_r_seq_must_increase(self):
        with pytest.raises(ValueError):
            check_identity_axioms(POISSON, [0.9, 0.5])


class TestSpecs:
    def test_family_from_spec(self):
        assert family_from_spec('{"kind":"poisson"}') is POISSON
        assert family_from_spec({"kind": "frac_poisson", "alpha": 0.5}).alpha == 0.5
        with pytest.raises(ValueError):
            family_from_spec({"kind": "gauss"})

    def test_table_roundtrip(self, tmp_path):
        r = 0.5
        g = CircleGrid(128)
        vals = POISSON.slice(r).evaluate(g.nodes)
        path = tmp_path / "k.csv"
        lines = ["r,x,value"] + [f"{r!r},{float(x)!r},{float(v)!r}" for x, v in zip(g.nodes, vals)]
        path.write_text("\n".join(lines) + "\n")
        fam = load_kernel_table(path)
        assert np.allclose(fam.slice(r).evaluate(g.nodes), vals)
        with pytest.raises(ValueError, match="not present"):
            fam.slice(0.6)
        spec_fam = family_from_spec({"kind": "custom", "table": str(path)})
        assert spec_fam.slice(r).evaluate(0.0) == pytest.approx(vals[0])

    def test_table_header_checked(self, tmp_path):
        path = tmp_path / "k.csv"
        path.write_text("radius,x,value\n0.5,0,1\n")
        with pytest.raises(ValueError, match="header"):
            load_kernel_table(path)
