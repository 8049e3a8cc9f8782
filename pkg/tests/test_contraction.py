import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nashprox.contraction import (
    ContractionReport,
    CurvatureBounds,
    analyze,
    build_gamma,
    norm_2,
    norm_inf,
    spectral_radius,
)
from nashprox.errors import InvalidArgument


def capacity_bounds(n=5, eta=1.25, b=0.5):
    zoff = np.full((n, n), b)
    np.fill_diagonal(zoff, 0.0)
    return CurvatureBounds(zeta_min=np.full(n, eta + 2 * b), zeta_offmax=zoff)


class TestBuildGamma:
    def test_single_player(self):
        bounds = CurvatureBounds(zeta_min=[1.0], zeta_offmax=[[0.0]])
        assert build_gamma(bounds, 1.0) == pytest.approx(np.array([[0.5]]))

    def test_capacity_defaults(self):
        gamma = build_gamma(capacity_bounds(), 1.0)
        assert gamma[0, 0] == pytest.approx(1 / 3.25, abs=1e-15)
        assert gamma[0, 1] == pytest.approx(0.5 / 3.25, abs=1e-15)

    def test_portfolio_first_row(self):
        # risk aversion 3 + 1/6, min asset variance 0.09, coupling 0.15
        zmin = 2 * (3 + 1 / 6) * 0.09 + 2 * 0.15
        assert zmin == pytest.approx(0.87)
        bounds = CurvatureBounds(
            zeta_min=[zmin, zmin], zeta_offmax=[[0.0, 0.15], [0.15, 0.0]]
        )
        gamma = build_gamma(bounds, 2.0)
        assert gamma[0, 0] == pytest.approx(2 / 2.87)
        assert gamma[0, 1] == pytest.approx(0.15 / 2.87)

    def test_rejects_nonpositive_mu(self):
        with pytest.raises(InvalidArgument):
            build_gamma(capacity_bounds(), 0.0)

    def test_rejects_nonzero_diagonal(self):
        with pytest.raises(InvalidArgument):
            CurvatureBounds(zeta_min=[1.0], zeta_offmax=[[0.5]])


class TestNorms:
    def test_identity(self):
        eye = np.eye(3)
        assert norm_inf(eye) == 1.0
        assert norm_2(eye) == pytest.approx(1.0, abs=1e-10)
        assert spectral_radius(eye) == pytest.approx(1.0, abs=1e-10)

    def test_symmetric_2x2(self):
        m = np.array([[0.5, 0.2], [0.2, 0.5]])
        assert norm_inf(m) == pytest.approx(0.7)
        assert norm_2(m) == pytest.approx(0.7, abs=1e-10)
        assert spectral_radius(m) == pytest.approx(0.7, abs=1e-10)

    def test_capacity_infinity_norm(self):
        gamma = build_gamma(capacity_bounds(), 1.0)
        assert norm_inf(gamma) == pytest.approx(3 / 3.25, abs=1e-12)

    def test_rho_below_both_norms_randomized(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = rng.integers(1, 7)
            zmin = rng.uniform(0.1, 3.0, n)
            zoff = rng.uniform(0, 1.0, (n, n))
            np.fill_diagonal(zoff, 0.0)
            gamma = build_gamma(CurvatureBounds(zmin, zoff), rng.uniform(0.2, 5.0))
            rho = spectral_radius(gamma)
            assert rho <= norm_2(gamma) + 1e-10
            assert rho <= norm_inf(gamma) + 1e-10

    def test_rejects_negative_entries(self):
        with pytest.raises(InvalidArgument):
            norm_inf(np.array([[0.5, -0.1], [0.0, 0.5]]))


class TestAssumptions:
    def test_portfolio_margin(self):
        # smallest own-curvature 0.87 vs coupling row sum 5 * 0.15 = 0.75
        zoff = np.full((6, 6), 0.15)
        np.fill_diagonal(zoff, 0.0)
        zmin = np.array([0.87 + 0.03 * i for i in range(6)])
        report = analyze(CurvatureBounds(zmin, zoff), mu=2.0)
        assert report.ok_diag_dom
        assert report.ok_infnorm
        assert report.ok_2norm

    def test_constructed_violation(self):
        zoff = np.array([[0.0, 1.2], [1.2, 0.0]])
        report = analyze(CurvatureBounds([1.0, 1.0], zoff), mu=1.0)
        assert not report.ok_diag_dom

    def test_single_player_always_passes(self):
        for mu in (0.1, 1.0, 10.0):
            report = analyze(CurvatureBounds([0.7], [[0.0]]), mu=mu)
            assert report.ok_2norm and report.ok_infnorm and report.ok_diag_dom

    @given(st.integers(2, 6), st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_diag_dominance_implies_infnorm(self, n, seed):
        rng = np.random.default_rng(seed)
        zoff = rng.uniform(0, 1, (n, n))
        np.fill_diagonal(zoff, 0.0)
        zmin = zoff.sum(axis=1) + rng.uniform(0.01, 1.0, n)
        report = analyze(CurvatureBounds(zmin, zoff), mu=rng.uniform(0.1, 4.0))
        assert report.ok_diag_dom
        assert report.ok_infnorm

    def test_monotone_in_mu(self):
        bounds = capacity_bounds()
        mus = [0.5, 1.0, 2.0, 5.0, 50.0, 5000.0]
        diags, ratios = [], []
        for mu in mus:
            g = build_gamma(bounds, mu)
            diags.append(g[0, 0])
            ratios.append(g[0, 1] / g[0, 0])
        assert all(d2 > d1 for d1, d2 in zip(diags, diags[1:]))
        assert all(r2 <= r1 + 1e-15 for r1, r2 in zip(ratios, ratios[1:]))
        assert diags[-1] == pytest.approx(1.0, abs=1e-3)

    def test_json_roundtrip(self):
        report = analyze(capacity_bounds(), mu=1.0)
        as_dict = report.to_dict()
        assert as_dict["a_inf"] == pytest.approx(3 / 3.25, abs=1e-12)
        assert isinstance(report.to_json(), str)
        rebuilt = ContractionReport(
            gamma=np.array(as_dict["gamma"]),
            a2=as_dict["a2"],
            a_inf=as_dict["a_inf"],
            rho=as_dict["rho"],
            ok_2norm=as_dict["ok_2norm"],
            ok_infnorm=as_dict["ok_infnorm"],
            ok_diag_dom=as_dict["ok_diag_dom"],
        )
        assert np.allclose(rebuilt.gamma, report.gamma)
