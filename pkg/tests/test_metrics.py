import math

import numpy as np
import pytest

from nashprox.errors import InvalidArgument
from nashprox.game import BoxSet, GameSpec, PlayerSpec
from nashprox.games import build_capacity, build_portfolio, CapacityConfig
from nashprox.metrics import (
    asynchronous_bound,
    bound_dominance_report,
    compute_metrics,
    default_eps_grid,
    fit_inverse_square,
    geometric_envelope_constant,
    initial_error_constant,
    k_of_epsilon,
    randomized_bound,
    randomized_complexity,
    randomized_eta_tilde,
    randomized_eta_zero,
    reference_equilibrium,
    sync_bound,
    sync_complexity,
    sync_complexity_delta,
    total_det_grad,
)


def decoupled_game(targets, mu=1.0):
    players = []
    for i, tgt in enumerate(targets):
        def det(z, prof, tgt=tgt):
            return z - tgt

        players.append(
            PlayerSpec(
                dim=1, box=BoxSet([0.0], [2.0]), det_grad=det,
                stoch_grad=lambda z, p, n, det=det: det(z, p),
                grad_bound=3.0, index=i,
            )
        )
    return GameSpec(players=tuple(players), mu=mu)


class TestReferenceEquilibrium:
    def test_decoupled_quadratic(self):
        game = decoupled_game([0.3, 1.4])
        ref = reference_equilibrium(game, force=True)
        assert ref.profile.data == pytest.approx([0.3, 1.4], abs=1e-10)
        assert ref.residual <= 1e-10

    def test_two_player_first_stage_foc(self):
        # symmetric duopoly: curvature 1, slope 0.5, intercept 2, caps 1,
        # no recourse: 2.5 x = 2 at the interior solution
        cfg = CapacityConfig(
            n_players=2, eta=(1.0, 1.0), caps=(1.0, 1.0),
            d_low=1e-12, d_high=1e-12, h_low=1.0, h_high=1.0,
        )
        game = build_capacity(cfg)
        ref = reference_equilibrium(game, force=True)
        assert ref.profile.data == pytest.approx([0.8, 0.8], abs=1e-8)

    def test_portfolio_methods_agree(self):
        game = build_portfolio()
        ref = reference_equilibrium(game)
        assert ref.cross_gap <= 1e-8
        assert ref.residual <= 1e-10

    def test_capacity_reference(self):
        game = build_capacity()
        ref = reference_equilibrium(game)
        assert ref.residual <= 1e-10
        assert game.feasible(ref.profile, tol=1e-12)


class TestSeries:
    def _records(self, profiles_list):
        from nashprox.schemes import TrajectoryRecord

        offsets = np.array([0, 1])
        recs = []
        for profs in profiles_list:
            arr = np.asarray(profs, dtype=float).reshape(-1, 1)
            k = arr.shape[0]
            recs.append(
                TrajectoryRecord(
                    profiles=arr,
                    beta=np.zeros((k, 1), dtype=int),
                    sg_cum=np.arange(k, dtype=np.int64).reshape(-1, 1) * 10,
                    comm_rounds=np.arange(k),
                    offsets=offsets,
                )
            )
        return recs

    def test_all_at_reference_gives_zero(self):
        from nashprox.game import Profile

        recs = self._records([[1.0, 1.0], [1.0, 1.0]])
        xstar = Profile(np.array([1.0]), np.array([0, 1]))
        m = compute_metrics(recs, xstar)
        assert np.all(m.u == 0)

    def test_single_trajectory_is_its_norm(self):
        from nashprox.game import Profile

        recs = self._records([[2.0, 1.5]])
        xstar = Profile(np.array([1.0]), np.array([0, 1]))
        m = compute_metrics(recs, xstar)
        assert m.u == pytest.approx([1.0, 0.5])

    def test_mean_of_two(self):
        from nashprox.game import Profile

        recs = self._records([[1.0], [1.0 + 2e-3]])
        xstar = Profile(np.array([1.0]), np.array([0, 1]))
        m = compute_metrics(recs, xstar)
        assert m.u[0] == pytest.approx(1e-3)

    def test_k_of_epsilon_lookup(self):
        u = np.array([1.0, 0.1, 0.01])
        counts = np.array([10.0, 110.0, 1110.0])
        table = k_of_epsilon(u, counts, [0.05])
        assert table == [(0.05, 1110.0)]

    def test_k_of_epsilon_at_start(self):
        u = np.array([1.0, 0.1])
        table = k_of_epsilon(u, np.array([0.0, 10.0]), [2.0])
        assert table == [(2.0, 0.0)]

    def test_k_of_epsilon_missing(self):
        u = np.array([1.0, 0.1])
        table = k_of_epsilon(u, np.array([0.0, 10.0]), [1e-6])
        assert table[0][1] is None


class TestFits:
    def test_exact_inverse_square(self):
        eps = np.geomspace(1.0, 0.01, 8)
        table = [(e, 7.0 / e**2) for e in eps]
        (coef, intercept), r2 = fit_inverse_square(table)
        assert coef == pytest.approx(7.0)
        assert r2 == pytest.approx(1.0)

    def test_noisy_inverse_square(self):
        rng = np.random.default_rng(0)
        eps = np.geomspace(1.0, 0.01, 12)
        table = [(e, (7.0 / e**2) * (1 + 0.01 * rng.standard_normal())) for e in eps]
        (coef, _), r2 = fit_inverse_square(table)
        assert abs(coef - 7.0) / 7.0 <= 0.05
        assert r2 > 0.99

    def test_fit_discriminates_growth_orders(self):
        # sub-quadratic growth scores visibly below the quadratic model;
        # logarithmic growth fails the fit outright
        eps = np.geomspace(1.0, 0.01, 12)
        _, r2_quad = fit_inverse_square([(e, 7.0 / e**2) for e in eps])
        _, r2_lin = fit_inverse_square([(e, 7.0 / e) for e in eps])
        _, r2_log = fit_inverse_square([(e, 7.0 * np.log(1 / e)) for e in eps])
        assert r2_log < 0.9
        assert r2_lin < 0.93 < 0.99 < r2_quad

    def test_degenerate_grid_rejected(self):
        with pytest.raises(InvalidArgument):
            fit_inverse_square([(0.1, 1.0), (0.1, 2.0), (0.1, 3.0)])


class TestEnvelopeConstant:
    def test_hand_value(self):
        d = geometric_envelope_constant(0.5, 0.6)
        assert d == pytest.approx(1.0 / (math.e * math.log(1.2)), rel=1e-12)
        z = np.linspace(0.0, 200.0, 4001)
        assert np.all(z * 0.5**z <= d * 0.6**z + 1e-15)

    def test_exact_at_maximizer(self):
        c, q = 0.5, 0.6
        d = geometric_envelope_constant(c, q)
        p = c / q
        z_star = -1.0 / math.log(p)
        assert z_star * p**z_star == pytest.approx(d, abs=1e-10)

    def test_invalid_order(self):
        with pytest.raises(InvalidArgument):
            geometric_envelope_constant(0.6, 0.5)

    def test_random_pairs_grid(self):
        rng = np.random.default_rng(1)
        z = np.linspace(0.0, 200.0, 2001)
        for _ in range(100):
            c = rng.uniform(0.05, 0.98)
            q = rng.uniform(c + 1e-3, 0.999)
            d = geometric_envelope_constant(c, q)
            assert np.all(z * c**z <= d * q**z * (1 + 1e-12) + 1e-15)


class TestBoundCollapses:
    def test_delta_recipe_exponent(self):
        # with eta = a the delta recipe pins the exponent at exactly 2 + delta
        a, delta = 0.9, 0.7
        delta0 = delta * math.log(1 / a) / (1 + delta / 2)
        q = a * math.exp(delta0 / 2)
        exponent = math.log(1 / a**2) / math.log(1 / q)
        assert exponent == pytest.approx(2 + delta, rel=1e-12)

    def test_full_activation_collapse(self):
        a, eta = 0.9, 0.85
        assert randomized_eta_tilde(eta, 1.0) == pytest.approx(eta)
        assert randomized_eta_zero(eta, 1.0) == pytest.approx(eta)
        rb = randomized_bound(a, eta, np.ones(4), c0=1.3, q=0.97)
        sb = sync_bound(a, eta, c0=1.3, n_players=4, q=0.97)
        assert rb.c0_tilde == pytest.approx(sb.c0)
        assert rb.d_tilde == pytest.approx(sb.d_const)
        np.testing.assert_allclose(
            rb.envelope(np.arange(10)), sb.envelope(np.arange(10))
        )

    def test_randomized_complexity_collapses_to_sync(self):
        a = eta = 0.9
        q = 0.97
        rb = randomized_bound(a, eta, np.ones(3), c0=1.0, q=q)
        sb = sync_bound(a, eta, c0=1.0, n_players=3, q=q)
        got = randomized_complexity(5.0, rb, eps=1e-3, p_i=1.0)
        want = sync_complexity(5.0, sb, eps=1e-3)
        assert got == pytest.approx(want, rel=1e-12)

    def test_degenerate_asynchronous(self):
        ab = asynchronous_bound(0.9, 0.85, b1=1, b2=0, c0=1.0)
        assert ab.n0 == 0
        assert ab.rho == pytest.approx(0.9)
        k = np.arange(6)
        np.testing.assert_allclose(ab.envelope(k), (1.0 + k) * 0.9**k)
        # b1 = 1 kills the leading factor of the geometric envelope
        assert ab.upper_envelope(0) == pytest.approx(1.0 + ab.d_const)

    def test_eta_ratio_exceeds_one(self):
        # randomization is never free: eta~ >= eta~0, equality only at p = 1
        for eta in (0.3, 0.6, 0.9):
            for pmin in np.linspace(0.05, 1.0, 20):
                for pmax in np.linspace(pmin, 1.0, 10):
                    ratio = (
                        randomized_eta_tilde(eta, pmin)
                        / randomized_eta_zero(eta, pmax)
                    )
                    assert ratio >= 1.0 - 1e-12
                    if pmin < 1.0 and pmax >= pmin:
                        pass
        assert randomized_eta_tilde(0.5, 1.0) == pytest.approx(
            randomized_eta_zero(0.5, 1.0)
        )

    def test_delta_tradeoff_sweep(self):
        # the delta-pinned budget first falls then rises in delta
        vals = [
            sync_complexity_delta(4.0, 0.9, 1.0, 6, eps=1e-3, delta=d)
            for d in np.linspace(0.05, 6.0, 40)
        ]
        arg = int(np.argmin(vals))
        assert 0 < arg < len(vals) - 1

    def test_range_violations_named(self):
        with pytest.raises(InvalidArgument):
            sync_bound(1.1, 0.5, 1.0, 2)
        with pytest.raises(InvalidArgument):
            sync_bound(0.5, 0.6, 1.0, 2, q=0.55)
        with pytest.raises(InvalidArgument):
            asynchronous_bound(0.9, 0.5, b1=0, b2=0, c0=1.0)

    def test_windowed_delta_budget_degenerates_to_sync_form(self):
        # b1 = 1, b2 = 0: the windowed-update budget takes the synchronous
        # shape with C replacing sqrt(N) C
        from nashprox.metrics import asynchronous_complexity_delta

        q_i, a, c0, eps, delta = 4.0, 0.9, 1.3, 1e-3, 0.5
        got = asynchronous_complexity_delta(q_i, a, 1, 0, c0, eps, delta)
        # same algebra with the stacked-norm constant sqrt(N)=1
        want = sync_complexity_delta(q_i, a, c0, 1, eps, delta)
        assert got == pytest.approx(want, rel=1e-12)

    def test_cyclic_delta_budget_zero_delay(self):
        from nashprox.metrics import cyclic_complexity_delta

        q_i, a, n, c0, eps, delta = 4.0, 0.9, 3, 1.3, 1e-3, 0.5
        got = cyclic_complexity_delta(q_i, a, n, 0, c0, eps, delta)
        # with no delay the exponent collapses to 2 + delta
        le = math.log(1.0 / a)
        d_const = n * (1.0 + 2.0 / delta) / (math.e * le)
        rho = a
        eps_t = eps / (c0 + d_const) * rho ** ((n - 1) / n)
        eta_t = a ** (1.0 / n)
        lead = q_i / (a ** (2 + 2 / n) * math.log(1.0 / eta_t**2))
        want = lead * (1.0 / eps_t) ** (2 + delta) + math.ceil(
            math.log(1.0 / eps_t) * (2 + delta) * n / (2.0 * le)
        )
        assert got == pytest.approx(want, rel=1e-12)

    def test_cyclic_budget_decreases_with_accuracy_relaxation(self):
        from nashprox.metrics import cyclic_complexity

        vals = [
            cyclic_complexity(4.0, 0.8, 0.9, 3, 0, 1.0, eps)
            for eps in (1e-2, 1e-3, 1e-4)
        ]
        assert vals[0] < vals[1] < vals[2]

    def test_probabilistic_budget_is_shrunken_accuracy(self):
        from nashprox.metrics import prob_complexity_delta

        direct = sync_complexity_delta(4.0, 0.9, 1.0, 6, 1e-3 * 0.05, 0.5)
        viaprob = prob_complexity_delta(4.0, 0.9, 1.0, 6, 1e-3, 0.05, 0.5)
        assert viaprob == pytest.approx(direct, rel=1e-12)

    def test_direct_summation_below_closed_form(self):
        # summing the prescribed step counts over the horizon implied by the
        # envelope stays below the closed-form budget
        a = eta = 0.85
        n, c0, q_i = 4, 1.0, 3.0
        b = sync_bound(a, eta, c0, n)
        for eps in (1e-2, 1e-3):
            ratio = math.sqrt(n) * (c0 + b.d_const) / eps
            k_eps = math.ceil(math.log(ratio) / math.log(1.0 / b.q))
            direct = sum(
                math.ceil(q_i / eta ** (2 * (k + 1))) for k in range(k_eps)
            )
            assert direct <= sync_complexity(q_i, b, eps) + 1e-9


class TestDominance:
    def test_synthetic_dominated_series(self):
        k = np.arange(30)
        q = 0.8
        u = 0.5 * q**k
        sb = sync_bound(0.7, 0.7, c0=0.5, n_players=2, q=q + 1e-6)
        rows = bound_dominance_report(u, sb.envelope(k))
        assert all(r.ok for r in rows)

    def test_flagging(self):
        rows = bound_dominance_report(
            np.array([1.0, 2.0]), np.array([1.5, 1.5])
        )
        assert rows[0].ok and not rows[1].ok

    def test_initial_error_constant(self):
        game = decoupled_game([0.3, 1.4])
        ref = reference_equilibrium(game, force=True)
        c0 = initial_error_constant(game, ref.profile)
        assert c0 == pytest.approx(1.4, abs=1e-9)

    def test_default_grid(self):
        grid = default_eps_grid(1.2)
        assert len(grid) == 12
        assert grid[0] == pytest.approx(0.6)
        assert grid[-1] == pytest.approx(2.5e-3)
