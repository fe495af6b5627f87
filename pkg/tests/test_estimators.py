# ==== tests/test_estimators.py ====
"""Tests for the LMMSE, LMEP and SLMEP estimators and their closed forms."""

import math

import numpy as np
import pytest

from twrn_sim.config import SLMEP_TOL
from twrn_sim.core.errors import DegenerateError, DomainError
from twrn_sim.core.estimators import (
    ChannelEstimate,
    CombinerPair,
    analytic_mse,
    analytic_mse_err,
    average_bep,
    average_bep_chernoff,
    bit_error_probability,
    channel_context,
    composite_moments,
    effective_snr,
    estimate_context,
    lmep_combiners,
    lmep_estimate,
    lmmse_combiners,
    lmmse_estimate,
    mse_err_floor_bound,
    mse_err_high_snr_limit,
    mse_floor_correlated,
    mse_from_information,
    order_tradeoff,
    pilot_context,
    slmep_estimate,
    slmep_gap,
    snr_from_terms,
)
from twrn_sim.core.numerics import RngStream
from twrn_sim.core.relay_power import ea_scaling
from twrn_sim.core.signal_model import (
    ChannelRealization,
    ReceivedPilot,
    SystemParams,
    decompose_offset,
    lambda_gamma_diagonals,
    rx_pilot_at_source,
)
from twrn_sim.core.training import correlated_pair, optimal_pair

CHANNEL = ChannelRealization(0.9 + 0.2j, -0.4 + 0.8j)

def _observe(params, pair, off, scaling, ch, rng, hypothesis=0):
    lam, gamma = lambda_gamma_diagonals(off, scaling.gamma_i, scaling.gamma_s, params.n_pilot)
    return rx_pilot_at_source(ch, pair, off, gamma, lam, rng, params, hypothesis)

def _monte_carlo_mse(params, pair, off, scaling, trials, seed, assumed=0):
    rng = RngStream(seed)
    total = 0.0
    for _ in range(trials):
        ch = ChannelRealization.draw(rng, params.channel_variance)
        rx = _observe(params, pair, off, scaling, ch, rng)
        total += lmmse_estimate(rx, pair, off, scaling, params, hypothesis=assumed).squared_error(ch)
    return total / trials

class TestCompositeMoments:
    """Test cases for the composite channel moments."""

    def test_unit_variance(self):
        """Test (2, 1, 3, 2) for unit link variance."""
        assert composite_moments(1.0) == (2.0, 1.0, 3.0, 2.0)

    def test_scaling(self, params8):
        """Test variance 2 and the SystemParams overload."""
        assert composite_moments(2.0) == (8.0, 4.0, 12.0, 32.0)
        assert composite_moments(params8) == composite_moments(1.0)

    def test_zero_and_negative(self):
        """Test zero variance gives zeros and negatives are rejected."""
        assert composite_moments(0.0) == (0.0, 0.0, 0.0, 0.0)
        with pytest.raises(DomainError):
            composite_moments(-1.0)

class TestLmmse:
    """Test cases for the linear MMSE estimator."""

    def test_zero_observation(self, params8, pair8, offset8, diagonals8):
        """Test a zero observation estimates zero."""
        lam, gamma = diagonals8
        rx = ReceivedPilot(samples=np.zeros(17, dtype=complex), gamma_diag=gamma, lambda_diag=lam)
        est = lmmse_estimate(rx, pair8, offset8, ea_scaling(params8, offset8), params8)
        assert (est.h_a_hat, est.h_b_hat) == (0, 0)
        assert est.method == "lmmse"

    def test_near_noiseless(self, pair8):
        """Test the estimate approaches the truth at very high SNR."""
        params = SystemParams.from_snr_db(8, 90.0)
        off = decompose_offset(2.5, params)
        scaling = ea_scaling(params, off)
        rx = _observe(params, pair8, off, scaling, CHANNEL, None)
        est = lmmse_estimate(rx, pair8, off, scaling, params)
        assert abs(est.h_a_hat - CHANNEL.h_a) < 1e-3
        assert abs(est.h_b_hat - CHANNEL.h_b) < 1e-3

    def test_monte_carlo_matches_closed_form(self, params8, pair8, offset8, ea8):
        """Test the empirical MSE over 12000 trials is within 10% of the closed form."""
        empirical = _monte_carlo_mse(params8, pair8, offset8, ea8, 12000, 3)
        assert empirical == pytest.approx(analytic_mse(params8, offset8, ea8, pair8), rel=0.10)

    def test_wrong_order_monte_carlo(self, params16, pair16):
        """Test the wrong-order empirical MSE tracks its closed form."""
        off = decompose_offset(2.0, params16)
        scaling = ea_scaling(params16, off)
        empirical = _monte_carlo_mse(params16, pair16, off, scaling, 12000, 5, assumed=1)
        assert empirical == pytest.approx(analytic_mse_err(params16, off, scaling, pair16), rel=0.10)

    def test_error_orthogonal_to_observation(self, params8, pair8, offset8, ea8):
        """Test every entry of E[(theta_hat - theta) x^H] stays within 4 sigma of zero."""
        comb = lmmse_combiners(pair8, offset8, ea8, params8)
        rng = RngStream(17)
        products = []
        for _ in range(4000):
            ch = ChannelRealization.draw(rng, params8.channel_variance)
            x = _observe(params8, pair8, offset8, ea8, ch, rng).samples
            h_a, h_b = comb.apply(x)
            products.append(np.concatenate([(h_a - ch.h_a) * x.conj(), (h_b - ch.h_b) * x.conj()]))
        products = np.array(products)
        mean = products.mean(axis=0)
        sigma = np.sqrt(np.mean(np.abs(products - mean) ** 2, axis=0) / len(products))
        assert np.all(np.abs(mean) <= 4 * sigma)

class TestLmep:
    """Test cases for the effective-SNR maximizing combiners."""

    def _estimate(self, params, pair, off, scaling, seed=2):
        rx = _observe(params, pair, off, scaling, CHANNEL, RngStream(seed))
        return rx, lmmse_estimate(rx, pair, off, scaling, params)

    def test_scale_identity(self, params8, pair8, offset8, ea8):
        """Test 2 Re(r_E^H u_b) equals 2A."""
        _, init = self._estimate(params8, pair8, offset8, ea8)
        comb = lmep_combiners(init, pair8, offset8, ea8, params8)
        assert 2 * np.real(np.vdot(comb.r_e, comb.u_b)) == pytest.approx(2 * comb.a_scale)

    def test_local_optimum(self, params8, pair8, offset8, ea8):
        """Test random perturbations of u_b never raise the effective SNR."""
        _, init = self._estimate(params8, pair8, offset8, ea8)
        comb = lmep_combiners(init, pair8, offset8, ea8, params8)
        ctx = estimate_context(pilot_context(pair8, offset8, ea8, params8, 0), init.h_a_hat, init.h_b_hat)
        best = effective_snr(comb, ctx)
        gen = np.random.default_rng(0)
        scale = 1e-3 * np.linalg.norm(comb.u_b)
        for _ in range(100):
            delta = scale * (gen.standard_normal(17) + 1j * gen.standard_normal(17))
            perturbed = CombinerPair(u_a=comb.u_a, u_b=comb.u_b + delta)
            assert effective_snr(perturbed, ctx) <= best * (1 + 1e-12)

    def test_beats_combiner_along_r_e(self, params8, pair8, offset8, ea8):
        """Test u_b along R_S^-1 r_E scores at least the SNR of A r_E / ||r_E||^2."""
        _, init = self._estimate(params8, pair8, offset8, ea8)
        comb = lmep_combiners(init, pair8, offset8, ea8, params8)
        ctx = estimate_context(pilot_context(pair8, offset8, ea8, params8, 0), init.h_a_hat, init.h_b_hat)
        along_r_e = CombinerPair(
            u_a=comb.u_a, u_b=comb.a_scale * comb.r_e / np.real(np.vdot(comb.r_e, comb.r_e))
        )
        assert effective_snr(comb, ctx) >= effective_snr(along_r_e, ctx) * (1 - 1e-12)

    def test_one_above_mmse_scaling(self, params8, pair8, offset8, ea8):
        """Test the SNR exceeds that of the unscaled u_b = R_S^-1 r_E by exactly one."""
        _, init = self._estimate(params8, pair8, offset8, ea8)
        comb = lmep_combiners(init, pair8, offset8, ea8, params8)
        ctx = estimate_context(pilot_context(pair8, offset8, ea8, params8, 0), init.h_a_hat, init.h_b_hat)
        cov = np.outer(ctx.signal, ctx.signal.conj()) + np.diag(ctx.noise_diag)
        unscaled = CombinerPair(u_a=comb.u_a, u_b=np.linalg.solve(cov, comb.r_e))
        assert effective_snr(comb, ctx) == pytest.approx(effective_snr(unscaled, ctx) + 1.0, rel=1e-9)

    def test_lower_error_probability_than_lmmse(self, params8, pair8, offset8, ea8):
        """Test the mean Q(sqrt(SNR)) at the true channels falls below LMMSE over 400 draws."""
        pilot = pilot_context(pair8, offset8, ea8, params8, 0)
        lmmse = lmmse_combiners(pair8, offset8, ea8, params8)
        rng = RngStream(23)
        bep_lmmse, bep_lmep = [], []
        for _ in range(400):
            ch = ChannelRealization.draw(rng, params8.channel_variance)
            rx = _observe(params8, pair8, offset8, ea8, ch, rng)
            init = lmmse_estimate(rx, pair8, offset8, ea8, params8)
            truth = channel_context(pilot, ch)
            bep_lmmse.append(bit_error_probability(effective_snr(lmmse, truth)))
            bep_lmep.append(bit_error_probability(
                effective_snr(lmep_combiners(init, pair8, offset8, ea8, params8), truth)
            ))
        assert np.mean(bep_lmep) < np.mean(bep_lmmse)

    def test_zero_self_channel(self, params8, pair8, offset8, ea8, diagonals8):
        """Test h_a_hat = 0 zeroes u_a and aligns u_b with Gamma Lambda r_b."""
        init = ChannelEstimate(0j, 0.5 + 0.2j, method="lmmse", hypothesis_used=0)
        comb = lmep_combiners(init, pair8, offset8, ea8, params8)
        assert np.all(comb.u_a == 0)
        g_b = pilot_context(pair8, offset8, ea8, params8, 0).g_b
        cos = abs(np.vdot(g_b, comb.u_b)) / (np.linalg.norm(g_b) * np.linalg.norm(comb.u_b))
        assert cos == pytest.approx(1.0)

    def test_zero_cross_channel(self, params8, pair8, offset8, ea8):
        """Test h_b_hat = 0 makes r_E vanish."""
        init = ChannelEstimate(0.5 + 0j, 0j, method="lmmse", hypothesis_used=0)
        with pytest.raises(DegenerateError):
            lmep_combiners(init, pair8, offset8, ea8, params8)

    def test_degenerate_fallback(self, params8, pair8, offset8, ea8, diagonals8):
        """Test a zero observation falls back to the LMMSE estimate."""
        lam, gamma = diagonals8
        rx = ReceivedPilot(samples=np.zeros(17, dtype=complex), gamma_diag=gamma, lambda_diag=lam)
        est = lmep_estimate(rx, pair8, offset8, ea8, params8)
        assert est.fallback == "degenerate"
        assert est.h_a_hat == 0

    def test_estimate_and_initializations(self, params8, pair8, offset8, ea8):
        """Test LMEP runs from LMMSE and from a random start and checks its init."""
        rx, _ = self._estimate(params8, pair8, offset8, ea8)
        assert lmep_estimate(rx, pair8, offset8, ea8, params8).method == "lmep"
        est = lmep_estimate(rx, pair8, offset8, ea8, params8, init="random", rng=RngStream(4))
        assert est.method in ("lmep", "lmmse")
        with pytest.raises(DomainError):
            lmep_estimate(rx, pair8, offset8, ea8, params8, init="random")
        with pytest.raises(DomainError):
            lmep_estimate(rx, pair8, offset8, ea8, params8, init="oracle")

class TestEffectiveSnr:
    """Test cases for the post-cancellation SNR."""

    def test_perfect_estimates(self, params8):
        """Test |h_b|^2 / noise_eff without estimation error."""
        noise = 0.3
        assert snr_from_terms(abs(CHANNEL.h_b) ** 2, 0.0, 0.0, noise) == pytest.approx(
            abs(CHANNEL.h_b) ** 2 / noise
        )

    def test_zero_signal(self):
        """Test h_b = 0 gives zero SNR and a zero denominator is rejected."""
        assert snr_from_terms(0.0, 0.1, 0.1, 0.5) == 0.0
        with pytest.raises(DomainError):
            snr_from_terms(1.0, 0.0, 0.0, 0.0)

    def test_erroneous_below_correct(self, params8, pair8, offset8, ea8):
        """Test the wrong-order SNR is strictly below the correct one."""
        rx = _observe(params8, pair8, offset8, ea8, CHANNEL, RngStream(6))
        init = lmmse_estimate(rx, pair8, offset8, ea8, params8)
        comb = lmep_combiners(init, pair8, offset8, ea8, params8)
        ctx = estimate_context(pilot_context(pair8, offset8, ea8, params8, 0), init.h_a_hat, init.h_b_hat)
        assert 0 < effective_snr(comb, ctx, "erroneous") < effective_snr(comb, ctx)
        with pytest.raises(DomainError):
            effective_snr(comb, ctx, "optimistic")

class TestSlmep:
    """Test cases for the scaled LMEP estimator."""

    def test_gap(self):
        """Test the gap vanishes at 1/2 and is defined only on (0, 1/2]."""
        assert slmep_gap(0.5) == 0.0
        assert slmep_gap(0.1) == pytest.approx(2 * math.log(9.0))
        for bad in (0.0, 0.6, -0.1):
            with pytest.raises(DomainError):
                slmep_gap(bad)

    def test_full_weight_is_lmep(self, params8, pair8, offset8, ea8):
        """Test weight 1 reproduces the LMEP combiners of the detected order."""
        rx = _observe(params8, pair8, offset8, ea8, CHANNEL, RngStream(7))
        init = lmmse_estimate(rx, pair8, offset8, ea8, params8)
        lmep = lmep_combiners(init, pair8, offset8, ea8, params8)
        hedged = order_tradeoff(rx, pair8, offset8, ea8, params8, p_theta=0.3).combiners(1.0)
        np.testing.assert_allclose(hedged.u_a, lmep.u_a, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(hedged.u_b, lmep.u_b, rtol=1e-9, atol=1e-12)

    def test_zero_weight_maximizes_wrong_order_snr(self, params8, pair8, offset8, ea8):
        """Test weight 0 drops u_a and no nearby u_b raises the wrong-order SNR."""
        rx = _observe(params8, pair8, offset8, ea8, CHANNEL, RngStream(7))
        tradeoff = order_tradeoff(rx, pair8, offset8, ea8, params8, p_theta=0.3)
        comb = tradeoff.combiners(0.0)
        assert np.all(comb.u_a == 0)
        best = effective_snr(comb, tradeoff.other, "erroneous")
        gen = np.random.default_rng(1)
        scale = 1e-3 * np.linalg.norm(comb.u_b)
        for _ in range(50):
            delta = scale * (gen.standard_normal(17) + 1j * gen.standard_normal(17))
            perturbed = CombinerPair(u_a=comb.u_a, u_b=comb.u_b + delta)
            assert effective_snr(perturbed, tradeoff.other, "erroneous") <= best * (1 + 1e-12)

    def test_constraint_met_or_flagged(self, pair8):
        """Test constrained solutions meet the gap and the gap is mostly reachable."""
        params = SystemParams.from_snr_db(8, 15.0)
        off = decompose_offset(1.0, params)
        scaling = ea_scaling(params, off)
        rng = RngStream(30)
        reachable = 0
        for _ in range(50):
            ch = ChannelRealization.draw(rng, 1.0)
            rx = _observe(params, pair8, off, scaling, ch, rng)
            est = slmep_estimate(rx, pair8, off, scaling, params, p_theta=0.3)
            assert est.fallback in (None, "boundary", "infeasible", "degenerate")
            if est.fallback is None:
                assert est.method == "slmep"
                assert est.constraint_residual <= SLMEP_TOL
            if est.fallback not in ("infeasible", "degenerate"):
                reachable += 1
                assert 0.0 <= est.order_weight <= 1.0
        assert reachable >= 25

    @pytest.mark.parametrize("p_theta", [0.1, 0.4])
    def test_never_above_lmep_bound(self, params8, pair8, offset8, ea8, p_theta):
        """Test the averaged error bound at the solution never exceeds the LMEP one."""
        rng = RngStream(31)
        gains = []
        for _ in range(40):
            ch = ChannelRealization.draw(rng, 1.0)
            rx = _observe(params8, pair8, offset8, ea8, ch, rng)
            est = slmep_estimate(rx, pair8, offset8, ea8, params8, p_theta=p_theta)
            if est.fallback == "degenerate":
                continue
            tradeoff = order_tradeoff(rx, pair8, offset8, ea8, params8, p_theta)
            gains.append(tradeoff.objective(1.0) - tradeoff.objective(est.order_weight))
        assert min(gains) >= 0.0
        if p_theta == 0.4:
            assert max(gains) > 0.0

    def test_unreachable_gap(self, params8, pair8, offset8, ea8):
        """Test a vanishing error probability keeps the LMEP estimate."""
        rx = _observe(params8, pair8, offset8, ea8, CHANNEL, RngStream(7))
        est = slmep_estimate(rx, pair8, offset8, ea8, params8, p_theta=1e-300)
        assert est.method == "lmep"
        assert est.fallback == "infeasible"
        assert est.order_weight == 1.0
        assert est.h_b_hat == lmep_estimate(rx, pair8, offset8, ea8, params8).h_b_hat

    def test_invalid_probability(self, params8, pair8, offset8, ea8):
        """Test the error probability is validated."""
        rx = _observe(params8, pair8, offset8, ea8, CHANNEL, RngStream(7))
        with pytest.raises(DomainError):
            slmep_estimate(rx, pair8, offset8, ea8, params8, p_theta=0.7)

class TestClosedForms:
    """Test cases for the analytic MSE and error probabilities."""

    def test_no_information(self):
        """Test B1 = 0 returns the prior variance."""
        assert mse_from_information(0.0, 0.0, composite_moments(1.0)) == pytest.approx(3.0)

    def test_decreasing_in_information(self):
        """Test the MSE falls as B1 grows."""
        values = [mse_from_information(b, 0.1 * b, composite_moments(1.0)) for b in np.linspace(0, 50, 20)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_decreasing_in_relay_energy(self, pair8):
        """Test more relay pilot energy lowers the analytic MSE."""
        values = []
        for energy in (10.0, 40.0, 160.0):
            params = SystemParams.from_snr_db(8, 10.0, relay_pilot_energy=energy)
            off = decompose_offset(2.5, params)
            values.append(analytic_mse(params, off, ea_scaling(params, off), pair8))
        assert values[0] > values[1] > values[2]

    def test_correlated_floor_at_zero_offset(self):
        """Test correlated pilots saturate near 4/3 at 40 dB without an offset."""
        params = SystemParams.from_snr_db(8, 40.0)
        off = decompose_offset(0.0, params)
        mse = analytic_mse(params, off, ea_scaling(params, off), correlated_pair(8))
        assert mse == pytest.approx(4.0 / 3.0, rel=0.02)

    def test_correlated_large_n_floor(self):
        """Test the large-N floor of correlated pilots at N=64."""
        params = SystemParams.from_snr_db(64, 10.0)
        off = decompose_offset(0.5, params)
        scaling = ea_scaling(params, off)
        exact = analytic_mse(params, off, scaling, correlated_pair(64))
        assert exact == pytest.approx(mse_floor_correlated(params, off, scaling), rel=0.02)

    def test_wrong_order_at_zero_offset(self, params8, pair8):
        """Test both orders give the same error without an offset."""
        off = decompose_offset(0.0, params8)
        scaling = ea_scaling(params8, off)
        assert analytic_mse_err(params8, off, scaling, pair8) == pytest.approx(
            analytic_mse(params8, off, scaling, pair8), rel=1e-9
        )

    def test_wrong_order_floor(self):
        """Test the wrong-order error stays above (tau / N T_s)^2 ups_s at 40 dB."""
        params = SystemParams.from_snr_db(16, 40.0)
        off = decompose_offset(2.0, params)
        scaling = ea_scaling(params, off)
        pair = optimal_pair(16)
        floor = mse_err_floor_bound(params, off)
        assert floor == pytest.approx(3.0 / 64.0)
        assert mse_err_high_snr_limit(params, off, scaling, pair) == pytest.approx(floor, rel=1e-9)
        assert analytic_mse_err(params, off, scaling, pair) >= floor

    def test_bit_error_probability(self):
        """Test Q(sqrt(beta snr)) for scalars and arrays."""
        assert bit_error_probability(0.0) == pytest.approx(0.5)
        assert bit_error_probability(4.0, beta=0.25) == pytest.approx(0.15865525393145707)
        assert bit_error_probability(np.array([1.0, 9.0])).shape == (2,)

    def test_average_bep(self):
        """Test the mixture and its Chernoff bound."""
        for snr, snr_err, p in ((10.0, 1.0, 0.1), (3.0, 0.5, 0.4), (25.0, 25.0, 0.0)):
            bep = average_bep(snr, snr_err, p)
            assert average_bep_chernoff(snr, snr_err, p) >= bep
        assert average_bep(4.0, 4.0, 0.3) == pytest.approx(bit_error_probability(4.0))
