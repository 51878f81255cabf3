"""Monte Carlo protocol engine: stepping, streams, ensembles."""

import numpy as np
import pytest
from scipy import stats

from qdetect import (
    AllToAllModel,
    ExponentialIntervals,
    ProtocolConfig,
    SharpIntervals,
    SiteWindow,
    StateVector,
    all_ones_eigenvectors,
    b_coefficient,
    coefficients,
    conditional_survival,
    measurement_step,
    mfdt,
    monte_carlo,
    numeric_laplace_of_survival,
    run_trajectory,
    site_state,
    special_state,
    survival_laplace,
    trajectory_stream,
    uniform_state,
    window_projectors,
)


def make_config(state, law, n_traj=2000, seed=11, cap=1_000_000, n=6, m=3, j=1.0):
    return ProtocolConfig(
        model=AllToAllModel(n, j),
        window=SiteWindow(n, m),
        initial_state=state,
        interval_law=law,
        n_trajectories=n_traj,
        master_seed=seed,
        max_measurements=cap,
    )


def zero_mode(n, l):
    return StateVector(all_ones_eigenvectors(n)[:, l])


class TestMeasurementStep:
    def test_no_evolution_complement_state(self, model6, window6):
        p_a, p_ap = window_projectors(window6)
        psi = site_state(6, 1)
        detected, after, p_fail = measurement_step(psi, 0.0, model6, p_a, p_ap, 0.5)
        assert not detected
        assert p_fail == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_allclose(after.amplitudes, psi.amplitudes, atol=1e-15)

    def test_uniform_eigenstate_constant_failure(self, model6, window6, rng):
        p_a, p_ap = window_projectors(window6)
        for tau in rng.uniform(0, 5, size=5):
            _, _, p_fail = measurement_step(
                uniform_state(6), float(tau), model6, p_a, p_ap, 0.0
            )
            assert p_fail == pytest.approx(0.5, abs=1e-12)

    def test_dark_state_never_detected(self, model6, window6, rng):
        p_a, p_ap = window_projectors(window6)
        psi = zero_mode(6, 1)
        for tau in rng.uniform(0, 5, size=5):
            detected, after, p_fail = measurement_step(
                psi, float(tau), model6, p_a, p_ap, float(rng.random())
            )
            assert not detected
            assert p_fail == pytest.approx(1.0, abs=1e-12)
            psi = after

    def test_mismatched_projectors_flagged(self, model6, window6):
        from qdetect import ProtocolCorruptionError

        p_a, _ = window_projectors(window6)
        p_wrong = window_projectors(SiteWindow(6, 2))[1]
        with pytest.raises(ProtocolCorruptionError):
            measurement_step(uniform_state(6), 0.5, model6, p_a, p_wrong, 0.5)

    def test_generic_hamiltonian_path(self, model6, window6):
        # The dense-eigendecomposition evolver must agree with the rank-1 form.
        p_a, p_ap = window_projectors(window6)
        psi = special_state(window6)
        for tau in (0.3, 1.7):
            _, after_fast, p_fast = measurement_step(psi, tau, model6, p_a, p_ap, 0.0)
            _, after_slow, p_slow = measurement_step(
                psi, tau, model6.hamiltonian(), p_a, p_ap, 0.0
            )
            assert p_fast == pytest.approx(p_slow, abs=1e-12)
            np.testing.assert_allclose(
                after_fast.amplitudes, after_slow.amplitudes, atol=1e-12
            )


class TestRunTrajectory:
    def test_deterministic(self, star6):
        cfg = make_config(star6, ExponentialIntervals(1.0))
        first = run_trajectory(cfg, 7)
        second = run_trajectory(cfg, 7)
        assert first == second

    def test_matches_ensemble_row(self, star6):
        cfg = make_config(star6, ExponentialIntervals(1.0), n_traj=500)
        ens = monte_carlo(cfg)
        for idx in (0, 3, 499):
            rec = run_trajectory(cfg, idx)
            assert rec.detected == ens.detected[idx]
            assert rec.first_detection_time == ens.first_detection_time[idx]
            assert rec.n_measurements == ens.n_measurements[idx]

    def test_dark_state_censored(self):
        cfg = make_config(zero_mode(6, 1), ExponentialIntervals(1.0), cap=50)
        rec = run_trajectory(cfg, 0)
        assert not rec.detected
        assert rec.n_measurements == 50

    def test_sharp_protocol_geometric_law(self):
        # At period pi/12 the failure probability is exactly 1/2 at every
        # step for the uniform initial state, so the measurement count is
        # geometric with the detector-block weight as success probability.
        period = np.pi / 12.0
        lam = abs(1 + 3 * b_coefficient(period, AllToAllModel(6, 1.0))) ** 2
        assert lam == pytest.approx(0.5, abs=1e-12)
        cfg = make_config(uniform_state(6), SharpIntervals(period), n_traj=20000)
        ens = monte_carlo(cfg)
        counts = np.bincount(ens.n_measurements, minlength=12)[1:]
        k_max = 10
        observed = np.append(counts[:k_max], counts[k_max:].sum())
        pmf = 0.5 ** np.arange(1, k_max + 1)
        expected = np.append(pmf, 1.0 - pmf.sum()) * ens.n_trajectories
        result = stats.chisquare(observed, expected)
        assert result.pvalue > 1e-3

    def test_sharp_protocol_two_phase_law(self):
        # Generic period: the first probe fails with the uniform-state block
        # weight, later probes with the dephased weight.
        period = 0.7
        lam = abs(1 + 3 * b_coefficient(period, AllToAllModel(6, 1.0))) ** 2
        cfg = make_config(uniform_state(6), SharpIntervals(period), n_traj=20000)
        ens = monte_carlo(cfg)
        n = ens.n_measurements
        p1_hat = np.mean(n == 1)
        assert abs(p1_hat - 0.5) <= 3 * np.sqrt(0.25 / n.size)
        later = n[n >= 2] - 2
        p_succ = 1.0 - lam
        k_max = 8
        counts = np.bincount(later, minlength=k_max + 1)
        observed = np.append(counts[:k_max], counts[k_max:].sum())
        pmf = p_succ * lam ** np.arange(k_max)
        expected = np.append(pmf, 1.0 - pmf.sum()) * later.size
        result = stats.chisquare(observed, expected)
        assert result.pvalue > 1e-3


class TestMonteCarlo:
    def test_mean_matches_exact(self, model6, window6, star6):
        cfg = make_config(star6, ExponentialIntervals(1.0), n_traj=30000)
        ens = monte_carlo(cfg)
        exact = mfdt(coefficients(star6, window6), 1.0, model6, window6)
        assert abs(ens.mean_fdt - exact) <= 3 * ens.mean_fdt_stderr

    def test_generic_hamiltonian_mean_matches_exact(self, model6, window6, star6):
        cfg = ProtocolConfig(
            model=model6.hamiltonian(),
            window=window6,
            initial_state=star6,
            interval_law=ExponentialIntervals(1.0),
            n_trajectories=20000,
            master_seed=5,
        )
        ens = monte_carlo(cfg, t_max=25.0)
        exact = mfdt(coefficients(star6, window6), 1.0, model6, window6)
        assert abs(ens.mean_fdt - exact) <= 3 * ens.mean_fdt_stderr

    def test_half_dark_detected_fraction(self):
        mix = StateVector(
            (zero_mode(6, 1).amplitudes + uniform_state(6).amplitudes) / np.sqrt(2)
        )
        cfg = make_config(mix, ExponentialIntervals(1.0), n_traj=20000, cap=400)
        ens = monte_carlo(cfg)
        sigma = np.sqrt(0.25 / ens.n_trajectories)
        assert abs(ens.detected_fraction - 0.5) <= 3 * sigma
        assert ens.n_censored == ens.n_trajectories - np.count_nonzero(ens.detected)

    def test_survival_starts_at_one(self, star6):
        cfg = make_config(star6, ExponentialIntervals(1.0), n_traj=500)
        ens = monte_carlo(cfg)
        assert ens.survival[0] == 1.0
        assert ens.survival_times[0] == 0.0

    def test_survival_nonincreasing_without_censoring(self, star6):
        cfg = make_config(star6, ExponentialIntervals(1.0), n_traj=5000)
        ens = monte_carlo(cfg)
        assert ens.n_censored == 0
        assert (np.diff(ens.survival) <= 0).all()

    def test_parallel_equals_serial(self, star6):
        cfg = make_config(star6, ExponentialIntervals(1.0), n_traj=20000)
        serial = monte_carlo(cfg, threads=1)
        parallel = monte_carlo(cfg, threads=4)
        np.testing.assert_array_equal(
            serial.first_detection_time, parallel.first_detection_time
        )
        np.testing.assert_array_equal(serial.detected, parallel.detected)
        np.testing.assert_array_equal(serial.survival, parallel.survival)

    def test_config_validation(self, star6, window6, model6):
        unnormalized = StateVector(np.array([1.0, 1.0, 0, 0, 0, 0]))
        with pytest.raises(ValueError):
            make_config(unnormalized, ExponentialIntervals(1.0))
        with pytest.raises(ValueError):
            ExponentialIntervals(0.0)
        with pytest.raises(ValueError):
            SharpIntervals(-1.0)
        with pytest.raises(ValueError):
            ProtocolConfig(
                model=model6,
                window=window6,
                initial_state=uniform_state(5),
                interval_law=ExponentialIntervals(1.0),
                n_trajectories=10,
                master_seed=0,
            )


class TestConditionalSurvival:
    def test_empty_schedule(self, model6, window6, star6):
        _, p_ap = window_projectors(window6)
        assert conditional_survival(star6, [], model6, p_ap) == pytest.approx(
            1.0, abs=1e-14
        )

    def test_uniform_state_product_formula(self, model6, window6, rng):
        _, p_ap = window_projectors(window6)
        for _ in range(5):
            taus = rng.exponential(1.0, size=int(rng.integers(1, 7)))
            expected = 0.5
            for tau in taus[1:]:
                expected *= abs(1 + 3 * b_coefficient(float(tau), model6)) ** 2
            got = conditional_survival(uniform_state(6), list(taus), model6, p_ap)
            assert got == pytest.approx(expected, rel=1e-12)

    def test_dark_state_survives(self, model6, window6, rng):
        _, p_ap = window_projectors(window6)
        for _ in range(5):
            taus = list(rng.exponential(1.0, size=4))
            got = conditional_survival(zero_mode(6, 1), taus, model6, p_ap)
            assert got == pytest.approx(1.0, abs=1e-12)

    def test_empirical_failure_frequency(self, model6, window6, star6, rng):
        # Binomial check: repeated protocol runs on one fixed 3-step probe
        # schedule must fail (all three probes) with the conditional
        # survival probability.
        p_a, p_ap = window_projectors(window6)
        taus = [0.8, 0.4, 1.3]
        target = conditional_survival(star6, taus, model6, p_ap)
        repeats = 10000
        survived = 0
        for _ in range(repeats):
            psi = star6
            alive = True
            for tau in taus:
                detected, after, _ = measurement_step(
                    psi, tau, model6, p_a, p_ap, float(rng.random())
                )
                if detected:
                    alive = False
                    break
                psi = after
            survived += alive
        sigma = np.sqrt(target * (1 - target) / repeats)
        assert abs(survived / repeats - target) <= 3 * sigma


class TestIntervalStreams:
    def test_poisson_counts(self):
        # Number of probe times in [0, horizon] is Poisson(rate * horizon).
        rate, horizon = 2.0, 3.0
        counts = []
        for idx in range(4000):
            gen = trajectory_stream(99, idx)
            total, k = 0.0, 0
            while True:
                total += gen.standard_exponential() / rate
                if total > horizon:
                    break
                k += 1
            counts.append(k)
        counts = np.asarray(counts)
        k_max = 14
        observed = np.bincount(np.minimum(counts, k_max + 1), minlength=k_max + 2)
        pmf = stats.poisson.pmf(np.arange(k_max + 1), rate * horizon)
        expected = np.append(pmf, 1 - pmf.sum()) * counts.size
        result = stats.chisquare(observed, expected)
        assert result.pvalue > 1e-3

    def test_streams_reproducible_and_distinct(self):
        a1 = trajectory_stream(5, 1).random(8)
        a2 = trajectory_stream(5, 1).random(8)
        b = trajectory_stream(5, 2).random(8)
        np.testing.assert_array_equal(a1, a2)
        assert not np.array_equal(a1, b)


class TestNumericLaplace:
    def test_large_s_limit(self, star6):
        cfg = make_config(star6, ExponentialIntervals(1.0), n_traj=4000)
        ens = monte_carlo(cfg, bins=2000, t_max=2.0)
        s = 30.0
        est = numeric_laplace_of_survival(ens, s)
        assert est.reliable
        assert abs(s * est.value - 1.0) <= 0.02

    def test_matches_exact_transform(self, model6, window6, star6):
        cfg = make_config(star6, ExponentialIntervals(1.0), n_traj=30000)
        ens = monte_carlo(cfg)
        est = numeric_laplace_of_survival(ens, 1.0)
        exact = survival_laplace(coefficients(star6, window6), 1.0, 1.0, model6, window6)
        assert est.reliable
        assert abs(est.value - exact) <= est.error

    def test_fully_dark_plateau_flagged(self):
        # A fully dark state survives forever, so the transform saturates at
        # (dark weight)/s and the censoring makes the estimate untrusted.
        cfg = make_config(zero_mode(6, 1), ExponentialIntervals(1.0), n_traj=500, cap=300)
        ens = monte_carlo(cfg, t_max=10.0)
        s = 2.0
        est = numeric_laplace_of_survival(ens, s)
        assert not est.reliable
        assert abs(est.value - 1.0 / s) <= est.error
