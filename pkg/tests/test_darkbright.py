"""Dark/bright decomposition and its conservation laws."""

import numpy as np
import pytest

from qdetect import (
    AllToAllModel,
    SiteWindow,
    StateVector,
    all_ones_eigenvectors,
    bright_basis_all_to_all,
    closed_form_eigenbasis,
    decompose,
    eventual_detection_probability,
    generic_eigenbasis,
    is_bright,
    propagator,
    random_bright_state,
    special_state,
    uniform_state,
    window_projectors,
)


def zero_mode(n, l):
    return StateVector(all_ones_eigenvectors(n)[:, l])


class TestDecompose:
    def test_all_to_all_dimensions(self, model6, window6):
        p_a, _ = window_projectors(window6)
        dec = decompose(closed_form_eigenbasis(model6), p_a)
        assert dec.dark_dim == 2
        assert dec.bright_dim == 4

    def test_brute_force_zero_mode_classification(self, window6):
        # Direct check of which eigenvectors the monitored block can see.
        p_a, _ = window_projectors(window6)
        vecs = all_ones_eigenvectors(6)
        for l in range(1, 6):
            weight = np.linalg.norm(p_a.matrix @ vecs[:, l])
            if l <= 2:
                assert weight == 0.0
            else:
                assert weight > 0.1
        assert np.linalg.norm(p_a.matrix @ vecs[:, 0]) > 0.1

    @pytest.mark.parametrize("n", [4, 6, 9])
    def test_bright_dimension_formula(self, n):
        model = AllToAllModel(n, 1.0)
        for m in range(1, n):
            p_a, _ = window_projectors(SiteWindow(n, m))
            dec = decompose(closed_form_eigenbasis(model), p_a)
            assert dec.bright_dim == n - m + 1
            assert dec.dark_dim == m - 1

    def test_localized_eigenbasis(self):
        # diag(1, 2): the site-1 eigenvector never overlaps the monitored site.
        spec = generic_eigenbasis(np.diag([1.0, 2.0]))
        p_a, _ = window_projectors(SiteWindow(2, 1))
        dec = decompose(spec, p_a)
        assert dec.dark_dim == 1
        assert dec.bright_dim == 1

    def test_dimension_mismatch_rejected(self, model6):
        p_a, _ = window_projectors(SiteWindow(4, 2))
        with pytest.raises(ValueError):
            decompose(closed_form_eigenbasis(model6), p_a)

    def test_basis_rotation_invariance(self, model6, window6, rng):
        # Randomly re-mixing each degenerate group must not move the dark projector.
        p_a, _ = window_projectors(window6)
        spec = closed_form_eigenbasis(model6)
        reference = decompose(spec, p_a).p_dark.matrix
        for _ in range(5):
            vecs = spec.eigenvectors.copy()
            for group in spec.degeneracy_groups:
                g = len(group)
                if g == 1:
                    continue
                raw = rng.normal(size=(g, g)) + 1j * rng.normal(size=(g, g))
                q, _ = np.linalg.qr(raw)
                vecs[:, list(group)] = vecs[:, list(group)] @ q
            rotated = type(spec)(
                spec.eigenvalues, vecs, spec.degeneracy_groups, spec.e_eigenvalues
            )
            np.testing.assert_allclose(
                decompose(rotated, p_a).p_dark.matrix, reference, atol=1e-8
            )


class TestClosedFormDecomposition:
    def test_bright_span(self, window6):
        dec = bright_basis_all_to_all(window6)
        vecs = all_ones_eigenvectors(6)
        expected = np.column_stack([vecs[:, 0], vecs[:, 3], vecs[:, 4], vecs[:, 5]])
        np.testing.assert_allclose(
            dec.p_bright.matrix, expected @ expected.conj().T, atol=1e-12
        )

    def test_everything_bright_at_unit_cut(self):
        dec = bright_basis_all_to_all(SiteWindow(6, 1))
        assert dec.dark_dim == 0
        assert dec.bright_dim == 6

    def test_matches_kernel_algorithm(self, model6, window6):
        p_a, _ = window_projectors(window6)
        numeric = decompose(closed_form_eigenbasis(model6), p_a)
        closed = bright_basis_all_to_all(window6)
        np.testing.assert_allclose(
            numeric.p_dark.matrix, closed.p_dark.matrix, atol=1e-9
        )
        np.testing.assert_allclose(
            numeric.p_bright.matrix, closed.p_bright.matrix, atol=1e-9
        )

    def test_projector_algebra(self, window6):
        dec = bright_basis_all_to_all(window6)
        n = window6.n_sites
        np.testing.assert_allclose(
            dec.p_dark.matrix @ dec.p_bright.matrix, np.zeros((n, n)), atol=1e-9
        )
        np.testing.assert_allclose(
            dec.p_dark.matrix + dec.p_bright.matrix, np.eye(n), atol=1e-9
        )

    def test_dark_states_invisible_to_detector(self, window6):
        p_a, _ = window_projectors(window6)
        dec = bright_basis_all_to_all(window6)
        for k in range(dec.dark_dim):
            assert np.linalg.norm(p_a.matrix @ dec.dark_basis[:, k]) <= 1e-9


class TestDetectionProbability:
    def test_dark_state(self, window6):
        dec = bright_basis_all_to_all(window6)
        assert eventual_detection_probability(zero_mode(6, 1), dec) <= 1e-12

    def test_bright_eigenstate(self, window6):
        dec = bright_basis_all_to_all(window6)
        assert abs(eventual_detection_probability(uniform_state(6), dec) - 1.0) <= 1e-12

    def test_half_dark_mixture(self, window6):
        dec = bright_basis_all_to_all(window6)
        mix = StateVector(
            (zero_mode(6, 1).amplitudes + uniform_state(6).amplitudes) / np.sqrt(2)
        )
        assert abs(eventual_detection_probability(mix, dec) - 0.5) <= 1e-12


class TestIsBright:
    def test_special_state(self, window6, star6):
        assert is_bright(star6, bright_basis_all_to_all(window6))

    def test_dark_zero_mode(self, window6):
        assert not is_bright(zero_mode(6, 1), bright_basis_all_to_all(window6))

    def test_bright_combination_closure(self, window6, rng):
        dec = bright_basis_all_to_all(window6)
        for _ in range(10):
            coeff = rng.normal(size=dec.bright_dim) + 1j * rng.normal(size=dec.bright_dim)
            vec = dec.bright_basis @ coeff
            assert is_bright(StateVector(vec / np.linalg.norm(vec)), dec)


class TestSpecialState:
    def test_explicit_amplitudes(self, star6):
        expected = np.array([1, 1, 1, 0, 0, 0]) / np.sqrt(3)
        np.testing.assert_allclose(star6.amplitudes.real, expected, atol=1e-15)

    def test_equals_projected_uniform(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 25))
            m = int(rng.integers(1, n))
            window = SiteWindow(n, m)
            _, p_ap = window_projectors(window)
            projected = p_ap.matrix @ uniform_state(n).amplitudes
            projected /= np.linalg.norm(projected)
            np.testing.assert_allclose(
                special_state(window).amplitudes, projected, atol=1e-14
            )

    def test_unique_bright_state_in_complement(self, window6):
        # The linear system "bright combination with no weight on the
        # monitored block" has a one-dimensional solution space.
        p_a, _ = window_projectors(window6)
        dec = bright_basis_all_to_all(window6)
        system = p_a.matrix @ dec.bright_basis
        nullity = dec.bright_dim - np.linalg.matrix_rank(system, tol=1e-10)
        assert nullity == 1


class TestConservationLaws:
    def test_dark_projector_commutes_with_propagator(self, model6, window6, rng):
        dec = bright_basis_all_to_all(window6)
        for t in rng.uniform(0, 10, size=10):
            u = propagator(t, model6)
            comm = dec.p_dark.matrix @ u - u @ dec.p_dark.matrix
            assert np.max(np.abs(comm)) <= 1e-9

    def test_dark_inside_complement(self, window6):
        dec = bright_basis_all_to_all(window6)
        _, p_ap = window_projectors(window6)
        np.testing.assert_allclose(
            p_ap.matrix @ dec.p_dark.matrix, dec.p_dark.matrix, atol=1e-9
        )
        np.testing.assert_allclose(
            dec.p_dark.matrix @ p_ap.matrix, dec.p_dark.matrix, atol=1e-9
        )

    def test_dark_sector_conservation(self, model6, window6, rng):
        # The monitored evolution preserves the dark weight of any state and
        # acts independently on the bright remainder.
        dec = bright_basis_all_to_all(window6)
        _, p_ap = window_projectors(window6)
        for _ in range(10):
            psi = rng.normal(size=6) + 1j * rng.normal(size=6)
            psi /= np.linalg.norm(psi)
            taus = rng.exponential(1.0, size=int(rng.integers(1, 6)))
            full = psi.copy()
            bright_part = dec.p_bright.matrix @ psi
            for tau in taus:
                u = propagator(tau, model6)
                full = p_ap.matrix @ (u @ full)
                bright_part = p_ap.matrix @ (u @ bright_part)
            dark_weight = np.linalg.norm(dec.p_dark.matrix @ psi) ** 2
            lhs = np.linalg.norm(full) ** 2
            rhs = dark_weight + np.linalg.norm(bright_part) ** 2
            assert abs(lhs - rhs) <= 1e-9


class TestRandomBright:
    def test_normalized_and_bright(self, window6):
        dec = bright_basis_all_to_all(window6)
        for seed in range(5):
            state = random_bright_state(window6, seed)
            assert state.normalized
            assert is_bright(state, dec)

    def test_deterministic(self, window6):
        a = random_bright_state(window6, 42)
        b = random_bright_state(window6, 42)
        np.testing.assert_array_equal(a.amplitudes, b.amplitudes)
