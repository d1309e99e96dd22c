import numpy as np
import pytest

from confdim.modulus import (
    BeurlingCertificate,
    CombCurve,
    Cover,
    CurveFamily,
    WeightVector,
    beurling_check,
    explicit_family,
    modulus,
    rho_length,
    rho_volume,
    verify_monotonicity,
    verify_subadditivity,
    weighted_modulus,
)
from confdim.suites import random_family, random_nested_pair
from oracles import brute_modulus


def curve(*indices):
    return CombCurve(indices)


def single_curve_instance(k=4, n=10):
    """One curve through the first k of n pieces."""
    cover = Cover(piece_count=n)
    family = explicit_family([curve(*range(k))])
    return cover, family


def grid_rows_instance(m=4, rows=2):
    """m*rows pieces; one curve per row of m pieces."""
    cover = Cover(piece_count=m * rows)
    curves = [curve(*range(r * m, (r + 1) * m)) for r in range(rows)]
    return cover, explicit_family(curves)


class TestConstruction:
    def test_cover_needs_pieces(self):
        with pytest.raises(ValueError):
            Cover(piece_count=0)

    def test_cover_label_count_checked(self):
        with pytest.raises(ValueError):
            Cover(piece_count=2, labels=("a",))

    def test_curve_rejects_empty_incidence(self):
        with pytest.raises(ValueError):
            CombCurve([])

    def test_curve_rejects_negative_index(self):
        with pytest.raises(ValueError):
            CombCurve([-1, 2])

    def test_family_requires_exactly_one_source(self):
        with pytest.raises(ValueError):
            CurveFamily()
        with pytest.raises(ValueError):
            CurveFamily(curves=(curve(0),), oracle=lambda rho: curve(0))

    def test_explicit_family_must_be_nonempty(self):
        with pytest.raises(ValueError):
            explicit_family([])

    def test_weight_vector_rejects_negative(self):
        with pytest.raises(ValueError):
            WeightVector(np.array([0.5, -0.1]))


class TestLengthAndVolume:
    def test_unit_weights_count_pieces(self):
        assert rho_length(np.ones(8), curve(0, 2, 4, 6, 7)) == 5.0

    def test_zero_weights(self):
        assert rho_length(np.zeros(4), curve(1, 2)) == 0.0

    def test_mixed_weights(self):
        assert rho_length(np.array([0.5, 2.0, 1.0]), curve(0, 2)) == pytest.approx(1.5)

    def test_volume_unit_weights(self):
        assert rho_volume(np.ones(6), 2.0) == pytest.approx(6.0)

    def test_volume_single_power(self):
        assert rho_volume(np.array([2.0]), 3.0) == pytest.approx(8.0)

    def test_volume_fractional_exponent(self):
        assert rho_volume(np.array([1.0, 1.0, 0.0, 0.0]), 1.5) == pytest.approx(2.0)

    def test_volume_on_subset(self):
        assert rho_volume(np.array([1.0, 2.0, 3.0]), 2.0, piece_set=[1, 2]) == pytest.approx(13.0)

    def test_volume_rejects_small_exponent(self):
        with pytest.raises(ValueError):
            rho_volume(np.ones(3), 0.5)


class TestModulusClosedForms:
    def test_single_curve(self):
        cover, family = single_curve_instance(k=4, n=10)
        res = modulus(cover, family, 2.0)
        assert res.value == pytest.approx(0.25, rel=1e-8)
        expected = np.array([0.25] * 4 + [0.0] * 6)
        np.testing.assert_allclose(res.optimizer.rho, expected, atol=1e-9)
        assert res.min_length == pytest.approx(1.0, abs=1e-12)

    def test_single_curve_general_exponent(self):
        """One curve through k pieces has modulus k^(1-Q)."""
        for k in (2, 3, 5):
            for q in (1.5, 2.0, 3.0):
                cover, family = single_curve_instance(k=k, n=k + 2)
                res = modulus(cover, family, q)
                assert res.value == pytest.approx(k ** (1.0 - q), rel=1e-8)

    def test_curve_through_one_piece(self):
        cover = Cover(piece_count=5)
        family = explicit_family([curve(3)])
        res = modulus(cover, family, 2.0)
        assert res.value == pytest.approx(1.0, rel=1e-10)

    def test_grid_rows(self):
        cover, family = grid_rows_instance(m=4, rows=2)
        res = modulus(cover, family, 2.0)
        assert res.value == pytest.approx(0.5, rel=1e-8)
        np.testing.assert_allclose(res.optimizer.rho, np.full(8, 0.25), atol=1e-8)

    def test_exponent_one_is_shortest_length_program(self):
        cover, family = single_curve_instance(k=4, n=6)
        res = modulus(cover, family, 1.0)
        assert res.value == pytest.approx(1.0, rel=1e-9)
        assert res.certificate is None

    def test_rejects_bad_exponent_and_tol(self):
        cover, family = single_curve_instance()
        with pytest.raises(ValueError):
            modulus(cover, family, 0.5)
        with pytest.raises(ValueError):
            modulus(cover, family, 2.0, tol=0.0)

    def test_rejects_curve_outside_cover(self):
        cover = Cover(piece_count=3)
        family = explicit_family([curve(0, 7)])
        with pytest.raises(ValueError):
            modulus(cover, family, 2.0)


class TestModulusProperties:
    def test_matches_brute_force(self):
        """Dual ascent against grid-scan + SLSQP on small random instances."""
        rng = np.random.default_rng(53)
        for _ in range(15):
            n = int(rng.integers(3, 7))
            cover = Cover(piece_count=n)
            family = random_family(rng, n, max_curves=4, max_size=4)
            q = float(rng.choice([1.5, 2.0, 3.0]))
            got = modulus(cover, family, q).value
            want = brute_modulus(n, family.curves, q)
            assert got == pytest.approx(want, rel=1e-4)

    def test_scale_invariance(self):
        rng = np.random.default_rng(59)
        cover, family = grid_rows_instance(m=3, rows=3)
        for _ in range(10):
            rho = rng.random(9) + 0.1
            base = weighted_modulus(rho, family, 2.5)
            for t in (0.01, 3.0, 250.0):
                assert weighted_modulus(t * rho, family, 2.5) == pytest.approx(base, rel=1e-12)

    def test_any_admissible_weight_upper_bounds_the_value(self):
        rng = np.random.default_rng(61)
        for _ in range(10):
            n = int(rng.integers(3, 9))
            cover = Cover(piece_count=n)
            family = random_family(rng, n)
            q = float(rng.uniform(1.2, 3.5))
            value = modulus(cover, family, q).value
            for _ in range(5):
                rho = rng.random(n) + 1e-3
                assert weighted_modulus(rho, family, q) >= value - 1e-8

    def test_unique_up_to_scale(self):
        """Distinct initializations land on the same normalized optimizer."""
        rng = np.random.default_rng(67)
        for _ in range(10):
            n = int(rng.integers(3, 9))
            cover = Cover(piece_count=n)
            family = random_family(rng, n)
            q = float(rng.choice([1.5, 2.0, 3.0]))
            a = modulus(cover, family, q, init="uniform").optimizer.rho
            b = modulus(cover, family, q, init="staggered").optimizer.rho
            np.testing.assert_allclose(a, b, atol=1e-6)

    def test_weighted_modulus_rejects_zero_weights(self):
        _, family = grid_rows_instance()
        with pytest.raises(ValueError):
            weighted_modulus(np.zeros(8), family, 2.0)


class TestBeurling:
    def test_single_curve_certificate(self):
        cover, family = single_curve_instance(k=4, n=10)
        res = modulus(cover, family, 2.0)
        cert = res.certificate
        assert cert is not None and cert.ok
        assert len(cert.active_curves) == 1
        assert cert.multipliers[0] == pytest.approx(0.5, abs=1e-8)
        assert cert.kkt_residual <= 1e-8

    def test_grid_rows_equal_multipliers(self):
        cover, family = grid_rows_instance(m=4, rows=2)
        res = modulus(cover, family, 2.0)
        cert = res.certificate
        assert cert.ok and len(cert.active_curves) == 2
        assert cert.multipliers[0] == pytest.approx(cert.multipliers[1], abs=1e-8)

    def test_perturbation_breaks_the_certificate(self):
        cover, family = single_curve_instance(k=4, n=10)
        res = modulus(cover, family, 2.0)
        rho = res.optimizer.rho.copy()
        rho[0] *= 1.1
        cert = beurling_check(cover, family.curves, rho, 2.0)
        assert not cert.ok
        assert cert.kkt_residual > 1e-8

    def test_solver_optimizers_always_certify(self):
        rng = np.random.default_rng(71)
        for _ in range(20):
            n = int(rng.integers(3, 11))
            cover = Cover(piece_count=n)
            family = random_family(rng, n)
            q = float(rng.choice([1.5, 2.0, 2.5, 3.0]))
            res = modulus(cover, family, q)
            assert res.certificate.ok
            assert res.certificate.kkt_residual <= 1e-8

    def test_rejects_exponent_one(self):
        cover, family = single_curve_instance()
        with pytest.raises(ValueError):
            beurling_check(cover, family.curves, np.ones(10), 1.0)


class TestMonotonicity:
    def test_equal_families(self):
        cover, family = grid_rows_instance()
        assert verify_monotonicity(cover, family, family, 2.0)

    def test_singleton_inside_disjoint_pair(self):
        cover = Cover(piece_count=8)
        c1, c2 = curve(0, 1, 2), curve(4, 5, 6)
        assert verify_monotonicity(
            cover, explicit_family([c1]), explicit_family([c1, c2]), 2.0
        )

    def test_random_nested_families(self):
        rng = np.random.default_rng(73)
        for _ in range(30):
            n = int(rng.integers(4, 13))
            cover = Cover(piece_count=n)
            inner, outer = random_nested_pair(rng, n)
            q = float(rng.uniform(1.2, 3.0))
            assert verify_monotonicity(cover, inner, outer, q)

    def test_rejects_non_nested_input(self):
        cover = Cover(piece_count=4)
        with pytest.raises(ValueError):
            verify_monotonicity(
                cover, explicit_family([curve(0)]), explicit_family([curve(1)]), 2.0
            )


class TestSubadditivity:
    def test_disjoint_supports_are_additive(self):
        cover = Cover(piece_count=9)
        fam_a = explicit_family([curve(0, 1, 2)])
        fam_b = explicit_family([curve(4, 5, 6)])
        report = verify_subadditivity(cover, [fam_a, fam_b], 2.0)
        assert report.disjoint_supports
        assert report.subadditive
        assert report.additive_when_disjoint
        assert report.union_value == pytest.approx(2.0 * 3.0 ** (1.0 - 2.0), rel=1e-7)

    def test_identical_families(self):
        cover, family = grid_rows_instance()
        report = verify_subadditivity(cover, [family, family], 2.0)
        assert report.subadditive
        assert report.union_value <= 2.0 * modulus(cover, family, 2.0).value + 1e-9

    def test_random_overlapping_families(self):
        rng = np.random.default_rng(79)
        for _ in range(30):
            n = int(rng.integers(4, 13))
            cover = Cover(piece_count=n)
            fams = [random_family(rng, n) for _ in range(int(rng.integers(2, 4)))]
            q = float(rng.uniform(1.2, 3.0))
            report = verify_subadditivity(cover, fams, q)
            assert report.subadditive
            if not report.disjoint_supports:
                assert report.additive_when_disjoint is None

    def test_rejects_empty_family_list(self):
        cover = Cover(piece_count=4)
        with pytest.raises(ValueError):
            verify_subadditivity(cover, [], 2.0)
