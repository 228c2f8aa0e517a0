"""Tests for the root-system module.

Oracles used here are deliberately independent of the implementation:
integer arithmetic for the anticanonical weight, brute-force subset products
for the symmetric functions, and Freudenthal weight-multiplicity enumeration
for SL(3) dimensions.
"""

import itertools

import numpy as np
import pytest

from flagcone import lie


# ---------------------------------------------------------------------------
# oracles

_GRAM = np.array([[2, 1], [1, 2]])  # scale-free inner product on A2 weights
_SIMPLE = {(2, -1), (-1, 2)}
_POSITIVE = [np.array(a) for a in ((2, -1), (-1, 2), (1, 1))]


def _ip(x, y):
    return int(np.asarray(x) @ _GRAM @ np.asarray(y))


def freudenthal_dim_a2(m1, m2):
    """Dimension of the SL(3) irrep with highest weight (m1, m2) by the
    Freudenthal multiplicity recursion over the weight lattice."""
    lam = np.array([m1, m2])
    delta = np.array([1, 1])
    bound = m1 + m2
    lam_norm = _ip(lam + delta, lam + delta)
    mult = {}
    # level = total number of simple roots subtracted from the highest weight
    layers = sorted(
        itertools.product(range(bound + 1), repeat=2), key=lambda k: k[0] + k[1]
    )
    for k1, k2 in layers:
        mu = lam - k1 * np.array([2, -1]) - k2 * np.array([-1, 2])
        if k1 == 0 and k2 == 0:
            mult[tuple(mu)] = 1
            continue
        denom = lam_norm - _ip(mu + delta, mu + delta)
        if denom <= 0:
            mult[tuple(mu)] = 0
            continue
        rhs = 0
        for alpha in _POSITIVE:
            k = 1
            while True:
                higher = tuple(mu + k * alpha)
                if higher not in mult:
                    break
                rhs += 2 * _ip(mu + k * alpha, alpha) * mult[higher]
                k += 1
        mult[tuple(mu)] = rhs // denom
    return sum(mult.values())


def brute_elementary_symmetric(values, k):
    return sum(
        np.prod(combo) for combo in itertools.combinations(values, k)
    ) if k else 1.0


# ---------------------------------------------------------------------------
# root data tables

def test_positive_root_counts():
    expected = {"cp1": 1, "cp1xcp1": 2, "cp1cubed": 3, "f12": 3}
    for name, count in expected.items():
        fam = lie.get_family(name)
        assert len(fam.root_system.positive_roots) == count
        assert fam.m == count
        assert len(fam.parabolic.complement_roots) == count
        assert fam.parabolic.simple_subset == ()


def test_pairing_table_simple_roots_are_dual():
    for name in lie.FAMILY_NAMES:
        fam = lie.get_family(name)
        pairing = fam.root_system.coroot_pairing
        for i in range(fam.root_system.rank):
            for j in range(fam.root_system.rank):
                # the first `rank` positive roots are the simple roots
                assert pairing[i][j] == (1 if i == j else 0)


def test_pairing_table_a2_coroot_additivity():
    fam = lie.get_family("f12")
    pairing = fam.root_system.coroot_pairing
    assert pairing[0][2] == 1
    assert pairing[1][2] == 1


def test_unknown_family_raises():
    with pytest.raises(lie.UnsupportedFamilyError):
        lie.get_family("cp2")


# ---------------------------------------------------------------------------
# delta_p

@pytest.mark.parametrize(
    "name, expected",
    [("cp1", [2]), ("cp1xcp1", [2, 2]), ("cp1cubed", [2, 2, 2]), ("f12", [2, 2])],
)
def test_delta_p(name, expected):
    fam = lie.get_family(name)
    d = lie.delta_p(fam.root_system, fam.parabolic)
    assert d.tolist() == expected


def test_delta_p_a2_integer_oracle():
    # sum the three positive roots in simple-root coordinates, then convert
    # with the Cartan matrix by hand: (2,2) in alpha coords -> 2w1 + 2w2
    total = [1 + 0 + 1, 0 + 1 + 1]
    cartan = [[2, -1], [-1, 2]]
    converted = [
        cartan[0][0] * total[0] + cartan[0][1] * total[1],
        cartan[1][0] * total[0] + cartan[1][1] * total[1],
    ]
    fam = lie.get_family("f12")
    assert lie.delta_p(fam.root_system, fam.parabolic).tolist() == converted == [2, 2]


# ---------------------------------------------------------------------------
# relative eigenvalues

def test_relative_eigenvalues_f12():
    eigs = lie.relative_eigenvalues("f12", [1.0, 2.0])
    assert eigs.tolist() == [1.0, 2.0, 1.5]


def test_relative_eigenvalues_products_identity():
    rng = np.random.default_rng(7)
    for name in ("cp1", "cp1xcp1", "cp1cubed"):
        fam = lie.get_family(name)
        b = rng.uniform(0, 3, size=fam.n_params)
        assert lie.relative_eigenvalues(name, b).tolist() == b.tolist()


def test_relative_eigenvalues_zero_and_ones():
    assert lie.relative_eigenvalues("f12", [0.0, 0.0]).tolist() == [0, 0, 0]
    for name in lie.FAMILY_NAMES:
        fam = lie.get_family(name)
        eigs = lie.relative_eigenvalues(name, np.ones(fam.n_params))
        assert np.array_equal(eigs, np.ones(fam.m))


def test_relative_eigenvalues_linear():
    rng = np.random.default_rng(11)
    for name in lie.FAMILY_NAMES:
        fam = lie.get_family(name)
        for _ in range(25):
            x = rng.uniform(0, 2, size=fam.n_params)
            y = rng.uniform(0, 2, size=fam.n_params)
            s = rng.uniform(0, 3)
            left = lie.relative_eigenvalues(name, x + s * y)
            right = lie.relative_eigenvalues(name, x) + s * lie.relative_eigenvalues(
                name, y
            )
            np.testing.assert_allclose(left, right, rtol=0, atol=1e-14)


def test_relative_eigenvalues_validation():
    with pytest.raises(ValueError):
        lie.relative_eigenvalues("f12", [-0.5, 1.0])
    with pytest.raises(ValueError):
        lie.relative_eigenvalues("f12", [1.0, 1.0, 1.0])


def test_eigenvalue_templates():
    assert lie.eigenvalue_templates("f12") == ["b1", "b2", "(b1 + b2)/2"]
    assert lie.eigenvalue_templates("cp1xcp1") == ["b1", "b2"]


# ---------------------------------------------------------------------------
# symmetric functions

def test_elementary_symmetric_binomial():
    sigma = lie.elementary_symmetric([1.0, 1.0, 1.0])
    assert sigma.tolist() == [1.0, 3.0, 3.0, 1.0]


def test_elementary_symmetric_f12_identities():
    rng = np.random.default_rng(3)
    for _ in range(100):
        b1, b2 = rng.uniform(0, 4, size=2)
        sigma = lie.elementary_symmetric(lie.relative_eigenvalues("f12", [b1, b2]))
        assert sigma[1] == 1.5 * (b1 + b2)
        np.testing.assert_allclose(
            sigma[3], 0.5 * (b1**2 * b2 + b1 * b2**2), rtol=1e-14
        )
        np.testing.assert_allclose(
            sigma[2], 2 * b1 * b2 + 0.5 * (b1**2 + b2**2), rtol=1e-13, atol=1e-15
        )


def test_elementary_symmetric_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(50):
        vals = rng.uniform(0, 3, size=rng.integers(1, 5))
        sigma = lie.elementary_symmetric(vals)
        for k in range(len(vals) + 1):
            np.testing.assert_allclose(
                sigma[k], brute_elementary_symmetric(vals, k), rtol=1e-12
            )


def test_sigma_nonnegative():
    rng = np.random.default_rng(13)
    for name in lie.FAMILY_NAMES:
        fam = lie.get_family(name)
        for _ in range(20):
            cls = lie.invariant_class(name, rng.uniform(0, 3, size=fam.n_params))
            assert cls.sigma[0] == 1.0
            assert all(s >= 0 for s in cls.sigma)


# ---------------------------------------------------------------------------
# Weyl dimensions

@pytest.mark.parametrize("m1, m2, dim", [(1, 0, 3), (1, 1, 8), (2, 2, 27)])
def test_weyl_dim_a2_known(m1, m2, dim):
    assert lie.weyl_dim_a2(m1, m2) == dim
    assert freudenthal_dim_a2(m1, m2) == dim


def test_weyl_dim_a2_freudenthal_grid():
    for m1 in range(5):
        for m2 in range(5):
            dim = lie.weyl_dim_a2(m1, m2)
            assert dim > 0
            assert dim == freudenthal_dim_a2(m1, m2)


def test_weyl_dim_variant_with_lower_factor_is_not_integral():
    # the variant with (m1 + m2 + 1) in place of (m1 + m2 + 2) cannot be a
    # dimension: at (2, 2) it evaluates to a non-integer
    value = 0.5 * (2 + 1) * (2 + 1) * (2 + 2 + 1)
    assert value == 22.5
    assert value != int(value)


# ---------------------------------------------------------------------------
# Kahler cone

def test_kahler_cone_membership():
    assert lie.in_kahler_cone("cp1xcp1", [1.0, 2.0])
    assert not lie.in_kahler_cone("cp1xcp1", [0.0, 1.0])
    assert not lie.in_kahler_cone("cp1xcp1", [-1.0, 1.0])
    cls = lie.invariant_class("f12", [0.0, 1.0])
    assert not cls.is_kahler
