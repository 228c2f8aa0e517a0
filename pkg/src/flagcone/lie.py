"""Root-system combinatorics for the supported flag-variety base manifolds.

Four families are implemented, each with the full parabolic data hard-coded
(the parabolic subset is empty in every case, i.e. the bases are complete
flags of products of SL(2) factors, or of SL(3)):

* ``cp1``        -- CP^1,                 root system A1,       m = 1
* ``cp1xcp1``    -- CP^1 x CP^1,          root system A1 x A1,  m = 2
* ``cp1cubed``   -- CP^1 x CP^1 x CP^1,   root system A1^3,     m = 3
* ``f12``        -- F_{1,2} = SU(3)/T^2,  root system A2,       m = 3

Everything here is exact integer / rational arithmetic apart from the
eigenvalue maps, which are linear with rational coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "UnsupportedFamilyError",
    "RootSystemData",
    "ParabolicData",
    "FlagFamily",
    "InvariantFormClass",
    "FAMILY_NAMES",
    "get_family",
    "delta_p",
    "relative_eigenvalues",
    "eigenvalue_templates",
    "elementary_symmetric",
    "weyl_dim_a2",
    "in_kahler_cone",
    "invariant_class",
]


class UnsupportedFamilyError(ValueError):
    """Raised for a base manifold outside the implemented families."""


@dataclass(frozen=True)
class RootSystemData:
    """Positive roots and the fundamental-weight / coroot pairing table.

    ``positive_roots[j]`` is the coefficient vector of the j-th positive root
    over the simple roots.  ``coroot_pairing[i][j]`` is the pairing of the
    i-th fundamental weight with the coroot of the j-th positive root; for
    the simply-laced systems used here that is just the root coefficient.
    ``cartan[i][j]`` is the Cartan matrix entry <alpha_j, alpha_i-check>.
    """

    label: str
    rank: int
    positive_roots: tuple[tuple[int, ...], ...]
    cartan: tuple[tuple[int, ...], ...]

    @property
    def coroot_pairing(self) -> tuple[tuple[int, ...], ...]:
        return tuple(
            tuple(root[i] for root in self.positive_roots) for i in range(self.rank)
        )


@dataclass(frozen=True)
class ParabolicData:
    """A parabolic subset of simple roots and the complementary positive roots."""

    simple_subset: tuple[int, ...]
    complement_roots: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class FlagFamily:
    """One of the implemented base manifolds.

    ``m`` is the complex dimension of the base (the number of complement
    roots) and ``n_params`` the number of independent class parameters (one
    per simple root outside the parabolic subset).
    """

    name: str
    root_system: RootSystemData
    parabolic: ParabolicData
    m: int
    n_params: int


def _product_a1(n: int) -> RootSystemData:
    roots = tuple(
        tuple(1 if i == j else 0 for i in range(n)) for j in range(n)
    )
    cartan = tuple(tuple(2 if i == j else 0 for i in range(n)) for j in range(n))
    label = "A1" if n == 1 else "x".join(["A1"] * n)
    return RootSystemData(label=label, rank=n, positive_roots=roots, cartan=cartan)


_A2 = RootSystemData(
    label="A2",
    rank=2,
    positive_roots=((1, 0), (0, 1), (1, 1)),
    cartan=((2, -1), (-1, 2)),
)


def _family(name: str, system: RootSystemData) -> FlagFamily:
    parabolic = ParabolicData(simple_subset=(), complement_roots=system.positive_roots)
    return FlagFamily(
        name=name,
        root_system=system,
        parabolic=parabolic,
        m=len(parabolic.complement_roots),
        n_params=system.rank,
    )


_FAMILIES = {
    "cp1": _family("cp1", _product_a1(1)),
    "cp1xcp1": _family("cp1xcp1", _product_a1(2)),
    "cp1cubed": _family("cp1cubed", _product_a1(3)),
    "f12": _family("f12", _A2),
}

FAMILY_NAMES = tuple(_FAMILIES)


def get_family(name: str | FlagFamily) -> FlagFamily:
    """Look up a family by name; raises UnsupportedFamilyError if unknown."""
    if isinstance(name, FlagFamily):
        return name
    try:
        return _FAMILIES[name]
    except KeyError:
        raise UnsupportedFamilyError(
            f"unknown family {name!r}; supported: {', '.join(FAMILY_NAMES)}"
        ) from None


def delta_p(root_system: RootSystemData, parabolic: ParabolicData) -> np.ndarray:
    """Sum of the positive roots outside the parabolic, in the
    fundamental-weight basis.  This weight represents the anticanonical
    class of the base.
    """
    if not parabolic.complement_roots:
        raise UnsupportedFamilyError("parabolic has no complement roots")
    total = np.sum(np.asarray(parabolic.complement_roots, dtype=int), axis=0)
    cartan = np.asarray(root_system.cartan, dtype=int)
    return cartan @ total


def relative_eigenvalues(family: str | FlagFamily, b_simple) -> np.ndarray:
    """Eigenvalues, relative to the Einstein metric, of the invariant
    (1,1)-form with parameter ``b_simple[i]`` at the i-th simple root.

    One eigenvalue per complement root; the value at a root beta is the
    ratio of the pairings of the class and of the anticanonical weight
    with the coroot of beta.  For products of CP^1 this is the identity
    map; for f12 the third eigenvalue is the mean of the two parameters.
    """
    fam = get_family(family)
    b = np.asarray(b_simple, dtype=float)
    if b.shape != (fam.n_params,):
        raise ValueError(
            f"{fam.name} takes {fam.n_params} class parameters, got shape {b.shape}"
        )
    if np.any(b < 0):
        raise ValueError("class parameters must be nonnegative")
    d = delta_p(fam.root_system, fam.parabolic).astype(float)
    pairing = np.asarray(fam.root_system.coroot_pairing, dtype=float)
    num = (d * b) @ pairing
    den = d @ pairing
    return num / den


def eigenvalue_templates(family: str | FlagFamily) -> list[str]:
    """Human-readable formulas for the relative eigenvalues, one per
    complement root, e.g. ``['b1', 'b2', '(b1 + b2)/2']`` for f12.
    """
    fam = get_family(family)
    d = delta_p(fam.root_system, fam.parabolic)
    pairing = fam.root_system.coroot_pairing
    out = []
    for j in range(fam.m):
        den = sum(int(d[i]) * pairing[i][j] for i in range(fam.n_params))
        coeffs = [Fraction(int(d[i]) * pairing[i][j], den) for i in range(fam.n_params)]
        terms = [(i, c) for i, c in enumerate(coeffs) if c != 0]
        if len(terms) == 1 and terms[0][1] == 1:
            out.append(f"b{terms[0][0] + 1}")
            continue
        common = terms[0][1]
        if all(c == common for _, c in terms):
            body = " + ".join(f"b{i + 1}" for i, _ in terms)
            if common == 1:
                out.append(f"({body})")
            elif common.numerator == 1:
                out.append(f"({body})/{common.denominator}")
            else:
                out.append(f"{common}*({body})")
        else:
            out.append(" + ".join(f"{c}*b{i + 1}" for i, c in terms))
    return out


def elementary_symmetric(eigs) -> np.ndarray:
    """Elementary symmetric functions sigma_0..sigma_m of the eigenvalues,
    by iterated multiplication of the linear factors (x + b_j).
    """
    b = np.asarray(eigs, dtype=float).ravel()
    sigma = np.zeros(b.size + 1)
    sigma[0] = 1.0
    for k, val in enumerate(b):
        sigma[1 : k + 2] += val * sigma[0 : k + 1].copy()
    return sigma


def weyl_dim_a2(m1: int, m2: int) -> int:
    """Dimension of the SL(3) irreducible with highest weight
    m1*w1 + m2*w2: (m1+1)(m2+1)(m1+m2+2)/2.

    The product is always even, so the division is exact.
    """
    if m1 < 0 or m2 < 0:
        raise ValueError("weights must be nonnegative")
    return (m1 + 1) * (m2 + 1) * (m1 + m2 + 2) // 2


def in_kahler_cone(family: str | FlagFamily, b_simple) -> bool:
    """True iff every class parameter is strictly positive (the class is
    then represented by an invariant Kahler form).
    """
    fam = get_family(family)
    b = np.asarray(b_simple, dtype=float)
    if b.shape != (fam.n_params,):
        raise ValueError(
            f"{fam.name} takes {fam.n_params} class parameters, got shape {b.shape}"
        )
    return bool(np.all(b > 0))


@dataclass(frozen=True)
class InvariantFormClass:
    """A semi-positive invariant (1,1)-class on a base manifold: eigenvalues
    relative to the Einstein metric together with their elementary symmetric
    functions (sigma[0] == 1)."""

    family: FlagFamily
    b_simple: tuple[float, ...]
    eigenvalues: tuple[float, ...]
    sigma: tuple[float, ...]

    @property
    def is_kahler(self) -> bool:
        return all(b > 0 for b in self.b_simple)


def invariant_class(family: str | FlagFamily, b_simple) -> InvariantFormClass:
    """Build the invariant class record for ``b_simple`` (validates arity
    and nonnegativity)."""
    fam = get_family(family)
    eigs = relative_eigenvalues(fam, b_simple)
    sigma = elementary_symmetric(eigs)
    return InvariantFormClass(
        family=fam,
        b_simple=tuple(float(x) for x in np.asarray(b_simple, dtype=float)),
        eigenvalues=tuple(float(x) for x in eigs),
        sigma=tuple(float(x) for x in sigma),
    )
