"""The Ricci-flat radial potential V(rho).

The potential solves the first-order relation V'(rho) * prod_j (V + b_j) = C
with the b_j the eigenvalues of the chosen invariant class relative to the
Einstein base metric.  Integrating once gives a single master polynomial
equation

    P(V) := sum_{k=0}^{m} sigma_{m-k} V^{k+1} / (k+1) = C*rho + C0,

strictly increasing in V on [0, inf), which this module solves four ways:
a safeguarded Newton iteration (any m), and radical closed forms for the
m = 2 cubic, the m = 3 quartic (resolvent cubic), and the m = 3 biquadratic
specific to the f12 family, where the depressed quartic has no linear term.

All closed forms are normalised to solve literally the same equation: the
degree-(m+1) polynomial is the master polynomial scaled by (m+1), so their
constant term is f = (m+1) * (C*rho + C0).

Large-rho behaviour is a fractional-power (Puiseux) series in
rho^(-1/(m+1)); coefficients beyond the two leading ones are produced by
triangular substitution into the master equation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import lie

__all__ = [
    "SolverError",
    "PotentialSpec",
    "PotentialModel",
    "PuiseuxExpansion",
    "METHODS",
    "master_polynomial",
    "c0_from_anchor",
    "solve_potential",
    "potential_derivative",
    "compact_potential",
    "cardano_potential",
    "quartic_potential",
    "f12_potential",
    "f12_potential_doubled_radical",
    "puiseux_coefficients",
    "build_model",
]

#: implemented evaluation methods for the radial potential
METHODS = (
    "numeric",
    "compact_closed_form",
    "cardano",
    "quartic_resolvent",
    "f12_closed_form",
)

_RESIDUAL_TOL = 1e-12
_MAX_NEWTON = 200


class SolverError(RuntimeError):
    """A root solve failed or was requested outside its domain."""


@dataclass(frozen=True)
class PotentialSpec:
    """Data defining the master equation.

    ``sigma`` holds sigma_0..sigma_m (sigma_0 == 1); ``eigs`` optionally
    records the class eigenvalues the sigmas came from, which the closed
    forms and the asymptotic comparisons need.
    """

    m: int
    sigma: tuple[float, ...]
    C: float
    C0: float
    eigs: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if len(self.sigma) != self.m + 1:
            raise ValueError("sigma must have length m + 1")
        if self.sigma[0] != 1.0:
            raise ValueError("sigma[0] must be 1")
        if any(s < 0 for s in self.sigma):
            raise ValueError("sigma entries must be nonnegative")
        if not self.C > 0:
            raise ValueError("C must be positive")

    @property
    def f_scale(self) -> int:
        """Scale factor between C*rho + C0 and the monic polynomial constant."""
        return self.m + 1

    def rhs(self, rho):
        return self.C * np.asarray(rho, dtype=float) + self.C0


def _master_value(m: int, sigma, V):
    V = np.asarray(V, dtype=float)
    out = np.zeros_like(V)
    for k in range(m, -1, -1):  # Horner in V, highest power first
        out = out * V + sigma[m - k] / (k + 1)
    return out * V


def _product_value(m: int, sigma, V):
    """prod_j (V + b_j) evaluated through the sigmas (the derivative of the
    master polynomial)."""
    V = np.asarray(V, dtype=float)
    out = np.zeros_like(V)
    for k in range(m, -1, -1):
        out = out * V + sigma[m - k]
    return out


def master_polynomial(spec: PotentialSpec, V):
    """P(V) = sum_k sigma_{m-k} V^{k+1} / (k+1)."""
    return _master_value(spec.m, spec.sigma, V)


def c0_from_anchor(m: int, sigma, V0: float) -> float:
    """Integration constant giving V(0) = V0: C0 = P(V0).

    Positivity of V0 guarantees positivity of the potential on [0, inf).
    """
    if not V0 > 0:
        raise ValueError("anchor value V0 must be positive")
    return float(_master_value(m, sigma, V0))


def solve_potential(spec: PotentialSpec, rho):
    """The unique nonnegative root of P(V) = C*rho + C0.

    Bracketed, safeguarded Newton iteration; P is increasing and convex on
    [0, inf), so the iteration started at the analytic upper bound
    ((m+1)(C rho + C0))^(1/(m+1)) + sigma_1 converges monotonically.  The
    residual satisfies |P(V) - (C rho + C0)| <= 1e-12 * max(1, C rho + C0).
    """
    rho_arr = np.asarray(rho, dtype=float)
    T = spec.C * rho_arr + spec.C0
    if np.any(T < 0):
        raise SolverError("C*rho + C0 < 0: no nonnegative root")
    m, sigma = spec.m, spec.sigma
    hi = ((m + 1) * T) ** (1.0 / (m + 1)) + sigma[1]
    lo = np.zeros_like(hi)
    V = hi.copy()
    tol = _RESIDUAL_TOL * np.maximum(1.0, T)
    for _ in range(_MAX_NEWTON):
        f = _master_value(m, sigma, V) - T
        if np.all(np.abs(f) <= tol):
            break
        lo = np.where(f < 0, V, lo)
        hi = np.where(f > 0, V, hi)
        dP = _product_value(m, sigma, V)
        step = np.divide(f, dP, out=np.zeros_like(f), where=dP > 0)
        V_new = V - step
        inside = (V_new >= lo) & (V_new <= hi) & (dP > 0)
        V = np.where(inside, V_new, 0.5 * (lo + hi))
    else:
        f = _master_value(m, sigma, V) - T
        if not np.all(np.abs(f) <= tol):
            raise SolverError("Newton iteration failed to meet residual tolerance")
    return V if rho_arr.ndim else float(V)


def potential_derivative(spec: PotentialSpec, V):
    """V'(rho) = C / prod_j (V + b_j), from the sigmas."""
    prod = _product_value(spec.m, spec.sigma, V)
    if np.any(prod == 0):
        raise SolverError("singular derivative: prod (V + b_j) vanished")
    return spec.C / prod


def compact_potential(m: int, C: float, C0: float, rho):
    """Closed form for the trivial class (all eigenvalues zero):
    V = ((m+1)(C rho + C0))^(1/(m+1))."""
    T = C * np.asarray(rho, dtype=float) + C0
    if np.any(T < 0):
        raise SolverError("C*rho + C0 < 0: no nonnegative root")
    out = ((m + 1) * T) ** (1.0 / (m + 1))
    return out if np.ndim(rho) else float(out)


def _principal_cbrt(z):
    """Principal cube root: real branch on the positive axis, principal
    complex branch elsewhere."""
    z = np.asarray(z)
    if np.isrealobj(z) and np.all(z >= 0):
        return np.cbrt(z)
    return np.asarray(z, dtype=complex) ** (1.0 / 3.0)


def cardano_potential(b1: float, b2: float, f):
    """Real root of V^3 + (3/2) sigma1 V^2 + 3 sigma2 V - f = 0 by radicals.

    Here sigma1 = b1 + b2 and sigma2 = b1 b2, and f = 3 (C rho + C0).  The
    discriminant pieces are D0 = (9/4)(b1 - b2)^2 and
    D1 = (27/4) sigma1^3 - (81/2) sigma1 sigma2 - 27 f; when D1^2 < 4 D0^3
    (three real roots) the principal complex branch is used, which lands on
    the largest real root -- the positive branch of the potential.
    """
    if b1 < 0 or b2 < 0:
        raise ValueError("eigenvalues must be nonnegative")
    f_arr = np.asarray(f, dtype=float)
    s1 = b1 + b2
    s2 = b1 * b2
    d0 = 2.25 * (b1 - b2) ** 2
    d1 = 6.75 * s1**3 - 40.5 * s1 * s2 - 27.0 * f_arr
    disc = d1 * d1 - 4.0 * d0**3
    sqrt_disc = np.sqrt(disc.astype(complex))
    big = _principal_cbrt(-d1 + sqrt_disc)
    V = -0.5 * s1 + big / (3.0 * np.cbrt(2.0))
    if d0 != 0.0:
        V = V + (np.cbrt(2.0) / 3.0) * d0 / big
    V = np.real_if_close(V, tol=1e6)
    V = np.asarray(V).real
    if np.any(V <= 0):
        raise SolverError("nonpositive root: increase the integration constant")
    return V if np.ndim(f) else float(V)


def _cubic_largest_real(a: float, b: float, c: float) -> float:
    """Largest real root of y^3 + a y^2 + b y + c, radical branch selection
    plus a short Newton polish to restore last-digit accuracy."""
    d0 = a * a - 3.0 * b
    d1 = 2.0 * a**3 - 9.0 * a * b + 27.0 * c
    disc = d1 * d1 - 4.0 * d0**3
    if disc >= 0.0:
        sq = np.sqrt(disc)
        num = d1 + sq if d1 >= 0 else d1 - sq
        cc = np.cbrt(num / 2.0)
        y = -a / 3.0 if cc == 0.0 else -(a + cc + d0 / cc) / 3.0
    else:
        cr = ((d1 + 1j * np.sqrt(-disc)) / 2.0) ** (1.0 / 3.0)
        y = max(
            (-(a + cr * w + d0 / (cr * w)) / 3.0).real
            for w in (1.0, np.exp(2j * np.pi / 3), np.exp(-2j * np.pi / 3))
        )
    for _ in range(3):
        fy = ((y + a) * y + b) * y + c
        dfy = (3.0 * y + 2.0 * a) * y + b
        if dfy != 0.0:
            y -= fy / dfy
    return y


def _depressed_coefficients(s1: float, s2: float, s3: float, f: float):
    """Coefficients of the depressed quartic x^4 + p x^2 + q x + r obtained
    from V^4 + (4/3) s1 V^3 + 2 s2 V^2 + 4 s3 V - f by V = x - s1/3."""
    p = 2.0 * s2 - (2.0 / 3.0) * s1 * s1
    q = (8.0 / 27.0) * s1**3 - (4.0 / 3.0) * s1 * s2 + 4.0 * s3
    r = (
        -(1.0 / 27.0) * s1**4
        - f
        - (4.0 / 3.0) * s1 * s3
        + (2.0 / 9.0) * s1 * s1 * s2
    )
    return p, q, r


def _quartic_scalar(s1: float, s2: float, s3: float, f: float) -> float:
    p, q, r = _depressed_coefficients(s1, s2, s3, f)
    shift = s1 / 3.0

    def residual(v):
        return (((v + (4.0 / 3.0) * s1) * v + 2.0 * s2) * v + 4.0 * s3) * v - f

    if abs(q) <= 1e-13 * max(1.0, abs(s1) ** 3, abs(f)):
        disc = p * p - 4.0 * r
        if disc < 0:
            raise SolverError("negative biquadratic discriminant")
        x2 = -p / 2.0 + np.sqrt(disc) / 2.0
        if x2 < 0:
            raise SolverError("no real biquadratic root")
        return np.sqrt(x2) - shift

    # resolvent cubic 8 y^3 + 8 p y^2 + (2 p^2 - 8 r) y - q^2, monic form
    y0 = _cubic_largest_real(p, (p * p - 4.0 * r) / 4.0, -q * q / 8.0)
    if not y0 > 0:
        raise SolverError("resolvent root not positive: constant term too small")
    half = np.sqrt(y0 / 2.0)
    scale = max(1.0, abs(f), s1**4)
    best = None
    # the four sign choices enumerate the quartic roots; for the constant
    # terms arising from a positive anchor the (sign of q) rule lands on the
    # same root, but enumerating is exact in every regime
    for outer in (1.0, -1.0):
        rad = -2.0 * y0 - 2.0 * p - outer * 2.0 * q / np.sqrt(2.0 * y0)
        if rad < -1e-9 * max(1.0, abs(p), y0):
            continue
        rad = max(rad, 0.0)
        for inner in (1.0, -1.0):
            v = outer * half + inner * 0.5 * np.sqrt(rad) - shift
            if abs(residual(v)) <= 1e-7 * scale and (best is None or v > best):
                best = v
    if best is None:
        raise SolverError("no real quartic root extracted")
    return best


def quartic_potential(sigma, f):
    """Largest real root of V^4 + (4/3) s1 V^3 + 2 s2 V^2 + 4 s3 V - f = 0.

    ``sigma`` is (s1, s2, s3) and f = 4 (C rho + C0).  Ferrari reduction:
    depress the quartic, take the largest (positive) root of the resolvent
    cubic, and recombine the radicals.
    """
    s1, s2, s3 = (float(s) for s in sigma)
    if np.ndim(f) == 0:
        return _quartic_scalar(s1, s2, s3, float(f))
    return np.array([_quartic_scalar(s1, s2, s3, float(x)) for x in np.asarray(f).ravel()]).reshape(np.shape(f))


def f12_potential(b1: float, b2: float, f):
    """Biquadratic closed form for the f12 family (depressed quartic has no
    linear term): V = -(b1+b2)/2 + sqrt((b1-b2)^2/4 + sqrt(b1^2 b2^2 + f))
    with f = 4 (C rho + C0) the quartic constant term.
    """
    if b1 < 0 or b2 < 0:
        raise ValueError("class parameters must be nonnegative")
    f_arr = np.asarray(f, dtype=float)
    inner = b1 * b1 * b2 * b2 + f_arr
    if np.any(inner < 0):
        raise SolverError("negative discriminant under the inner radical")
    V = -(b1 + b2) / 2.0 + np.sqrt((b1 - b2) ** 2 / 4.0 + np.sqrt(inner))
    return V if np.ndim(f) else float(V)


def f12_potential_doubled_radical(b1: float, b2: float, f):
    """Variant of :func:`f12_potential` with the inner radical scaled by 2.

    Kept as a negative control: it does not satisfy the quartic (the
    closed-form cross-checks flag it), and it must never be used to build a
    metric.
    """
    f_arr = np.asarray(f, dtype=float)
    inner = b1 * b1 * b2 * b2 + f_arr
    if np.any(inner < 0):
        raise SolverError("negative discriminant under the inner radical")
    V = -(b1 + b2) / 2.0 + np.sqrt((b1 - b2) ** 2 / 4.0 + 2.0 * np.sqrt(inner))
    return V if np.ndim(f) else float(V)


# ---------------------------------------------------------------------------
# Puiseux asymptotics


@dataclass(frozen=True)
class PuiseuxExpansion:
    """Truncated fractional-power expansion of V at large rho.

    ``coefficients[i]`` multiplies rho^((1-i)/(m+1)); i.e. index i stores
    c_{i-1} in the usual indexing where the k-th coefficient multiplies
    rho^(-k/(m+1)), starting at k = -1.
    """

    m: int
    C: float
    coefficients: tuple[float, ...]

    @property
    def order(self) -> int:
        """Largest coefficient index K present (k runs -1..K)."""
        return len(self.coefficients) - 2

    def coefficient(self, k: int) -> float:
        """c_k for k in -1..order."""
        return self.coefficients[k + 1]

    def evaluate(self, rho, upto: int | None = None):
        """Partial sum through c_upto (default: all stored terms)."""
        K = self.order if upto is None else upto
        u = np.asarray(rho, dtype=float) ** (1.0 / (self.m + 1))
        out = np.zeros_like(u)
        for i in range(K + 1, -1, -1):
            out = out / u + self.coefficients[i]
        return out * u

    def next_nonzero_index(self, K: int, tol: float = 1e-10) -> int | None:
        """Smallest index k > K with |c_k| > tol, or None."""
        for k in range(K + 1, self.order + 1):
            if abs(self.coefficient(k)) > tol:
                return k
        return None


def _series_mul(a, b, L):
    return np.convolve(a, b)[:L]


def puiseux_coefficients(spec: PotentialSpec, K: int) -> PuiseuxExpansion:
    """Coefficients c_{-1}..c_K of the large-rho expansion of V.

    c_{-1} = ((m+1) C)^(1/(m+1)) and c_0 = -sigma_1/m are forced by the two
    leading orders of the master equation; each later coefficient follows
    from one linear solve because the leading Jacobian of the master
    polynomial is c_{-1}^m.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    m, sigma = spec.m, spec.sigma
    c = np.zeros(K + 2)
    c[0] = ((m + 1) * spec.C) ** (1.0 / (m + 1))
    c[1] = -sigma[1] / m
    lead = c[0] ** m
    L = K + 2
    for k in range(1, K + 1):
        # master polynomial of the truncated series, coefficients of
        # u^(m+1-i) for i = 0..L-1, with u = rho^(1/(m+1))
        out = np.zeros(L)
        power = c[:L].copy()
        for j in range(1, m + 2):
            if j > 1:
                power = _series_mul(power, c[:L], L)
            coeff = sigma[m - j + 1] / j
            if coeff != 0.0:
                shift = (m + 1) - j
                if shift < L:
                    out[shift:] += coeff * power[: L - shift]
        target = spec.C0 if k == m else 0.0
        c[k + 1] = (target - out[k + 1]) / lead
    return PuiseuxExpansion(m=m, C=spec.C, coefficients=tuple(c))


# ---------------------------------------------------------------------------
# model assembly


@dataclass(frozen=True)
class PotentialModel:
    """A solved radial potential: spec plus the evaluation method.

    ``b_simple`` records the family class parameters when the model was
    built through :func:`build_model`; the f12 closed form needs them.
    ``v_offset`` shifts the evaluated potential and exists purely as a
    verification negative control (a nonzero offset breaks Ricci-flatness).
    """

    spec: PotentialSpec
    method: str = "numeric"
    b_simple: tuple[float, ...] | None = None
    v_offset: float = 0.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    def V(self, rho):
        spec = self.spec
        f = spec.f_scale * spec.rhs(rho)
        if self.method == "numeric":
            out = solve_potential(spec, rho)
        elif self.method == "compact_closed_form":
            out = compact_potential(spec.m, spec.C, spec.C0, rho)
        elif self.method == "cardano":
            b1, b2 = spec.eigs
            out = cardano_potential(b1, b2, f)
        elif self.method == "quartic_resolvent":
            out = quartic_potential(spec.sigma[1:], f)
        else:  # f12_closed_form
            b1, b2 = self.b_simple
            out = f12_potential(b1, b2, f)
        if self.v_offset:
            out = out + self.v_offset
        return out

    def dV(self, rho):
        # derivative of the unperturbed potential: the offset control shifts
        # V only, so the metric it builds genuinely violates the field equation
        V = self.V(rho)
        if self.v_offset:
            V = V - self.v_offset
        return potential_derivative(self.spec, V)

    def perturbed(self, offset: float) -> "PotentialModel":
        return replace(self, v_offset=offset)


_METHOD_ALIASES = {
    "auto": "auto",
    "numeric": "numeric",
    "compact": "compact_closed_form",
    "compact_closed_form": "compact_closed_form",
    "cardano": "cardano",
    "quartic": "quartic_resolvent",
    "quartic_resolvent": "quartic_resolvent",
    "f12": "f12_closed_form",
    "f12_closed_form": "f12_closed_form",
}


def _auto_method(family: lie.FlagFamily, eigs) -> str:
    if all(e == 0 for e in eigs):
        return "compact_closed_form"
    return {
        "cp1": "numeric",
        "cp1xcp1": "cardano",
        "cp1cubed": "quartic_resolvent",
        "f12": "f12_closed_form",
    }[family.name]


def build_model(
    family,
    b_simple,
    C: float = 1.0,
    V0: float | None = 1.0,
    C0: float | None = None,
    method: str = "auto",
) -> PotentialModel:
    """Assemble the potential model for a family and class parameters.

    Exactly one of ``V0`` (anchor value of V at rho = 0, from which the
    integration constant is derived) or ``C0`` must be given.  ``method``
    may be 'auto' or any entry of :data:`METHODS` (short aliases 'compact',
    'quartic' and 'f12' are accepted).
    """
    fam = lie.get_family(family)
    cls = lie.invariant_class(fam, b_simple)
    if (C0 is None) == (V0 is None):
        raise ValueError("exactly one of V0 or C0 must be given")
    if C0 is None:
        C0 = c0_from_anchor(fam.m, cls.sigma, V0)
    elif C0 < 0:
        raise ValueError("C0 must be nonnegative")
    spec = PotentialSpec(m=fam.m, sigma=cls.sigma, C=C, C0=float(C0), eigs=cls.eigenvalues)
    try:
        resolved = _METHOD_ALIASES[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}") from None
    if resolved == "auto":
        resolved = _auto_method(fam, cls.eigenvalues)
    _check_method(fam, cls, resolved)
    return PotentialModel(spec=spec, method=resolved, b_simple=cls.b_simple)


def _check_method(fam: lie.FlagFamily, cls: lie.InvariantFormClass, method: str):
    if method == "compact_closed_form" and any(e != 0 for e in cls.eigenvalues):
        raise ValueError("compact closed form requires a trivial class (all b = 0)")
    if method == "cardano" and fam.m != 2:
        raise ValueError("cardano form applies to m = 2 only")
    if method == "quartic_resolvent" and fam.m != 3:
        raise ValueError("quartic form applies to m = 3 only")
    if method == "f12_closed_form" and fam.name != "f12":
        raise ValueError("f12 closed form applies to the f12 family only")
