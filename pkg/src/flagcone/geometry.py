"""Metric tensors in the dense holomorphic charts of the four families.

Every base manifold here carries a chart C^m (the big cell) in which the
squared fiber norm on the canonical bundle is a polynomial,

    rho = |w|^2 * prod_a F_a(z)^2,    F_a(z) = 1 + sum_i |h_{a,i}(z)|^2,

with the h_{a,i} explicit holomorphic polynomials (one factor per class
parameter).  All geometric objects are assembled from three building
blocks evaluated in the chart:

* the Einstein base form  omega = (1/2) i ddbar log rho  (base block only),
* the class form          Theta = sum_a b_a i ddbar log F_a,
* the fiber/radial term   T = i dr wedge dbar r = (1/(4 rho)) i drho wedge dbar rho,

where T is expanded through F and d log F so that nothing divides by |w|
and the zero section w = 0 stays inside the domain.  The candidate
Ricci-flat metric is  Theta + V(rho) omega + 2 V'(rho) T.

Derivatives come from fourth-order central finite differences on the
underlying real coordinates (`mode="fd"`), or from the closed-form
derivatives of the factor polynomials (`mode="analytic"`), which serves as
the internal calibration oracle.  Functions are vectorised: ``z`` may carry
leading batch dimensions, matching ``w``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import lie
from .potential import PotentialModel

__all__ = [
    "GeometryError",
    "ChartPoint",
    "MetricSample",
    "BaseFrame",
    "DEFAULT_STEP",
    "DEFAULT_RICCI_STEP",
    "DEFAULT_RICCI_INNER_STEP",
    "to_real",
    "to_complex",
    "radial_rho",
    "complex_hessian",
    "complex_gradient",
    "chart_hessian",
    "base_frame",
    "theta_form",
    "base_ke_metric",
    "fiber_term",
    "ansatz_metric",
    "cone_metric",
    "rho_form",
    "ricci_tensor",
    "base_ricci_tensor",
    "metric_deviation",
    "deviation_norm",
    "is_hermitian",
    "min_eigenvalue",
]

#: default relative step for single finite-difference derivatives
#: (truncation-limited regime)
DEFAULT_STEP = 1e-3
#: defaults for the nested curvature computation: near the chart boundary
#: the assembly roundoff, amplified by the outer Hessian and divided by the
#: degenerating metric scale, dominates, so both steps sit higher than the
#: single-derivative default; the outer step stays a decade above the inner
#: assembly step so assembly noise remains subdominant
DEFAULT_RICCI_INNER_STEP = 3e-3
DEFAULT_RICCI_STEP = 3e-2


class GeometryError(RuntimeError):
    """Metric assembly or curvature evaluation failed."""


@dataclass(frozen=True)
class ChartPoint:
    """A point of the total space in the dense chart: base coordinates ``z``
    (length m) and fiber coordinate ``w``."""

    family: lie.FlagFamily
    z: tuple[complex, ...]
    w: complex

    def __post_init__(self):
        if len(self.z) != self.family.m:
            raise ValueError(f"{self.family.name} chart has {self.family.m} base coordinates")
        if not (np.all(np.isfinite(np.asarray(self.z))) and np.isfinite(self.w)):
            raise ValueError("coordinates must be finite")


@dataclass(frozen=True)
class MetricSample:
    """A metric evaluated at a chart point, tagged by which tensor it is."""

    point: ChartPoint
    rho: float
    metric: np.ndarray
    which: str  # ansatz | cone | base_KE | theta


# ---------------------------------------------------------------------------
# chart data


@dataclass(frozen=True)
class _Factor:
    components: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]


def _linear_factor(i: int, m: int) -> _Factor:
    def components(z):
        return z[..., i : i + 1]

    def jacobian(z):
        out = np.zeros(z.shape[:-1] + (1, m), dtype=complex)
        out[..., 0, i] = 1.0
        return out

    return _Factor(components, jacobian)


def _f12_first() -> _Factor:
    def components(z):
        return np.stack([z[..., 0], z[..., 2]], axis=-1)

    def jacobian(z):
        out = np.zeros(z.shape[:-1] + (2, 3), dtype=complex)
        out[..., 0, 0] = 1.0
        out[..., 1, 2] = 1.0
        return out

    return _Factor(components, jacobian)


def _f12_second() -> _Factor:
    def components(z):
        return np.stack([z[..., 1], z[..., 0] * z[..., 1] - z[..., 2]], axis=-1)

    def jacobian(z):
        out = np.zeros(z.shape[:-1] + (2, 3), dtype=complex)
        out[..., 0, 1] = 1.0
        out[..., 1, 0] = z[..., 1]
        out[..., 1, 1] = z[..., 0]
        out[..., 1, 2] = -1.0
        return out

    return _Factor(components, jacobian)


_CHARTS: dict[str, tuple[_Factor, ...]] = {
    "cp1": (_linear_factor(0, 1),),
    "cp1xcp1": (_linear_factor(0, 2), _linear_factor(1, 2)),
    "cp1cubed": tuple(_linear_factor(i, 3) for i in range(3)),
    "f12": (_f12_first(), _f12_second()),
}


def _factors(family) -> tuple[_Factor, ...]:
    fam = lie.get_family(family)
    return _CHARTS[fam.name]


def _factor_value(factor: _Factor, z: np.ndarray) -> np.ndarray:
    comp = factor.components(z)
    return 1.0 + np.sum(np.abs(comp) ** 2, axis=-1)


def radial_rho(family, z, w):
    """Squared fiber norm rho = |w|^2 prod_a F_a(z)^2 in the chart."""
    fam = lie.get_family(family)
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    total = np.ones(z.shape[:-1])
    for factor in _factors(fam):
        total = total * _factor_value(factor, z) ** 2
    out = np.abs(w) ** 2 * total
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# real <-> complex coordinate packing


def to_real(zc: np.ndarray) -> np.ndarray:
    """(..., n) complex -> (..., 2n) real, real parts then imaginary parts."""
    zc = np.asarray(zc, dtype=complex)
    return np.concatenate([zc.real, zc.imag], axis=-1)


def to_complex(x: np.ndarray) -> np.ndarray:
    """(..., 2n) real -> (..., n) complex."""
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


# ---------------------------------------------------------------------------
# finite-difference engine

_D1 = ((2, -1.0 / 12.0), (1, 8.0 / 12.0), (-1, -8.0 / 12.0), (-2, 1.0 / 12.0))
_D2 = (
    (2, -1.0 / 12.0),
    (1, 16.0 / 12.0),
    (0, -30.0 / 12.0),
    (-1, 16.0 / 12.0),
    (-2, -1.0 / 12.0),
)


@lru_cache(maxsize=None)
def _hessian_stencil(nr: int):
    """Evaluation points and per-entry weights for the real Hessian in nr
    coordinates: pure second derivatives use the five-point fourth-order
    rule, mixed ones the tensor product of two fourth-order first
    derivatives."""
    index: dict[tuple[int, ...], int] = {}

    def point(off: tuple[int, ...]) -> int:
        return index.setdefault(off, len(index))

    zero = (0,) * nr
    point(zero)
    entries = {}
    for a in range(nr):
        idxs, wts = [], []
        for off, wt in _D2:
            t = list(zero)
            t[a] = off
            idxs.append(point(tuple(t)))
            wts.append(wt)
        entries[(a, a)] = (np.array(idxs), np.array(wts))
    for a in range(nr):
        for b in range(a + 1, nr):
            idxs, wts = [], []
            for oa, wa in _D1:
                for ob, wb in _D1:
                    t = list(zero)
                    t[a], t[b] = oa, ob
                    idxs.append(point(tuple(t)))
                    wts.append(wa * wb)
            entries[(a, b)] = (np.array(idxs), np.array(wts))
    offsets = np.array(sorted(index, key=index.get), dtype=float)
    return offsets, entries


def _steps(x: np.ndarray, step: float) -> np.ndarray:
    if not 0.0 < step < 0.5:
        raise ValueError("step must lie in (0, 0.5)")
    return step * np.maximum(1.0, np.abs(x))


def _real_hessian(f, x, step):
    x = np.asarray(x, dtype=float)
    nr = x.shape[-1]
    offsets, entries = _hessian_stencil(nr)
    h = _steps(x, step)
    pts = x[..., None, :] + h[..., None, :] * offsets
    values = np.asarray(f(pts), dtype=float)
    out = np.zeros(x.shape[:-1] + (nr, nr))
    for (a, b), (idxs, wts) in entries.items():
        val = values[..., idxs] @ wts
        val = val / (h[..., a] * h[..., b])
        out[..., a, b] = val
        out[..., b, a] = val
    return out


def complex_hessian(f, x, step: float = DEFAULT_STEP):
    """Matrix of mixed holomorphic/antiholomorphic second derivatives of a
    real-valued function of realified coordinates.

    ``f`` maps (..., 2n) real arrays (first the real parts, then the
    imaginary parts of the n complex coordinates) to (...) values; the
    result is the (..., n, n) Hermitian matrix

        H[j, k] = (1/4) [ (d_xj d_xk + d_yj d_yk) + i (d_xj d_yk - d_yj d_xk) ] f,

    symmetrised to exact Hermitianity.  Steps are relative per coordinate:
    ``step * max(1, |x_a|)``.
    """
    hr = _real_hessian(f, x, step)
    n = hr.shape[-1] // 2
    xx = hr[..., :n, :n]
    yy = hr[..., n:, n:]
    xy = hr[..., :n, n:]
    yx = hr[..., n:, :n]
    H = 0.25 * ((xx + yy) + 1j * (xy - yx))
    return 0.5 * (H + np.conj(np.swapaxes(H, -1, -2)))


def complex_gradient(f, x, step: float = DEFAULT_STEP):
    """Holomorphic first derivatives d_j f = (1/2)(d_xj - i d_yj) f of a
    real-valued chart function, fourth-order central differences."""
    x = np.asarray(x, dtype=float)
    nr = x.shape[-1]
    h = _steps(x, step)
    offsets = []
    for a in range(nr):
        for off, _ in _D1:
            t = np.zeros(nr)
            t[a] = off
            offsets.append(t)
    pts = x[..., None, :] + h[..., None, :] * np.array(offsets)
    values = np.asarray(f(pts), dtype=float)
    values = values.reshape(values.shape[:-1] + (nr, len(_D1)))
    wts = np.array([wt for _, wt in _D1])
    grad = (values @ wts) / h
    n = nr // 2
    return 0.5 * (grad[..., :n] - 1j * grad[..., n:])


def chart_hessian(f_zw, point_z, point_w, step: float = DEFAULT_STEP):
    """Convenience wrapper: complex Hessian over all chart coordinates
    (z_1..z_m, w) of a scalar ``f_zw(z, w)``."""
    z = np.asarray(point_z, dtype=complex)
    w = np.asarray(point_w, dtype=complex)
    x = to_real(np.concatenate([z, w[..., None]], axis=-1))

    def f_real(x_pts):
        zc = to_complex(x_pts)
        return f_zw(zc[..., :-1], zc[..., -1])

    return complex_hessian(f_real, x, step)


# ---------------------------------------------------------------------------
# base frame: factor values, gradients and log-Hessians


@dataclass(frozen=True)
class BaseFrame:
    """Per-point chart data for the base directions.

    ``F`` is the product of squared factor values (so rho = |w|^2 F),
    ``grad_log`` the holomorphic gradient of log F, and ``hessians`` the
    complex Hessians of the individual log F_a, each of shape (..., m, m).
    """

    family: lie.FlagFamily
    F: np.ndarray
    grad_log: np.ndarray
    hessians: tuple[np.ndarray, ...]

    @property
    def omega(self) -> np.ndarray:
        """Einstein base form in the chart (the m x m block)."""
        return sum(self.hessians)

    def theta(self, b_simple) -> np.ndarray:
        b = np.asarray(b_simple, dtype=float)
        if b.shape != (len(self.hessians),):
            raise ValueError("one class parameter per factor required")
        if np.any(b < 0):
            raise ValueError("class parameters must be nonnegative")
        return sum(bi * h for bi, h in zip(b, self.hessians))


def base_frame(family, z, mode: str = "fd", step: float = DEFAULT_STEP) -> BaseFrame:
    """Evaluate factor values, d log F and the per-factor Hessians of
    log F_a, by finite differences or the factor-polynomial derivatives."""
    fam = lie.get_family(family)
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] != fam.m:
        raise ValueError(f"{fam.name} chart has {fam.m} base coordinates")
    factors = _factors(fam)
    if mode == "analytic":
        F_total = np.ones(z.shape[:-1])
        grad = np.zeros(z.shape, dtype=complex)
        hessians = []
        for factor in factors:
            comp = factor.components(z)
            jac = factor.jacobian(z)
            F = 1.0 + np.sum(np.abs(comp) ** 2, axis=-1)
            dF = np.einsum("...i,...ij->...j", np.conj(comp), jac)
            ddF = np.einsum("...ij,...ik->...jk", jac, np.conj(jac))
            hess = ddF / F[..., None, None] - np.einsum(
                "...j,...k->...jk", dF, np.conj(dF)
            ) / (F**2)[..., None, None]
            hessians.append(0.5 * (hess + np.conj(np.swapaxes(hess, -1, -2))))
            F_total = F_total * F**2
            grad = grad + 2.0 * dF / F[..., None]
        return BaseFrame(family=fam, F=F_total, grad_log=grad, hessians=tuple(hessians))
    if mode != "fd":
        raise ValueError("mode must be 'fd' or 'analytic'")
    x = to_real(z)
    hessians = []
    for factor in factors:
        def log_factor(x_pts, factor=factor):
            return np.log(_factor_value(factor, to_complex(x_pts)))

        hessians.append(complex_hessian(log_factor, x, step))

    def log_total(x_pts):
        zc = to_complex(x_pts)
        out = np.zeros(zc.shape[:-1])
        for factor in factors:
            out = out + 2.0 * np.log(_factor_value(factor, zc))
        return out

    grad = complex_gradient(log_total, x, step)
    F_total = np.ones(z.shape[:-1])
    for factor in factors:
        F_total = F_total * _factor_value(factor, z) ** 2
    return BaseFrame(family=fam, F=F_total, grad_log=grad, hessians=tuple(hessians))


def _embed_base(block: np.ndarray) -> np.ndarray:
    """Pad an (..., m, m) base matrix with a zero fiber row and column."""
    m = block.shape[-1]
    out = np.zeros(block.shape[:-2] + (m + 1, m + 1), dtype=complex)
    out[..., :m, :m] = block
    return out


def theta_form(family, b_simple, z, mode: str = "fd", step: float = DEFAULT_STEP):
    """The class form Theta = sum_a b_a i ddbar log F_a as an
    (m+1) x (m+1) matrix with vanishing fiber row and column."""
    frame = base_frame(family, z, mode=mode, step=step)
    return _embed_base(frame.theta(b_simple))


def base_ke_metric(family, z, mode: str = "fd", step: float = DEFAULT_STEP, embed: bool = True):
    """Einstein base form omega = (1/2) i ddbar log rho (base block; the
    fiber row and column of the pullback vanish)."""
    frame = base_frame(family, z, mode=mode, step=step)
    return _embed_base(frame.omega) if embed else frame.omega


def fiber_term(frame: BaseFrame, w) -> np.ndarray:
    """The radial rank-one term i dr wedge dbar r = (1/(4 rho)) i drho
    wedge dbar rho, written through F and d log F so that it extends
    polynomially across w = 0."""
    w = np.asarray(w, dtype=complex)
    F = frame.F
    G = frame.grad_log
    m = G.shape[-1]
    out = np.zeros(np.broadcast_shapes(F.shape, w.shape) + (m + 1, m + 1), dtype=complex)
    quarter = 0.25 * F
    absw2 = np.abs(w) ** 2
    out[..., :m, :m] = (quarter * absw2)[..., None, None] * np.einsum(
        "...j,...k->...jk", G, np.conj(G)
    )
    out[..., :m, m] = (quarter * w)[..., None] * G
    out[..., m, :m] = np.conj(out[..., :m, m])
    out[..., m, m] = quarter
    return out


def ansatz_metric(
    family,
    b_simple,
    model: PotentialModel,
    z,
    w,
    mode: str = "fd",
    step: float = DEFAULT_STEP,
    check: bool = False,
):
    """The candidate Ricci-flat metric Theta + V(rho) omega + 2 V'(rho) T.

    ``model`` must have been built from the same family and class
    parameters.  With ``check=True`` the assembled matrix is verified to be
    Hermitian positive definite (raises GeometryError otherwise).
    """
    fam = lie.get_family(family)
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    frame = base_frame(fam, z, mode=mode, step=step)
    rho = np.abs(w) ** 2 * frame.F
    V = np.asarray(model.V(rho))
    dV = np.asarray(model.dV(rho))
    g = (
        _embed_base(frame.theta(b_simple) + V[..., None, None] * frame.omega)
        + 2.0 * dV[..., None, None] * fiber_term(frame, w)
    )
    g = 0.5 * (g + np.conj(np.swapaxes(g, -1, -2)))
    if check:
        floor = min_eigenvalue(g)
        if np.any(floor <= 0):
            raise GeometryError("assembled metric is not positive definite")
    return g


def cone_metric(family, z, w, mode: str = "fd", step: float = DEFAULT_STEP):
    """The asymptotic cone metric (1/2) i ddbar rho^(1/(m+1)).  Requires
    w != 0.

    ``mode="fd"`` differentiates the explicit potential directly;
    ``mode="analytic"`` expands the Hessian through the chart frame,
    (1/(m+1)) rho^(1/(m+1)) omega + (2/(m+1)^2) rho^(1/(m+1)-1) T, which is
    exact in the fiber coordinate and serves as the calibration route.
    """
    fam = lie.get_family(family)
    w_arr = np.asarray(w, dtype=complex)
    if np.any(np.abs(w_arr) == 0):
        raise GeometryError("cone metric is singular on the zero section (w = 0)")
    s = 1.0 / (fam.m + 1)
    if mode == "fd":
        def potential_fn(zb, wb):
            return radial_rho(fam, zb, wb) ** s

        return 0.5 * chart_hessian(potential_fn, z, w_arr, step)
    frame = base_frame(fam, z, mode=mode, step=step)
    rho = np.abs(w_arr) ** 2 * frame.F
    rho_s = rho**s
    g = (s * rho_s)[..., None, None] * _embed_base(frame.omega) + (
        2.0 * s * s * rho_s / rho
    )[..., None, None] * fiber_term(frame, w_arr)
    return 0.5 * (g + np.conj(np.swapaxes(g, -1, -2)))


def rho_form(family, z, w, mode: str = "fd", step: float = DEFAULT_STEP):
    """(1/2) i ddbar rho, the Kahler form of the squared-radius potential
    (enters the volume-ratio identity); same mode choices as cone_metric."""
    fam = lie.get_family(family)
    if mode == "fd":
        return 0.5 * chart_hessian(lambda zb, wb: radial_rho(fam, zb, wb), z, w, step)
    w_arr = np.asarray(w, dtype=complex)
    frame = base_frame(fam, z, mode=mode, step=step)
    rho = np.abs(w_arr) ** 2 * frame.F
    g = rho[..., None, None] * _embed_base(frame.omega) + 2.0 * fiber_term(frame, w_arr)
    return 0.5 * (g + np.conj(np.swapaxes(g, -1, -2)))


# ---------------------------------------------------------------------------
# curvature


def ricci_tensor(metric_field, z, w, step: float = DEFAULT_RICCI_STEP):
    """Ricci tensor Ric[j, k] = -d_j d_kbar log det g of a metric field.

    ``metric_field(z, w)`` must accept batched coordinates and return the
    (..., n, n) metric matrices.  The outer Hessian step should sit well
    above the step used inside the field's own assembly.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    w_b = np.broadcast_to(w, z.shape[:-1])
    x = to_real(np.concatenate([z, w_b[..., None]], axis=-1))

    def log_det(x_pts):
        zc = to_complex(x_pts)
        g = metric_field(zc[..., :-1], zc[..., -1])
        det = np.linalg.det(g).real
        if np.any(det <= 0):
            raise GeometryError("metric determinant not positive")
        return np.log(det)

    return -complex_hessian(log_det, x, step)


def base_ricci_tensor(
    family,
    z,
    mode: str = "fd",
    step: float = DEFAULT_RICCI_STEP,
    inner_step: float = DEFAULT_RICCI_INNER_STEP,
):
    """Ricci tensor of the Einstein base form, an (..., m, m) matrix over
    the base coordinates only."""
    fam = lie.get_family(family)
    z = np.asarray(z, dtype=complex)
    x = to_real(z)

    def log_det(x_pts):
        block = base_frame(fam, to_complex(x_pts), mode=mode, step=inner_step).omega
        det = np.linalg.det(block).real
        if np.any(det <= 0):
            raise GeometryError("base metric determinant not positive")
        return np.log(det)

    return -complex_hessian(log_det, x, step)


# ---------------------------------------------------------------------------
# comparison norms


def deviation_norm(d, g_bar):
    """Frobenius norm of ``d`` measured in the frame of the positive form
    ``g_bar``: || g_bar^{-1/2} d g_bar^{-1/2} ||_F, via the equilibrated
    generalized trace."""
    d = np.asarray(d, dtype=complex)
    g = np.asarray(g_bar, dtype=complex)
    diag = np.einsum("...ii->...i", g).real
    if np.any(diag <= 0):
        raise GeometryError("comparison metric has nonpositive diagonal")
    s = np.sqrt(diag)
    scale = s[..., :, None] * s[..., None, :]
    M = np.linalg.solve(g / scale, d / scale)
    val = np.einsum("...ij,...ji->...", M, M).real
    return np.sqrt(np.maximum(val, 0.0))


def metric_deviation(g_hat, g_bar):
    """Pointwise size of g_hat - g_bar measured in g_bar."""
    return deviation_norm(np.asarray(g_hat) - np.asarray(g_bar), g_bar)


def is_hermitian(H, tol: float = 1e-12) -> bool:
    H = np.asarray(H)
    gap = np.max(np.abs(H - np.conj(np.swapaxes(H, -1, -2))))
    return bool(gap <= tol * max(1.0, float(np.max(np.abs(H)))))


def min_eigenvalue(H):
    """Smallest eigenvalue(s) of Hermitian ``H``."""
    return np.linalg.eigvalsh(H)[..., 0]
