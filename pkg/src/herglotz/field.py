"""Herglotz wave fields on the unit ball.

A field is a K-finite solution of Delta u + u = 0, stored through its
spherical-harmonic coefficient table:

    u(r theta) = sqrt(2 pi) r^{-(d-2)/2} sum_m sum_j a_{m,j} J_{nu(m)}(r) Y_m^j(theta)

with nu(m) = m + (d-2)/2 and the wavelength normalized to 1. The magnitude
data of a field is the family of real functions Re c_{m,n} determined by
|u|^2, which this module assembles, compares and verifies.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from mpmath import mp, mpc, mpf

from . import harmonics
from .harmonics import BasisSpec, SphereGrid, harmonic_dim, sphere_grid, surface_measure
from .specfun import bessel_j, bessel_j_mp

WORKING_RADIUS = 1.0
COEFF_TOL = 1e-9  # exact-coefficient comparisons
GRID_TOL = 1e-6  # sampled-grid comparisons


def nu_order(m: int, d: int) -> float:
    return m + (d - 2) / 2.0


@dataclass
class HerglotzField:
    """Truncated coefficient table of a Herglotz field; immutable by convention."""

    dim: int
    max_degree: int
    basis: BasisSpec
    coeffs: list  # coeffs[m]: complex vector of length N(m)

    def __post_init__(self):
        if self.basis.dim != self.dim:
            raise ValueError("basis dimension does not match field dimension")
        if len(self.coeffs) != self.max_degree + 1:
            raise ValueError("need one coefficient vector per degree 0..max_degree")
        coeffs = []
        for m, vec in enumerate(self.coeffs):
            vec = np.asarray(vec, dtype=complex)
            if vec.shape != (harmonic_dim(self.dim, m),):
                raise ValueError(
                    f"degree {m} expects {harmonic_dim(self.dim, m)} coefficients"
                )
            coeffs.append(vec)
        self.coeffs = coeffs

    @classmethod
    def zero(cls, dim, max_degree, basis):
        return cls(
            dim,
            max_degree,
            basis,
            [np.zeros(harmonic_dim(dim, m), dtype=complex) for m in range(max_degree + 1)],
        )

    def copy(self):
        return HerglotzField(self.dim, self.max_degree, self.basis, [c.copy() for c in self.coeffs])

    def scaled(self, c):
        return HerglotzField(
            self.dim, self.max_degree, self.basis, [c * v for v in self.coeffs]
        )

    def padded(self, max_degree):
        if max_degree < self.max_degree:
            raise ValueError("cannot shrink a field by padding")
        coeffs = [v.copy() for v in self.coeffs]
        for m in range(self.max_degree + 1, max_degree + 1):
            coeffs.append(np.zeros(harmonic_dim(self.dim, m), dtype=complex))
        return HerglotzField(self.dim, max_degree, self.basis, coeffs)

    def flat(self):
        return np.concatenate(self.coeffs) if self.coeffs else np.zeros(0, dtype=complex)

    def max_coeff(self) -> float:
        return max((np.abs(v).max() for v in self.coeffs if len(v)), default=0.0)

    def is_zero(self, tol=0.0) -> bool:
        return self.max_coeff() <= tol


def add_fields(u: HerglotzField, v: HerglotzField) -> HerglotzField:
    _require_same_basis(u, v)
    M = max(u.max_degree, v.max_degree)
    a, b = u.padded(M), v.padded(M)
    return HerglotzField(u.dim, M, u.basis, [x + y for x, y in zip(a.coeffs, b.coeffs)])


def conjugate_field(u: HerglotzField) -> HerglotzField:
    """The coefficient table of conj(u).

    fourier2d: swap the (+m, -m) entries and conjugate; real bases: conjugate
    entrywise.
    """
    out = []
    for m, vec in enumerate(u.coeffs):
        if u.basis.kind == harmonics.FOURIER2D and m >= 1:
            out.append(np.array([np.conj(vec[1]), np.conj(vec[0])]))
        else:
            out.append(np.conj(vec))
    return HerglotzField(u.dim, u.max_degree, u.basis, out)


def _require_same_basis(u, v):
    if u.dim != v.dim:
        raise ValueError("fields have different dimensions")
    bu, bv = u.basis, v.basis
    if bu.kind != bv.kind or bu.normalization != bv.normalization:
        raise ValueError("fields use different bases")
    if bu.kind == harmonics.ZONAL:
        for m in range(min(u.max_degree, v.max_degree) + 1):
            if m in bu.poles and m in bv.poles:
                if not np.allclose(bu.poles[m], bv.poles[m], atol=1e-12):
                    raise ValueError("zonal pole tables differ")


# --------------------------------------------------------------------------
# evaluation


def _radial_limit0(d: int) -> float:
    # limit of r^{-(d-2)/2} J_{(d-2)/2}(r) as r -> 0
    return 0.5 ** ((d - 2) / 2.0) / math.gamma(d / 2.0)


def eval_field_grid(u: HerglotzField, radii, theta) -> np.ndarray:
    """Field values on the product of ``radii`` and points ``theta`` (n, d).

    Returns an array of shape (len(radii), len(theta)). Radii may include 0,
    where the m = 0 limit is used.
    """
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    if np.any(radii < 0):
        raise ValueError("radii must be nonnegative")
    if np.any(radii > WORKING_RADIUS + 1e-12):
        warnings.warn("evaluating beyond the working ball radius", stacklevel=2)
    d = u.dim
    out = np.zeros((len(radii), len(theta)), dtype=complex)
    pos = radii > 0
    rp = radii[pos]
    pref = math.sqrt(2 * math.pi)
    for m in range(u.max_degree + 1):
        vec = u.coeffs[m]
        if not np.any(vec):
            continue
        fm = u.basis.values(m, theta) @ vec  # (ntheta,)
        radial = np.zeros(len(radii))
        if np.any(pos):
            radial[pos] = rp ** (-(d - 2) / 2.0) * bessel_j(nu_order(m, d), rp)
        if np.any(~pos):
            radial[~pos] = _radial_limit0(d) if m == 0 else 0.0
        out += pref * radial[:, None] * fm[None, :]
    return out


def eval_field(u: HerglotzField, r, theta):
    """Value of u at radius r and unit direction theta."""
    theta = np.asarray(theta, dtype=float)
    if abs(np.linalg.norm(theta) - 1.0) > 1e-9:
        raise ValueError("theta must be a unit vector")
    return complex(eval_field_grid(u, [float(r)], theta[None, :])[0, 0])


def magnitude_sq(u: HerglotzField, r, theta) -> float:
    """|u(r theta)|^2."""
    return abs(eval_field(u, r, theta)) ** 2


def magnitude_sq_from_modes(u: HerglotzField, r, theta) -> float:
    """|u|^2 through the c_{m,n} double sum; an independent route used to
    cross-check magnitude_sq."""
    r = float(r)
    theta = np.asarray(theta, dtype=float)
    d = u.dim
    fvals = [u.basis.values(m, theta[None, :])[0] @ u.coeffs[m] for m in range(u.max_degree + 1)]
    js = [bessel_j(nu_order(m, d), r) for m in range(u.max_degree + 1)]
    total = 0.0
    for m in range(u.max_degree + 1):
        for n in range(u.max_degree + 1):
            cmn = fvals[m] * np.conj(fvals[n])
            total += cmn.real * js[m] * js[n]
    if r == 0:
        return abs(eval_field(u, 0.0, theta)) ** 2
    return 2 * math.pi / r ** (d - 2) * total


# --------------------------------------------------------------------------
# magnitude data


@dataclass
class MagnitudeData:
    """The family Re c_{m,n}, 0 <= m <= n <= M, as grid samples and, for d = 2,
    the exact angular Fourier coefficients at frequencies +-(m+n), +-(m-n)."""

    dim: int
    max_degree: int
    grid: SphereGrid
    samples: dict  # (m, n) -> ndarray over grid nodes
    fourier: dict | None = None  # d=2: (m, n) -> {q: complex}

    def pairs(self):
        return sorted(self.samples.keys())

    def max_abs(self) -> float:
        best = 0.0
        for v in self.samples.values():
            if len(v):
                best = max(best, float(np.abs(v).max()))
        if self.fourier:
            for tab in self.fourier.values():
                for c in tab.values():
                    best = max(best, abs(c))
        return best

    def pair_samples(self, m, n):
        key = (m, n) if m <= n else (n, m)
        if key in self.samples:
            return self.samples[key]
        return np.zeros(len(self.grid))

    def pair_fourier(self, m, n):
        key = (m, n) if m <= n else (n, m)
        if self.fourier is not None and key in self.fourier:
            return self.fourier[key]
        return {}

    def deviation(self, other) -> float:
        """Max absolute deviation over all pairs, on the joint degree range."""
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        M = max(self.max_degree, other.max_degree)
        dev = 0.0
        use_fourier = self.fourier is not None and other.fourier is not None
        for m in range(M + 1):
            for n in range(m, M + 1):
                if use_fourier:
                    fa, fb = self.pair_fourier(m, n), other.pair_fourier(m, n)
                    for q in set(fa) | set(fb):
                        dev = max(dev, abs(fa.get(q, 0) - fb.get(q, 0)))
                else:
                    if len(self.grid) != len(other.grid):
                        raise ValueError("sample grids differ; cannot compare")
                    dev = max(
                        dev,
                        float(np.abs(self.pair_samples(m, n) - other.pair_samples(m, n)).max()),
                    )
        return dev

    def subtract(self, other) -> "MagnitudeData":
        if self.dim != other.dim or len(self.grid) != len(other.grid):
            raise ValueError("incompatible magnitude data")
        M = max(self.max_degree, other.max_degree)
        samples = {}
        fourier = {} if (self.fourier is not None and other.fourier is not None) else None
        for m in range(M + 1):
            for n in range(m, M + 1):
                samples[(m, n)] = self.pair_samples(m, n) - other.pair_samples(m, n)
                if fourier is not None:
                    fa, fb = self.pair_fourier(m, n), other.pair_fourier(m, n)
                    fourier[(m, n)] = {
                        q: fa.get(q, 0) - fb.get(q, 0) for q in set(fa) | set(fb)
                    }
        return MagnitudeData(self.dim, M, self.grid, samples, fourier)

    def is_zero(self, tol) -> bool:
        return self.max_abs() <= tol


def _fourier_pair_coeffs(u: HerglotzField, m: int, n: int) -> dict:
    """Angular Fourier coefficients {q: R_q} of Re c_{m,n} for a d=2 field."""
    def components(k):
        vec = u.coeffs[k]
        return [(k, vec[0])] if k == 0 else [(k, vec[0]), (-k, vec[1])]

    cm = components(m)
    cn = components(n)
    raw = {}
    for km, am in cm:
        for kn, an in cn:
            q = km - kn
            raw[q] = raw.get(q, 0) + am * np.conj(an)
    out = {}
    for q in set(raw) | {-q for q in raw}:
        out[q] = (raw.get(q, 0) + np.conj(raw.get(-q, 0))) / 2.0
    return {q: complex(c) for q, c in out.items()}


def default_data_grid(dim: int, max_degree: int) -> SphereGrid:
    if dim == 2:
        return sphere_grid(2, max(4 * max_degree + 5, 8))
    return sphere_grid(dim, max(2 * max_degree + 4, 8))


def magnitude_coeffs(u: HerglotzField, grid: SphereGrid | None = None) -> MagnitudeData:
    """Assemble the magnitude data Re c_{m,n} of a field.

    The grid should be exact for products of degree <= 2 * max_degree; the
    default grid is. Diagonal entries are checked for pointwise nonnegativity.
    """
    if grid is None:
        grid = default_data_grid(u.dim, u.max_degree)
    if grid.dim != u.dim:
        raise ValueError("grid dimension mismatch")
    M = u.max_degree
    fvals = [u.basis.values(m, grid.nodes) @ u.coeffs[m] for m in range(M + 1)]
    samples = {}
    fourier = {} if u.dim == 2 else None
    scale = 1.0 + max(float(np.abs(f).max(initial=0.0)) for f in fvals) ** 2
    for m in range(M + 1):
        for n in range(m, M + 1):
            vals = (fvals[m] * np.conj(fvals[n])).real
            if m == n and vals.min(initial=0.0) < -1e-12 * scale:
                raise RuntimeError(
                    f"diagonal magnitude data Re c_{{{m},{m}}} lost positivity"
                )
            samples[(m, n)] = vals
            if fourier is not None:
                fourier[(m, n)] = _fourier_pair_coeffs(u, m, n)
    return MagnitudeData(u.dim, M, grid, samples, fourier)


def equal_magnitude(u: HerglotzField, v: HerglotzField, tol: float | None = None) -> bool:
    """Whether |u| = |v|, decided through the magnitude data (all Re c_{m,n}),
    cross-checked against a direct grid comparison of |u|^2 and |v|^2."""
    _require_same_basis(u, v)
    M = max(u.max_degree, v.max_degree)
    grid = default_data_grid(u.dim, M)
    du = magnitude_coeffs(u.padded(M), grid)
    dv = magnitude_coeffs(v.padded(M), grid)
    scale = 1.0 + max(du.max_abs(), dv.max_abs())
    if tol is None:
        tol = COEFF_TOL if u.dim == 2 else GRID_TOL
    dev = du.deviation(dv)
    verdict = dev <= tol * scale

    radii = 0.05 + 0.95 * (np.arange(1, 17) / 16.0)
    mu = np.abs(eval_field_grid(u, radii, grid.nodes)) ** 2
    mv = np.abs(eval_field_grid(v, radii, grid.nodes)) ** 2
    direct_dev = float(np.abs(mu - mv).max())
    direct_scale = 1.0 + float(max(mu.max(initial=0.0), mv.max(initial=0.0)))
    if verdict and direct_dev > 1e-4 * direct_scale:
        raise RuntimeError(
            "magnitude-data verdict (equal) contradicts the direct grid comparison"
        )
    if not verdict and dev > 100 * tol * scale and direct_dev <= 1e-10 * direct_scale:
        raise RuntimeError(
            "magnitude-data verdict (unequal) contradicts the direct grid comparison"
        )
    return verdict


# --------------------------------------------------------------------------
# trivial equivalence


IDENTITY = "Identity"
CONJUGATE = "Conjugate"
BOTH = "Both"
INEQUIVALENT = "Inequivalent"


@dataclass
class TrivialEquivalence:
    """Verdict of the trivial-solution test: v = c u, v = c conj(u), both, or neither."""

    verdict: str
    c: complex | None
    residual: float

    def __post_init__(self):
        if self.c is not None and abs(abs(self.c) - 1.0) > 1e-12:
            raise ValueError("c must be unimodular")

    @property
    def equivalent(self) -> bool:
        return self.verdict != INEQUIVALENT


def _best_unimodular(target: np.ndarray, source: np.ndarray):
    """Unimodular c minimizing max |target - c source|, estimated at the
    largest-modulus source entry and verified globally."""
    k = int(np.argmax(np.abs(source)))
    if abs(source[k]) == 0:
        c = 1.0 + 0j
    else:
        c = target[k] / source[k]
        c = c / abs(c) if abs(c) > 0 else 1.0 + 0j
    residual = float(np.abs(target - c * source).max(initial=0.0))
    return c, residual


def trivially_equivalent(u: HerglotzField, v: HerglotzField, tol: float = COEFF_TOL) -> TrivialEquivalence:
    """Search for a unimodular c with v = c u or v = c conj(u) at the coefficient level."""
    _require_same_basis(u, v)
    M = max(u.max_degree, v.max_degree)
    au = u.padded(M).flat()
    av = v.padded(M).flat()
    ab = conjugate_field(u.padded(M)).flat()
    scale = max(np.abs(au).max(initial=0.0), np.abs(av).max(initial=0.0), 1.0)
    if np.abs(au).max(initial=0.0) <= tol * scale and np.abs(av).max(initial=0.0) <= tol * scale:
        return TrivialEquivalence(BOTH, 1.0 + 0j, float(np.abs(av - au).max(initial=0.0)))
    ci, ri = _best_unimodular(av, au)
    cc, rc = _best_unimodular(av, ab)
    id_ok = ri <= tol * scale
    cj_ok = rc <= tol * scale
    if id_ok and cj_ok:
        return TrivialEquivalence(BOTH, ci, min(ri, rc))
    if id_ok:
        return TrivialEquivalence(IDENTITY, ci, ri)
    if cj_ok:
        return TrivialEquivalence(CONJUGATE, cc, rc)
    return TrivialEquivalence(INEQUIVALENT, None, min(ri, rc))


# --------------------------------------------------------------------------
# per-degree power and the mean coefficient


def degree_power(u: HerglotzField, m: int) -> float:
    """sum_k |a_{m,k}|^2 in orthonormalized coordinates.

    For fourier2d and orthonormalized bases this is the plain sum of squares;
    raw real bases go through the degree-m Gram matrix (a* G a)."""
    if m > u.max_degree:
        return 0.0
    vec = u.coeffs[m]
    if u.basis.kind == harmonics.FOURIER2D or u.basis.normalization == harmonics.ORTHONORMAL:
        return float(np.sum(np.abs(vec) ** 2))
    G = u.basis.gram(m)
    return float((np.conj(vec) @ G @ vec).real)


def mean_coefficient(u: HerglotzField, eta: float = 1.0) -> complex:
    """Recover a_{0,1} from quadrature of u over the sphere of radius eta:

        a_{0,1} = eta^{(d-2)/2} / (sqrt(2 pi) sigma(S^{d-1}) J_{(d-2)/2}(eta) Y_0)
                  * int u(eta theta) dsigma(theta).
    """
    d = u.dim
    j0 = bessel_j(nu_order(0, d), eta)
    if abs(j0) < 1e-8:
        raise ValueError(
            f"eta={eta} is at (or too close to) a Bessel zero: J_{(d-2)/2}({eta}) = {j0:.3e}"
        )
    grid = sphere_grid(d, max(u.max_degree + 2, 8))
    vals = eval_field_grid(u, [eta], grid.nodes)[0]
    integral = complex(vals @ grid.weights)
    y0 = u.basis.values(0, grid.nodes[:1])[0, 0]
    denom = math.sqrt(2 * math.pi) * surface_measure(d) * j0 * y0
    return integral * eta ** ((d - 2) / 2.0) / denom


# --------------------------------------------------------------------------
# random fields and magnitude sampling


def random_field(
    dim: int,
    max_degree: int,
    basis: BasisSpec,
    seed: int,
    real: bool = False,
    sparse: bool = False,
    zonal: bool = False,
    zero_mean: bool = False,
    all_r: bool = False,
) -> HerglotzField:
    """Seeded random K-finite field with optional structural constraints."""
    if all_r and dim != 2:
        raise ValueError("the all-R construction only exists for d = 2")
    if zonal and basis.kind != harmonics.ZONAL:
        raise ValueError("zonal fields require a zonal basis")
    rng = np.random.default_rng(seed)
    coeffs = []
    for m in range(max_degree + 1):
        n = harmonic_dim(dim, m)
        vec = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
        coeffs.append(vec)
    if all_r:
        for m in range(1, max_degree + 1):
            rho = abs(rng.standard_normal()) + 0.2
            chi = rng.uniform(0, 2 * math.pi)
            th = rng.uniform(0, 2 * math.pi)
            coeffs[m] = np.array(
                [rho * np.exp(1j * (chi + th)), rho * np.exp(1j * (chi - th))]
            )
        coeffs[0] = np.zeros(1, dtype=complex)
    if real:
        if basis.kind == harmonics.FOURIER2D:
            coeffs[0] = coeffs[0].real.astype(complex)
            for m in range(1, max_degree + 1):
                coeffs[m][1] = np.conj(coeffs[m][0])
        else:
            coeffs = [v.real.astype(complex) for v in coeffs]
    if sparse or zonal:
        for m in range(max_degree + 1):
            keep = 0 if zonal else int(rng.integers(len(coeffs[m])))
            mask = np.zeros_like(coeffs[m])
            mask[keep] = coeffs[m][keep]
            coeffs[m] = mask
    if zero_mean:
        coeffs[0] = np.zeros_like(coeffs[0])
    return HerglotzField(dim, max_degree, basis, coeffs)


@dataclass
class MagnitudeGrid:
    """|u|^2 sampled on radii x sphere nodes; values has shape (len(radii), len(grid))."""

    dim: int
    radii: np.ndarray
    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        if np.any(np.diff(self.radii) <= 0) or np.any(self.radii <= 0):
            raise ValueError("radii must be strictly increasing and positive")


def sample_magnitude(
    u: HerglotzField, radii, angular: int, dps: int | None = None
) -> MagnitudeGrid:
    """Sample |u|^2 on the product grid of ``radii`` and an angular grid.

    With ``dps`` set (d = 2 only) the samples are computed in arbitrary
    precision and returned as an object array of mpf values, which the
    extraction module consumes without rounding to double.
    """
    radii = np.asarray(radii, dtype=float)
    grid = sphere_grid(u.dim, angular)
    if dps is None:
        vals = np.abs(eval_field_grid(u, radii, grid.nodes)) ** 2
        return MagnitudeGrid(u.dim, radii, grid, vals)
    if u.dim != 2:
        raise ValueError("high-precision sampling is only implemented for d = 2")
    with mp.workdps(dps):
        Q = angular
        js = {m: [bessel_j_mp(m, mpf(r)) for r in radii] for m in range(u.max_degree + 1)}
        vals = np.empty((len(radii), Q), dtype=object)
        pref = 2 * mp.pi
        for qi in range(Q):
            phases = {}
            for m in range(u.max_degree + 1):
                phases[m] = mp.expjpi(mpf(2 * m * qi) / Q)
            for ri in range(len(radii)):
                tot = mpc(0)
                for m in range(u.max_degree + 1):
                    vec = u.coeffs[m]
                    if m == 0:
                        fm = mpc(vec[0])
                    else:
                        fm = mpc(vec[0]) * phases[m] + mpc(vec[1]) / phases[m]
                    tot += fm * js[m][ri]
                vals[ri, qi] = pref * (tot.real**2 + tot.imag**2)
    return MagnitudeGrid(2, radii, grid, vals)
