"""Spherical-harmonic bases on S^{d-1}.

Three basis families are supported:

* ``fourier2d`` (d = 2): degree m spanned by e^{i m t}, e^{-i m t};
* ``zonal`` (d >= 3): Gegenbauer zonal functions C_m^{d/2-1}(<theta, zeta_m^j>)
  with a deterministic pole table, zeta_m^1 fixed to e_d;
* ``palpha`` (d >= 3): the harmonic homogeneous polynomials p_alpha obtained by
  repeated differentiation of |x|^{2-d}, indexed by multi-indices with
  |alpha| = m and alpha_d in {0, 1}.

Plus quadrature grids on the sphere and numerical Gram-rank tests.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .poly import Polynomial
from .specfun import gegenbauer

SURFACE_TOL = 1e-12


def surface_measure(d: int) -> float:
    """sigma(S^{d-1}) = 2 pi^{d/2} / Gamma(d/2)."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def harmonic_dim(d: int, m: int) -> int:
    """Dimension N(m) of the degree-m spherical harmonics in R^d.

    N(m) = C(m+d-1, m) - C(m+d-3, m-2), the second term dropped for m < 2.
    """
    if d < 2 or m < 0:
        raise ValueError("need d >= 2 and m >= 0")
    first = math.comb(m + d - 1, m)
    second = math.comb(m + d - 3, m - 2) if m >= 2 else 0
    return first - second


def degree_multi_indices(d: int, m: int):
    """Multi-indices alpha with |alpha| = m and alpha_d in {0, 1}, in a fixed order.

    The order is: alpha_d = 0 block first, then alpha_d = 1, each block sorted
    by descending lexicographic order of the first d-1 entries. The count
    equals harmonic_dim(d, m).
    """
    out = []
    for last in (0, 1):
        rem = m - last
        if rem < 0:
            continue

        def rec(prefix, left, slots):
            if slots == 1:
                out.append(tuple(prefix + [left, last]))
                return
            for v in range(left, -1, -1):
                rec(prefix + [v], left - v, slots - 1)

        rec([], rem, d - 1)
    return out


def _pochhammer(q: Fraction, n: int) -> Fraction:
    out = Fraction(1)
    for i in range(n):
        out *= q + i
    return out


def p_alpha(alpha, d: int) -> Polynomial:
    """Harmonic homogeneous polynomial p_alpha of degree |alpha| in R^d (d >= 3),
    built by exact symbolic differentiation of |x|^{2-d}:

        p_alpha = (-1)^m / (2^m ((d-2)/2)_m) |x|^{d-2+2m} d^alpha |x|^{2-d}

    The result has the structure x^alpha + |x|^2 q_alpha(x).
    """
    if d < 3:
        raise ValueError("p_alpha basis requires dimension d >= 3")
    alpha = tuple(alpha)
    if len(alpha) != d or any(a < 0 for a in alpha):
        raise ValueError("alpha must be a nonnegative multi-index of length d")
    m = sum(alpha)
    # Intermediate terms are c * x^beta * rho^(e2/2) with rho = |x|^2 and e2 an
    # integer of the same parity as 2-d; start from |x|^{2-d}.
    zero = tuple(0 for _ in range(d))
    terms = {(zero, 2 - d): Fraction(1)}
    for i in range(d):
        for _ in range(alpha[i]):
            new = {}
            for (beta, e2), c in terms.items():
                if beta[i] > 0:
                    b = list(beta)
                    b[i] -= 1
                    key = (tuple(b), e2)
                    new[key] = new.get(key, Fraction(0)) + c * beta[i]
                b = list(beta)
                b[i] += 1
                key = (tuple(b), e2 - 2)
                new[key] = new.get(key, Fraction(0)) + c * Fraction(e2, 2) * 2
            terms = {k: v for k, v in new.items() if v != 0}
    norm = Fraction((-1) ** m, 1) / (2**m * _pochhammer(Fraction(d - 2, 2), m))
    rho = Polynomial.radius_sq(d)
    out = Polynomial(d, {})
    for (beta, e2), c in terms.items():
        e2n = e2 + d - 2 + 2 * m
        if e2n < 0 or e2n % 2:
            raise AssertionError("rho exponent did not close to a nonneg integer")
        out = out + Polynomial.monomial(beta, c * norm) * rho ** (e2n // 2)
    return out


def laplacian(p: Polynomial) -> Polynomial:
    """Exact symbolic Laplacian of a polynomial."""
    return p.laplacian()


# --------------------------------------------------------------------------
# sphere grids


@dataclass
class SphereGrid:
    """Quadrature nodes and positive weights on S^{d-1}, summing to the surface measure."""

    dim: int
    nodes: np.ndarray  # (n, dim)
    weights: np.ndarray  # (n,)
    angles: np.ndarray | None = None  # d=2: the angle of each node
    polar_t: np.ndarray | None = None  # d=3: Gauss nodes in cos(polar)
    azimuth_count: int = 0

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        return np.asarray(values) @ self.weights


def sphere_grid(d: int, resolution: int) -> SphereGrid:
    """Quadrature grid on S^{d-1}.

    d=2: ``resolution`` uniform angles with equal weights (exact for
    trigonometric polynomials of degree < resolution).
    d=3: Gauss-Legendre with ``resolution`` points in the polar cosine crossed
    with 2*resolution uniform azimuths.
    d=4: Gauss-Chebyshev (second kind) in the first coordinate crossed with a
    d=3 grid, supporting the p-basis independence tests.
    """
    if resolution < 1:
        raise ValueError("resolution must be positive")
    if d == 2:
        ang = 2 * np.pi * np.arange(resolution) / resolution
        nodes = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        weights = np.full(resolution, 2 * np.pi / resolution)
        return SphereGrid(2, nodes, weights, angles=ang)
    if d == 3:
        t, w = np.polynomial.legendre.leggauss(resolution)
        naz = 2 * resolution
        phi = 2 * np.pi * np.arange(naz) / naz
        st = np.sqrt(1.0 - t**2)
        x = np.outer(st, np.cos(phi)).ravel()
        y = np.outer(st, np.sin(phi)).ravel()
        z = np.repeat(t, naz)
        nodes = np.stack([x, y, z], axis=1)
        weights = np.repeat(w * (2 * np.pi / naz), naz)
        return SphereGrid(3, nodes, weights, polar_t=t, azimuth_count=naz)
    if d == 4:
        k = np.arange(1, resolution + 1)
        t = np.cos(k * np.pi / (resolution + 1))
        wt = np.pi / (resolution + 1) * np.sin(k * np.pi / (resolution + 1)) ** 2
        sub = sphere_grid(3, resolution)
        st = np.sqrt(1.0 - t**2)
        nodes = np.concatenate(
            [
                np.column_stack(
                    [np.full(len(sub), ti), si * sub.nodes]
                )
                for ti, si in zip(t, st)
            ]
        )
        weights = np.concatenate([wi * sub.weights for wi in wt])
        return SphereGrid(4, nodes, weights)
    raise ValueError(f"unsupported dimension {d} (grids exist for d in {{2, 3, 4}})")


def _check_unit(v, name):
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > SURFACE_TOL:
        raise ValueError(f"{name} must be a unit vector")
    return v


def zonal_eval(m: int, d: int, zeta, theta):
    """Zonal harmonic C_m^{d/2-1}(<theta, zeta>) for unit vectors theta, zeta."""
    zeta = _check_unit(zeta, "zeta")
    theta = np.asarray(theta, dtype=float)
    if theta.ndim == 1:
        _check_unit(theta, "theta")
    return gegenbauer(m, d / 2 - 1, theta @ zeta)


# --------------------------------------------------------------------------
# pole tables for zonal bases


def _candidate_poles(d: int, m: int, attempt: int) -> np.ndarray:
    n = harmonic_dim(d, m)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=[d, m, attempt]))
    pts = rng.standard_normal((n, d))
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    pts[0] = np.eye(d)[d - 1]
    return pts


def default_poles(d: int, m: int, min_sv: float = 1e-3, max_attempts: int = 60) -> np.ndarray:
    """Deterministic pole table zeta_m^j for the degree-m zonal basis.

    Seeded unit vectors with zeta_m^1 = e_d; candidates are regenerated until
    both the basis functions and their squares pass a Gram-rank test with
    normalized minimum singular value above ``min_sv`` (keeping the best
    candidate as fallback).
    """
    n = harmonic_dim(d, m)
    if m == 0 or n == 1:
        return np.eye(d)[d - 1][None, :]
    grid = sphere_grid(d, max(4 * m + 4, 12))
    best = None
    for attempt in range(max_attempts):
        pts = _candidate_poles(d, m, attempt)
        vals = np.stack(
            [gegenbauer(m, d / 2 - 1, grid.nodes @ z) for z in pts], axis=1
        )
        r1, s1 = gram_rank([vals[:, j] for j in range(n)], grid)
        r2, s2 = gram_rank([vals[:, j] ** 2 for j in range(n)], grid)
        score = min(s1, s2)
        if r1 == n and r2 == n and score > min_sv:
            return pts
        if best is None or score > best[0]:
            best = (score, pts, r1, r2)
    score, pts, r1, r2 = best
    if r1 < n or r2 < n:
        raise RuntimeError(
            f"could not generate an independent pole system for d={d}, m={m}"
        )
    return pts


# --------------------------------------------------------------------------
# basis specification


FOURIER2D = "fourier2d"
ZONAL = "zonal"
PALPHA = "palpha"
RAW = "raw"
ORTHONORMAL = "orthonormal"


@dataclass
class BasisSpec:
    """Which spherical-harmonic basis is in force.

    poles maps degree -> (N(m), d) array for the zonal family. Caches for
    p-basis polynomials and orthonormalization transforms are built lazily and
    only read afterwards.
    """

    kind: str
    dim: int
    normalization: str = RAW
    poles: dict = field(default_factory=dict)
    _palpha_cache: dict = field(default_factory=dict, repr=False, compare=False)
    _ortho_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in (FOURIER2D, ZONAL, PALPHA):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.normalization not in (RAW, ORTHONORMAL):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.kind == FOURIER2D and self.dim != 2:
            raise ValueError("fourier2d basis requires d = 2")
        if self.kind in (ZONAL, PALPHA) and self.dim < 3:
            raise ValueError(f"{self.kind} basis requires d >= 3")
        for m, table in self.poles.items():
            table = np.asarray(table, dtype=float)
            if table.shape != (harmonic_dim(self.dim, m), self.dim):
                raise ValueError(f"pole table for degree {m} has wrong shape")
            norms = np.linalg.norm(table, axis=1)
            if np.any(np.abs(norms - 1) > SURFACE_TOL):
                raise ValueError(f"pole table for degree {m} contains non-unit vectors")
            self.poles[m] = table

    @property
    def is_real(self) -> bool:
        return self.kind in (ZONAL, PALPHA)

    def poles_for(self, m: int) -> np.ndarray:
        if self.kind != ZONAL:
            raise ValueError("pole tables only exist for the zonal basis")
        if m not in self.poles:
            self.poles[m] = default_poles(self.dim, m)
        return self.poles[m]

    def palpha_for(self, m: int):
        if m not in self._palpha_cache:
            self._palpha_cache[m] = [
                p_alpha(a, self.dim) for a in degree_multi_indices(self.dim, m)
            ]
        return self._palpha_cache[m]

    def _raw_values(self, m: int, theta: np.ndarray) -> np.ndarray:
        """Values of the raw degree-m functions at points theta (n, d) -> (n, N(m))."""
        if self.kind == FOURIER2D:
            ang = np.arctan2(theta[:, 1], theta[:, 0])
            if m == 0:
                return np.ones((len(theta), 1), dtype=complex)
            return np.stack([np.exp(1j * m * ang), np.exp(-1j * m * ang)], axis=1)
        if self.kind == ZONAL:
            table = self.poles_for(m)
            lam = self.dim / 2 - 1
            return np.stack([gegenbauer(m, lam, theta @ z) for z in table], axis=1)
        return np.stack([p.evaluate(theta) for p in self.palpha_for(m)], axis=1)

    def ortho_transform(self, m: int) -> np.ndarray:
        """Matrix T with orthonormal functions E = raw @ T (identity for fourier2d)."""
        if self.kind == FOURIER2D:
            return np.eye(harmonic_dim(2, m))
        if m not in self._ortho_cache:
            grid = sphere_grid(self.dim, max(2 * m + 4, 8))
            F = self._raw_values(m, grid.nodes)
            G = F.T @ (F * grid.weights[:, None])
            L = np.linalg.cholesky(G)
            self._ortho_cache[m] = np.linalg.inv(L).T
        return self._ortho_cache[m]

    def gram(self, m: int) -> np.ndarray:
        """L^2(S^{d-1}) Gram matrix of the degree-m basis functions in force."""
        n = harmonic_dim(self.dim, m)
        if self.kind == FOURIER2D or self.normalization == ORTHONORMAL:
            return np.eye(n)
        grid = sphere_grid(self.dim, max(2 * m + 4, 8))
        F = self._raw_values(m, grid.nodes)
        return F.T @ (F * grid.weights[:, None])

    def values(self, m: int, theta) -> np.ndarray:
        """Degree-m basis values at theta, respecting the normalization flag."""
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        F = self._raw_values(m, theta)
        if self.normalization == ORTHONORMAL and self.kind != FOURIER2D:
            F = F @ self.ortho_transform(m)
        return F

    def describe(self) -> str:
        return f"{self.kind}(d={self.dim}, {self.normalization})"


def fourier2d_basis() -> BasisSpec:
    return BasisSpec(FOURIER2D, 2)


def basis_eval(spec: BasisSpec, m: int, j: int, theta):
    """Value of the j-th degree-m basis function at the unit vector theta.

    For fourier2d the index set is j=1 -> e^{i m t}, j=2 -> e^{-i m t}.
    """
    n = harmonic_dim(spec.dim, m)
    if not 1 <= j <= n:
        raise IndexError(f"basis index {j} out of range 1..{n} for degree {m}")
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 1
    if single:
        _check_unit(theta, "theta")
    vals = spec.values(m, theta)[..., j - 1]
    if single:
        v = vals[0]
        return complex(v) if spec.kind == FOURIER2D else float(v.real if np.iscomplexobj(v) else v)
    return vals


def gram_rank(functions, grid: SphereGrid, rank_tol: float = 1e-10):
    """Numerical rank of the Gram matrix of the given sphere functions.

    ``functions`` may be callables on points or arrays of node values. Returns
    (rank, smallest singular value of the diagonally normalized Gram).
    """
    cols = []
    for f in functions:
        vals = f(grid.nodes) if callable(f) else np.asarray(f, dtype=float)
        if len(vals) != len(grid):
            raise ValueError("function values do not match the grid")
        cols.append(vals)
    F = np.stack(cols, axis=1)
    G = F.T @ (F * grid.weights[:, None])
    diag = np.sqrt(np.abs(np.diag(G)))
    if np.any(diag == 0):
        nz = diag > 0
        if not np.any(nz):
            return 0, 0.0
        sub = G[np.ix_(nz, nz)]
        dn = 1 / diag[nz]
        Gn = sub * dn[:, None] * dn[None, :]
        sv = np.linalg.svd(Gn, compute_uv=False)
        return int((sv > rank_tol * sv[0]).sum()), float(sv[-1])
    dn = 1 / diag
    Gn = G * dn[:, None] * dn[None, :]
    sv = np.linalg.svd(Gn, compute_uv=False)
    return int((sv > rank_tol * sv[0]).sum()), float(sv[-1])
