"""Recovery of the magnitude data Re c_{m,n} from gridded samples of |u|^2.

The pipeline is: angular decomposition of the samples into per-frequency
(d = 2) or per-Gegenbauer-degree (d = 3, zonal) radial profiles, followed by a
radial unmixing of each profile over the Bessel-product dictionary

    g_q(r) ~= sum_{(m,n) compatible with q} gamma_{m,n} 2 pi r^{-(d-2)}
              J_{nu(m)}(r) J_{nu(n)}(r).

The per-profile design matrices are generalized Vandermonde systems whose
conditioning grows steeply with the truncation degree, so all profile solves
run in arbitrary precision (mpmath); double-precision input samples then limit
the attainable accuracy, not the solver. The solves share mpmath's global
precision context: parallelize across processes, not threads.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from mpmath import mp, mpf

from .field import MagnitudeData, MagnitudeGrid, nu_order
from .specfun import bessel_j_mp

WORK_DPS = 50
CONDITION_WARN = 1e10


class ExtractionRankError(RuntimeError):
    """Design matrix lost column rank; names the colliding pairs."""

    def __init__(self, pairs):
        super().__init__(f"rank-deficient unmixing system; colliding pairs: {pairs}")
        self.pairs = pairs


@dataclass
class RadialProfile:
    """One angular component of the magnitude samples as a function of radius."""

    dim: int
    frequency: int  # angular frequency (d=2) or Gegenbauer degree (d=3)
    radii: np.ndarray
    values: np.ndarray  # complex (d=2) or real (d=3); may be an mpf object array

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        if np.any(self.radii <= 0) or np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must be positive and strictly increasing")


@dataclass
class UnmixReport:
    """Result of unmixing one radial profile."""

    frequency: int
    gamma: dict  # (m, n) -> complex (d=2) or float (d=3)
    residual: float
    condition: float
    method: str
    warnings: list = dc_field(default_factory=list)


def radial_grid(count: int, eta: float = 1.0, inner_frac: float = 0.05) -> np.ndarray:
    """Chebyshev-spaced radial nodes in (inner_frac * eta, eta]."""
    if count < 1:
        raise ValueError("need at least one radial node")
    k = np.arange(count)
    x = np.cos((2 * k + 1) * np.pi / (2 * count))
    lo = inner_frac * eta
    return np.sort(lo + (eta - lo) * (x + 1) / 2)


# --------------------------------------------------------------------------
# angular decomposition


def _is_uniform_angles(angles, count) -> bool:
    expected = 2 * np.pi * np.arange(count) / count
    return np.allclose(np.sort(angles % (2 * np.pi)), expected, atol=1e-9)


def angular_decompose(samples: MagnitudeGrid, d: int) -> list:
    """Split magnitude samples into per-frequency radial profiles.

    d=2 requires a uniform angular grid (the transform is an exact DFT for
    band-limited data); d=3 requires zonal data on a Gauss grid, decomposed in
    Legendre components of t = cos(polar angle).
    """
    if d != samples.dim:
        raise ValueError("dimension mismatch with the sample grid")
    if d == 2:
        grid = samples.grid
        if grid.angles is None or not _is_uniform_angles(grid.angles, len(grid)):
            raise ValueError("d=2 extraction requires a uniform angular grid")
        Q = len(grid)
        vals = samples.values
        high = vals.dtype == object
        qmax = (Q - 1) // 2
        profiles = []
        with mp.workdps(WORK_DPS):
            if high:
                cosq = {}
                for q in range(qmax + 1):
                    cosq[q] = [mp.expjpi(mpf(-2 * q * k) / Q) for k in range(Q)]
                for q in range(qmax + 1):
                    rows = np.empty(len(samples.radii), dtype=object)
                    for i in range(len(samples.radii)):
                        rows[i] = sum(vals[i, k] * cosq[q][k] for k in range(Q)) / Q
                    profiles.append(RadialProfile(2, q, samples.radii, rows))
            else:
                coef = np.fft.fft(np.asarray(vals, dtype=float), axis=1) / Q
                for q in range(qmax + 1):
                    profiles.append(RadialProfile(2, q, samples.radii, coef[:, q]))
        return profiles
    if d == 3:
        grid = samples.grid
        if grid.polar_t is None or grid.azimuth_count == 0:
            raise ValueError("d=3 extraction requires the Gauss product grid")
        vals = np.asarray(samples.values, dtype=float)
        naz = grid.azimuth_count
        npol = len(grid.polar_t)
        cube = vals.reshape(len(samples.radii), npol, naz)
        spread = np.abs(cube - cube.mean(axis=2, keepdims=True)).max()
        if spread > 1e-8 * (1 + np.abs(vals).max()):
            raise ValueError("d=3 samples are not zonal (azimuth-dependent)")
        zone = cube.mean(axis=2)  # (nr, npol)
        t, w = np.polynomial.legendre.leggauss(npol)
        qmax = npol - 1
        profiles = []
        for q in range(qmax + 1):
            Pq = _legendre_values(q, t)
            proj = (zone * (Pq * w)[None, :]).sum(axis=1) * (2 * q + 1) / 2.0
            profiles.append(RadialProfile(3, q, samples.radii, proj))
        return profiles
    raise ValueError(f"extraction is implemented for d in {{2, 3}}, got {d}")


def _legendre_values(q, t):
    t = np.asarray(t, dtype=float)
    if q == 0:
        return np.ones_like(t)
    pm, p = np.ones_like(t), t.copy()
    for k in range(1, q):
        pm, p = p, ((2 * k + 1) * t * p - k * pm) / (k + 1)
    return p


def compatible_pairs(q: int, M: int, d: int) -> list:
    """Unordered index pairs (m, n), m <= n <= M, that can feed component q."""
    out = []
    for m in range(M + 1):
        for n in range(m, M + 1):
            if d == 2:
                if m + n == q or n - m == q:
                    out.append((m, n))
            else:
                if n - m <= q <= m + n and (m + n - q) % 2 == 0:
                    out.append((m, n))
    return out


# --------------------------------------------------------------------------
# per-profile unmixing (arbitrary precision internals)


def _mp_columns(pairs, radii, d):
    """Column functions 2 pi r^{-(d-2)} J_{nu(m)} J_{nu(n)} at the radii, as mpf lists."""
    orders = sorted({m for p in pairs for m in p})
    jcache = {
        m: [bessel_j_mp(nu_order(m, d), mpf(r)) for r in radii] for m in orders
    }
    pref = [2 * mp.pi / mpf(r) ** (d - 2) for r in radii]
    cols = []
    for (m, n) in pairs:
        cols.append([pref[i] * jcache[m][i] * jcache[n][i] for i in range(len(radii))])
    return cols


def _mp_qr_solve(cols, rhs):
    """Least squares via modified Gram-Schmidt on normalized columns.

    Returns (solution, condition estimate from the R diagonal, residual norm).
    Raises ExtractionRankError-ready info by returning rank-deficient columns.
    """
    m = len(rhs)
    norms = [mp.sqrt(mp.fsum(x * x for x in col)) for col in cols]
    bad = [j for j, nr in enumerate(norms) if nr == 0]
    ncols = len(cols)
    qcols, R = [], [[mpf(0)] * ncols for _ in range(ncols)]
    for j in range(ncols):
        v = [x / norms[j] for x in cols[j]] if norms[j] > 0 else [mpf(0)] * m
        for _ in range(2):  # reorthogonalize
            for i in range(len(qcols)):
                c = mp.fsum(qcols[i][t] * v[t] for t in range(m))
                R[i][j] += c
                for t in range(m):
                    v[t] -= c * qcols[i][t]
        nr = mp.sqrt(mp.fsum(x * x for x in v))
        R[j][j] = nr
        qcols.append([x / nr for x in v] if nr > 0 else v)
    diag = [abs(R[j][j]) for j in range(ncols)]
    dmax = max(diag) if diag else mpf(1)
    rank_floor = dmax * mpf(10) ** (-(mp.dps - 8))
    deficient = [j for j, dj in enumerate(diag) if dj <= rank_floor]
    cond = float(dmax / min(diag)) if min(diag) > 0 else math.inf
    y = [mp.fsum(qcols[i][t] * rhs[t] for t in range(m)) for i in range(ncols)]
    x = [mpf(0)] * ncols
    for i in range(ncols - 1, -1, -1):
        if i in deficient:
            continue
        x[i] = (y[i] - mp.fsum(R[i][k] * x[k] for k in range(i + 1, ncols))) / R[i][i]
    fit = [mp.fsum(cols_j[t] * (x[j] / norms[j]) for j, cols_j in enumerate(cols) if norms[j] > 0)
           for t in range(m)]
    resid = mp.sqrt(mp.fsum((rhs[t] - fit[t]) ** 2 for t in range(m)))
    sol = [x[j] / norms[j] if norms[j] > 0 else mpf(0) for j in range(ncols)]
    return sol, cond, float(resid), deficient + bad


def _to_mpf_list(values):
    if isinstance(values, np.ndarray) and values.dtype == object:
        return [mpf(v) if not isinstance(v, mpf) else v for v in values]
    return [mpf(float(v)) for v in values]


def _taylor_gamma(pairs, profile, d):
    """Triangular Taylor matching: fit even powers of r about 0 on the inner
    third of the radial grid, then solve the series-coefficient system induced
    by the leading orders r^{m+n+2alpha} of the product expansions."""
    q = profile.frequency
    alpha = (d - 2) / 2.0
    radii = profile.radii
    n_inner = max(len(radii) // 3, min(len(radii), 8))
    rin = [mpf(r) for r in radii[:n_inner]]
    lead = {p: p[0] + p[1] for p in pairs}
    lmin = min(lead.values())
    lmax = max(lead.values())
    # The margin beyond the highest leading order pushes the aliasing of the
    # unmodeled (factorially decaying) series tail below the solve's noise
    # floor; same-leading-order blocks are separated only by these rows.
    K = min((lmax - lmin) // 2 + 1 + 12, n_inner - 1)
    # power columns r^{lmin + 2k}; the d-dependent prefactor r^{-(d-2)} is
    # absorbed by multiplying the profile by r^{d-2}
    if np.asarray(profile.values).dtype == object:
        vals = list(profile.values)
        re = [mpf(v.real) if hasattr(v, "real") else mpf(v) for v in vals[:n_inner]]
        im = [mpf(v.imag) if hasattr(v, "imag") else mpf(0) for v in vals[:n_inner]]
    else:
        arr = np.asarray(profile.values)[:n_inner]
        re = [mpf(float(np.real(v))) for v in arr]
        im = [mpf(float(np.imag(v))) for v in arr]
    re = [re[i] * rin[i] ** (d - 2) for i in range(n_inner)]
    im = [im[i] * rin[i] ** (d - 2) for i in range(n_inner)]
    pcols = [[r ** (lmin + 2 * k) for r in rin] for k in range(K)]
    cr, _, _, _ = _mp_qr_solve(pcols, re)
    ci, _, _, _ = _mp_qr_solve(pcols, im)
    # series matrix S[k][j]: coefficient of r^(lmin+2k) in 2 pi J_{nu(m)} J_{nu(n)}
    S = [[mpf(0)] * len(pairs) for _ in range(K)]
    for j, (m, n) in enumerate(pairs):
        s = m + n + 2 * alpha
        nu1, nu2 = m + alpha, n + alpha
        t = 2 * mp.pi / (mp.gamma(nu1 + 1) * mp.gamma(nu2 + 1)) / mpf(2) ** s
        base = (m + n - lmin) // 2
        kk = 0
        while base + kk < K:
            S[base + kk][j] = t
            t = -t / 4 * (s + 2 * kk + 1) * (s + 2 * kk + 2) / (
                (kk + 1) * (nu1 + kk + 1) * (nu2 + kk + 1) * (s + kk + 1)
            )
            kk += 1
    s_cols = [[S[k][j] for k in range(K)] for j in range(len(pairs))]
    gr, cond, _, defic = _mp_qr_solve(s_cols, cr)
    gi, _, _, _ = _mp_qr_solve(s_cols, ci)
    gamma = {
        p: complex(float(gr[j]), float(gi[j])) for j, p in enumerate(pairs)
    }
    return gamma, cond, defic


def radial_unmix(profile: RadialProfile, M: int, d: int, method: str = "lstsq") -> UnmixReport:
    """Recover the symmetrized pair coefficients feeding one radial profile.

    method "lstsq": least squares over the radial grid through an orthogonal
    factorization; method "taylor": triangular Taylor matching about r = 0.
    """
    q = profile.frequency
    pairs = compatible_pairs(q, M, d)
    if not pairs:
        norm = max((abs(complex(v)) for v in profile.values), default=0.0)
        return UnmixReport(q, {}, norm, 1.0, method,
                           warnings=["no compatible pairs; residual is the profile norm"])
    if len(profile.radii) < len(pairs):
        raise ValueError(
            f"profile {q}: {len(profile.radii)} radial nodes cannot determine {len(pairs)} pairs"
        )
    with mp.workdps(WORK_DPS):
        if method == "taylor":
            gamma, cond, defic = _taylor_gamma(pairs, profile, d)
            if defic:
                raise ExtractionRankError([pairs[j] for j in defic])
            report = UnmixReport(q, gamma, 0.0, cond, method)
            if cond > CONDITION_WARN:
                report.warnings.append(f"condition estimate {cond:.2e} above threshold")
            return report
        if method != "lstsq":
            raise ValueError(f"unknown unmixing method {method!r}")
        cols = _mp_columns(pairs, profile.radii, d)
        if np.asarray(profile.values).dtype == object:
            vals = list(profile.values)
            re = [mpf(v.real) if hasattr(v, "real") else mpf(v) for v in vals]
            im = [mpf(v.imag) if hasattr(v, "imag") else mpf(0) for v in vals]
        else:
            arr = np.asarray(profile.values)
            re = [mpf(float(np.real(v))) for v in arr]
            im = [mpf(float(np.imag(v))) for v in arr]
        gr, cond, res_r, defic = _mp_qr_solve(cols, re)
        gi, _, res_i, _ = _mp_qr_solve(cols, im)
        if defic:
            raise ExtractionRankError([pairs[j] for j in defic])
        gamma = {p: complex(float(gr[j]), float(gi[j])) for j, p in enumerate(pairs)}
        report = UnmixReport(q, gamma, float(math.hypot(res_r, res_i)), cond, method)
        if cond > CONDITION_WARN:
            report.warnings.append(f"condition estimate {cond:.2e} above threshold")
        return report


# --------------------------------------------------------------------------
# assembly


def _assemble_2d(reports, M, grid) -> MagnitudeData:
    fourier = {(m, n): {} for m in range(M + 1) for n in range(m, M + 1)}
    by_freq = {rep.frequency: rep for rep in reports}
    for (m, n) in list(fourier.keys()):
        div = 1.0 if m == n else 2.0
        for q in {m + n, n - m}:
            rep = by_freq.get(q)
            if rep is None or (m, n) not in rep.gamma:
                continue
            coeff = rep.gamma[(m, n)] / div
            fourier[(m, n)][q] = coeff
            if q > 0:
                fourier[(m, n)][-q] = np.conj(coeff)
    ang = grid.angles
    samples = {}
    for (m, n), tab in fourier.items():
        vals = np.zeros(len(grid), dtype=complex)
        for q, c in tab.items():
            vals += c * np.exp(1j * q * ang)
        samples[(m, n)] = vals.real
    return MagnitudeData(2, M, grid, samples, fourier)


def _legendre_triple(m, n, q, nquad=None):
    """(2q+1)/2 * int_{-1}^{1} P_m P_n P_q dt (the linearization coefficient)."""
    deg = m + n + q
    nq = nquad or (deg // 2 + 2)
    t, w = np.polynomial.legendre.leggauss(nq)
    return (2 * q + 1) / 2.0 * float(
        np.sum(w * _legendre_values(m, t) * _legendre_values(n, t) * _legendre_values(q, t))
    )


def _extract_3d_joint(profiles, M, grid):
    """Joint least squares over all Gegenbauer components for the products
    Re(a_m conj(a_n)) of a zonal field.

    The per-component radial families contain exactly dependent Bessel-product
    quadruples (see radial_unmix), so single components cannot be unmixed in
    isolation; the coupled system across components is well conditioned.
    """
    pairs = [(m, n) for m in range(M + 1) for n in range(m, M + 1)]
    radii = profiles[0].radii
    used = [p for p in profiles if p.frequency <= 2 * M]
    rest = [p for p in profiles if p.frequency > 2 * M]
    with mp.workdps(WORK_DPS):
        orders = sorted({m for p in pairs for m in p})
        jcache = {
            m: [bessel_j_mp(nu_order(m, 3), mpf(r)) for r in radii] for m in orders
        }
        pref = [2 * mp.pi / mpf(r) for r in radii]
        cols = [[] for _ in pairs]
        rhs = []
        for prof in used:
            q = prof.frequency
            vals = _to_mpf_list(prof.values)
            rhs.extend(vals)
            for j, (m, n) in enumerate(pairs):
                beta = _legendre_triple(m, n, q)
                mult = (1.0 if m == n else 2.0) * beta
                if abs(mult) < 1e-13:
                    cols[j].extend([mpf(0)] * len(radii))
                else:
                    mm = mpf(mult)
                    cols[j].extend(
                        mm * pref[i] * jcache[m][i] * jcache[n][i]
                        for i in range(len(radii))
                    )
        sol, cond, resid, defic = _mp_qr_solve(cols, rhs)
        if defic:
            raise ExtractionRankError([pairs[j] for j in defic])
        x = {p: float(sol[j]) for j, p in enumerate(pairs)}
    reports = [
        UnmixReport(-1, dict(x), float(resid), cond, "joint-lstsq",
                    warnings=([f"condition estimate {cond:.2e} above threshold"]
                              if cond > CONDITION_WARN else []))
    ]
    for prof in rest:
        norm = max((abs(complex(v)) for v in prof.values), default=0.0)
        reports.append(UnmixReport(prof.frequency, {}, norm, 1.0, "joint-lstsq",
                                   warnings=[] if norm < 1e-12 else
                                   [f"component beyond 2*max_degree has norm {norm:.2e}"]))
    t = grid.polar_t
    naz = grid.azimuth_count
    samples = {}
    for (m, n) in pairs:
        prof = x[(m, n)] * _legendre_values(m, t) * _legendre_values(n, t)
        samples[(m, n)] = np.repeat(prof, naz)
    return MagnitudeData(3, M, grid, samples, None), reports


def estimate_max_degree(samples: MagnitudeGrid, d: int, cap: int = 16) -> int:
    """Estimate the truncation degree from the active angular bandwidth,
    refining upward while the unmixing residual keeps improving."""
    profiles = angular_decompose(samples, d)
    scale = float(np.max(np.abs(np.asarray(samples.values, dtype=float)))) + 1.0
    act = [p.frequency for p in profiles
           if np.max(np.abs(np.asarray(p.values, dtype=complex))) > 1e-10 * scale]
    guess = max((q + 1) // 2 for q in act) if act else 0
    if d == 3:
        # zonal diagonals always land in the top Gegenbauer component, so the
        # bandwidth estimate is already the truncation degree
        return guess
    prev = None
    for M in range(guess, cap + 1):
        try:
            _, total = _extract_with_residual(profiles, d, M, "lstsq")
        except ValueError:
            break
        if total <= 1e-8 * scale:
            return M
        if prev is not None and total > prev / 10:
            return M - 1 if M > guess else M
        prev = total
    return guess


def _extract_with_residual(profiles, d, M, method):
    reports = []
    total = 0.0
    for prof in profiles:
        rep = radial_unmix(prof, M, d, method=method)
        reports.append(rep)
        total = max(total, rep.residual)
    return reports, total


def extract_magnitude_data(
    samples: MagnitudeGrid, d: int, M: int | None = None, method: str = "lstsq"
):
    """Recover the full magnitude data from gridded |u|^2 samples.

    Returns (MagnitudeData, list of UnmixReport). The reports carry residual
    norms and condition estimates; a truncation degree below the true content
    shows up as an elevated residual rather than failing silently.
    """
    if M is None:
        M = estimate_max_degree(samples, d)
    profiles = angular_decompose(samples, d)
    if d == 2:
        reports, _ = _extract_with_residual(profiles, d, M, method)
        data = _assemble_2d(reports, M, samples.grid)
        return data, reports
    return _extract_3d_joint(profiles, M, samples.grid)
