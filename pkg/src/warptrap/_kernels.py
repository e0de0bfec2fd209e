"""Low-level kernels for the symmetric tridiagonal eigensolver.

Eigenvalues come from Sturm-sequence bisection, eigenvectors from inverse
iteration with the bisection shifts.  The kernels are JIT-compiled with
numba when it is importable; otherwise numpy fallbacks (vectorized over the
eigenvalue index) are used.  Both paths are deterministic.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "HAVE_NUMBA",
    "bisect_eigenvalues",
    "gershgorin_bounds",
    "inverse_iteration",
    "sturm_count",
    "sturm_counts",
]

# A zero or denormal pivot in the Sturm recurrence or the triangular solves
# is replaced by -pivmin (counting it as negative, the standard convention).
# pivmin is scaled so that e^2 / pivmin stays finite, which keeps the
# recurrence out of inf/nan chains on exactly degenerate pivots.


def _pivmin(e2max: float) -> float:
    return max(e2max * 2.3e-308, 1e-305)


def gershgorin_bounds(d: np.ndarray, e: np.ndarray) -> tuple[float, float]:
    """Enclosing interval for the spectrum of tridiag(d, e)."""
    r = np.zeros_like(d)
    ae = np.abs(e)
    r[:-1] += ae
    r[1:] += ae
    return float(np.min(d - r)), float(np.max(d + r))


def _sturm_count_py(d, e2, lam, pivmin):
    cnt = 0
    q = d[0] - lam
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0.0:
        cnt += 1
    for i in range(1, d.shape[0]):
        q = d[i] - lam - e2[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            cnt += 1
    return cnt


def _sturm_counts_np(d, e2, lams, pivmin):
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    q = d[0] - lams
    q = np.where(np.abs(q) < pivmin, -pivmin, q)
    cnt = (q < 0.0).astype(np.int64)
    for i in range(1, d.shape[0]):
        with np.errstate(over="ignore", divide="ignore"):
            q = d[i] - lams - e2[i - 1] / q
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        cnt += q < 0.0
    return cnt


def _bisect_np(d, e2, indices, maxit):
    glo, ghi = gershgorin_bounds(d, np.sqrt(e2))
    pivmin = _pivmin(float(e2.max()))
    k = np.asarray(indices, dtype=np.int64)
    lo = np.full(k.shape, glo)
    hi = np.full(k.shape, ghi)
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        done = (mid == lo) | (mid == hi)
        if np.all(done):
            break
        cnt = _sturm_counts_np(d, e2, mid, pivmin)
        above = cnt >= k + 1
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return 0.5 * (lo + hi)


def _thomas_batch_np(d, e, shifts, rhs, pivmin):
    """Solve (T - s_j I) x_j = rhs_j for all columns j at once, guarded pivots."""
    n = d.shape[0]
    m = shifts.shape[0]
    cp = np.empty((n, m))
    y = np.empty((n, m))
    piv = d[0] - shifts
    piv = np.where(np.abs(piv) < pivmin, np.where(piv >= 0, pivmin, -pivmin), piv)
    cp[0] = e[0] / piv
    y[0] = rhs[0] / piv
    for i in range(1, n):
        piv = (d[i] - shifts) - e[i - 1] * cp[i - 1]
        piv = np.where(np.abs(piv) < pivmin, np.where(piv >= 0, pivmin, -pivmin), piv)
        if i < n - 1:
            cp[i] = e[i] / piv
        y[i] = (rhs[i] - e[i - 1] * y[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        y[i] -= cp[i] * y[i + 1]
    return y


def _inverse_iteration_np(d, e, shifts, v0, max_sweeps, tol_resid, pert, pivmin):
    n = d.shape[0]
    m = shifts.shape[0]
    s = shifts.copy()
    v = v0 / np.linalg.norm(v0, axis=0)
    active = np.ones(m, dtype=bool)
    sweeps = np.zeros(m, dtype=np.int64)
    for _ in range(max_sweeps):
        if not np.any(active):
            break
        y = _thomas_batch_np(d, e, s[active], v[:, active], pivmin)
        y /= np.linalg.norm(y, axis=0)
        v[:, active] = y
        r = (d[:, None] - s[None, :]) * v
        r[:-1] += e[:, None] * v[1:]
        r[1:] += e[:, None] * v[:-1]
        resid = np.max(np.abs(r), axis=0)
        sweeps[active] += 1
        newly = resid <= tol_resid
        s = np.where(active & ~newly, s + pert, s)
        active &= ~newly
    return v, ~active, sweeps


HAVE_NUMBA = False
try:  # pragma: no cover - exercised implicitly
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None

if HAVE_NUMBA:

    @njit(cache=True)
    def _sturm_count_nb(d, e2, lam, pivmin):
        cnt = 0
        q = d[0] - lam
        if np.abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            cnt += 1
        for i in range(1, d.shape[0]):
            q = d[i] - lam - e2[i - 1] / q
            if np.abs(q) < pivmin:
                q = -pivmin
            if q < 0.0:
                cnt += 1
        return cnt

    @njit(cache=True, parallel=True)
    def _sturm_counts_nb(d, e2, lams, pivmin):
        out = np.empty(lams.shape[0], dtype=np.int64)
        for j in prange(lams.shape[0]):
            out[j] = _sturm_count_nb(d, e2, lams[j], pivmin)
        return out

    @njit(cache=True, parallel=True)
    def _bisect_nb(d, e2, indices, maxit, glo, ghi, pivmin):
        m = indices.shape[0]
        res = np.empty(m)
        n = d.shape[0]
        for j in prange(m):
            k = indices[j]
            a = glo
            b = ghi
            for _ in range(maxit):
                mid = 0.5 * (a + b)
                if mid == a or mid == b:
                    break
                cnt = 0
                q = d[0] - mid
                if np.abs(q) < pivmin:
                    q = -pivmin
                if q < 0.0:
                    cnt += 1
                for i in range(1, n):
                    q = d[i] - mid - e2[i - 1] / q
                    if np.abs(q) < pivmin:
                        q = -pivmin
                    if q < 0.0:
                        cnt += 1
                if cnt >= k + 1:
                    b = mid
                else:
                    a = mid
            res[j] = 0.5 * (a + b)
        return res

    @njit(cache=True, parallel=True)
    def _inverse_iteration_nb(d, e, shifts, v0, max_sweeps, tol_resid, pert, pivmin):
        n = d.shape[0]
        m = shifts.shape[0]
        V = np.empty((n, m))
        converged = np.zeros(m, dtype=np.bool_)
        sweeps = np.zeros(m, dtype=np.int64)
        for j in prange(m):
            s = shifts[j]
            v = np.empty(n)
            nv = 0.0
            for i in range(n):
                v[i] = v0[i, j]
                nv += v[i] * v[i]
            nv = np.sqrt(nv)
            for i in range(n):
                v[i] /= nv
            cp = np.empty(n)
            y = np.empty(n)
            for sweep in range(max_sweeps):
                piv = d[0] - s
                if np.abs(piv) < pivmin:
                    piv = pivmin if piv >= 0 else -pivmin
                cp[0] = e[0] / piv
                y[0] = v[0] / piv
                for i in range(1, n):
                    piv = (d[i] - s) - e[i - 1] * cp[i - 1]
                    if np.abs(piv) < pivmin:
                        piv = pivmin if piv >= 0 else -pivmin
                    if i < n - 1:
                        cp[i] = e[i] / piv
                    y[i] = (v[i] - e[i - 1] * y[i - 1]) / piv
                for i in range(n - 2, -1, -1):
                    y[i] -= cp[i] * y[i + 1]
                nv = 0.0
                for i in range(n):
                    nv += y[i] * y[i]
                nv = np.sqrt(nv)
                for i in range(n):
                    v[i] = y[i] / nv
                rmax = 0.0
                for i in range(n):
                    r = (d[i] - s) * v[i]
                    if i > 0:
                        r += e[i - 1] * v[i - 1]
                    if i < n - 1:
                        r += e[i] * v[i + 1]
                    ar = np.abs(r)
                    if ar > rmax:
                        rmax = ar
                sweeps[j] = sweep + 1
                if rmax <= tol_resid:
                    converged[j] = True
                    break
                s += pert
            for i in range(n):
                V[i, j] = v[i]
        return V, converged, sweeps


def sturm_count(d: np.ndarray, e: np.ndarray, lam: float) -> int:
    """Number of eigenvalues of tridiag(d, e) below lam.

    Exact ties resolve as below (a guarded zero pivot counts as negative),
    which is the convention the bisection relies on.
    """
    e2 = np.asarray(e, dtype=float) ** 2
    pivmin = _pivmin(float(e2.max()))
    if HAVE_NUMBA:
        return int(_sturm_count_nb(np.asarray(d, dtype=float), e2, float(lam), pivmin))
    return _sturm_count_py(np.asarray(d, dtype=float), e2, float(lam), pivmin)


def sturm_counts(d: np.ndarray, e: np.ndarray, lams) -> np.ndarray:
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    e2 = np.asarray(e, dtype=float) ** 2
    pivmin = _pivmin(float(e2.max()))
    if HAVE_NUMBA:
        return _sturm_counts_nb(np.asarray(d, dtype=float), e2, lams, pivmin)
    return _sturm_counts_np(np.asarray(d, dtype=float), e2, lams, pivmin)


def bisect_eigenvalues(d: np.ndarray, e: np.ndarray, indices, maxit: int = 70) -> np.ndarray:
    """Eigenvalues with the given 0-based indices, by Sturm bisection.

    Converges each eigenvalue until the bracket midpoint is a floating
    point fixed point (machine precision relative to the spectral range).
    """
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size == 0:
        return np.empty(0)
    if idx.min() < 0 or idx.max() >= d.shape[0]:
        raise ValueError("eigenvalue index out of range")
    e2 = e * e
    if HAVE_NUMBA:
        glo, ghi = gershgorin_bounds(d, e)
        return _bisect_nb(d, e2, idx, maxit, glo, ghi, _pivmin(float(e2.max())))
    return _bisect_np(d, e2, idx, maxit)


def inverse_iteration(
    d: np.ndarray,
    e: np.ndarray,
    shifts: np.ndarray,
    seed: int = 53251,
    max_sweeps: int = 50,
    tol_resid: float | None = None,
    pert: float | None = None,
):
    """Inverse iteration for all shifts at once.

    Returns (vectors, converged mask, sweep counts).  Vectors are
    2-normalized columns; the caller applies quadrature normalization,
    sign convention, and any re-orthogonalization.  A sweep that misses
    the residual target perturbs its shift before retrying, which guards
    against stagnation near clustered eigenvalues.
    """
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    shifts = np.asarray(shifts, dtype=float)
    scale = float(np.abs(d).max() + 2.0 * np.abs(e).max())
    if tol_resid is None:
        tol_resid = 1e-12 * scale
    if pert is None:
        pert = 1e-12 * scale
    pivmin = np.finfo(float).eps * scale
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal((d.shape[0], shifts.shape[0]))
    if HAVE_NUMBA:
        return _inverse_iteration_nb(d, e, shifts, v0, max_sweeps, tol_resid, pert, pivmin)
    return _inverse_iteration_np(d, e, shifts, v0, max_sweeps, tol_resid, pert, pivmin)
