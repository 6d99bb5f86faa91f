# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend. Mirrors ``_pykernels`` function for function."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, log1p, log2, fabs, isfinite, INFINITY
from libc.float cimport DBL_EPSILON

cnp.import_array()

cdef double TIE_RTOL = 1e-12


cdef inline double _overhead(Py_ssize_t n, const double[::1] lam, const double[::1] p,
                             const double[::1] f, const double[::1] own_gain,
                             const long long[::1] in_ptr, const long long[::1] in_idx,
                             const double[::1] in_gain, const double[::1] bits,
                             const double[::1] work, const double[::1] alpha_t,
                             const double[::1] alpha_e, const double[::1] kappa,
                             double bandwidth, double noise, double cloud_t,
                             double cloud_e) nogil:
    cdef double lam_n = lam[n], w = work[n], val = 0.0
    cdef double interf, rate, tx_time, loc, fn
    cdef long long j
    if lam_n > 0.0:
        interf = 0.0
        for j in range(in_ptr[n], in_ptr[n + 1]):
            if lam[in_idx[j]] > 0.0:
                interf += p[in_idx[j]] * in_gain[j]
        rate = bandwidth * log2(1.0 + p[n] * own_gain[n] / (noise + interf))
        tx_time = lam_n * bits[n] / rate
        val += alpha_t[n] * (tx_time + lam_n * w * cloud_t)
        val += alpha_e[n] * (p[n] * tx_time + lam_n * w * cloud_e)
    if lam_n < 1.0:
        loc = (1.0 - lam_n) * w
        fn = f[n]
        if fn > 0.0:
            val += alpha_t[n] * (loc / fn)
        else:
            val += alpha_t[n] * INFINITY
        val += alpha_e[n] * kappa[n] * loc * fn * fn
    return val


def overheads(users, lam, p, f, own_gain, in_ptr, in_idx, in_gain, bits, work,
              alpha_t, alpha_e, kappa, double bandwidth, double noise,
              double f_cloud, double kappa_cloud):
    cdef const long long[::1] us = np.ascontiguousarray(users, dtype=np.int64)
    cdef const double[::1] lam_v = np.ascontiguousarray(lam, dtype=float)
    cdef const double[::1] p_v = np.ascontiguousarray(p, dtype=float)
    cdef const double[::1] f_v = np.ascontiguousarray(f, dtype=float)
    cdef const double[::1] g_v = np.ascontiguousarray(own_gain, dtype=float)
    cdef const long long[::1] ptr_v = np.ascontiguousarray(in_ptr, dtype=np.int64)
    cdef const long long[::1] idx_v = np.ascontiguousarray(in_idx, dtype=np.int64)
    cdef const double[::1] ig_v = np.ascontiguousarray(in_gain, dtype=float)
    cdef const double[::1] bits_v = np.ascontiguousarray(bits, dtype=float)
    cdef const double[::1] work_v = np.ascontiguousarray(work, dtype=float)
    cdef const double[::1] at_v = np.ascontiguousarray(alpha_t, dtype=float)
    cdef const double[::1] ae_v = np.ascontiguousarray(alpha_e, dtype=float)
    cdef const double[::1] k_v = np.ascontiguousarray(kappa, dtype=float)
    cdef Py_ssize_t k, m = us.shape[0]
    out = np.empty(m)
    cdef double[::1] out_v = out
    cdef double cloud_t = 1.0 / f_cloud, cloud_e = kappa_cloud * f_cloud * f_cloud
    for k in range(m):
        out_v[k] = _overhead(us[k], lam_v, p_v, f_v, g_v, ptr_v, idx_v, ig_v, bits_v,
                             work_v, at_v, ae_v, k_v, bandwidth, noise, cloud_t, cloud_e)
    return out


cdef struct TermParams:
    double a, at, ae, gain, gamma_p
    Py_ssize_t m
    const double *b
    const double *c
    const double *g
    const double *d0


cdef inline void _terms(double p, TermParams *t, double *val, double *d1,
                        double *d2) noexcept nogil:
    cdef double q = t.gamma_p + p * t.gain
    cdef double h = log1p(p * t.gain / t.gamma_p)
    cdef double h1 = t.gain / q
    cdef double h2 = -h1 * h1
    cdef double u = t.at + t.ae * p
    cdef double v, e1, e2, dk, ck, hk, den, hk1, hk2
    cdef Py_ssize_t k
    v = t.a * u / h
    e1 = t.a * (t.ae * h - u * h1) / (h * h)
    e2 = t.a * (-u * h2 * h - 2.0 * h1 * (t.ae * h - u * h1)) / (h * h * h)
    for k in range(t.m):
        dk = t.d0[k] + t.g[k] * p
        ck = t.c[k]
        hk = log1p(ck / dk)
        den = dk * (dk + ck)
        hk1 = -ck * t.g[k] / den
        hk2 = ck * t.g[k] * t.g[k] * (2.0 * dk + ck) / (den * den)
        v += t.b[k] / hk
        e1 += -t.b[k] * hk1 / (hk * hk)
        e2 += -t.b[k] * (hk2 * hk - 2.0 * hk1 * hk1) / (hk * hk * hk)
    val[0] = v
    d1[0] = e1
    d2[0] = e2


def transmission_terms(double p, double a, double at, double ae, double gain,
                       double gamma_p, b, c, g, d0):
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=float)
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=float)
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=float)
    cdef const double[::1] dv = np.ascontiguousarray(d0, dtype=float)
    cdef TermParams t
    cdef double val, d1, d2
    t.a = a; t.at = at; t.ae = ae; t.gain = gain; t.gamma_p = gamma_p
    t.m = bv.shape[0]
    t.b = &bv[0] if t.m else NULL
    t.c = &cv[0] if t.m else NULL
    t.g = &gv[0] if t.m else NULL
    t.d0 = &dv[0] if t.m else NULL
    _terms(p, &t, &val, &d1, &d2)
    return val, d1, d2


cdef bint _safe_newton(double lo, double hi, double dlo, TermParams *t, int max_iter,
                       double tol, double *root) noexcept nogil:
    cdef bint neg_at_lo = not (dlo > 0.0)
    cdef double x = 0.5 * (lo + hi), xn, v, d1, d2
    cdef int it
    cdef bint step_ok
    for it in range(max_iter):
        _terms(x, t, &v, &d1, &d2)
        if fabs(d1) <= tol:
            root[0] = x
            return True
        if (d1 < 0.0) == neg_at_lo:
            lo = x
        else:
            hi = x
        if hi - lo <= 4.0 * DBL_EPSILON * (fabs(x) if fabs(x) > 1e-300 else 1e-300):
            root[0] = x
            return True
        step_ok = d2 != 0.0
        if step_ok:
            xn = x - d1 / d2
            step_ok = lo < xn < hi
        x = xn if step_ok else 0.5 * (lo + hi)
    root[0] = x
    return False


def power_search(double a, double at, double ae, double gain, double gamma_p, b, c, g,
                 d0, double p_min, double p_max, int max_iter, double tol,
                 int multistart, int grid):
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=float)
    cdef const double[::1] cv = np.ascontiguousarray(c, dtype=float)
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=float)
    cdef const double[::1] dv = np.ascontiguousarray(d0, dtype=float)
    cdef TermParams t
    t.a = a; t.at = at; t.ae = ae; t.gain = gain; t.gamma_p = gamma_p
    t.m = bv.shape[0]
    t.b = &bv[0] if t.m else NULL
    t.c = &cv[0] if t.m else NULL
    t.g = &gv[0] if t.m else NULL
    t.d0 = &dv[0] if t.m else NULL

    roots = []
    cdef int j, it
    cdef double x, xn, v, d1, d2, r, best_p, best_v
    cdef double[::1] xs
    cdef double[::1] ds
    if p_max > p_min:
        xs = np.linspace(p_min, p_max, grid)
        ds = np.empty(grid)
        for j in range(grid):
            _terms(xs[j], &t, &v, &d1, &d2)
            ds[j] = d1
        for j in range(grid - 1):
            if ds[j] == 0.0:
                roots.append(xs[j])
            elif ds[j] * ds[j + 1] < 0.0:
                if _safe_newton(xs[j], xs[j + 1], ds[j], &t, max_iter, tol, &r):
                    roots.append(r)
        xs = np.linspace(p_min, p_max, multistart)
        for j in range(multistart):
            x = xs[j]
            for it in range(max_iter):
                _terms(x, &t, &v, &d1, &d2)
                if fabs(d1) <= tol:
                    roots.append(x)
                    break
                if d2 == 0.0 or not isfinite(d2):
                    break
                x = x - d1 / d2
                if not (p_min <= x <= p_max):
                    break
    best_p = p_min
    _terms(p_min, &t, &best_v, &d1, &d2)
    for x in [p_max] + roots:
        _terms(x, &t, &v, &d1, &d2)
        if v < best_v - TIE_RTOL * fabs(best_v) or (
                fabs(v - best_v) <= TIE_RTOL * fabs(best_v) and x < best_p):
            best_p = x
            best_v = v
    return best_p, best_v, np.array(roots, dtype=float)


cdef double _objective(Py_ssize_t n, double[::1] lam, double[::1] p, double[::1] f,
                       const double[::1] weights, const double[::1] own_gain,
                       const long long[::1] in_ptr, const long long[::1] in_idx,
                       const double[::1] in_gain, const double[::1] bits,
                       const double[::1] work, const double[::1] alpha_t,
                       const double[::1] alpha_e, const double[::1] kappa,
                       double bandwidth, double noise, double cloud_t,
                       double cloud_e) noexcept nogil:
    cdef double total = 0.0
    cdef Py_ssize_t u
    for u in range(n):
        if weights[u] != 0.0:
            total += weights[u] * _overhead(u, lam, p, f, own_gain, in_ptr, in_idx,
                                            in_gain, bits, work, alpha_t, alpha_e,
                                            kappa, bandwidth, noise, cloud_t, cloud_e)
    return total


def enumerate_argmin(cand_lam, cand_p, cand_f, counts, weights, own_gain, in_ptr,
                     in_idx, in_gain, bits, work, alpha_t, alpha_e, kappa,
                     double bandwidth, double noise, double f_cloud,
                     double kappa_cloud):
    cdef const double[:, ::1] cl = np.ascontiguousarray(cand_lam, dtype=float)
    cdef const double[:, ::1] cp = np.ascontiguousarray(cand_p, dtype=float)
    cdef const double[:, ::1] cf = np.ascontiguousarray(cand_f, dtype=float)
    cdef const long long[::1] cnt = np.ascontiguousarray(counts, dtype=np.int64)
    cdef const double[::1] w_v = np.ascontiguousarray(weights, dtype=float)
    cdef const double[::1] g_v = np.ascontiguousarray(own_gain, dtype=float)
    cdef const long long[::1] ptr_v = np.ascontiguousarray(in_ptr, dtype=np.int64)
    cdef const long long[::1] idx_v = np.ascontiguousarray(in_idx, dtype=np.int64)
    cdef const double[::1] ig_v = np.ascontiguousarray(in_gain, dtype=float)
    cdef const double[::1] bits_v = np.ascontiguousarray(bits, dtype=float)
    cdef const double[::1] work_v = np.ascontiguousarray(work, dtype=float)
    cdef const double[::1] at_v = np.ascontiguousarray(alpha_t, dtype=float)
    cdef const double[::1] ae_v = np.ascontiguousarray(alpha_e, dtype=float)
    cdef const double[::1] k_v = np.ascontiguousarray(kappa, dtype=float)
    cdef Py_ssize_t n = cnt.shape[0], u, d
    cdef double cloud_t = 1.0 / f_cloud, cloud_e = kappa_cloud * f_cloud * f_cloud
    lam_a = np.empty(n); p_a = np.empty(n); f_a = np.empty(n)
    cdef double[::1] lam = lam_a, p = p_a, f = f_a
    idx_a = np.zeros(n, dtype=np.int64)
    best_a = np.zeros(n, dtype=np.int64)
    cdef long long[::1] idx = idx_a, best_idx = best_a
    cdef double val, best = INFINITY, thresh
    cdef int sweep
    cdef bint done, found = False

    # pass 0 finds the minimum, pass 1 the first index vector within tolerance
    with nogil:
        for sweep in range(2):
            for u in range(n):
                idx[u] = 0
                lam[u] = cl[u, 0]; p[u] = cp[u, 0]; f[u] = cf[u, 0]
            thresh = best + TIE_RTOL * fabs(best)
            done = False
            while not done:
                val = _objective(n, lam, p, f, w_v, g_v, ptr_v, idx_v, ig_v, bits_v,
                                 work_v, at_v, ae_v, k_v, bandwidth, noise, cloud_t,
                                 cloud_e)
                if sweep == 0:
                    if val < best:
                        best = val
                elif val <= thresh:
                    for u in range(n):
                        best_idx[u] = idx[u]
                    found = True
                    break
                # mixed-radix increment, last user fastest
                d = n - 1
                while True:
                    idx[d] += 1
                    if idx[d] < cnt[d]:
                        lam[d] = cl[d, idx[d]]; p[d] = cp[d, idx[d]]; f[d] = cf[d, idx[d]]
                        break
                    idx[d] = 0
                    lam[d] = cl[d, 0]; p[d] = cp[d, 0]; f[d] = cf[d, 0]
                    if d == 0:
                        done = True
                        break
                    d -= 1
    if not found:
        raise RuntimeError("empty candidate space")
    return best_a, float(best)
