"""Pure-Python/numpy backend. Same signatures as ``_ckernels``."""
import math

import numpy as np

LN2 = math.log(2.0)
# relative width below which two objective values count as tied
TIE_RTOL = 1e-12
_CHUNK = 1 << 16


def overheads(users, lam, p, f, own_gain, in_ptr, in_idx, in_gain, bits, work,
              alpha_t, alpha_e, kappa, bandwidth, noise, f_cloud, kappa_cloud):
    """Total overhead of each user in ``users`` under profile (lam, p, f)."""
    out = np.empty(len(users))
    cloud_t = 1.0 / f_cloud
    cloud_e = kappa_cloud * f_cloud * f_cloud
    for k, n in enumerate(users):
        lam_n = lam[n]
        w = work[n]
        val = 0.0
        if lam_n > 0.0:
            interf = 0.0
            for j in range(in_ptr[n], in_ptr[n + 1]):
                i = in_idx[j]
                if lam[i] > 0.0:
                    interf += p[i] * in_gain[j]
            rate = bandwidth * math.log2(1.0 + p[n] * own_gain[n] / (noise + interf))
            tx_time = lam_n * bits[n] / rate
            val += alpha_t[n] * (tx_time + lam_n * w * cloud_t)
            val += alpha_e[n] * (p[n] * tx_time + lam_n * w * cloud_e)
        if lam_n < 1.0:
            loc = (1.0 - lam_n) * w
            fn = f[n]
            val += alpha_t[n] * (loc / fn if fn > 0.0 else math.inf)
            val += alpha_e[n] * kappa[n] * loc * fn * fn
        out[k] = val
    return out


def transmission_terms(p, a, at, ae, gain, gamma_p, b, c, g, d0):
    """Value, first and second derivative in p of the power-dependent overhead.

    Own term ``a (at + ae p) / ln(1 + p gain / gamma_p)`` plus, per harmed
    neighbour, ``b / ln(1 + c / (d0 + g p))``.
    """
    q = gamma_p + p * gain
    h = math.log1p(p * gain / gamma_p)
    h1 = gain / q
    h2 = -h1 * h1
    u = at + ae * p
    val = a * u / h
    d1 = a * (ae * h - u * h1) / (h * h)
    d2 = a * (-u * h2 * h - 2.0 * h1 * (ae * h - u * h1)) / (h * h * h)
    for k in range(len(b)):
        dk = d0[k] + g[k] * p
        ck = c[k]
        hk = math.log1p(ck / dk)
        den = dk * (dk + ck)
        hk1 = -ck * g[k] / den
        hk2 = ck * g[k] * g[k] * (2.0 * dk + ck) / (den * den)
        val += b[k] / hk
        d1 += -b[k] * hk1 / (hk * hk)
        d2 += -b[k] * (hk2 * hk - 2.0 * hk1 * hk1) / (hk * hk * hk)
    return val, d1, d2


def _safe_newton(lo, hi, dlo, args, max_iter, tol):
    """Root of the derivative inside a sign-change bracket (Newton + bisection)."""
    if dlo > 0.0:
        neg_at_lo = False
    else:
        neg_at_lo = True
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        _, d1, d2 = transmission_terms(x, *args)
        if abs(d1) <= tol:
            return x, True
        if (d1 < 0.0) == neg_at_lo:
            lo = x
        else:
            hi = x
        if hi - lo <= 4.0 * np.finfo(float).eps * max(abs(x), 1e-300):
            return x, True
        step_ok = d2 != 0.0
        if step_ok:
            xn = x - d1 / d2
            step_ok = lo < xn < hi
        x = xn if step_ok else 0.5 * (lo + hi)
    return x, False


def power_search(a, at, ae, gain, gamma_p, b, c, g, d0, p_min, p_max,
                 max_iter, tol, multistart, grid):
    """Minimise the transmission overhead over [p_min, p_max].

    Candidates are both box ends plus every stationary point found by
    bracketing derivative sign changes on a grid and by multistart Newton.
    Returns ``(p_best, value_best, stationary_points)``.
    """
    args = (a, at, ae, gain, gamma_p, b, c, g, d0)
    roots = []
    if p_max > p_min:
        xs = np.linspace(p_min, p_max, grid)
        ds = [transmission_terms(x, *args)[1] for x in xs]
        for j in range(grid - 1):
            if ds[j] == 0.0:
                roots.append(float(xs[j]))
            elif ds[j] * ds[j + 1] < 0.0:
                r, ok = _safe_newton(xs[j], xs[j + 1], ds[j], args, max_iter, tol)
                if ok:
                    roots.append(r)
        for x in np.linspace(p_min, p_max, multistart):
            x = float(x)
            for _ in range(max_iter):
                _, d1, d2 = transmission_terms(x, *args)
                if abs(d1) <= tol:
                    roots.append(x)
                    break
                if d2 == 0.0 or not math.isfinite(d2):
                    break
                x = x - d1 / d2
                if not p_min <= x <= p_max:
                    break
    best_p = p_min
    best_v = transmission_terms(p_min, *args)[0]
    for x in [p_max] + roots:
        v = transmission_terms(x, *args)[0]
        if v < best_v - TIE_RTOL * abs(best_v) or (
                abs(v - best_v) <= TIE_RTOL * abs(best_v) and x < best_p):
            best_p, best_v = x, v
    return best_p, best_v, np.array(roots, dtype=float)


def _chunk_values(start, stop, counts, cand_lam, cand_p, cand_f, weights, dense,
                  own_gain, bits, work, alpha_t, alpha_e, kappa, bandwidth, noise,
                  f_cloud, kappa_cloud):
    flat = np.arange(start, stop)
    idx = np.array(np.unravel_index(flat, counts)).T       # (M, N), first user slowest
    cols = np.arange(len(counts))
    lam = cand_lam[cols, idx]
    p = cand_p[cols, idx]
    f = cand_f[cols, idx]
    tx = np.where(lam > 0.0, p, 0.0)
    interf = tx @ dense.T
    off = lam > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = bandwidth * np.log2(1.0 + p * own_gain / (noise + interf))
        tx_time = np.where(off, lam * bits / rate, 0.0)
        loc = (1.0 - lam) * work
        local_t = np.where(lam < 1.0, loc / f, 0.0)
        local_e = np.where(lam < 1.0, kappa * loc * f * f, 0.0)
    cloud_t = lam * work / f_cloud
    cloud_e = lam * work * kappa_cloud * f_cloud ** 2
    o = (alpha_t * (tx_time + cloud_t + local_t)
         + alpha_e * (p * tx_time + cloud_e + local_e))
    return o @ weights, idx


def enumerate_argmin(cand_lam, cand_p, cand_f, counts, weights, own_gain, in_ptr,
                     in_idx, in_gain, bits, work, alpha_t, alpha_e, kappa,
                     bandwidth, noise, f_cloud, kappa_cloud):
    """Exhaustive argmin of sum_n weights[n] * O_n over the candidate product.

    Candidate tables are (N, Cmax), padded; ``counts[n]`` says how many are
    live. Returns the lexicographically first index vector whose objective is
    within ``TIE_RTOL`` of the global minimum, and that minimum.
    """
    counts = tuple(int(x) for x in counts)
    n = len(counts)
    dense = np.zeros((n, n))
    for u in range(n):
        for j in range(in_ptr[u], in_ptr[u + 1]):
            dense[u, in_idx[j]] = in_gain[j]
    total = int(np.prod(counts))
    rest = (own_gain, bits, work, alpha_t, alpha_e, kappa, bandwidth, noise,
            f_cloud, kappa_cloud)
    mins = []
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        vals, _ = _chunk_values(start, stop, counts, cand_lam, cand_p, cand_f,
                                weights, dense, *rest)
        mins.append(vals.min())
    best = min(mins)
    thresh = best + TIE_RTOL * abs(best)
    for k, m in enumerate(mins):
        if m <= thresh:
            start = k * _CHUNK
            stop = min(start + _CHUNK, total)
            vals, idx = _chunk_values(start, stop, counts, cand_lam, cand_p, cand_f,
                                      weights, dense, *rest)
            j = int(np.flatnonzero(vals <= thresh)[0])
            return idx[j].astype(np.int64), float(best)
    raise RuntimeError("empty candidate space")
