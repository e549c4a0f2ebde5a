"""Numerical kernels: stable density/CDF inversion and max-autoregression.

The standardized totally general stable law is evaluated in the continuous
(location-shifted) parameterization, where the characteristic function is

    E exp(iuZ) = exp{-|u|^a - i*beta*sign(u)*psi_a(|u|)},
    psi_a(u) = tan(pi*a/2) * (u - u^a)   for a != 1,
    psi_1(u) = (2/pi) * u * log(u),

which is jointly continuous in (a, beta, u).  Density and CDF follow from
Fourier inversion,

    f(z) = (1/pi) int_0^inf exp(-u^a) cos(z*u + beta*psi_a(u)) du,
    F(z) = 1/2 + (1/pi) int_0^inf exp(-u^a) sin(z*u + beta*psi_a(u)) / u du,

integrated with composite 16-point Gauss-Legendre panels: a geometric ladder
toward u = 0 resolves the u^a cusp, and each rung is split so the phase
advances at most ~6*pi*(1/refine) per subpanel.  For a < 1 the substitution
w = u^a removes the cusp, so the ladder works in w.  Far right tails
(|z| beyond the oscillatory budget, a away from 1) use the asymptotic
power series instead.

Two interchangeable batch implementations exist: a numba-jitted scalar loop
and a vectorized numpy fallback sharing one panel set across all points.
Set STABLESUMS_NO_NUMBA=1 before import to select the fallback.
"""

import math
import os

import numpy as np

NUMBA_ENV_FLAG = "STABLESUMS_NO_NUMBA"

USE_NUMBA = os.environ.get(NUMBA_ENV_FLAG, "") not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if not USE_NUMBA:
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


# 16-point Gauss-Legendre nodes/weights mapped to [0, 1]
_x, _w = np.polynomial.legendre.leggauss(16)
GL_X = 0.5 * (_x + 1.0)
GL_W = 0.5 * _w
del _x, _w

# truncation: exp(-u^a) < 1.2e-16 past u^a = 36.7
_UMAX_POW = 36.7
# geometric ladder: ratio-4 panels down to UMAX * 4^-23 ~ 5e-14 * UMAX
_N_GEO = 23
# target phase advance per subpanel, ~3 oscillation periods
_PHASE_PER_PANEL = 6.0 * math.pi
_MAX_SUB = 400000


@njit(cache=True)
def _skew_slope(a):
    # tan(pi*a/2) computed stably near a = 1 (and exactly 0 at a = 2);
    # unused at a = 1, where the skew phase has its own logarithmic form
    if a == 2.0 or a == 1.0:
        return 0.0
    return -1.0 / math.tan(0.5 * math.pi * (a - 1.0))


@njit(cache=True)
def _tail_series(x, a, beta, t):
    """Right-tail series for the density and survival of the standardized
    stable law in the classical (S1) parameterization, at x > 0.

    Returns (pdf, survival).  Valid when x is large and a is away from 1;
    the alternating asymptotic series is truncated at the smallest term.
    """
    r = math.hypot(1.0, beta * t)
    log_r = math.log(r)
    theta = math.atan(beta * t) + 0.5 * math.pi * a
    log_x = math.log(x)
    f = 0.0
    sf = 0.0
    prev = 1.0e308
    for k in range(1, 61):
        log_mag = (k * log_r + math.lgamma(a * k + 1.0)
                   - math.lgamma(k + 1.0) - (a * k + 1.0) * log_x)
        mag = math.exp(log_mag)
        if mag > prev:
            break
        s = math.sin(k * theta)
        sign = 1.0 if k % 2 == 1 else -1.0
        f += sign * mag * s
        sf += sign * mag * x / (a * k) * s
        if mag < 1.0e-17 * (abs(f) + 1.0e-300):
            break
        prev = mag
    f /= math.pi
    sf /= math.pi
    if f < 0.0:
        f = 0.0
    if sf < 0.0:
        sf = 0.0
    return f, sf


@njit(cache=True)
def _phase_deriv(x, z, a, beta, t):
    # d(phase)/dx on the integration variable: u for a >= 1, w = u^a for a < 1
    if a > 1.0:
        return z + beta * t * (1.0 - a * math.exp((a - 1.0) * math.log(x)))
    if a == 1.0:
        return z + beta * (2.0 / math.pi) * (math.log(x) + 1.0)
    inv_a = 1.0 / a
    return (z + beta * t) * inv_a * math.exp((inv_a - 1.0) * math.log(x)) - beta * t


@njit(cache=True)
def _shared_nodes_nb(a, beta, t, z_absmax, refine, gl_x, gl_w):
    """Quadrature node positions and weights shared by a whole batch,
    subdivided for the worst-case |z|; mirrors _build_panels."""
    if a >= 1.0:
        top = math.exp(math.log(_UMAX_POW) / a)
    else:
        top = _UMAX_POW

    counts = np.empty(_N_GEO + 1, np.int64)
    prev = 0.0
    total = 0
    for j in range(_N_GEO + 1):
        cur = top * 4.0 ** (j - _N_GEO)
        lo_eff = prev if prev > 0.0 else 1.0e-300
        dmax = abs(_phase_deriv(lo_eff, z_absmax, a, beta, t))
        for d in (abs(_phase_deriv(lo_eff, -z_absmax, a, beta, t)),
                  abs(_phase_deriv(cur, z_absmax, a, beta, t)),
                  abs(_phase_deriv(cur, -z_absmax, a, beta, t))):
            if d > dmax:
                dmax = d
        n_sub = refine + int(refine * (cur - prev) * dmax / _PHASE_PER_PANEL)
        if n_sub > _MAX_SUB:
            n_sub = _MAX_SUB
        counts[j] = n_sub
        total += n_sub * 16
        prev = cur

    x = np.empty(total)
    wgt = np.empty(total)
    prev = 0.0
    pos = 0
    for j in range(_N_GEO + 1):
        cur = top * 4.0 ** (j - _N_GEO)
        h = (cur - prev) / counts[j]
        for s in range(counts[j]):
            base = prev + s * h
            for q in range(16):
                x[pos] = base + h * gl_x[q]
                wgt[pos] = h * gl_w[q]
                pos += 1
        prev = cur
    return x, wgt


@njit(cache=True)
def _pdf_cdf_batch_nb(z, a, beta, refine, gl_x, gl_w):
    n = z.shape[0]
    f = np.empty(n)
    F = np.empty(n)
    if a >= 2.0:
        for i in range(n):
            f[i] = math.exp(-0.25 * z[i] * z[i]) / (2.0 * math.sqrt(math.pi))
            F[i] = 0.5 * (1.0 + math.erf(0.5 * z[i]))
        return f, F

    t = _skew_slope(a)
    # the tail expansion needs |z_cl| well past the classical shift scale
    # r = hypot(1, beta t); it has log terms at a = 1 exactly (beta != 0)
    use_series = a != 1.0 or beta == 0.0
    thresh = max(35.0, 2.5 * math.hypot(1.0, beta * t))

    # resolve one-sided supports and far tails pointwise; queue the rest
    todo = np.empty(n, np.int64)
    m = 0
    z_absmax = 0.0
    for i in range(n):
        z_cl = z[i] + beta * t  # argument in the classical parameterization
        if a < 1.0 and beta == 1.0 and z_cl <= 0.0:
            f[i] = 0.0
            F[i] = 0.0
            continue
        if a < 1.0 and beta == -1.0 and z_cl >= 0.0:
            f[i] = 0.0
            F[i] = 1.0
            continue
        if use_series and z_cl > thresh:
            fi, sfi = _tail_series(z_cl, a, beta, t)
            f[i] = fi
            F[i] = 1.0 - sfi
            continue
        if use_series and z_cl < -thresh:
            fi, sfi = _tail_series(-z_cl, a, -beta, t)
            f[i] = fi
            F[i] = sfi
            continue
        todo[m] = i
        m += 1
        az = abs(z[i])
        if az > z_absmax:
            z_absmax = az
    if m == 0:
        return f, F

    x, wgt = _shared_nodes_nb(a, beta, t, z_absmax, refine, gl_x, gl_w)
    nn = x.shape[0]
    slope = np.empty(nn)
    base_phase = np.empty(nn)
    w_pdf = np.empty(nn)
    w_cdf = np.empty(nn)
    inv_a = 1.0 / a
    for q in range(nn):
        xq = x[q]
        if a > 1.0:
            amp = math.exp(-math.exp(a * math.log(xq)))
            slope[q] = xq
            base_phase[q] = -beta * t * xq * math.expm1((a - 1.0) * math.log(xq))
            w_pdf[q] = wgt[q] * amp
        elif a == 1.0:
            amp = math.exp(-xq)
            slope[q] = xq
            base_phase[q] = beta * (2.0 / math.pi) * xq * math.log(xq)
            w_pdf[q] = wgt[q] * amp
        else:
            # xq is w = u^a; the phase slope against z is u
            u = math.exp(inv_a * math.log(xq))
            amp = math.exp(-xq) * inv_a
            slope[q] = u
            base_phase[q] = beta * t * (u - xq)
            w_pdf[q] = wgt[q] * amp * (u / xq)
        w_cdf[q] = wgt[q] * amp / xq

    for ii in range(m):
        i = todo[ii]
        zi = z[i]
        fs = 0.0
        Fs = 0.0
        for q in range(nn):
            ph = zi * slope[q] + base_phase[q]
            fs += math.cos(ph) * w_pdf[q]
            Fs += math.sin(ph) * w_cdf[q]
        fi = fs / math.pi
        Fi = 0.5 + Fs / math.pi
        if fi < 0.0:
            fi = 0.0
        if Fi < 0.0:
            Fi = 0.0
        elif Fi > 1.0:
            Fi = 1.0
        f[i] = fi
        F[i] = Fi
    return f, F


def _build_panels(a, beta, t, z_absmax, refine):
    """Shared quadrature nodes for the numpy batch path.

    Returns (x, wgt): node positions in the integration variable and their
    Gauss-Legendre weights, subdivided for the worst-case |z| in the batch.
    """
    if a >= 1.0:
        top = _UMAX_POW ** (1.0 / a)
    else:
        top = _UMAX_POW
    edges = top * 4.0 ** (np.arange(-_N_GEO, 1.0))
    prev = 0.0
    xs = []
    ws = []
    for cur in edges:
        lo_eff = max(prev, 1.0e-300)
        dmax = max(abs(_phase_deriv(lo_eff, z_absmax, a, beta, t)),
                   abs(_phase_deriv(lo_eff, -z_absmax, a, beta, t)),
                   abs(_phase_deriv(cur, z_absmax, a, beta, t)),
                   abs(_phase_deriv(cur, -z_absmax, a, beta, t)))
        n_sub = refine + int(refine * (cur - prev) * dmax / _PHASE_PER_PANEL)
        n_sub = min(n_sub, _MAX_SUB)
        h = (cur - prev) / n_sub
        base = prev + h * np.arange(n_sub)
        xs.append((base[:, None] + h * GL_X[None, :]).ravel())
        ws.append(np.full(n_sub * 16, h)[:, None].ravel() * np.tile(GL_W, n_sub))
        prev = cur
    return np.concatenate(xs), np.concatenate(ws)


def _pdf_cdf_batch_np(z, a, beta, refine, gl_x=None, gl_w=None):
    """Vectorized numpy fallback; mirrors _pdf_cdf_batch_nb."""
    z = np.asarray(z, dtype=float)
    f = np.empty_like(z)
    F = np.empty_like(z)
    if a >= 2.0:
        f[:] = np.exp(-0.25 * z * z) / (2.0 * math.sqrt(math.pi))
        from scipy.special import erf
        F[:] = 0.5 * (1.0 + erf(0.5 * z))
        return f, F

    t = _skew_slope(a)
    z_cl = z + beta * t

    done = np.zeros(z.shape, dtype=bool)
    if a < 1.0:
        if beta == 1.0:
            m = z_cl <= 0.0
            f[m] = 0.0
            F[m] = 0.0
            done |= m
        elif beta == -1.0:
            m = z_cl >= 0.0
            f[m] = 0.0
            F[m] = 1.0
            done |= m
    if a != 1.0 or beta == 0.0:
        # same expansion threshold as the compiled path
        thresh = max(35.0, 2.5 * math.hypot(1.0, beta * t))
        m = ~done & (z_cl > thresh)
        for i in np.nonzero(m)[0]:
            fi, sfi = _tail_series(z_cl[i], a, beta, t)
            f[i] = fi
            F[i] = 1.0 - sfi
        done |= m
        m = ~done & (z_cl < -thresh)
        for i in np.nonzero(m)[0]:
            fi, sfi = _tail_series(-z_cl[i], a, -beta, t)
            f[i] = fi
            F[i] = sfi
        done |= m

    idx = np.nonzero(~done)[0]
    if idx.size == 0:
        return f, F

    zi = z[idx]
    x, wgt = _build_panels(a, beta, t, float(np.max(np.abs(zi))), refine)
    if a > 1.0:
        amp = np.exp(-x ** a)
        base_phase = -beta * t * x * np.expm1((a - 1.0) * np.log(x))
        slope = x
        w_pdf = wgt * amp
    elif a == 1.0:
        amp = np.exp(-x)
        base_phase = beta * (2.0 / math.pi) * x * np.log(x)
        slope = x
        w_pdf = wgt * amp
    else:
        # x is w = u^a; the phase slope against z is u
        u = x ** (1.0 / a)
        amp = np.exp(-x) / a
        base_phase = beta * t * (u - x)
        slope = u
        w_pdf = wgt * amp * (u / x)
    w_cdf = wgt * amp / x

    chunk = max(1, int(4.0e6 / max(x.size, 1)))
    for s in range(0, zi.size, chunk):
        zc = zi[s:s + chunk]
        phase = zc[:, None] * slope[None, :] + base_phase[None, :]
        fs = np.cos(phase) @ w_pdf
        Fs = np.sin(phase) @ w_cdf
        f[idx[s:s + chunk]] = fs / math.pi
        F[idx[s:s + chunk]] = 0.5 + Fs / math.pi

    np.clip(f, 0.0, None, out=f)
    np.clip(F, 0.0, 1.0, out=F)
    return f, F


def stable_pdf_cdf(z, a, beta, refine=1):
    """Density and CDF of the standardized stable law (continuous
    parameterization) at the points ``z``.  Returns (pdf, cdf) arrays."""
    z = np.ascontiguousarray(z, dtype=float)
    if USE_NUMBA:
        return _pdf_cdf_batch_nb(z, float(a), float(beta), int(refine), GL_X, GL_W)
    return _pdf_cdf_batch_np(z, float(a), float(beta), int(refine))


@njit(cache=True)
def _armax_path_nb(x0, innov, lam, coef):
    n = innov.shape[0]
    out = np.empty(n)
    prev = x0
    for i in range(n):
        cand = coef * innov[i]
        prev = lam * prev if lam * prev > cand else cand
        out[i] = prev
    return out


def _armax_path_np(x0, innov, lam, coef):
    out = np.empty(innov.shape[0])
    prev = x0
    scaled = coef * innov
    for i in range(out.shape[0]):
        prev = max(lam * prev, scaled[i])
        out[i] = prev
    return out


def armax_path(x0, innov, lam, coef):
    """Max-autoregressive recursion x_t = max(lam * x_{t-1}, coef * z_t)."""
    innov = np.ascontiguousarray(innov, dtype=float)
    if USE_NUMBA:
        return _armax_path_nb(float(x0), innov, float(lam), float(coef))
    return _armax_path_np(float(x0), innov, float(lam), float(coef))
