"""Jacobi elliptic functions and elliptic integrals, modulus convention.

All functions take the modulus ``k`` (not the parameter ``m = k**2``).
Complete integrals use the arithmetic-geometric mean, the Jacobi functions the
descending Landen sequence, and incomplete integrals Carlson's symmetric
forms.
"""
from __future__ import annotations

import math

import numpy as np

LANDEN_TOL = 1e-15
HYPERBOLIC_SWITCH = 1e-10


def _check_k(k, allow_one=True):
    k = float(k)
    if not (0.0 <= k <= 1.0) or (k == 1.0 and not allow_one):
        raise ValueError(f"modulus must lie in [0, 1{']' if allow_one else ')'}, got {k}")
    return k


def _kprime(k: float) -> float:
    # (1 - k)(1 + k) keeps precision when k is close to 1
    return math.sqrt((1.0 - k) * (1.0 + k))


def agm_sequence(k: float):
    """Lists ``a_n, b_n, c_n`` of the AGM started at ``(1, k', k)``."""
    a, b, c = [1.0], [_kprime(k)], [k]
    while abs(c[-1]) > LANDEN_TOL * a[-1] and len(a) < 60:
        an, bn = a[-1], b[-1]
        a.append(0.5 * (an + bn))
        b.append(math.sqrt(an * bn))
        c.append(0.5 * (an - bn))
    return a, b, c


def ellip_K(k: float) -> float:
    """Complete elliptic integral of the first kind."""
    k = _check_k(k, allow_one=False)
    a, _, _ = agm_sequence(k)
    return math.pi / (2.0 * a[-1])


def ellip_E(k: float) -> float:
    """Complete elliptic integral of the second kind."""
    k = _check_k(k)
    if k == 1.0:
        return 1.0
    a, _, c = agm_sequence(k)
    s = sum(2.0 ** (n - 1) * cn * cn for n, cn in enumerate(c))
    return math.pi / (2.0 * a[-1]) * (1.0 - s)


def _hyperbolic(x, kp2):
    # first-order expansion in k'^2 around k = 1
    t, sh, ch = np.tanh(x), np.sinh(x), np.cosh(x)
    sech = 1.0 / ch
    corr = 0.25 * kp2 * (sh * ch - x) * sech**2
    sn = t + corr
    cn = sech - 0.25 * kp2 * (sh * ch - x) * t * sech
    dn = sech + 0.25 * kp2 * (sh * ch + x) * t * sech
    am = 2.0 * np.arctan(np.exp(x)) - 0.5 * np.pi + 0.25 * kp2 * (sh * ch - x) * sech
    return sn, cn, dn, am


def _landen(x, k):
    """Amplitude ``am(x; k)`` by the descending Landen recursion."""
    a, _, c = agm_sequence(k)
    n = len(a) - 1
    phi = (2.0**n) * a[-1] * x
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c[j] * np.sin(phi) / a[j]))
    return phi


def jacobi_sn_cn_dn(x, k):
    """Return ``(sn, cn, dn)`` at ``x`` (scalar or array) for modulus ``k``."""
    k = _check_k(k)
    x = np.asarray(x, dtype=float)
    if k == 0.0:
        return np.sin(x), np.cos(x), np.ones_like(x)
    if 1.0 - k < HYPERBOLIC_SWITCH:
        sn, cn, dn, _ = _hyperbolic(x, (1.0 - k) * (1.0 + k))
        return sn, cn, dn
    phi = _landen(x, k)
    sn, cn = np.sin(phi), np.cos(phi)
    # dn^2 = cn^2 + k'^2 sn^2 is a sum of squares, accurate near odd multiples of K
    kp = _kprime(k)
    return sn, cn, np.sqrt(cn * cn + (kp * sn) ** 2)


def dn(x, k):
    return jacobi_sn_cn_dn(x, k)[2]


def cn(x, k):
    return jacobi_sn_cn_dn(x, k)[1]


def sn(x, k):
    return jacobi_sn_cn_dn(x, k)[0]


def ellip_F_inverse(x, k):
    """Jacobi amplitude ``am(x; k)``, the inverse of ``F(., k)``."""
    k = _check_k(k)
    x = np.asarray(x, dtype=float)
    if k == 0.0:
        return x.copy()
    if 1.0 - k < HYPERBOLIC_SWITCH:
        return _hyperbolic(x, (1.0 - k) * (1.0 + k))[3]
    return _landen(x, k)


def carlson_rf(x, y, z):
    """Carlson's symmetric integral R_F by duplication."""
    for _ in range(100):
        lam = math.sqrt(x * y) + math.sqrt(y * z) + math.sqrt(z * x)
        x, y, z = 0.25 * (x + lam), 0.25 * (y + lam), 0.25 * (z + lam)
        mu = (x + y + z) / 3.0
        dx, dy, dz = 1 - x / mu, 1 - y / mu, 1 - z / mu
        if max(abs(dx), abs(dy), abs(dz)) < 1e-4:
            break
    e2 = dx * dy - dz * dz
    e3 = dx * dy * dz
    return (1 - e2 / 10 + e3 / 14 + e2 * e2 / 24 - 3 * e2 * e3 / 44) / math.sqrt(mu)


def carlson_rd(x, y, z):
    """Carlson's symmetric integral R_D by duplication."""
    s, fac = 0.0, 1.0
    for _ in range(100):
        lam = math.sqrt(x * y) + math.sqrt(y * z) + math.sqrt(z * x)
        s += fac / (math.sqrt(z) * (z + lam))
        fac *= 0.25
        x, y, z = 0.25 * (x + lam), 0.25 * (y + lam), 0.25 * (z + lam)
        mu = (x + y + 3 * z) / 5.0
        dx, dy, dz = 1 - x / mu, 1 - y / mu, 1 - z / mu
        if max(abs(dx), abs(dy), abs(dz)) < 1e-4:
            break
    ea, eb = dx * dy, dz * dz
    ec, ed = ea - eb, ea - 6 * eb
    ee = ed + ec + ec
    series = 1 + ed * (-3 / 14 + 9 / 88 * ed - 9 / 52 * dz * ee) + dz * (ee / 6 + dz * (-9 / 22 * ec + 3 / 26 * dz * ea))
    return 3 * s + fac * series / (mu * math.sqrt(mu))


def _reduce(phi):
    # phi = n*pi + r with |r| <= pi/2
    n = math.floor(phi / math.pi + 0.5)
    return n, phi - n * math.pi


def ellip_F(phi: float, k: float) -> float:
    """Incomplete elliptic integral of the first kind ``F(phi, k)``."""
    k = _check_k(k)
    n, r = _reduce(float(phi))
    if n and k == 1.0:
        raise ValueError("F(phi, 1) diverges for |phi| >= pi/2")
    s, c = math.sin(r), math.cos(r)
    val = s * carlson_rf(c * c, 1 - (k * s) ** 2, 1.0)
    return val + (2 * n * ellip_K(k) if n else 0.0)


def ellip_E_incomplete(phi: float, k: float) -> float:
    """Incomplete elliptic integral of the second kind ``E(phi, k)``."""
    k = _check_k(k)
    n, r = _reduce(float(phi))
    s, c = math.sin(r), math.cos(r)
    y = 1 - (k * s) ** 2
    val = s * carlson_rf(c * c, y, 1.0) - (k * k / 3) * s**3 * carlson_rd(c * c, y, 1.0)
    return val + (2 * n * ellip_E(k) if n else 0.0)
