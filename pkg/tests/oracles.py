"""Independent high-precision reference formulas used by the tests."""
import mpmath as mp

mp.mp.dps = 50


def eps_closed_form(total, D_total, delta):
    r = mp.mpf(total) / (2 * mp.mpf(D_total) ** 2)
    return 2 * mp.sqrt(r * mp.log(1 / mp.mpf(delta))) + r


def a_root(eps, delta):
    L = mp.log(1 / mp.mpf(delta))
    return -L + mp.sqrt(L * L + mp.mpf(eps) * L)


def alpha_cj(eps, delta, M, D_total, alpha_u, h_cj, sigma_c):
    L = mp.log(1 / mp.mpf(delta))
    a = a_root(eps, delta)
    need = mp.mpf(M) * L / (2 * mp.mpf(D_total) ** 2 * a * a)
    rad = need - mp.mpf(sigma_c) ** 2 / mp.mpf(alpha_u) ** 2
    return mp.mpf(0) if rad <= 0 else mp.mpf(alpha_u) / mp.mpf(h_cj) * mp.sqrt(rad)


def rel(a, b):
    a, b = mp.mpf(a), mp.mpf(b)
    return float(abs(a - b) / abs(b)) if b != 0 else float(abs(a))
