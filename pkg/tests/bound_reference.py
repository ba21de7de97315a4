"""Second, loop-based transcription of the convergence-bound constants."""
from fractions import Fraction


def constants(L, B, rho, q, G, kappa, mu, tau, d, sigma_c, alpha_u, lam, h_cj, a_cj, s, p):
    C1 = 1 / (2 * mu) - (L * B) / (mu * rho * rho)
    frac = mu / (mu + lam)
    C2 = frac * (1 + (2 * L * B * (L + rho)) / (mu * rho * rho)) * q * G
    C3 = frac * frac * L * (1 + ((L + rho) * (L + rho)) / (mu * rho * rho)) * q * q
    C4 = 0.0
    for pi, si, ki in zip(p, s, kappa):
        ts = tau * si
        num = 2 * mu * (ts - 1) * (ts - 1) + (2 * L - mu) * mu
        C4 += pi * num / (2 * mu * mu * ts * ts) * (ki + G) * (ki + G)
    C5 = L * d / 2 * (h_cj * a_cj / alpha_u) * (h_cj * a_cj / alpha_u)
    C6 = L * sigma_c * sigma_c * d / (2 * alpha_u * alpha_u)
    return C1, C2, C3, C4, C5, C6


def rhs(C1, C6, f0, M, terms):
    acc = 0.0
    for t in terms:
        for v in t:
            acc += v
    return f0 / (M * C1) + C6 / C1 + acc / (M * C1)


def c1_exact(mu, L, B, rho):
    mu, L, B, rho = (Fraction(v).limit_denominator(10 ** 12) for v in (mu, L, B, rho))
    return Fraction(1) / (2 * mu) - L * B / (mu * rho * rho)
