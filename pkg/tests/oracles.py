"""Independent reference computations used by the tests.

Everything here is deliberately built from first principles on top of
numpy/scipy only, so the package under test never verifies itself
against its own code paths.
"""

import math

import numpy as np
from scipy import integrate, special


def gauss_hermite_mi_per_dim(levels, prior, sigma, n_nodes=127):
    """Unquantized I(X; Y) in bits for a PAM set over real AWGN.

    Gauss-Hermite quadrature on y = x + sigma*sqrt(2)*t per input level.
    """
    levels = np.asarray(levels, dtype=float)
    prior = np.asarray(prior, dtype=float)
    nodes, weights = np.polynomial.hermite.hermgauss(n_nodes)
    total = 0.0
    for x, p in zip(levels, prior):
        if p == 0.0:
            continue
        y = x + sigma * math.sqrt(2.0) * nodes
        # log p(y|x') for every level at the quadrature points
        d = y[None, :] - levels[:, None]
        log_lik = -(d * d) / (2.0 * sigma**2)
        num = log_lik[np.searchsorted(levels, x)]
        den = special.logsumexp(log_lik + np.log(prior)[:, None], axis=0)
        total += p * np.sum(weights * (num - den)) / math.sqrt(math.pi)
    return total / math.log(2.0)


def gauss_hermite_mi_symbol(spec, snr_db, n_nodes=127):
    """Unquantized symbol MI of a product constellation, bits/symbol."""
    noise_var = 10.0 ** (-snr_db / 10.0)
    sigma = math.sqrt(noise_var / 2.0)
    levels = np.asarray(spec.dim_levels, dtype=float)
    prior = np.zeros(len(levels))
    np.add.at(prior, spec.point_dim_index[:, 0], spec.prior)
    return 2.0 * gauss_hermite_mi_per_dim(levels, prior, sigma, n_nodes)


def j_quadrature(sigma):
    """J-function by direct numerical integration of its definition."""
    if sigma == 0.0:
        return 0.0

    def integrand(x):
        pdf = math.exp(-((x - sigma**2 / 2.0) ** 2) / (2.0 * sigma**2))
        pdf /= math.sqrt(2.0 * math.pi) * sigma
        return pdf * math.log2(1.0 + math.exp(-x))

    lo = sigma**2 / 2.0 - 12.0 * sigma
    hi = sigma**2 / 2.0 + 12.0 * sigma
    loss, _ = integrate.quad(integrand, lo, hi, limit=400)
    return 1.0 - loss


def bitwise_mi_dmc(spec, model):
    """Sum over bit positions of I(B_k; Y) for the quantized channel.

    Computed from the joint law P(b, y_i, y_q) assembled directly from
    the transition matrix, without any demapper involvement.
    """
    t = model.trans
    li = spec.point_dim_index[:, 0]
    lq = spec.point_dim_index[:, 1]
    total = 0.0
    for k in range(spec.bits_per_symbol):
        joint = {}
        for b in (0, 1):
            mask = spec.labels[:, k] == b
            joint[b] = np.einsum(
                "x,xb,xc->bc", spec.prior[mask], t[li[mask]], t[lq[mask]]
            )
        p_y = joint[0] + joint[1]
        for b in (0, 1):
            pb = float(spec.prior[spec.labels[:, k] == b].sum())
            j = joint[b]
            mask = j > 0
            total += float(
                np.sum(j[mask] * np.log2(j[mask] / (pb * p_y[mask])))
            )
    return total


def multinomial_exact(counts):
    """Multinomial coefficient via factorials (arbitrary precision)."""
    total = math.factorial(sum(counts))
    for c in counts:
        total //= math.factorial(c)
    return total
