"""Discrete memoryless channel: AWGN followed by a uniform quantizer.

The channel acts independently per real dimension.  A per-dimension
uniform quantizer covers [-c, c] with c = (largest level magnitude +
4 sigma); with ``bits`` output bits there are 2**bits bins, the two
outermost unbounded.  Transition rows are Gaussian-CDF differences and
are also kept in the log domain, evaluated through ``log_ndtr`` so that
rows stay meaningful far into the tails (relevant for near-noiseless
operating points).

Bin representatives are the centroids of each bin under the model's own
output density; a receiver that assumes a different noise variance keeps
the true channel's quantizer grid and representatives and only swaps the
transition rows.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, logsumexp, ndtr

from .errors import ConfigurationError


def _log1mexp(x):
    """log(1 - exp(x)) for x <= 0, stable near both ends."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < -np.log(2)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[small] = np.log1p(-np.exp(x[small]))
        out[~small] = np.log(-np.expm1(x[~small]))
    return out


def _log_bin_probs(levels, edges, sigma):
    """Log probability of each quantizer bin for Gaussian noise per level.

    ``edges`` are the finite interior edges; the first and last bins are
    unbounded.  Returns shape (len(levels), len(edges) + 1).
    """
    z = (edges[None, :] - levels[:, None]) / sigma
    lcdf = log_ndtr(z)
    lsf = log_ndtr(-z)
    a, b = z[:, :-1], z[:, 1:]
    la, lb = lcdf[:, :-1], lcdf[:, 1:]
    sa, sb = lsf[:, :-1], lsf[:, 1:]
    with np.errstate(invalid="ignore", divide="ignore"):
        left = lb + _log1mexp(la - lb)       # both edges in the lower tail
        right = sa + _log1mexp(sb - sa)      # both edges in the upper tail
        mid = np.log(ndtr(b) - ndtr(a))      # straddling zero, no cancellation
    interior = np.where(b <= 0, left, np.where(a >= 0, right, mid))
    interior = np.nan_to_num(interior, nan=-np.inf, posinf=-np.inf)
    return np.concatenate(
        [lcdf[:, :1], interior, lsf[:, -1:]], axis=1
    )


@dataclass(frozen=True)
class DmcModel:
    """Per-dimension quantized-Gaussian channel law for one constellation.

    Attributes
    ----------
    snr_db : float
        SNR defining the noise variance (signal power is one).
    sigma_dim : float
        Noise standard deviation per real dimension.
    bits : int
        Quantizer resolution; the output alphabet has 2**bits bins.
    edges : ndarray, shape (2**bits - 1,)
        Finite interior bin edges, shared by both dimensions.
    levels : ndarray, shape (L,)
        Per-dimension input levels (the constellation's level grid).
    level_prior : ndarray, shape (L,)
        Marginal prior of the levels in one dimension.
    trans : ndarray, shape (L, 2**bits)
        Transition rows P(bin | level).
    log_trans : ndarray, shape (L, 2**bits)
        The same rows in the log domain, each normalized.
    representatives : ndarray, shape (2**bits,)
        Centroid of each bin under this model's output density.
    """

    snr_db: float
    sigma_dim: float
    bits: int
    edges: np.ndarray
    levels: np.ndarray
    level_prior: np.ndarray
    trans: np.ndarray
    log_trans: np.ndarray
    representatives: np.ndarray
    _cdf: np.ndarray

    def __post_init__(self):
        for arr in (self.edges, self.levels, self.level_prior, self.trans,
                    self.log_trans, self.representatives, self._cdf):
            arr.setflags(write=False)

    @property
    def n_bins(self):
        return self.trans.shape[1]


def _default_edges(levels, sigma, n_bins):
    """Symmetric uniform edge grid with zero as an interior edge.

    The level grids here are odd multiples of a base scale, so an odd
    number of bins per level spacing puts every level at a bin center;
    otherwise a level sitting close to an edge would keep a constant
    share of its mass in the neighboring bin no matter how small the
    noise gets.  The span still covers the outermost level plus four
    noise deviations; when that squeezes the odd bin count below one
    (very low SNR), a plain linspace over the span is used instead.
    """
    half_edges = (n_bins - 2) // 2
    scale = float(np.min(np.abs(levels)))
    span = float(np.max(np.abs(levels))) + 4.0 * sigma
    ratios = np.abs(levels) / scale
    odd_grid = np.allclose(ratios % 2.0, 1.0, rtol=0, atol=1e-9)
    k = int(2.0 * half_edges * scale / span)
    if k % 2 == 0:
        k -= 1
    if odd_grid and k >= 1:
        width = 2.0 * scale / k
        return width * (np.arange(n_bins - 1) - half_edges)
    return np.linspace(-span, span, n_bins - 1)


def build_dmc(spec, snr_db, bits=7, edges=None):
    """Quantized-Gaussian channel model for a constellation at one SNR.

    Parameters
    ----------
    spec : ConstellationSpec
        Supplies the level grid and the marginal level prior.
    snr_db : float
        Es/N0 in dB; the constellation has unit symbol energy.
    bits : int
        Quantizer output bits per dimension (default 7).
    edges : ndarray, optional
        Reuse an existing interior edge grid instead of deriving one from
        this model's own noise level.  Used for mismatched receivers that
        keep the true channel's quantizer.

    Returns
    -------
    DmcModel
    """
    if bits < 2:
        raise ConfigurationError("quantizer needs at least 2 bits")
    noise_var = 10.0 ** (-snr_db / 10.0)
    sigma = np.sqrt(noise_var / 2.0)
    levels = np.asarray(spec.dim_levels, dtype=float)
    n_levels = len(levels)
    n_bins = 2**bits
    if edges is None:
        edges = _default_edges(levels, sigma, n_bins)
    else:
        edges = np.asarray(edges, dtype=float)
        if edges.shape != (n_bins - 1,):
            raise ConfigurationError("edge grid does not match the bin count")
    level_prior = np.zeros(n_levels)
    np.add.at(level_prior, spec.point_dim_index[:, 0], spec.prior)
    # symmetric constellations: both dimensions share level set and prior
    check = np.zeros(n_levels)
    np.add.at(check, spec.point_dim_index[:, 1], spec.prior)
    if not np.allclose(level_prior, check, rtol=0, atol=1e-12):
        raise ConfigurationError("level priors differ between dimensions")

    z = (edges[None, :] - levels[:, None]) / sigma
    cdf_at_edges = ndtr(z)
    trans = np.diff(
        np.concatenate(
            [np.zeros((n_levels, 1)), cdf_at_edges, np.ones((n_levels, 1))],
            axis=1,
        ),
        axis=1,
    )
    trans = np.maximum(trans, 0.0)
    trans /= trans.sum(axis=1, keepdims=True)

    log_trans = _log_bin_probs(levels, edges, sigma)
    log_trans = log_trans - logsumexp(log_trans, axis=1, keepdims=True)

    rep = _bin_centroids(levels, level_prior, edges, sigma)

    cdf = np.cumsum(trans, axis=1)
    cdf[:, -1] = 1.0

    return DmcModel(
        snr_db=float(snr_db),
        sigma_dim=float(sigma),
        bits=int(bits),
        edges=edges,
        levels=levels,
        level_prior=level_prior,
        trans=trans,
        log_trans=log_trans,
        representatives=rep,
        _cdf=cdf,
    )


def _bin_centroids(levels, level_prior, edges, sigma):
    """E[Y | Y in bin] under the mixture output density."""
    n_levels = len(levels)
    z = (edges[None, :] - levels[:, None]) / sigma
    phi = np.exp(-0.5 * z**2) / np.sqrt(2 * np.pi)
    cdf = ndtr(z)
    # pad with the limits at +-infinity
    pad_lo = np.zeros((n_levels, 1))
    phi_p = np.concatenate([pad_lo, phi, pad_lo], axis=1)
    cdf_p = np.concatenate([pad_lo, cdf, np.ones((n_levels, 1))], axis=1)
    mass = np.diff(cdf_p, axis=1)
    # int_a^b y N(y; x, sigma^2) dy = x*(Phi(b')-Phi(a')) + sigma*(phi(a')-phi(b'))
    mean_term = levels[:, None] * mass + sigma * (phi_p[:, :-1] - phi_p[:, 1:])
    num = level_prior @ mean_term
    den = level_prior @ mass
    centers = np.concatenate(
        [[edges[0] - sigma], 0.5 * (edges[:-1] + edges[1:]), [edges[-1] + sigma]]
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        rep = np.where(den > 1e-300, num / np.maximum(den, 1e-300), centers)
    return rep


def sample(model, spec, point_indices, rng):
    """Draw quantizer outputs for a block of transmitted points.

    Returns an (N, 2) int16 array of bin indices (I then Q).  A single
    uniform draw of shape (N, 2) is consumed, so the mapping from the
    generator state to the output does not depend on how callers batch
    their frames.
    """
    point_indices = np.asarray(point_indices)
    n = len(point_indices)
    u = rng.random((n, 2))
    bins = np.empty((n, 2), dtype=np.int16)
    for dim in range(2):
        lvl_idx = spec.point_dim_index[point_indices, dim]
        for lvl in range(len(model.levels)):
            mask = lvl_idx == lvl
            if np.any(mask):
                bins[mask, dim] = np.searchsorted(
                    model._cdf[lvl], u[mask, dim], side="right"
                )
    return bins
