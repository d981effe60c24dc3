"""Bitwise soft demapping under an auxiliary channel assumption.

The receiver sees quantizer bin indices and computes a-posteriori
L-values L_k = ln P(b_k=0|y) - ln P(b_k=1|y) under an auxiliary channel
law built at SNR_aux on the true channel's quantizer grid.

Two modes:

``exact_map``
    Sums P(x) q(y|x) over the label sets using the auxiliary DMC rows.
``max_log``
    Replaces the sums by maxima and evaluates the auxiliary law as a
    continuous Gaussian at each bin's grid position (the bin index
    mapped onto the uniform quantizer axis, overload bins extrapolated
    by half a step).  The Gaussian normalization cancels between the
    numerator and denominator, so with uniform priors the L-values scale
    exactly as 1/sigma_aux^2: a +3 dB change of SNR_aux multiplies every
    L-value by 10^0.3 and hard decisions are invariant to SNR_aux.

L-values are clipped to +-clip and mid-rise quantized (an exact zero
quantizes to the positive half-step); pass ``quant=None`` to obtain raw
values.  For product labelings the tables factor per real dimension,
which also provides the per-dimension sign and amplitude L-values used
by multistage decoding.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .channel import build_dmc
from .errors import ConfigurationError


@dataclass(frozen=True)
class LlrQuantConfig:
    """Uniform mid-rise L-value quantizer: clip magnitude and level count."""

    clip: float = 20.0
    levels: int = 128

    def __post_init__(self):
        if self.clip <= 0:
            raise ConfigurationError("clip must be positive")
        if self.levels < 2 or self.levels % 2:
            raise ConfigurationError("levels must be an even count >= 2")


DEFAULT_QUANT = LlrQuantConfig()


def quantize_llrs(llrs, quant=DEFAULT_QUANT):
    """Clip to +-quant.clip and quantize to quant.levels mid-rise steps.

    Mid-rise reconstruction points sit at odd multiples of step/2, so no
    output is exactly zero; L = 0 maps to +step/2.
    """
    if quant is None:
        return np.asarray(llrs, dtype=float)
    l = np.clip(llrs, -quant.clip, quant.clip)
    step = 2.0 * quant.clip / quant.levels
    idx = np.floor(l / step)
    np.clip(idx, -quant.levels // 2, quant.levels // 2 - 1, out=idx)
    return (idx + 0.5) * step


@dataclass(frozen=True)
class AuxChannel:
    """Receiver-side channel assumption: a DMC at SNR_aux on the true grid."""

    snr_aux_db: float
    model: object


def build_aux_channel(spec, snr_aux_db, true_model):
    """Auxiliary channel sharing the true channel's quantizer edges."""
    model = build_dmc(
        spec, snr_aux_db, bits=true_model.bits, edges=true_model.edges
    )
    return AuxChannel(snr_aux_db=float(snr_aux_db), model=model)


@dataclass
class LValueFrame:
    """L-values for a frame, optionally paired with the transmitted bits."""

    llrs: np.ndarray
    bits: np.ndarray | None = None

    def __post_init__(self):
        if self.bits is not None and self.bits.shape != self.llrs.shape:
            raise ConfigurationError("bits and llrs must have equal shape")

    @property
    def la(self):
        """Symmetrized L-values (-1)^b * L."""
        if self.bits is None:
            raise ConfigurationError("no transmitted bits attached")
        return np.where(self.bits == 0, 1.0, -1.0) * self.llrs


def bin_positions(edges):
    """Grid position of every bin: interior midpoints, overload bins half
    a step beyond the end edges."""
    edges = np.asarray(edges, dtype=float)
    first = edges[0] - 0.5 * (edges[1] - edges[0])
    last = edges[-1] + 0.5 * (edges[-1] - edges[-2])
    return np.concatenate([[first], 0.5 * (edges[:-1] + edges[1:]), [last]])


class Demapper:
    """Precomputed L-value tables for one (constellation, aux channel) pair.

    Product labelings get per-dimension tables including the conditioned
    amplitude tables needed by multistage decoding; cross constellations
    fall back to a joint table over both dimensions' bins.
    """

    def __init__(self, spec, aux, mode="exact_map", quant=DEFAULT_QUANT):
        if mode not in ("exact_map", "max_log"):
            raise ConfigurationError(f"unknown demapping mode {mode!r}")
        self.spec = spec
        self.aux = aux
        self.mode = mode
        self.quant = quant
        model = aux.model
        self._positions = bin_positions(model.edges)
        if spec.is_product:
            self._build_product(spec, model)
        else:
            self._build_joint(spec, model)

    # -- table construction ------------------------------------------------

    def _level_log_metric(self, model):
        """log 'likelihood' of each (level, bin) pair for the active mode."""
        if self.mode == "exact_map":
            return model.log_trans.copy()
        d = self._positions[None, :] - model.levels[:, None]
        return -(d * d) / (2.0 * model.sigma_dim**2)

    def _reduce(self, values, axis):
        if self.mode == "exact_map":
            return logsumexp(values, axis=axis)
        return np.max(values, axis=axis)

    def _build_product(self, spec, model):
        with np.errstate(divide="ignore"):
            lp = np.log(model.level_prior)
        metric = self._level_log_metric(model) + lp[:, None]  # (L, B)
        bits_per_dim = spec.dim_label_bits.shape[1]
        n_bins = model.n_bins
        self.dim_table = np.empty((n_bins, bits_per_dim))
        for k in range(bits_per_dim):
            m0 = spec.dim_label_bits[:, k] == 0
            s0 = self._reduce(metric[m0], axis=0)
            s1 = self._reduce(metric[~m0], axis=0)
            self.dim_table[:, k] = s0 - s1
        # conditioned on the sign bit: tables over each half-axis
        self.cond_table = np.empty((n_bins, 2, bits_per_dim - 1))
        for s in (0, 1):
            sel = spec.dim_label_bits[:, 0] == s
            sub_metric = metric[sel]
            sub_labels = spec.dim_label_bits[sel, 1:]
            for k in range(bits_per_dim - 1):
                m0 = sub_labels[:, k] == 0
                s0 = self._reduce(sub_metric[m0], axis=0)
                s1 = self._reduce(sub_metric[~m0], axis=0)
                self.cond_table[:, s, k] = s0 - s1
        self._dim_map = np.argmax(metric, axis=0)  # (B,) MAP level per bin
        lvl_pair_to_point = np.full(
            (len(model.levels), len(model.levels)), -1, dtype=np.int64
        )
        li = spec.point_dim_index[:, 0]
        lq = spec.point_dim_index[:, 1]
        lvl_pair_to_point[li, lq] = np.arange(spec.order)
        if np.any(lvl_pair_to_point < 0):
            raise ConfigurationError("product constellation has missing pairs")
        self._pair_to_point = lvl_pair_to_point
        self.table = None

    def _build_joint(self, spec, model):
        with np.errstate(divide="ignore"):
            lp = np.log(spec.prior)
        metric = self._level_log_metric(model)
        a = metric[spec.point_dim_index[:, 0]]  # (M, B)
        b = metric[spec.point_dim_index[:, 1]]
        # T[bi, bq, x] = log prior(x) + metric_I + metric_Q
        t = a.T[:, None, :] + b.T[None, :, :] + lp[None, None, :]
        m = spec.bits_per_symbol
        n_bins = model.n_bins
        self.table = np.empty((n_bins, n_bins, m))
        for k in range(m):
            m0 = spec.bit_mask(k, 0)
            s0 = self._reduce(t[:, :, m0], axis=2)
            s1 = self._reduce(t[:, :, ~m0], axis=2)
            self.table[:, :, k] = s0 - s1
        self._joint_map = np.argmax(t, axis=2)
        self.dim_table = None
        self.cond_table = None

    # -- queries -----------------------------------------------------------

    def raw_llrs(self, bins):
        """Unclipped L-values, shape (N, bits_per_symbol)."""
        bins = np.asarray(bins)
        spec = self.spec
        if spec.is_product:
            k = spec.dim_label_bits.shape[1]
            out = np.empty((len(bins), spec.bits_per_symbol))
            out[:, :k] = self.dim_table[bins[:, 0]]
            out[:, k:] = self.dim_table[bins[:, 1]]
            return out
        return self.table[bins[:, 0], bins[:, 1]]

    def llrs(self, bins, bits=None):
        """Clipped and quantized L-values as an :class:`LValueFrame`."""
        l = quantize_llrs(self.raw_llrs(bins), self.quant)
        return LValueFrame(llrs=l, bits=bits)

    def sign_llrs(self, dim_bins):
        """Per-dimension sign-bit L-values (bit 0 of the dimension label)."""
        if self.dim_table is None:
            raise ConfigurationError("per-dimension tables need a product labeling")
        return self.dim_table[np.asarray(dim_bins), 0]

    def conditioned_amp_llrs(self, dim_bins, sign_bits):
        """Amplitude-bit L-values given known sign bits, shape (N, a)."""
        if self.cond_table is None:
            raise ConfigurationError("conditioned tables need a product labeling")
        return self.cond_table[np.asarray(dim_bins), np.asarray(sign_bits)]

    def symbol_decisions(self, bins):
        """Symbolwise MAP decisions under the auxiliary metric."""
        bins = np.asarray(bins)
        if self.spec.is_product:
            li = self._dim_map[bins[:, 0]]
            lq = self._dim_map[bins[:, 1]]
            return self._pair_to_point[li, lq]
        return self._joint_map[bins[:, 0], bins[:, 1]]


def compute_llrs(bins, aux, spec, mode="exact_map", quant=DEFAULT_QUANT,
                 bits=None):
    """One-shot L-value computation; builds a throwaway table set.

    Pipelines that demap many frames at one operating point should hold
    a :class:`Demapper` instead.
    """
    return Demapper(spec, aux, mode=mode, quant=quant).llrs(bins, bits=bits)
