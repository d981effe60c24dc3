"""Probabilistic amplitude shaping support.

Maxwell-Boltzmann priors over the per-dimension amplitudes {1, 3, 5, 7}
and a fixed-length constant-composition distribution matcher (CCDM).
The matcher is an exact enumerative coder on the set of sequences with a
given composition: ranking and unranking use big-integer multinomial
counts, so every k-bit input maps to a distinct sequence and decoding is
the exact inverse.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

AMPLITUDES = np.array([1.0, 3.0, 5.0, 7.0])


@dataclass(frozen=True)
class MbDistribution:
    """Maxwell-Boltzmann amplitude prior p(a) proportional to exp(-nu*a^2)."""

    nu: float
    prior: np.ndarray
    entropy: float

    def __post_init__(self):
        self.prior.setflags(write=False)


def mb_distribution(nu):
    """Maxwell-Boltzmann prior over AMPLITUDES for a given rate parameter."""
    if nu < 0:
        raise ConfigurationError("nu must be non-negative")
    w = np.exp(-nu * AMPLITUDES**2)
    p = w / w.sum()
    ent = float(-np.sum(p[p > 0] * np.log2(p[p > 0])))
    return MbDistribution(nu=float(nu), prior=p, entropy=ent)


def find_mb_nu(target_amplitude_entropy, tol=1e-12, max_iter=200):
    """Rate parameter whose MB prior has the requested entropy in bits.

    Entropy decreases monotonically in nu from 2 (uniform) towards 0, so
    a bisection on nu suffices.
    """
    h = float(target_amplitude_entropy)
    if not 0 < h <= 2:
        raise ConfigurationError("amplitude entropy must be in (0, 2]")
    if abs(h - 2.0) < 1e-15:
        return mb_distribution(0.0)
    lo, hi = 0.0, 1.0
    while mb_distribution(hi).entropy > h:
        hi *= 2
        if hi > 1e6:
            raise ConfigurationError("entropy target out of reach")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mb_distribution(mid).entropy > h:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return mb_distribution(0.5 * (lo + hi))


def composition_for(prior, block_len):
    """Integer composition of ``block_len`` closest to ``prior``.

    Largest-remainder rounding: every count gets floor(n*p), remaining
    slots go to the largest fractional parts (ties to the lower index).
    """
    prior = np.asarray(prior, dtype=float)
    exact = prior * block_len
    counts = np.floor(exact).astype(np.int64)
    short = block_len - counts.sum()
    if short:
        frac = exact - counts
        order = np.argsort(-frac, kind="stable")
        counts[order[:short]] += 1
    return tuple(int(c) for c in counts)


def _multinomial(counts):
    n = sum(counts)
    total = math.factorial(n)
    for c in counts:
        total //= math.factorial(c)
    return total


@dataclass(frozen=True)
class CcdmCode:
    """Fixed-length CCDM code for one amplitude composition.

    ``k_bits`` is floor(log2 of the number of sequences), so every k-bit
    index selects a distinct sequence of the composition.
    """

    composition: tuple
    block_len: int
    k_bits: int
    sequence_count: int

    @property
    def rate(self):
        """Matcher rate in bits per amplitude."""
        return self.k_bits / self.block_len

    def rate_loss(self, prior):
        """Gap between the prior entropy and the matcher rate."""
        p = np.asarray(prior, dtype=float)
        ent = float(-np.sum(p[p > 0] * np.log2(p[p > 0])))
        return ent - self.rate


def ccdm_code(composition):
    """Build a :class:`CcdmCode` from per-amplitude counts."""
    composition = tuple(int(c) for c in composition)
    if any(c < 0 for c in composition):
        raise ConfigurationError("composition counts must be non-negative")
    n = sum(composition)
    if n == 0:
        raise ConfigurationError("composition is empty")
    count = _multinomial(composition)
    return CcdmCode(
        composition=composition,
        block_len=n,
        k_bits=count.bit_length() - 1,
        sequence_count=count,
    )


def _bits_to_int(bits):
    bits = np.asarray(bits, dtype=np.uint8)
    packed = np.packbits(bits)
    value = int.from_bytes(packed.tobytes(), "big")
    # packbits pads the tail with zeros on the right
    pad = (-len(bits)) % 8
    return value >> pad


def _int_to_bits(value, width):
    nbytes = (width + 7) // 8
    raw = value.to_bytes(nbytes, "big")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))
    return bits[len(bits) - width:].copy()


def ccdm_encode(bits, code):
    """Map ``code.k_bits`` bits to an amplitude-index sequence.

    The sequence is the ``index``-th member, in lexicographic order, of
    the set of sequences with the code's composition.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape != (code.k_bits,):
        raise ConfigurationError(
            f"expected {code.k_bits} bits, got shape {bits.shape}"
        )
    index = _bits_to_int(bits)
    counts = list(code.composition)
    remaining = code.sequence_count
    out = np.empty(code.block_len, dtype=np.int64)
    for pos in range(code.block_len):
        tail = code.block_len - pos
        for sym, c in enumerate(counts):
            if c == 0:
                continue
            # sequences continuing with sym: remaining * c / tail, exact
            branch = remaining * c // tail
            if index < branch:
                out[pos] = sym
                counts[sym] -= 1
                remaining = branch
                break
            index -= branch
    return out


def ccdm_decode(amplitude_indices, code):
    """Rank an amplitude-index sequence back to its source bits.

    Returns ``(bits, valid)``.  A sequence whose composition does not
    match the code cannot be ranked; it yields all-zero bits and
    ``valid=False``.
    """
    seq = np.asarray(amplitude_indices, dtype=np.int64)
    if seq.shape != (code.block_len,):
        raise ConfigurationError(
            f"expected {code.block_len} amplitudes, got shape {seq.shape}"
        )
    observed = np.bincount(seq, minlength=len(code.composition))
    if (len(observed) > len(code.composition)
            or tuple(observed.tolist()) != code.composition):
        return np.zeros(code.k_bits, dtype=np.uint8), False
    counts = list(code.composition)
    remaining = code.sequence_count
    rank = 0
    for pos, sym in enumerate(seq):
        tail = code.block_len - pos
        for lower in range(sym):
            if counts[lower]:
                rank += remaining * counts[lower] // tail
        remaining = remaining * counts[sym] // tail
        counts[sym] -= 1
    if rank >= 1 << code.k_bits:
        # valid composition but outside the used index range
        return np.zeros(code.k_bits, dtype=np.uint8), False
    return _int_to_bits(rank, code.k_bits), True
