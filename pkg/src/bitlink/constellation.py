"""QAM constellations with bit labelings and point priors.

Supported orders are the square sizes 16 and 64, the cross sizes 32 and
128, and probabilistically shaped 64-QAM built from an amplitude prior on
the per-dimension levels {1, 3, 5, 7}.  Every constellation is normalized
to unit mean energy under its prior.

Labelings
---------
``gray``
    Square and shaped constellations use the binary-reflected Gray code
    independently per real dimension (I bits first, then Q bits).  Cross
    constellations inherit the product Gray labels of a rectangular
    parent grid whose outer columns are folded onto the top and bottom
    flanks; the fold keeps every label unique but breaks the strict
    one-bit-per-neighbor property along the seams.
``set_partition``
    Per real dimension the label is (sign, natural binary amplitude
    index), so the most significant bit of each dimension selects the
    half-plane and the remaining bits index |level| from smallest to
    largest.  Only defined for square and shaped constellations.

In both labelings bit 0 of a dimension is the sign bit with 0 mapping to
the negative half-axis.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

SUPPORTED_ORDERS = (16, 32, 64, 128)

_SHAPED_AMPLITUDES = np.array([1.0, 3.0, 5.0, 7.0])

# Per-dimension amplitude sub-labels, shared by the negative and positive
# half-axes.  Gray follows the reflection of the 3-bit BRGC, natural is
# the plain index of |level|.
_GRAY_AMP_BITS = {1.0: (1, 0), 3.0: (1, 1), 5.0: (0, 1), 7.0: (0, 0)}
_NATURAL_AMP_BITS = {1.0: (0, 0), 3.0: (0, 1), 5.0: (1, 0), 7.0: (1, 1)}


def gray_code(index):
    """Binary-reflected Gray code of an integer index."""
    return index ^ (index >> 1)


@dataclass(frozen=True)
class BitLevelMap:
    """Bit-position metadata for product labelings.

    ``dim[k]`` is the real dimension (0 = I, 1 = Q) that bit ``k`` of the
    symbol label addresses, ``within[k]`` its position inside that
    dimension's sub-label, and ``role[k]`` either ``"sign"`` or
    ``"amplitude"``.
    """

    dim: tuple
    within: tuple
    role: tuple

    def __post_init__(self):
        if not (len(self.dim) == len(self.within) == len(self.role)):
            raise ConfigurationError("bit level map fields must have equal length")
        for r in self.role:
            if r not in ("sign", "amplitude"):
                raise ConfigurationError(f"unknown bit role {r!r}")

    @property
    def bits(self):
        return len(self.dim)

    def positions(self, dim, role=None):
        """Bit positions addressing ``dim``, optionally filtered by role."""
        return tuple(
            k
            for k in range(self.bits)
            if self.dim[k] == dim and (role is None or self.role[k] == role)
        )


@dataclass(frozen=True)
class ConstellationSpec:
    """A labeled, normalized constellation with a point prior.

    Attributes
    ----------
    name : str
        Human-readable identifier, e.g. ``"qam64-gray"``.
    order : int
        Number of points M.
    bits_per_symbol : int
        Label width m = log2(M).
    points : ndarray of complex128, shape (M,)
        Unit-mean-energy points.
    labels : ndarray of uint8, shape (M, m)
        Bit label of each point, most significant bit first.
    prior : ndarray of float64, shape (M,)
        Point probabilities, summing to one.
    labeling : str
        ``"gray"`` or ``"set_partition"``.
    dim_levels : ndarray of float64
        Sorted per-dimension level values (identical for I and Q).
    point_dim_index : ndarray of int64, shape (M, 2)
        Index into ``dim_levels`` of each point's I and Q coordinate.
    dim_label_bits : ndarray of uint8 or None
        For product labelings, the per-dimension sub-label of each level,
        shape (len(dim_levels), m // 2).  None for cross constellations.
    bit_map : BitLevelMap or None
        Bit-position roles for product labelings, None otherwise.
    """

    name: str
    order: int
    bits_per_symbol: int
    points: np.ndarray
    labels: np.ndarray
    prior: np.ndarray
    labeling: str
    dim_levels: np.ndarray
    point_dim_index: np.ndarray
    dim_label_bits: np.ndarray | None = None
    bit_map: BitLevelMap | None = None
    label_to_point: np.ndarray = field(init=False)

    def __post_init__(self):
        m = self.bits_per_symbol
        if self.order != 2**m:
            raise ConfigurationError("order must equal 2**bits_per_symbol")
        if self.points.shape != (self.order,):
            raise ConfigurationError("points must have shape (order,)")
        if self.labels.shape != (self.order, m):
            raise ConfigurationError("labels must have shape (order, bits)")
        label_ints = self.label_ints()
        if len(set(label_ints.tolist())) != self.order:
            raise ConfigurationError("labels must be distinct")
        if not np.isclose(self.prior.sum(), 1.0, rtol=0, atol=1e-12):
            raise ConfigurationError("prior must sum to one")
        if np.any(self.prior < 0):
            raise ConfigurationError("prior must be non-negative")
        energy = float(np.sum(self.prior * np.abs(self.points) ** 2))
        if not np.isclose(energy, 1.0, rtol=0, atol=1e-9):
            raise ConfigurationError(f"mean energy {energy} is not 1")
        lut = np.empty(self.order, dtype=np.int64)
        lut[label_ints] = np.arange(self.order)
        object.__setattr__(self, "label_to_point", lut)
        for arr in (self.points, self.labels, self.prior, self.dim_levels,
                    self.point_dim_index, self.label_to_point):
            arr.setflags(write=False)
        if self.dim_label_bits is not None:
            self.dim_label_bits.setflags(write=False)

    def label_ints(self):
        """Labels packed into integers, bit 0 of the label most significant."""
        weights = 1 << np.arange(self.bits_per_symbol - 1, -1, -1)
        return (self.labels.astype(np.int64) * weights).sum(axis=1)

    def bit_mask(self, position, value):
        """Boolean mask of points whose label bit ``position`` equals ``value``."""
        return self.labels[:, position] == value

    def map_labels(self, bits):
        """Map an (N, m) bit matrix to point indices."""
        weights = 1 << np.arange(self.bits_per_symbol - 1, -1, -1)
        ints = (bits.astype(np.int64) * weights).sum(axis=1)
        return self.label_to_point[ints]

    @property
    def is_product(self):
        return self.dim_label_bits is not None


def _square_dim_labels(levels, bits_per_dim, labeling):
    """Per-dimension sub-labels for an ascending ASK level set."""
    n = len(levels)
    out = np.zeros((n, bits_per_dim), dtype=np.uint8)
    if labeling == "gray":
        for i in range(n):
            g = gray_code(i)
            for b in range(bits_per_dim):
                out[i, b] = (g >> (bits_per_dim - 1 - b)) & 1
    else:  # set_partition: (sign, natural amplitude index)
        half = n // 2
        for i, lvl in enumerate(levels):
            out[i, 0] = 1 if lvl > 0 else 0
            amp_idx = int(round((abs(lvl) - 1) / 2))
            for b in range(1, bits_per_dim):
                out[i, b] = (amp_idx >> (bits_per_dim - 1 - b)) & 1
        if 2 ** (bits_per_dim - 1) < half:
            raise ConfigurationError("amplitude index does not fit the sub-label")
    return out


def _product_constellation(name, levels, level_prior, dim_labels, labeling):
    """Assemble a constellation from one per-dimension level set and labeling."""
    n = len(levels)
    bits_per_dim = dim_labels.shape[1]
    m = 2 * bits_per_dim
    order = n * n
    points = np.empty(order, dtype=np.complex128)
    labels = np.empty((order, m), dtype=np.uint8)
    prior = np.empty(order)
    dim_index = np.empty((order, 2), dtype=np.int64)
    for ii in range(n):
        for qq in range(n):
            idx = ii * n + qq
            points[idx] = levels[ii] + 1j * levels[qq]
            labels[idx, :bits_per_dim] = dim_labels[ii]
            labels[idx, bits_per_dim:] = dim_labels[qq]
            prior[idx] = level_prior[ii] * level_prior[qq]
            dim_index[idx] = (ii, qq)
    scale = np.sqrt(np.sum(prior * np.abs(points) ** 2))
    points /= scale
    role = ("sign",) + ("amplitude",) * (bits_per_dim - 1)
    bit_map = BitLevelMap(
        dim=(0,) * bits_per_dim + (1,) * bits_per_dim,
        within=tuple(range(bits_per_dim)) * 2,
        role=role * 2,
    )
    return ConstellationSpec(
        name=name,
        order=order,
        bits_per_symbol=m,
        points=points,
        labels=labels,
        prior=prior,
        labeling=labeling,
        dim_levels=np.asarray(levels, dtype=float) / scale,
        point_dim_index=dim_index,
        dim_label_bits=dim_labels.copy(),
        bit_map=bit_map,
    )


def _cross_constellation(name, width_bits, height_bits):
    """Cross constellation from a folded Gray-labeled rectangle.

    The parent grid has 2**width_bits columns and 2**height_bits rows of
    odd-integer coordinates, Gray-labeled per axis.  The two outermost
    column pairs are folded onto flanks above and below the grid: a
    parent point (s*c, q) with |c| in the fold set moves to
    (s*|q|, sign(q)*c') where c' extends the row axis beyond its original
    range.  The result is the standard symmetric cross shape with every
    parent label kept.
    """
    ncols = 2**width_bits
    nrows = 2**height_bits
    cols = np.arange(-ncols + 1, ncols, 2, dtype=float)
    rows = np.arange(-nrows + 1, nrows, 2, dtype=float)
    # Outermost fold columns map, from innermost fold outwards, onto rows
    # just beyond the parent grid; the kept width is 3/2 of the height.
    n_fold = (ncols - 3 * nrows // 2) // 2
    fold_cols = cols[-n_fold:] if n_fold else np.empty(0)
    fold_targets = {c: nrows - 1 + 2 * (i + 1) for i, c in enumerate(fold_cols)}
    m = width_bits + height_bits
    order = ncols * nrows
    points = np.empty(order, dtype=np.complex128)
    labels = np.empty((order, m), dtype=np.uint8)
    idx = 0
    for ci, c in enumerate(cols):
        gc = gray_code(ci)
        for ri, r in enumerate(rows):
            gr = gray_code(ri)
            if abs(c) in fold_targets:
                x = np.sign(c) * abs(r)
                y = np.sign(r) * fold_targets[abs(c)]
            else:
                x, y = c, r
            points[idx] = x + 1j * y
            for b in range(width_bits):
                labels[idx, b] = (gc >> (width_bits - 1 - b)) & 1
            for b in range(height_bits):
                labels[idx, width_bits + b] = (gr >> (height_bits - 1 - b)) & 1
            idx += 1
    prior = np.full(order, 1.0 / order)
    scale = np.sqrt(np.mean(np.abs(points) ** 2))
    points /= scale
    levels = np.unique(np.concatenate([points.real, points.imag]))
    re_idx = np.searchsorted(levels, points.real)
    im_idx = np.searchsorted(levels, points.imag)
    dim_index = np.stack([re_idx, im_idx], axis=1)
    return ConstellationSpec(
        name=name,
        order=order,
        bits_per_symbol=m,
        points=points,
        labels=labels,
        prior=prior,
        labeling="gray",
        dim_levels=levels,
        point_dim_index=dim_index,
    )


def build_uniform_qam(order, labeling="gray"):
    """Uniform-prior QAM constellation.

    Parameters
    ----------
    order : int
        One of 16, 32, 64, 128.
    labeling : str
        ``"gray"`` (all orders) or ``"set_partition"`` (square orders).

    Returns
    -------
    ConstellationSpec
    """
    if order not in SUPPORTED_ORDERS:
        raise ConfigurationError(f"unsupported order {order}")
    if labeling not in ("gray", "set_partition"):
        raise ConfigurationError(f"unknown labeling {labeling!r}")
    name = f"qam{order}-{labeling.replace('_', '-')}"
    if order in (16, 64):
        side = int(round(np.sqrt(order)))
        bits_per_dim = side.bit_length() - 1
        levels = np.arange(-side + 1, side, 2, dtype=float)
        dim_labels = _square_dim_labels(levels, bits_per_dim, labeling)
        level_prior = np.full(side, 1.0 / side)
        return _product_constellation(name, levels, level_prior, dim_labels, labeling)
    if labeling == "set_partition":
        raise ConfigurationError("set_partition labeling requires a square order")
    if order == 32:
        return _cross_constellation(name, width_bits=3, height_bits=2)
    return _cross_constellation(name, width_bits=4, height_bits=3)


def build_shaped_qam64(amplitude_prior, labeling="gray"):
    """Shaped 64-QAM from a per-dimension amplitude prior.

    Parameters
    ----------
    amplitude_prior : array_like of float, shape (4,)
        Probabilities of the amplitudes 1, 3, 5, 7, summing to one.
        Signs are equiprobable and dimensions independent.
    labeling : str
        ``"gray"`` or ``"set_partition"``.

    Returns
    -------
    ConstellationSpec
    """
    amplitude_prior = np.asarray(amplitude_prior, dtype=float)
    if amplitude_prior.shape != (4,):
        raise ConfigurationError("amplitude prior must have four entries")
    if not np.isclose(amplitude_prior.sum(), 1.0, rtol=0, atol=1e-12):
        raise ConfigurationError("amplitude prior must sum to one")
    if labeling not in ("gray", "set_partition"):
        raise ConfigurationError(f"unknown labeling {labeling!r}")
    levels = np.concatenate([-_SHAPED_AMPLITUDES[::-1], _SHAPED_AMPLITUDES])
    level_prior = np.concatenate(
        [amplitude_prior[::-1] / 2, amplitude_prior / 2]
    )
    amp_bits = _GRAY_AMP_BITS if labeling == "gray" else _NATURAL_AMP_BITS
    dim_labels = np.zeros((8, 3), dtype=np.uint8)
    for i, lvl in enumerate(levels):
        dim_labels[i, 0] = 1 if lvl > 0 else 0
        dim_labels[i, 1:] = amp_bits[abs(lvl)]
    name = f"qam64-shaped-{labeling.replace('_', '-')}"
    return _product_constellation(name, levels, level_prior, dim_labels, labeling)


def symbol_entropy(spec):
    """Entropy of the point prior in bits per symbol."""
    p = spec.prior[spec.prior > 0]
    return float(-np.sum(p * np.log2(p)))


def amplitude_bits_to_levels(spec, amp_bits):
    """Map per-dimension amplitude sub-labels to amplitude level indices.

    ``amp_bits`` has shape (N, a) where a = bits per dimension - 1.  The
    returned indices address the positive half of ``spec.dim_levels``,
    i.e. index 0 is the smallest amplitude.
    """
    if not spec.is_product:
        raise ConfigurationError("amplitude mapping requires a product labeling")
    a = spec.dim_label_bits.shape[1] - 1
    half = len(spec.dim_levels) // 2
    # Sub-label of each positive level, sign bit dropped.
    table = {}
    for i in range(half, len(spec.dim_levels)):
        key = tuple(int(b) for b in spec.dim_label_bits[i, 1:])
        table[key] = i - half
    lut = np.zeros(2**a, dtype=np.int64)
    weights = 1 << np.arange(a - 1, -1, -1)
    for key, idx in table.items():
        lut[int(np.dot(key, weights))] = idx
    ints = (amp_bits.astype(np.int64) * weights).sum(axis=1)
    return lut[ints]


def amplitude_levels_to_bits(spec, amp_idx):
    """Inverse of :func:`amplitude_bits_to_levels`."""
    if not spec.is_product:
        raise ConfigurationError("amplitude mapping requires a product labeling")
    half = len(spec.dim_levels) // 2
    return spec.dim_label_bits[half + np.asarray(amp_idx), 1:].copy()


def export_labels_csv(spec, path):
    """Write points, priors and labels to a CSV file."""
    with open(path, "w") as fh:
        fh.write("index,i,q,prior,label\n")
        for i in range(spec.order):
            bits = "".join(str(b) for b in spec.labels[i])
            fh.write(
                f"{i},{spec.points[i].real:.12g},{spec.points[i].imag:.12g},"
                f"{spec.prior[i]:.12g},{bits}\n"
            )
