"""Soft-decision LDPC coding: IRA codes with DVB-S2 encoder geometry.

The shipped codes are systematic irregular repeat-accumulate codes.
Information columns come in groups of ``group`` columns sharing one base
address row: column t of a group with bases {a} checks rows
(a + t*q) mod m, and the m parity bits form a dual-diagonal accumulator.
The long code is n=64800 at rate 4/5 (information degrees 11 and 3,
check degree 18, the DVB-S2 profile for that rate); tables come from a
seeded balanced ensemble, see tools/gen_code_tables.py.  A short n=648
rate-1/2 code ships for fast tests.

Decoding is flooding belief propagation on L-values (natural log,
L > 0 favors bit 0), check updates by the exact tanh rule or offset
min-sum.  The hot kernel lives in the compiled extension
``bitlink._core`` with a pure-numpy fallback; see ``bitlink.backend``.
"""

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .backend import bp_decode
from .errors import ConfigurationError

DECODER_MODES = ("sum-product", "min-sum")


@dataclass(frozen=True)
class CodeDefinition:
    """An IRA code: dimensions plus the base address table.

    ``base_addresses[g]`` lists the check addresses of the first column
    of group g; column t of the group checks (a + t*q) mod (n - k).
    """

    name: str
    n: int
    k: int
    group: int
    q: int
    base_addresses: tuple
    max_iterations: int = 20
    _arrays: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        m = self.n - self.k
        if self.q * self.group != m or self.k % self.group:
            raise ConfigurationError("inconsistent code geometry")
        if len(self.base_addresses) != self.k // self.group:
            raise ConfigurationError("wrong number of address groups")
        for addrs in self.base_addresses:
            if any(not 0 <= a < m for a in addrs):
                raise ConfigurationError("base address out of range")
            if len(set(addrs)) != len(addrs):
                raise ConfigurationError("duplicate base address in a group")

    @property
    def m(self):
        return self.n - self.k

    @property
    def rate(self):
        return self.k / self.n

    def _build_arrays(self):
        m = self.m
        g = self.group
        rows_list = []
        cols_list = []
        t = np.arange(g, dtype=np.int64)
        for gi, addrs in enumerate(self.base_addresses):
            addrs = np.asarray(addrs, dtype=np.int64)
            rows = (addrs[None, :] + t[:, None] * self.q) % m
            cols = np.repeat(g * gi + t, len(addrs))
            rows_list.append(rows.ravel())
            cols_list.append(cols)
        info_rows = np.concatenate(rows_list)
        info_cols = np.concatenate(cols_list)
        # accumulator: parity column k+i checks rows i and i+1
        acc_rows = np.concatenate([np.arange(m), np.arange(1, m)])
        acc_cols = np.concatenate(
            [self.k + np.arange(m), self.k + np.arange(m - 1)]
        )
        rows = np.concatenate([info_rows, acc_rows])
        cols = np.concatenate([info_cols, acc_cols])
        order = np.argsort(rows, kind="stable")
        rows_sorted = rows[order]
        edge_col = cols[order].astype(np.int32)
        row_ptr = np.searchsorted(rows_sorted, np.arange(m + 1)).astype(np.int32)
        for arr in (edge_col, row_ptr, info_rows, info_cols):
            arr.setflags(write=False)
        self._arrays.update(
            edge_col=edge_col,
            row_ptr=row_ptr,
            info_rows=info_rows.astype(np.int64),
            info_cols=info_cols.astype(np.int64),
            max_check_degree=int(np.max(np.diff(row_ptr))),
        )

    def arrays(self):
        """Check-major adjacency (row_ptr, edge_col) plus encoder arrays."""
        if not self._arrays:
            self._build_arrays()
        return self._arrays

    @property
    def edge_count(self):
        return len(self.arrays()["edge_col"])


def _load_packaged(name):
    path = resources.files("bitlink").joinpath(f"fec_tables/{name}.json")
    data = json.loads(path.read_text())
    return CodeDefinition(
        name=data["name"],
        n=data["n"],
        k=data["k"],
        group=data["group"],
        q=data["q"],
        base_addresses=tuple(tuple(row) for row in data["base_addresses"]),
    )


@lru_cache(maxsize=None)
def long_code():
    """The n=64800 rate-4/5 code used by all acceptance operating points."""
    return _load_packaged("ira-r45-64800")


@lru_cache(maxsize=None)
def short_code():
    """The n=648 rate-1/2 companion for fast unit tests."""
    return _load_packaged("ira-r12-648")


def code_by_name(name):
    table = {
        "dvbs2-like-r45": long_code,
        "long": long_code,
        "short-r12": short_code,
        "short": short_code,
    }
    if name not in table:
        raise ConfigurationError(f"unknown code {name!r}")
    return table[name]()


def ldpc_encode(info_bits, code):
    """Systematic encode: returns the n-bit codeword."""
    info_bits = np.asarray(info_bits, dtype=np.uint8)
    if info_bits.shape != (code.k,):
        raise ConfigurationError(f"expected {code.k} information bits")
    arrs = code.arrays()
    acc = np.bincount(
        arrs["info_rows"],
        weights=info_bits[arrs["info_cols"]].astype(np.float64),
        minlength=code.m,
    ).astype(np.int64)
    parity = (np.cumsum(acc & 1) & 1).astype(np.uint8)
    return np.concatenate([info_bits, parity])


def syndrome(bits, code):
    """Check values of a candidate codeword (all zero iff valid)."""
    bits = np.asarray(bits, dtype=np.int64)
    arrs = code.arrays()
    sums = np.add.reduceat(bits[arrs["edge_col"]], arrs["row_ptr"][:-1])
    return (sums & 1).astype(np.uint8)


@dataclass(frozen=True)
class DecodeOutcome:
    """Result of one codeword decode.

    ``iterations`` counts message-passing rounds actually run: 0 means
    the channel hard decisions already satisfied every check.
    ``flip_count`` is the number of positions where the decoded word
    differs from the channel hard decision; on a frame decoded to the
    transmitted codeword, flip_count / n equals the pre-FEC BER of that
    frame, giving a receiver-side estimate that needs no reference data.
    """

    codeword: np.ndarray
    iterations: int
    parity_ok: bool
    flip_count: int

    @property
    def flip_ratio(self):
        return self.flip_count / len(self.codeword)

    def payload(self, code):
        return self.codeword[: code.k]


def ldpc_decode(llrs, code, mode="sum-product", max_iter=None, offset=0.3):
    """Belief-propagation decode of one frame of L-values.

    Parameters
    ----------
    llrs : ndarray, shape (n,)
        Channel L-values, natural log, positive favoring bit 0.
    code : CodeDefinition
    mode : str
        ``"sum-product"`` (exact tanh rule, default) or ``"min-sum"``
        (offset min-sum).
    max_iter : int, optional
        Iteration cap; defaults to ``code.max_iterations``.
    offset : float
        Min-sum correction offset, ignored under sum-product.

    Returns
    -------
    DecodeOutcome
    """
    llrs = np.ascontiguousarray(llrs, dtype=np.float64)
    if llrs.shape != (code.n,):
        raise ConfigurationError(f"expected {code.n} L-values")
    if mode not in DECODER_MODES:
        raise ConfigurationError(f"unknown decoder mode {mode!r}")
    if max_iter is None:
        max_iter = code.max_iterations
    arrs = code.arrays()
    hard, iterations, ok = bp_decode(
        llrs,
        arrs["row_ptr"],
        arrs["edge_col"],
        int(max_iter),
        1 if mode == "min-sum" else 0,
        float(offset),
        arrs["max_check_degree"],
    )
    flips = int(np.count_nonzero(hard != (llrs < 0)))
    return DecodeOutcome(
        codeword=hard,
        iterations=int(iterations),
        parity_ok=bool(ok),
        flip_count=flips,
    )
