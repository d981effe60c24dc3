"""Performance metrics for bitwise receivers.

Everything here works on L-values in the natural-log domain with the
convention L = log P(bit=0) - log P(bit=1), hard decisions mapping L < 0
to bit 1 (ties to bit 0).

The achievable-rate metrics:

* ``asi``: asymmetric information 1 - mean(log2(1 + exp(-L_a))) with
  L_a = (-1)^bit * L, clamped to [0, 1].  Identical to the normalized
  GMI estimator for soft-decision FEC, so ``ngmi`` is the same number.
* ``mi_symbolwise``: exact symbol-metric mutual information of the
  quantized channel (finite output alphabet, no Monte-Carlo noise).
* ``j_function`` / ``j_inverse``: the consistent-Gaussian information
  transfer J(sigma) = 1 - E[log2(1 + exp(-L))], L ~ N(sigma^2/2,
  sigma^2), and its inverse.

Q-factors translate BER and ASI onto a common dB axis: Q_BER =
sqrt(2) * erfcinv(2 * BER) and Q_ASI = J^-1(ASI) / 2, both reported as
20*log10.  The scaling makes the two coincide when the L-values are
consistent Gaussian.
"""

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.special import erfc

_LN2 = math.log(2.0)
_GH_NODES = 128


def hard_decide(llrs):
    """Bit decisions from L-values; L < 0 decides 1, ties decide 0."""
    return (np.asarray(llrs) < 0).astype(np.uint8)


def _softplus2(x):
    """log2(1 + exp(-x)) evaluated stably."""
    return np.logaddexp(0.0, -np.asarray(x, dtype=float)) / _LN2


def asi_terms(llrs, bits):
    """Sum and count of the ASI integrand for one block.

    The per-bit terms log2(1 + exp(-L_a)) are summed so that blocks can
    be merged exactly later; ``asi`` of a concatenation is
    1 - total_sum / total_count.
    """
    la = np.where(np.asarray(bits) == 0, 1.0, -1.0) * np.asarray(llrs)
    return float(np.sum(_softplus2(la))), int(la.size)


def asi(llrs, bits):
    """Asymmetric information of L-values against the transmitted bits."""
    s, n = asi_terms(llrs, bits)
    return min(max(1.0 - s / n, 0.0), 1.0)


def ngmi(llrs, bits):
    """Normalized GMI; shares the ASI estimator."""
    return asi(llrs, bits)


def mi_symbolwise(spec, model):
    """Mutual information I(X; Y) of the quantized channel in bits/symbol.

    Exact over the finite output alphabet: the two dimensions are
    conditionally independent given the point, so H(Y|X) splits per
    dimension while H(Y) uses the joint output marginal.
    """
    t = model.trans
    with np.errstate(divide="ignore", invalid="ignore"):
        row_ent = -np.nansum(np.where(t > 0, t * np.log2(t), 0.0), axis=1)
    li = spec.point_dim_index[:, 0]
    lq = spec.point_dim_index[:, 1]
    h_cond = float(np.sum(spec.prior * (row_ent[li] + row_ent[lq])))
    joint = np.einsum("x,xb,xc->bc", spec.prior, t[li], t[lq])
    mask = joint > 0
    h_out = float(-np.sum(joint[mask] * np.log2(joint[mask])))
    return h_out - h_cond


def asi_over_dmc(tables, spec, true_model):
    """Exact expectation of the ASI estimator over the quantized channel.

    ``tables`` holds per-bit L-values for every output pair, shape
    (n_bins, n_bins, m), as produced by the demapper.  No Monte-Carlo
    noise: the average runs over the full finite output alphabet under
    the true transition law, so invariance and ordering properties can
    be asserted tightly in tests.
    """
    t = true_model.trans
    m = tables.shape[2]
    total = 0.0
    for x in range(spec.order):
        li, lq = spec.point_dim_index[x]
        p_joint = np.outer(t[li], t[lq])
        signs = np.where(spec.labels[x] == 0, 1.0, -1.0)
        la = tables * signs[None, None, :]
        terms = _softplus2(la)
        total += spec.prior[x] * float(np.sum(p_joint[:, :, None] * terms))
    return min(max(1.0 - total / m, 0.0), 1.0)


_gh_nodes, _gh_weights = np.polynomial.hermite.hermgauss(_GH_NODES)


def j_function(sigma):
    """Information transfer of a consistent Gaussian L-value channel.

    J(sigma) = 1 - E[log2(1 + exp(-L))] with L ~ N(sigma^2/2, sigma^2),
    evaluated by Gauss-Hermite quadrature.
    """
    sigma = float(sigma)
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return 0.0
    l = sigma**2 / 2 + math.sqrt(2.0) * sigma * _gh_nodes
    val = 1.0 - float(np.sum(_gh_weights * _softplus2(l))) / math.sqrt(math.pi)
    return min(max(val, 0.0), 1.0)


def j_inverse(value, tol=1e-12):
    """Inverse of :func:`j_function` by bisection."""
    v = float(value)
    if not 0.0 <= v < 1.0:
        raise ValueError("j_inverse needs a value in [0, 1)")
    if v == 0.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while j_function(hi) < v:
        hi *= 2
        if hi > 1e4:
            raise ValueError("value too close to one")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if j_function(mid) < v:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, lo):
            break
    return 0.5 * (lo + hi)


def erfc_inv(y):
    """Inverse complementary error function on (0, 2).

    Newton iterations on log(erfc) from a piecewise asymptotic initial
    guess; the log form keeps the update stable for arguments deep in
    the tail.
    """
    y = float(y)
    if not 0.0 < y < 2.0:
        raise ValueError("erfc_inv needs an argument in (0, 2)")
    if y == 1.0:
        return 0.0
    if y > 1.0:
        return -erfc_inv(2.0 - y)
    if y > 0.5:
        x = (1.0 - y) * math.sqrt(math.pi) / 2.0  # erfc(x) ~ 1 - 2x/sqrt(pi)
    else:
        t = -math.log(y * math.sqrt(math.pi))
        t = max(t, 1e-12)
        x = math.sqrt(max(t - 0.5 * math.log(max(t, 1.1)), 1e-12))
    target = math.log(y)
    for _ in range(100):
        e = float(erfc(x))
        if e <= 0.0:
            x *= 0.5
            continue
        g = math.log(e) - target
        # d/dx log erfc(x) = -2 exp(-x^2) / (sqrt(pi) erfc(x))
        slope = -2.0 * math.exp(-x * x) / (math.sqrt(math.pi) * e)
        step = g / slope
        x_new = x - step
        if x_new <= 0 and y < 1.0:
            x_new = x / 2 if y > 0.5 else x * 1.5
        if abs(x_new - x) <= 1e-12 * max(1.0, abs(x)):
            return x_new
        x = x_new
    return x


def qfactor_ber_db(ber):
    """Q-factor, in dB, of a pre-FEC bit error rate."""
    b = float(ber)
    if b <= 0.0:
        return math.inf
    if b >= 0.5:
        return -math.inf
    q = math.sqrt(2.0) * erfc_inv(2.0 * b)
    return 20.0 * math.log10(q)


def qfactor_asi_db(asi_value):
    """Q-factor, in dB, of an ASI value via the inverse J-function."""
    a = float(asi_value)
    if a >= 1.0:
        return math.inf
    if a <= 0.0:
        return -math.inf
    q = j_inverse(a) / 2.0
    if q <= 0.0:
        return -math.inf
    return 20.0 * math.log10(q)


def wilson_interval(errors, trials, z=1.96):
    """Wilson score interval for an error proportion."""
    if trials <= 0:
        return 0.0, 1.0
    p = errors / trials
    denom = 1.0 + z**2 / trials
    center = (p + z**2 / (2 * trials)) / denom
    half = (
        z * math.sqrt(p * (1 - p) / trials + z**2 / (4 * trials**2)) / denom
    )
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class Tally:
    """Mergeable decision and L-value counts for one or more frames.

    ``la_sum`` carries the summed ASI integrand; everything else is an
    integer count.  Tallies from different frames merge by addition, and
    order-independent aggregation uses ``aggregate`` which applies exact
    summation to the float field.
    """

    frames: int = 0
    pre_errors: int = 0
    pre_bits: int = 0
    sym_errors: int = 0
    symbols: int = 0
    post_errors: int = 0
    post_bits: int = 0
    e2e_errors: int = 0
    e2e_bits: int = 0
    la_sum: float = 0.0
    la_bits: int = 0
    flips: int = 0
    flip_bits: int = 0
    iterations: int = 0
    parity_failures: int = 0

    def merged(self, other):
        out = Tally()
        for f in fields(Tally):
            setattr(out, f.name, getattr(self, f.name) + getattr(other, f.name))
        return out


def aggregate(tallies):
    """Fold per-frame tallies into one, with exact float summation.

    The float field uses ``math.fsum`` over the tallies in the order
    given, so the result is bit-identical for any worker partitioning
    that preserves frame order.
    """
    tallies = list(tallies)
    out = Tally()
    for f in fields(Tally):
        if f.name == "la_sum":
            continue
        setattr(out, f.name, sum(getattr(t, f.name) for t in tallies))
    out.la_sum = math.fsum(t.la_sum for t in tallies)
    return out


@dataclass
class MetricsReport:
    """One operating point's metrics, aligned with the CSV schema."""

    scheme: str
    scenario: str
    snr_tr_db: float
    snr_aux_db: float
    relative_snr_db: float
    frames: int
    ber_pre: float
    ser: float
    asi: float
    ngmi: float
    mi_bits: float
    q_ber_db: float
    q_asi_db: float
    ber_post: float
    ber_e2e: float
    seed: int

    @classmethod
    def from_tally(cls, tally, *, scheme, scenario, snr_tr_db, snr_aux_db,
                   relative_snr_db, mi_bits, seed):
        ber_pre = tally.pre_errors / tally.pre_bits if tally.pre_bits else 0.0
        ser = tally.sym_errors / tally.symbols if tally.symbols else 0.0
        ber_post = (
            tally.post_errors / tally.post_bits if tally.post_bits else 0.0
        )
        ber_e2e = tally.e2e_errors / tally.e2e_bits if tally.e2e_bits else 0.0
        asi_val = (
            min(max(1.0 - tally.la_sum / tally.la_bits, 0.0), 1.0)
            if tally.la_bits
            else 0.0
        )
        return cls(
            scheme=scheme,
            scenario=scenario,
            snr_tr_db=snr_tr_db,
            snr_aux_db=snr_aux_db,
            relative_snr_db=relative_snr_db,
            frames=tally.frames,
            ber_pre=ber_pre,
            ser=ser,
            asi=asi_val,
            ngmi=asi_val,
            mi_bits=mi_bits,
            q_ber_db=qfactor_ber_db(ber_pre),
            q_asi_db=qfactor_asi_db(asi_val),
            ber_post=ber_post,
            ber_e2e=ber_e2e,
            seed=seed,
        )


CSV_HEADER = (
    "scheme,scenario,snr_tr_db,snr_aux_db,relative_snr_db,frames,"
    "ber_pre,ser,asi,ngmi,mi_bits,q_ber_db,q_asi_db,ber_post,ber_e2e,seed"
)


def report_csv_row(report):
    """Serialize a report to one CSV line matching ``CSV_HEADER``."""
    def num(x):
        if isinstance(x, float):
            return format(x, ".10g")
        return str(x)

    vals = [
        report.scheme,
        report.scenario,
        num(report.snr_tr_db),
        num(report.snr_aux_db),
        num(report.relative_snr_db),
        str(report.frames),
        num(report.ber_pre),
        num(report.ser),
        num(report.asi),
        num(report.ngmi),
        num(report.mi_bits),
        num(report.q_ber_db),
        num(report.q_asi_db),
        num(report.ber_post),
        num(report.ber_e2e),
        str(report.seed),
    ]
    return ",".join(vals)
