"""Transmission schemes: frame pipelines from source bits to tallies.

Three scheme kinds:

``bicm_uniform``
    Classic BICM: one LDPC codeword, a fixed seeded bit interleaver,
    Gray-labeled uniform QAM, bitwise demapping, soft decoding.  When
    the label width does not divide the code length the last symbols are
    completed with random pad bits whose L-values are discarded.
``bicm_ps``
    Probabilistic amplitude shaping on 64-QAM: CCDM blocks produce the
    amplitude sequence, whose label bits fill the leading systematic
    positions of the codeword; the remaining systematic bits and all
    parity bits ride on the (uniform) sign bits.  The interleaver
    permutes within classes: amplitudes move as units (their label bits
    stay together), sign bits permute freely.
``mlc_ps``
    Multilevel coding with multistage decoding on set-partition shaped
    64-QAM: the sign bits of both dimensions form the full codeword
    (soft FEC protects only that tributary), amplitudes are CCDM-shaped
    and uncoded; stage two demaps amplitude bits conditioned on the
    decoded signs and hard-decides them.

Per-frame randomness comes from one generator with a documented draw
order (source bits, then pads where present, then the channel), so a
frame is reproducible from (base seed, point index, frame index) alone
regardless of how frames are batched across workers.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import shaping
from .channel import build_dmc, sample
from .constellation import (
    amplitude_bits_to_levels,
    amplitude_levels_to_bits,
    build_shaped_qam64,
    build_uniform_qam,
    symbol_entropy,
)
from .demapper import AuxChannel, Demapper, LlrQuantConfig, quantize_llrs
from .errors import ConfigurationError
from .fec import code_by_name, ldpc_decode, ldpc_encode
from .metrics import Tally, asi_terms, hard_decide

SCHEME_KINDS = ("bicm_uniform", "bicm_ps", "mlc_ps")


@dataclass(frozen=True)
class SchemeConfig:
    """Complete, hashable description of one transmission scheme."""

    kind: str
    order: int = 64
    labeling: str = "gray"
    target_entropy: float = 0.0      # symbol entropy for shaped kinds
    ccdm_block: int = 216
    code_name: str = "dvbs2-like-r45"
    demap_mode: str = "exact_map"
    decoder_mode: str = "sum-product"
    max_iterations: int = 20
    lquant: LlrQuantConfig = LlrQuantConfig()
    interleaver_seed: int = 24601
    quantizer_bits: int = 7
    genie_stage2: bool = False
    # How amplitude sub-label bits fill the systematic region of a PS
    # codeword: "paired" keeps each amplitude's bits adjacent,
    # "plane_msb_first"/"plane_lsb_first" lay down whole bit planes.
    amp_bit_order: str = "paired"
    # Uniform sign payload ahead of the amplitude bits instead of after.
    sign_payload_first: bool = False

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ConfigurationError(f"unknown scheme kind {self.kind!r}")
        if self.kind != "bicm_uniform":
            if self.order != 64:
                raise ConfigurationError("shaped schemes are 64-QAM")
            if not 4.0 < self.target_entropy < 6.0:
                raise ConfigurationError(
                    "shaped schemes need a symbol entropy in (4, 6)"
                )
        if self.kind == "mlc_ps" and self.labeling != "set_partition":
            raise ConfigurationError("mlc_ps requires set_partition labeling")
        if self.amp_bit_order not in (
            "paired", "plane_msb_first", "plane_lsb_first"
        ):
            raise ConfigurationError(
                f"unknown amp_bit_order {self.amp_bit_order!r}"
            )

    @property
    def label(self):
        """Scheme name used in CSV rows."""
        if self.kind == "bicm_uniform":
            return f"bicm-qam{self.order}"
        tag = "bicm-ps" if self.kind == "bicm_ps" else "mlc-ps"
        return f"{tag}{self.order}-h{self.target_entropy:g}"


def replace_mode(config, demap_mode):
    """Copy of ``config`` with another demapping mode."""
    if config.demap_mode == demap_mode:
        return config
    return replace(config, demap_mode=demap_mode)


def make_scheme(kind, **kwargs):
    """Factory with per-kind defaults.

    ``bicm_uniform`` takes ``order`` and ``labeling``; the shaped kinds
    take ``target_entropy`` (symbol entropy in bits), defaulting to 5.2
    for ``bicm_ps`` and 4.6 for ``mlc_ps``.
    """
    if kind == "bicm_ps":
        kwargs.setdefault("target_entropy", 5.2)
        kwargs.setdefault("amp_bit_order", "plane_msb_first")
    elif kind == "mlc_ps":
        kwargs.setdefault("target_entropy", 4.6)
        kwargs.setdefault("labeling", "set_partition")
    return SchemeConfig(kind=kind, **kwargs)


class SchemePlan:
    """Derived, immutable frame layout for a scheme configuration."""

    def __init__(self, config):
        self.config = config
        self.code = code_by_name(config.code_name)
        n = self.code.n
        k = self.code.k
        rng = np.random.default_rng(config.interleaver_seed)
        if config.kind == "bicm_uniform":
            self.spec = build_uniform_qam(config.order, config.labeling)
            m = self.spec.bits_per_symbol
            self.n_symbols = -(-n // m)
            self.pad_bits = self.n_symbols * m - n
            self.perm_code = rng.permutation(n)
            self.mb = None
            self.ccdm = None
        else:
            amp_entropy = (config.target_entropy - 2.0) / 2.0
            self.mb = shaping.find_mb_nu(amp_entropy)
            self.spec = build_shaped_qam64(self.mb.prior, config.labeling)
            m = self.spec.bits_per_symbol
            self.bits_per_amp = m // 2 - 1
            if config.kind == "bicm_ps":
                if n % m:
                    raise ConfigurationError("label width must divide n")
                self.n_symbols = n // m
            else:
                self.n_symbols = n // 2
            self.n_dims = 2 * self.n_symbols
            if self.n_dims % config.ccdm_block:
                raise ConfigurationError(
                    "ccdm_block must divide the amplitudes per frame"
                )
            self.ccdm_blocks = self.n_dims // config.ccdm_block
            comp = shaping.composition_for(self.mb.prior, config.ccdm_block)
            self.ccdm = shaping.ccdm_code(comp)
            if config.kind == "bicm_ps":
                self.amp_code_bits = self.n_dims * self.bits_per_amp
                if self.amp_code_bits >= k:
                    raise ConfigurationError(
                        "code rate too low to cover the amplitude bits"
                    )
                self.sign_payload_bits = k - self.amp_code_bits
                if config.sign_payload_first:
                    self.amp_slice = slice(self.sign_payload_bits, k)
                    self.sign_payload_slice = slice(0, self.sign_payload_bits)
                else:
                    self.amp_slice = slice(0, self.amp_code_bits)
                    self.sign_payload_slice = slice(self.amp_code_bits, k)
                self.perm_amp = rng.permutation(self.n_dims)
                self.perm_sign = rng.permutation(self.n_dims)
            else:
                self.perm_sign = rng.permutation(n)
        self._pipelines = {}

    def amp_stream(self, mat):
        """Order per-amplitude bit columns (n_dims, a) into the codeword."""
        if self.config.amp_bit_order == "paired":
            return mat.reshape(-1)
        planes = mat.T
        if self.config.amp_bit_order == "plane_lsb_first":
            planes = planes[::-1]
        return planes.reshape(-1)

    def amp_unstream(self, stream):
        """Inverse of :meth:`amp_stream`; returns shape (n_dims, a)."""
        a = self.bits_per_amp
        if self.config.amp_bit_order == "paired":
            return stream.reshape(-1, a)
        planes = stream.reshape(a, -1)
        if self.config.amp_bit_order == "plane_lsb_first":
            planes = planes[::-1]
        return planes.T

    def pipeline(self, snr_tr_db, snr_aux_db):
        key = (round(float(snr_tr_db), 9), round(float(snr_aux_db), 9))
        pipe = self._pipelines.get(key)
        if pipe is None:
            pipe = Pipeline(self, *key)
            self._pipelines[key] = pipe
        return pipe

    @property
    def source_bits_per_frame(self):
        cfg = self.config
        if cfg.kind == "bicm_uniform":
            return self.code.k
        if cfg.kind == "bicm_ps":
            return self.ccdm_blocks * self.ccdm.k_bits + self.sign_payload_bits
        return self.code.k + self.ccdm_blocks * self.ccdm.k_bits

    @property
    def post_bits_per_frame(self):
        """Bits counted by the post-FEC BER of one frame."""
        if self.config.kind == "mlc_ps":
            amp_bits = self.n_dims * (self.spec.bits_per_symbol // 2 - 1)
            return self.code.k + amp_bits
        return self.code.k

    @property
    def info_rate(self):
        """Transmitted information bits per QAM symbol."""
        return self.source_bits_per_frame / self.n_symbols


class Pipeline:
    """Channel models and demapping tables for one operating point."""

    def __init__(self, plan, snr_tr_db, snr_aux_db):
        self.plan = plan
        self.snr_tr_db = snr_tr_db
        self.snr_aux_db = snr_aux_db
        cfg = plan.config
        self.true_model = build_dmc(plan.spec, snr_tr_db,
                                    bits=cfg.quantizer_bits)
        aux_model = build_dmc(plan.spec, snr_aux_db, bits=cfg.quantizer_bits,
                              edges=self.true_model.edges)
        self.aux = AuxChannel(snr_aux_db=snr_aux_db, model=aux_model)
        self.demapper = Demapper(plan.spec, self.aux, mode=cfg.demap_mode,
                                 quant=cfg.lquant)


_PLANS = {}


def get_plan(config):
    plan = _PLANS.get(config)
    if plan is None:
        plan = SchemePlan(config)
        _PLANS[config] = plan
    return plan


def _decode(plan, llrs):
    cfg = plan.config
    return ldpc_decode(llrs, plan.code, mode=cfg.decoder_mode,
                       max_iter=cfg.max_iterations)


def _ccdm_source_roundtrip(plan, rng_bits, amp_idx_hat):
    """Rank received amplitudes block by block against the sent bits."""
    code = plan.ccdm
    blocks = plan.ccdm_blocks
    errors = 0
    hat = amp_idx_hat.reshape(blocks, code.block_len)
    for b in range(blocks):
        bits_hat, ok = shaping.ccdm_decode(hat[b], code)
        sent = rng_bits[b]
        if ok:
            errors += int(np.count_nonzero(bits_hat != sent))
        else:
            errors += int(np.count_nonzero(sent))  # all-zero fallback
    return errors


def run_frame(config, snr_tr_db, snr_aux_db, rng, detail=False):
    """Simulate one frame; returns a Tally (and details when asked).

    Draw order from ``rng``: source bits, pad bits where the scheme has
    them, then one uniform block for the channel.
    """
    plan = get_plan(config)
    if config.kind == "bicm_uniform":
        return _run_bicm_uniform(plan, snr_tr_db, snr_aux_db, rng, detail)
    if config.kind == "bicm_ps":
        return _run_bicm_ps(plan, snr_tr_db, snr_aux_db, rng, detail)
    return _run_mlc_ps(plan, snr_tr_db, snr_aux_db, rng, detail)


def _finish(tally, detail, info):
    if detail:
        return tally, info
    return tally


def _run_bicm_uniform(plan, snr_tr_db, snr_aux_db, rng, detail):
    pipe = plan.pipeline(snr_tr_db, snr_aux_db)
    spec = plan.spec
    code = plan.code
    m = spec.bits_per_symbol
    info = rng.integers(0, 2, size=code.k, dtype=np.uint8)
    codeword = ldpc_encode(info, code)
    stream = np.empty(plan.n_symbols * m, dtype=np.uint8)
    stream[plan.perm_code] = codeword
    if plan.pad_bits:
        stream[code.n:] = rng.integers(0, 2, size=plan.pad_bits,
                                       dtype=np.uint8)
    tx_points = spec.map_labels(stream.reshape(plan.n_symbols, m))
    bins = sample(pipe.true_model, spec, tx_points, rng)

    frame = pipe.demapper.llrs(bins)
    llr_stream = frame.llrs.reshape(-1)
    llr_code = llr_stream[plan.perm_code]
    pre_hard = hard_decide(llr_code)
    outcome = _decode(plan, llr_code)
    sym_hat = pipe.demapper.symbol_decisions(bins)

    la_sum, la_bits = asi_terms(llr_code, codeword)
    payload_errors = int(np.count_nonzero(outcome.codeword[:code.k] != info))
    tally = Tally(
        frames=1,
        pre_errors=int(np.count_nonzero(pre_hard != codeword)),
        pre_bits=code.n,
        sym_errors=int(np.count_nonzero(sym_hat != tx_points)),
        symbols=plan.n_symbols,
        post_errors=payload_errors,
        post_bits=code.k,
        e2e_errors=payload_errors,
        e2e_bits=code.k,
        la_sum=la_sum,
        la_bits=la_bits,
        flips=outcome.flip_count,
        flip_bits=code.n,
        iterations=outcome.iterations,
        parity_failures=0 if outcome.parity_ok else 1,
    )
    return _finish(tally, detail, dict(
        codeword=codeword, llr_code=llr_code, outcome=outcome,
        tx_points=tx_points, bins=bins,
    ))


def _run_bicm_ps(plan, snr_tr_db, snr_aux_db, rng, detail):
    pipe = plan.pipeline(snr_tr_db, snr_aux_db)
    spec = plan.spec
    code = plan.code
    bits_per_dim = spec.bits_per_symbol // 2

    amp_source = rng.integers(
        0, 2, size=(plan.ccdm_blocks, plan.ccdm.k_bits), dtype=np.uint8
    )
    amp_idx = np.concatenate(
        [shaping.ccdm_encode(amp_source[b], plan.ccdm)
         for b in range(plan.ccdm_blocks)]
    )
    amp_bits = amplitude_levels_to_bits(spec, amp_idx)
    sign_payload = rng.integers(0, 2, size=plan.sign_payload_bits,
                                dtype=np.uint8)
    payload = np.empty(code.k, dtype=np.uint8)
    payload[plan.amp_slice] = plan.amp_stream(amp_bits)
    payload[plan.sign_payload_slice] = sign_payload
    codeword = ldpc_encode(payload, code)
    sign_stream = np.concatenate(
        [codeword[plan.sign_payload_slice], codeword[code.k:]]
    )

    placed_amp = np.empty(plan.n_dims, dtype=np.int64)
    placed_amp[plan.perm_amp] = amp_idx
    placed_sign = np.empty(plan.n_dims, dtype=np.uint8)
    placed_sign[plan.perm_sign] = sign_stream

    dim_labels = np.empty((plan.n_dims, bits_per_dim), dtype=np.uint8)
    dim_labels[:, 0] = placed_sign
    dim_labels[:, 1:] = amplitude_levels_to_bits(spec, placed_amp)
    labels = dim_labels.reshape(plan.n_symbols, -1)
    tx_points = spec.map_labels(labels)
    bins = sample(pipe.true_model, spec, tx_points, rng)

    frame = pipe.demapper.llrs(bins)
    dim_llrs = frame.llrs.reshape(plan.n_dims, -1)
    amp_llrs = plan.amp_stream(dim_llrs[plan.perm_amp, 1:])
    sign_llrs = dim_llrs[plan.perm_sign, 0]
    llr_code = np.empty(code.n)
    llr_code[plan.amp_slice] = amp_llrs
    llr_code[plan.sign_payload_slice] = sign_llrs[:plan.sign_payload_bits]
    llr_code[code.k:] = sign_llrs[plan.sign_payload_bits:]
    pre_hard = hard_decide(llr_code)
    outcome = _decode(plan, llr_code)
    sym_hat = pipe.demapper.symbol_decisions(bins)

    la_sum, la_bits = asi_terms(llr_code, codeword)
    payload_errors = int(np.count_nonzero(outcome.codeword[:code.k] != payload))

    amp_bits_hat = plan.amp_unstream(outcome.codeword[plan.amp_slice])
    amp_idx_hat = amplitude_bits_to_levels(spec, amp_bits_hat)
    e2e_errors = _ccdm_source_roundtrip(plan, amp_source, amp_idx_hat)
    sign_payload_hat = outcome.codeword[plan.sign_payload_slice]
    e2e_errors += int(np.count_nonzero(sign_payload_hat != sign_payload))

    tally = Tally(
        frames=1,
        pre_errors=int(np.count_nonzero(pre_hard != codeword)),
        pre_bits=code.n,
        sym_errors=int(np.count_nonzero(sym_hat != tx_points)),
        symbols=plan.n_symbols,
        post_errors=payload_errors,
        post_bits=code.k,
        e2e_errors=e2e_errors,
        e2e_bits=plan.source_bits_per_frame,
        la_sum=la_sum,
        la_bits=la_bits,
        flips=outcome.flip_count,
        flip_bits=code.n,
        iterations=outcome.iterations,
        parity_failures=0 if outcome.parity_ok else 1,
    )
    return _finish(tally, detail, dict(
        codeword=codeword, llr_code=llr_code, outcome=outcome,
        tx_points=tx_points, bins=bins, amp_idx=amp_idx,
        placed_amp=placed_amp,
    ))


def _run_mlc_ps(plan, snr_tr_db, snr_aux_db, rng, detail):
    pipe = plan.pipeline(snr_tr_db, snr_aux_db)
    spec = plan.spec
    code = plan.code
    cfg = plan.config
    bits_per_dim = spec.bits_per_symbol // 2

    sign_payload = rng.integers(0, 2, size=code.k, dtype=np.uint8)
    codeword = ldpc_encode(sign_payload, code)
    amp_source = rng.integers(
        0, 2, size=(plan.ccdm_blocks, plan.ccdm.k_bits), dtype=np.uint8
    )
    amp_idx = np.concatenate(
        [shaping.ccdm_encode(amp_source[b], plan.ccdm)
         for b in range(plan.ccdm_blocks)]
    )

    placed_sign = np.empty(plan.n_dims, dtype=np.uint8)
    placed_sign[plan.perm_sign] = codeword

    dim_labels = np.empty((plan.n_dims, bits_per_dim), dtype=np.uint8)
    dim_labels[:, 0] = placed_sign
    dim_labels[:, 1:] = amplitude_levels_to_bits(spec, amp_idx)
    labels = dim_labels.reshape(plan.n_symbols, -1)
    tx_points = spec.map_labels(labels)
    bins = sample(pipe.true_model, spec, tx_points, rng)

    dim_bins = bins.reshape(-1)
    sign_raw = pipe.demapper.sign_llrs(dim_bins)
    sign_q = quantize_llrs(sign_raw, cfg.lquant)
    llr_code = sign_q[plan.perm_sign]
    pre_hard = hard_decide(llr_code)
    outcome = _decode(plan, llr_code)

    if cfg.genie_stage2:
        dec_signs = placed_sign
    else:
        dec_signs = np.empty(plan.n_dims, dtype=np.uint8)
        dec_signs[plan.perm_sign] = outcome.codeword
    amp_llrs = pipe.demapper.conditioned_amp_llrs(dim_bins, dec_signs)
    amp_bits_hat = hard_decide(quantize_llrs(amp_llrs, cfg.lquant))
    amp_idx_hat = amplitude_bits_to_levels(spec, amp_bits_hat)
    sym_hat = pipe.demapper.symbol_decisions(bins)

    la_sum, la_bits = asi_terms(llr_code, codeword)
    payload_errors = int(
        np.count_nonzero(outcome.codeword[:code.k] != sign_payload)
    )
    # Post-FEC BER covers everything the modeled outer hard FEC would
    # consume: the soft-decoded sign payload plus the stage-2 hard
    # amplitude-bit decisions.
    amp_bit_errors = int(np.count_nonzero(
        amplitude_levels_to_bits(spec, amp_idx_hat)
        != amplitude_levels_to_bits(spec, amp_idx)
    ))
    amp_bit_count = plan.n_dims * (bits_per_dim - 1)
    e2e_errors = payload_errors + _ccdm_source_roundtrip(
        plan, amp_source, amp_idx_hat
    )

    tally = Tally(
        frames=1,
        pre_errors=int(np.count_nonzero(pre_hard != codeword)),
        pre_bits=code.n,
        sym_errors=int(np.count_nonzero(sym_hat != tx_points)),
        symbols=plan.n_symbols,
        post_errors=payload_errors + amp_bit_errors,
        post_bits=code.k + amp_bit_count,
        e2e_errors=e2e_errors,
        e2e_bits=plan.source_bits_per_frame,
        la_sum=la_sum,
        la_bits=la_bits,
        flips=outcome.flip_count,
        flip_bits=code.n,
        iterations=outcome.iterations,
        parity_failures=0 if outcome.parity_ok else 1,
    )
    return _finish(tally, detail, dict(
        codeword=codeword, llr_code=llr_code, outcome=outcome,
        tx_points=tx_points, bins=bins, amp_idx=amp_idx,
        amp_idx_hat=amp_idx_hat, dec_signs=dec_signs,
    ))


@dataclass(frozen=True)
class PasRateReport:
    """Rate bookkeeping of a shaped scheme."""

    symbol_entropy: float
    amplitude_entropy: float
    ccdm_rate: float
    rate_loss_per_amplitude: float
    fec_rate: float
    sign_payload_per_symbol: float
    info_rate: float

    def consistent(self, tol=1e-9):
        recomputed = 2.0 * self.ccdm_rate + self.sign_payload_per_symbol
        return abs(recomputed - self.info_rate) <= tol


def pas_rate_check(config):
    """Verify the shaping/coding rate split of a PS scheme."""
    if config.kind == "bicm_uniform":
        raise ConfigurationError("rate split applies to shaped schemes")
    plan = get_plan(config)
    code = plan.code
    if config.kind == "bicm_ps":
        sign_payload = plan.sign_payload_bits / plan.n_symbols
    else:
        sign_payload = code.k / plan.n_symbols
    return PasRateReport(
        symbol_entropy=symbol_entropy(plan.spec),
        amplitude_entropy=plan.mb.entropy,
        ccdm_rate=plan.ccdm.rate,
        rate_loss_per_amplitude=plan.ccdm.rate_loss(plan.mb.prior),
        fec_rate=code.rate,
        sign_payload_per_symbol=sign_payload,
        info_rate=plan.info_rate,
    )
