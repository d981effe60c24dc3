"""Sweep and threshold-search drivers behind the command line.

Work is fanned out per frame to a process pool and merged back in
(point index, frame index) order, so a run's CSV is byte-identical for
any worker count.  Every frame derives its generator from
``SeedSequence((base_seed, point_index, frame_index))`` alone.
"""

import logging
import math
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np

from . import metrics, schemes
from .errors import BracketError, ConfigurationError

log = logging.getLogger("bitlink")

SCENARIOS = ("matched", "fixed_aux", "fixed_tr")


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: schemes.SchemeConfig
    scenario: str = "matched"
    snr_start_db: float = 10.0
    snr_stop_db: float = 12.0
    snr_step_db: float = 0.5
    snr_lim_db: float | None = None
    frames: int = 10
    seed: int = 1
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.scenario!r}")
        if self.snr_step_db <= 0:
            raise ConfigurationError("snr_step_db must be positive")
        if self.snr_stop_db < self.snr_start_db:
            raise ConfigurationError("snr_stop_db must be >= snr_start_db")
        if self.frames < 1:
            raise ConfigurationError("frames must be >= 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.scenario != "matched" and self.snr_lim_db is None:
            raise ConfigurationError(
                f"scenario {self.scenario!r} requires snr_lim_db"
            )

    def grid(self):
        span = self.snr_stop_db - self.snr_start_db
        n = int(round(span / self.snr_step_db)) + 1
        return self.snr_start_db + self.snr_step_db * np.arange(n)

    def point_snrs(self, value):
        """(snr_tr_db, snr_aux_db) for one grid value."""
        if self.scenario == "matched":
            return value, value
        if self.scenario == "fixed_aux":
            return value, self.snr_lim_db
        return self.snr_lim_db, value

    def relative_snr(self, value):
        if self.snr_lim_db is None:
            return math.nan
        return value - self.snr_lim_db


def _frame_job(args):
    config, snr_tr, snr_aux, seed, point_idx, frame_idx = args
    rng = np.random.default_rng(
        np.random.SeedSequence((seed, point_idx, frame_idx))
    )
    return schemes.run_frame(config, snr_tr, snr_aux, rng)


def _run_jobs(jobs, workers):
    """Yield per-frame tallies in submission order."""
    if workers == 1:
        for job in jobs:
            yield _frame_job(job)
        return
    chunk = max(1, len(jobs) // (4 * workers))
    with Pool(workers) as pool:
        yield from pool.imap(_frame_job, jobs, chunksize=chunk)


def run_point(scheme, snr_tr, snr_aux, frames, seed, point_idx=0, workers=1):
    """Aggregate tally of one operating point."""
    jobs = [
        (scheme, snr_tr, snr_aux, seed, point_idx, f) for f in range(frames)
    ]
    return metrics.aggregate(_run_jobs(jobs, workers))


def run_sweep(config):
    """Simulate the whole grid; returns a list of MetricsReport."""
    grid = config.grid()
    jobs = []
    for p, value in enumerate(grid):
        snr_tr, snr_aux = config.point_snrs(value)
        jobs.extend(
            (config.scheme, snr_tr, snr_aux, config.seed, p, f)
            for f in range(config.frames)
        )
    results = _run_jobs(jobs, config.workers)

    plan = schemes.get_plan(config.scheme)
    reports = []
    for p, value in enumerate(grid):
        tally = metrics.aggregate(
            next(results) for _ in range(config.frames)
        )
        snr_tr, snr_aux = config.point_snrs(value)
        pipe = plan.pipeline(snr_tr, snr_aux)
        mi = metrics.mi_symbolwise(plan.spec, pipe.true_model)
        reports.append(metrics.MetricsReport.from_tally(
            tally,
            scheme=config.scheme.label,
            scenario=config.scenario,
            snr_tr_db=snr_tr,
            snr_aux_db=snr_aux,
            relative_snr_db=config.relative_snr(value),
            mi_bits=mi,
            seed=config.seed,
        ))
        log.info("point %d/%d done: snr_tr=%.4g ber_post=%.3g",
                 p + 1, len(grid), snr_tr, reports[-1].ber_post)
    return reports


def write_csv(reports, path):
    with open(path, "w") as fh:
        fh.write(metrics.CSV_HEADER + "\n")
        for report in reports:
            fh.write(metrics.report_csv_row(report) + "\n")


@dataclass
class Probe:
    snr_db: float
    frames: int
    errors: int
    bits: int
    verdict: str

    @property
    def ber(self):
        return self.errors / self.bits


@dataclass
class ThresholdResult:
    snr_lim_db: float
    ci_db: tuple
    target_ber: float
    probes: list = field(default_factory=list)


def _classify(errors, bits, target):
    lo, hi = metrics.wilson_interval(errors, bits)
    if hi < target:
        return "below"
    if lo > target:
        return "above"
    return "open"


def _probe(scheme, snr_db, target_ber, seed, probe_idx, workers,
           max_frames, post_bits, min_frames):
    """Adaptive Monte-Carlo probe of one SNR; grows until classified."""
    base = max(min_frames, math.ceil(20.0 / (target_ber * post_bits)))
    frames = 0
    tally = metrics.Tally()
    while True:
        batch = base if frames == 0 else min(frames, max_frames - frames)
        jobs = [
            (scheme, snr_db, snr_db, seed, probe_idx, frames + f)
            for f in range(batch)
        ]
        tally = metrics.aggregate(
            [tally] + list(_run_jobs(jobs, workers))
        )
        frames += batch
        verdict = _classify(tally.post_errors, tally.post_bits, target_ber)
        if verdict != "open" or frames >= max_frames:
            break
    if verdict == "open":
        ber = tally.post_errors / tally.post_bits
        verdict = "below" if ber <= target_ber else "above"
    probe = Probe(snr_db, frames, tally.post_errors, tally.post_bits, verdict)
    log.info("probe %d: snr=%.4g frames=%d ber=%.3g -> %s",
             probe_idx, snr_db, frames, probe.ber, verdict)
    return probe


def run_threshold(scheme, search_lo_db, search_hi_db, target_ber=1e-4,
                  tolerance_db=0.05, seed=1, workers=1,
                  max_frames_per_probe=96, min_frames_per_probe=8):
    """Bisect for the SNR where matched post-FEC BER crosses ``target_ber``.

    The bracket must straddle the crossing: the low edge above target,
    the high edge below.  The returned estimate interpolates the last
    bracketing probes on a log-BER scale; the CI is the final bracket.
    """
    if search_hi_db <= search_lo_db:
        raise ConfigurationError("search_hi_db must exceed search_lo_db")
    plan = schemes.get_plan(scheme)
    post_bits = plan.post_bits_per_frame
    probes = []
    idx = 0

    def probe_at(snr):
        nonlocal idx
        p = _probe(scheme, snr, target_ber, seed, idx, workers,
                   max_frames_per_probe, post_bits, min_frames_per_probe)
        idx += 1
        probes.append(p)
        return p

    lo = probe_at(search_lo_db)
    hi = probe_at(search_hi_db)
    if lo.verdict != "above" or hi.verdict != "below":
        raise BracketError(
            "no crossing in [%g, %g] dB: ber(%g)=%.3g, ber(%g)=%.3g"
            % (search_lo_db, search_hi_db, search_lo_db, lo.ber,
               search_hi_db, hi.ber)
        )
    while hi.snr_db - lo.snr_db > tolerance_db:
        mid = probe_at(0.5 * (lo.snr_db + hi.snr_db))
        if mid.verdict == "above":
            lo = mid
        else:
            hi = mid

    # Log-linear interpolation between the final bracket probes; a clean
    # high edge (zero errors) pins the estimate to the bracket midpoint.
    if hi.errors > 0 and lo.errors > 0:
        la, lb = math.log10(lo.ber), math.log10(hi.ber)
        t = (math.log10(target_ber) - la) / (lb - la)
        estimate = lo.snr_db + t * (hi.snr_db - lo.snr_db)
    else:
        estimate = 0.5 * (lo.snr_db + hi.snr_db)
    result = ThresholdResult(
        snr_lim_db=estimate,
        ci_db=(lo.snr_db, hi.snr_db),
        target_ber=target_ber,
        probes=probes,
    )
    log.info("threshold: %.3f dB (bracket [%.3f, %.3f])",
             estimate, lo.snr_db, hi.snr_db)
    return result
