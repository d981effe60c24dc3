"""Command-line harness: sweeps, threshold searches, offline L-value
analysis, and constellation export.

Configuration comes from an INI file (sections ``[scheme]``, ``[sweep]``,
``[threshold]``) with a handful of flag overrides; results are CSV.  Exit
codes: 0 success, 2 configuration error, 3 I/O or input-data error, 4
threshold bracket failure.
"""

import argparse
import configparser
import logging
import math
import sys

import numpy as np

from . import constellation, experiments, metrics, schemes
from .demapper import LlrQuantConfig
from .errors import BracketError, ConfigurationError

log = logging.getLogger("bitlink")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_BRACKET = 4

LLR_CSV_HEADER = "bit_position,transmitted_bit,llr"


class InputDataError(Exception):
    """Malformed analyze-llr input; message carries the line number."""


def _bool(text):
    table = configparser.ConfigParser.BOOLEAN_STATES
    key = text.strip().lower()
    if key not in table:
        raise ConfigurationError(f"not a boolean: {text!r}")
    return table[key]


_SCHEME_KEYS = {
    "kind": str,
    "order": int,
    "labeling": str,
    "target_entropy": float,
    "ccdm_block": int,
    "code_name": str,
    "demap_mode": str,
    "decoder_mode": str,
    "max_iterations": int,
    "interleaver_seed": int,
    "quantizer_bits": int,
    "llr_clip": float,
    "llr_levels": int,
    "amp_bit_order": str,
    "sign_payload_first": _bool,
    "genie_stage2": _bool,
}

_SWEEP_KEYS = {
    "scenario": str,
    "snr_start_db": float,
    "snr_stop_db": float,
    "snr_step_db": float,
    "snr_lim_db": float,
    "frames": int,
    "seed": int,
    "workers": int,
    "output": str,
}

_THRESHOLD_KEYS = {
    "search_lo_db": float,
    "search_hi_db": float,
    "target_ber": float,
    "tolerance_db": float,
    "seed": int,
    "workers": int,
    "max_frames_per_probe": int,
    "min_frames_per_probe": int,
}


def _read_ini(path):
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";")
    )
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}")
    except configparser.Error as exc:
        raise ConfigurationError(f"bad config {path}: {exc}")
    return parser


def _section(parser, name, keys, required=()):
    if not parser.has_section(name):
        if required:
            raise ConfigurationError(f"config is missing a [{name}] section")
        return {}
    out = {}
    for key, raw in parser.items(name):
        if key not in keys:
            raise ConfigurationError(f"unknown key {key!r} in [{name}]")
        try:
            out[key] = keys[key](raw)
        except ConfigurationError:
            raise
        except ValueError:
            raise ConfigurationError(
                f"bad value for {key!r} in [{name}]: {raw!r}"
            )
    for key in required:
        if key not in out:
            raise ConfigurationError(f"[{name}] needs {key!r}")
    return out


def load_scheme(parser, mode_override=None):
    """Build a SchemeConfig from the ``[scheme]`` section."""
    raw = _section(parser, "scheme", _SCHEME_KEYS, required=("kind",))
    kind = raw.pop("kind")
    clip = raw.pop("llr_clip", None)
    levels = raw.pop("llr_levels", None)
    if clip is not None or levels is not None:
        base = LlrQuantConfig()
        raw["lquant"] = LlrQuantConfig(
            clip=base.clip if clip is None else clip,
            levels=base.levels if levels is None else levels,
        )
    if mode_override is not None:
        raw["demap_mode"] = mode_override
    return schemes.make_scheme(kind, **raw)


def _mode_from_flag(value):
    if value is None:
        return None
    return {"exact-map": "exact_map", "max-log": "max_log"}[value]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bitlink",
        description="Monte-Carlo link simulation and L-value analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, output_help):
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--seed", type=int, help="override base seed")
        p.add_argument("--workers", type=int, help="override worker count")
        p.add_argument("--output", help=output_help)
        p.add_argument(
            "--mode",
            choices=("exact-map", "max-log"),
            help="override the demapping mode",
        )

    p = sub.add_parser("sweep", help="simulate an SNR grid, write CSV")
    common(p, "result CSV path (overrides [sweep] output)")
    p.add_argument("--frames", type=int, help="override frames per point")

    p = sub.add_parser("threshold", help="bisect for the SNR_lim of a scheme")
    common(p, "also write the report to this file")

    p = sub.add_parser(
        "analyze-llr", help="metrics from captured per-bit L-values"
    )
    p.add_argument("input", help="CSV or .npz capture of L-value records")
    p.add_argument("--output", help="write the metrics CSV here (else stdout)")

    p = sub.add_parser(
        "export-constellation", help="write the label table as CSV"
    )
    p.add_argument("--config", required=True, help="INI config file")
    p.add_argument("--output", required=True, help="label table CSV path")
    return parser


def cmd_sweep(args):
    parser = _read_ini(args.config)
    scheme = load_scheme(parser, _mode_from_flag(args.mode))
    raw = _section(parser, "sweep", _SWEEP_KEYS, required=("scenario",))
    for flag in ("seed", "frames", "workers", "output"):
        value = getattr(args, flag)
        if value is not None:
            raw[flag] = value
    output = raw.pop("output", None)
    if output is None:
        raise ConfigurationError(
            "no output path ([sweep] output or --output)"
        )
    config = experiments.ExperimentConfig(scheme=scheme, output=output, **raw)
    reports = experiments.run_sweep(config)
    try:
        experiments.write_csv(reports, output)
    except OSError as exc:
        raise InputDataError(f"cannot write {output}: {exc}")
    log.info("wrote %d rows to %s", len(reports), output)
    return EXIT_OK


def _threshold_report(scheme, result):
    lines = [
        f"scheme={scheme.label}",
        f"target_ber={result.target_ber:g}",
        f"snr_lim_db={result.snr_lim_db:.3f}",
        f"ci_lo_db={result.ci_db[0]:.3f}",
        f"ci_hi_db={result.ci_db[1]:.3f}",
        "probe,snr_db,frames,errors,bits,ber,verdict",
    ]
    for i, p in enumerate(result.probes):
        lines.append(
            f"{i},{p.snr_db:.3f},{p.frames},{p.errors},{p.bits},"
            f"{p.ber:.6g},{p.verdict}"
        )
    return "\n".join(lines) + "\n"


def cmd_threshold(args):
    parser = _read_ini(args.config)
    scheme = load_scheme(parser, _mode_from_flag(args.mode))
    raw = _section(
        parser,
        "threshold",
        _THRESHOLD_KEYS,
        required=("search_lo_db", "search_hi_db"),
    )
    for flag in ("seed", "workers"):
        value = getattr(args, flag)
        if value is not None:
            raw[flag] = value
    lo = raw.pop("search_lo_db")
    hi = raw.pop("search_hi_db")
    result = experiments.run_threshold(scheme, lo, hi, **raw)
    text = _threshold_report(scheme, result)
    sys.stdout.write(text)
    if args.output:
        try:
            with open(args.output, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise InputDataError(f"cannot write {args.output}: {exc}")
    return EXIT_OK


def write_llr_records(path, bit_positions, bits, llrs):
    """Serialize an L-value capture; format chosen by extension (.npz
    binary, anything else CSV)."""
    pos = np.asarray(bit_positions, dtype=np.int64)
    b = np.asarray(bits, dtype=np.uint8)
    l = np.asarray(llrs, dtype=float)
    if not pos.shape == b.shape == l.shape or pos.ndim != 1:
        raise ConfigurationError("records must be equal-length 1-D arrays")
    if str(path).endswith(".npz"):
        np.savez(path, bit_position=pos, transmitted_bit=b, llr=l)
        return
    with open(path, "w") as fh:
        fh.write(LLR_CSV_HEADER + "\n")
        for row in zip(pos, b, l):
            fh.write(f"{row[0]},{row[1]},{row[2]:.10g}\n")


def read_llr_records(path):
    """Load an L-value capture written by :func:`write_llr_records`."""
    if str(path).endswith(".npz"):
        try:
            data = np.load(path)
        except OSError as exc:
            raise InputDataError(f"cannot read {path}: {exc}")
        except ValueError as exc:
            raise InputDataError(f"bad npz file {path}: {exc}")
        for key in ("bit_position", "transmitted_bit", "llr"):
            if key not in data:
                raise InputDataError(f"{path}: missing array {key!r}")
        pos = data["bit_position"]
        bits = data["transmitted_bit"]
        llrs = data["llr"].astype(float)
        if not pos.shape == bits.shape == llrs.shape or pos.ndim != 1:
            raise InputDataError(f"{path}: arrays must be equal-length 1-D")
        if np.isnan(llrs).any():
            raise InputDataError(f"{path}: NaN L-value")
        if not np.isin(bits, (0, 1)).all():
            raise InputDataError(f"{path}: transmitted_bit must be 0 or 1")
        return pos.astype(np.int64), bits.astype(np.uint8), llrs
    pos, bits, llrs = [], [], []
    try:
        fh = open(path)
    except OSError as exc:
        raise InputDataError(f"cannot read {path}: {exc}")
    with fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if lineno == 1 and text == LLR_CSV_HEADER:
                continue
            parts = text.split(",")
            if len(parts) != 3:
                raise InputDataError(
                    f"{path} line {lineno}: expected 3 fields, got "
                    f"{len(parts)}"
                )
            try:
                p = int(parts[0])
                b = int(parts[1])
                l = float(parts[2])
            except ValueError:
                raise InputDataError(
                    f"{path} line {lineno}: unparsable row {text!r}"
                )
            if b not in (0, 1):
                raise InputDataError(
                    f"{path} line {lineno}: transmitted_bit must be 0 or 1"
                )
            if math.isnan(l):
                raise InputDataError(f"{path} line {lineno}: NaN L-value")
            pos.append(p)
            bits.append(b)
            llrs.append(l)
    if not llrs:
        raise InputDataError(f"{path}: no records")
    return (
        np.asarray(pos, dtype=np.int64),
        np.asarray(bits, dtype=np.uint8),
        np.asarray(llrs, dtype=float),
    )


def analyze_llr_records(bits, llrs):
    """Offline metrics of a capture: pre-FEC BER by the sign rule, ASI,
    and both Q-factors.  Quantities that need channel simulation stay NaN."""
    decisions = metrics.hard_decide(llrs)
    ber_pre = float(np.mean(decisions != bits))
    asi_val = metrics.asi(llrs, bits)
    return metrics.MetricsReport(
        scheme="capture",
        scenario="offline",
        snr_tr_db=math.nan,
        snr_aux_db=math.nan,
        relative_snr_db=math.nan,
        frames=1,
        ber_pre=ber_pre,
        ser=math.nan,
        asi=asi_val,
        ngmi=asi_val,
        mi_bits=math.nan,
        q_ber_db=metrics.qfactor_ber_db(ber_pre),
        q_asi_db=metrics.qfactor_asi_db(asi_val),
        ber_post=math.nan,
        ber_e2e=math.nan,
        seed=0,
    )


def cmd_analyze_llr(args):
    _, bits, llrs = read_llr_records(args.input)
    report = analyze_llr_records(bits, llrs)
    text = metrics.CSV_HEADER + "\n" + metrics.report_csv_row(report) + "\n"
    if args.output:
        try:
            with open(args.output, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise InputDataError(f"cannot write {args.output}: {exc}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_export_constellation(args):
    parser = _read_ini(args.config)
    scheme = load_scheme(parser)
    plan = schemes.get_plan(scheme)
    try:
        constellation.export_labels_csv(plan.spec, args.output)
    except OSError as exc:
        raise InputDataError(f"cannot write {args.output}: {exc}")
    log.info("wrote %d labels to %s", plan.spec.order, args.output)
    return EXIT_OK


_COMMANDS = {
    "sweep": cmd_sweep,
    "threshold": cmd_threshold,
    "analyze-llr": cmd_analyze_llr,
    "export-constellation": cmd_export_constellation,
}


def main(argv=None):
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputDataError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except BracketError as exc:
        print(f"bracket error: {exc}", file=sys.stderr)
        return EXIT_BRACKET


if __name__ == "__main__":
    sys.exit(main())
