"""Command-line front end: ``blurguard {protect,purify,eval,spectrum}``.

Every command accepts ``--config FILE`` with flat ``key = value`` lines (or a
JSON run report, whose ``config`` block is reused). Command-line flags
override file values. Unknown keys are rejected.

Exit status: 0 success, 1 internal error, 2 bad user input.
"""

import argparse
from contextlib import contextmanager
from fractions import Fraction
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .image import ImageFormatError, canonicalize_masks, load_image, load_masks, save_image
from .metrics import evaluate
from .objectives import parse_objective
from .protect import ProtectConfig, protect
from .purify import DEFAULT_BATTERY, parse_battery, parse_op, purify
from .spectrum import forward_spectrum, rapsd

log = logging.getLogger("blurguard")

DEFAULT_BATTERY_SPEC = ";".join(op.spec for op in DEFAULT_BATTERY)


class UserError(Exception):
    pass


def fraction(text):
    """Parse ``0.0627`` or ``16/255`` to float."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number or fraction: {text!r}") from None


def optional_float(text):
    return None if text.strip().lower() in ("", "none") else fraction(text)


def boolean(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


# key -> (type, default, help); shared by all commands so one file can drive a whole run
RUN_KEYS = {
    "input": (str, None, "input PNG (the original image for eval)"),
    "masks": (str, None, "directory of region mask PNGs (lexicographic order)"),
    "output": (str, None, "output path (PNG, or CSV for spectrum)"),
    "report": (str, None, "JSON report path"),
    "protected": (str, None, "protected PNG to evaluate"),
    "csv": (str, None, "optional CSV export of per-purifier rows"),
    "op": (str, None, "purifier spec, e.g. jpeg:65 or chain(noise:0.05,rescale:2)"),
    "objective": (str, "ref_encoder:seed=0", "ref_encoder[:seed=N] or pool[:block=N]"),
    "battery": (str, DEFAULT_BATTERY_SPEC, "';'-separated purifier specs ('' for none)"),
    "epsilon": (fraction, 16 / 255, "l-infinity budget, e.g. 16/255"),
    "lambda": (fraction, 10.0, "spectrum penalty weight"),
    "t1": (int, 50, "Stage-1 Adam steps"),
    "t2": (int, 100, "Stage-2 PGD steps"),
    "gamma1": (fraction, 0.1, "Adam learning rate"),
    "gamma2": (fraction, 20.0, "PGD step size"),
    "k": (int, 7, "blur kernel radius"),
    "bands": (int, 32, "number of radial bands"),
    "seed": (int, 0, "seed of the Stage-1 noise draw"),
    "delta0_scale": (optional_float, None, "std of the Stage-1 noise (default: epsilon)"),
    "fixed_sigma": (optional_float, None, "skip Stage 1 and blur every region with this sigma"),
    "adam_beta1": (fraction, 0.9, "Adam beta1"),
    "adam_beta2": (fraction, 0.999, "Adam beta2"),
    "adam_eps": (fraction, 1e-8, "Adam epsilon"),
    "timing": (boolean, False, "record wall time in the report (breaks byte-identical reruns)"),
}


def read_config(path):
    """Read a key=value file or a JSON report's ``config`` block into raw strings."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UserError(f"config: cannot read {path}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)["config"]
        except (ValueError, KeyError, TypeError):
            raise UserError(f"config: {path} is JSON but has no 'config' object") from None
        items = {k: "" if v is None else str(v) for k, v in data.items()}
    else:
        items = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, eq, val = line.partition("=")
            if not eq:
                raise UserError(f"config: {path}:{n}: expected key = value")
            items[key.strip()] = val.strip()
    unknown = sorted(set(items) - set(RUN_KEYS))
    if unknown:
        raise UserError(f"config: unknown key(s) {', '.join(unknown)}")
    values = {}
    for key, raw in items.items():
        conv = RUN_KEYS[key][0]
        try:
            values[key] = conv(raw)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UserError(f"config: bad value for {key}: {exc}") from None
    return values


def build_parser():
    parser = argparse.ArgumentParser(prog="blurguard", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "protect": ("protect an image", ["input", "masks", "output", "report", "objective", "epsilon", "lambda",
                                         "t1", "t2", "gamma1", "gamma2", "k", "bands", "seed", "delta0_scale",
                                         "fixed_sigma", "adam_beta1", "adam_beta2", "adam_eps", "timing"]),
        "purify": ("apply a purification transform", ["input", "op", "output"]),
        "eval": ("worst-case evaluation under a purifier battery",
                 ["input", "protected", "objective", "battery", "report", "csv"]),
        "spectrum": ("radially averaged power spectrum as CSV", ["input", "bands", "output"]),
    }
    for name, (help_text, keys) in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value config file or a previous JSON report")
        for key in keys:
            conv, _, key_help = RUN_KEYS[key]
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, type=conv, default=None, help=key_help)
    return parser


def resolve(args):
    """Merge defaults < config file < flags into a flat dict of every run key."""
    cfg = {k: spec[1] for k, spec in RUN_KEYS.items()}
    if args.config:
        cfg.update(read_config(args.config))
    for key in RUN_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def require(cfg, *keys):
    missing = [k for k in keys if not cfg.get(k)]
    if missing:
        raise UserError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


@contextmanager
def stage(name):
    try:
        yield
    except UserError:
        raise
    except FileNotFoundError as exc:
        detail = f"{exc.strerror}: {exc.filename}" if exc.filename else str(exc)
        raise UserError(f"{name}: {detail}") from None
    except (ValueError, ImageFormatError, OSError) as exc:
        raise UserError(f"{name}: {exc}") from None


def protect_config(cfg):
    return ProtectConfig(
        epsilon=cfg["epsilon"], T1=cfg["t1"], T2=cfg["t2"], gamma1=cfg["gamma1"], gamma2=cfg["gamma2"],
        lam=cfg["lambda"], k=cfg["k"], B=cfg["bands"], seed=cfg["seed"], delta0_scale=cfg["delta0_scale"],
        adam_beta1=cfg["adam_beta1"], adam_beta2=cfg["adam_beta2"], adam_eps=cfg["adam_eps"],
        fixed_sigma=cfg["fixed_sigma"],
    )


def echo(cfg, keys):
    """Config values as strings that :func:`read_config` maps back to the same values."""
    out = {}
    for k in keys:
        v = cfg[k]
        out[k] = None if v is None else (repr(v) if isinstance(v, float) else str(v))
    return out


def write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


def cmd_protect(cfg):
    require(cfg, "input", "output")
    start = time.perf_counter()
    with stage("input"):
        x = load_image(cfg["input"])
    with stage("masks"):
        masks = load_masks(cfg["masks"], x.shape[:2]) if cfg["masks"] else canonicalize_masks([], x.shape[:2])
    with stage("objective"):
        objective = parse_objective(cfg["objective"])
        pcfg = protect_config(cfg)
    with stage("protect"):
        result = protect(x, masks, objective, pcfg)
    with stage("output"):
        save_image(result.xhat, cfg["output"])
    elapsed = time.perf_counter() - start
    log.info("protected %s in %.2fs (sigma per region: %s)", cfg["input"], elapsed, np.round(result.sigma, 4).tolist())
    if cfg["report"]:
        keys = [k for k in RUN_KEYS if k not in ("protected", "csv", "op", "battery")]
        report = {
            "command": "protect",
            "config": echo(cfg, keys),
            "regions": [str(label) for label in masks.labels],
            "sigma": result.sigma.tolist(),
            "omega": result.omega.tolist(),
            "trace_stage1": {"l_freq": result.trace_stage1.tolist()},
            "trace_stage2": {"l_adv": result.trace_stage2[:, 0].tolist(), "l_freq": result.trace_stage2[:, 1].tolist()},
            "delta_linf": float(np.max(np.abs(result.delta))),
        }
        if cfg["timing"]:
            report["wall_time_s"] = elapsed
        with stage("report"):
            write_json(cfg["report"], report)
    return 0


def cmd_purify(cfg):
    require(cfg, "input", "op", "output")
    with stage("input"):
        img = load_image(cfg["input"])
    with stage("op"):
        op = parse_op(cfg["op"])
    with stage("purify"):
        out = purify(img, op)
    with stage("output"):
        save_image(out, cfg["output"])
    return 0


def cmd_eval(cfg):
    require(cfg, "input", "protected", "report")
    with stage("input"):
        x = load_image(cfg["input"])
    with stage("protected"):
        xhat = load_image(cfg["protected"])
    with stage("battery"):
        battery = parse_battery(cfg["battery"])
    with stage("objective"):
        objective = parse_objective(cfg["objective"])
    with stage("eval"):
        report = evaluate(x, xhat, battery, objective)
    with stage("report"):
        Path(cfg["report"]).write_text(report.to_json(), encoding="utf-8")
        if cfg["csv"]:
            Path(cfg["csv"]).write_text(report.to_csv(), encoding="utf-8")
    return 0


def spectrum_csv(img, bands):
    prof = rapsd(forward_spectrum(img), bands)
    edges = prof.band_edges()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["band_index", "radius_lo", "radius_hi", "band_size", "rapsd_value"])
    for b in range(prof.band_count):
        writer.writerow([b, repr(float(edges[b])), repr(float(edges[b + 1])), int(prof.band_sizes[b]), repr(float(prof.values[b]))])
    return buf.getvalue()


def cmd_spectrum(cfg):
    require(cfg, "input")
    with stage("input"):
        img = load_image(cfg["input"])
    with stage("spectrum"):
        text = spectrum_csv(img, cfg["bands"])
    if cfg["output"]:
        with stage("output"):
            Path(cfg["output"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {"protect": cmd_protect, "purify": cmd_purify, "eval": cmd_eval, "spectrum": cmd_spectrum}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except UserError as exc:
        print(f"blurguard {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"blurguard {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
