"""Command-line entry points.

Usage::

    rmscat <subcommand> [--config PATH] [--workers N] [--seed U64]
           [--backend direct|cascade] [--out PATH] [args]

Subcommands: ``filters-audit``, ``scatter``, ``train``, ``eval``,
``selftest``, ``bench``. Exit codes: 0 success, 1 validation failure or
usage error, 2 I/O failure.

The config file is JSON. Every key is optional; unknown keys are rejected::

    {
      "schema_version": 1,
      "scattering": {"J": null, "C": 8, "K": null, "M": 2, "oversampling": 1,
                     "backend": "direct", "variant": "rigid-motion",
                     "pooling": "global-average", "crop": 0.0},
      "morlet": null,
      "angular": {"sigma": 0.715, "xi": 1.0, "sigma_phi": 0.317},
      "train": {"dilation_factors": [1, 1.414, 2, 2.828], "log_delta": 1e-06,
                "basis_dim": "all"},
      "splits": {"train_per_class": 10, "n_splits": 5, "file": null, "index": 0},
      "preprocess": {"size": null, "max_short_side": 480},
      "dataset": null,
      "workers": null,
      "seed": 0
    }

``morlet`` is null (mode and orientation count pick the preset) or an object
with ``sigma``, ``xi``, ``slant``, ``sigma_phi``. Flags win over the file.
"""

import argparse
import copy
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from .classifier import DILATIONS, TrainConfig, classify, evaluate_features, fit_models
from .datasets import (MASK64, MAX_SHORT_SIDE, SplitSpec, import_splits, load_image,
                       make_splits, scan_dataset)
from .rm_wavelets import DEFAULT_ANGULAR, AngularParams
from .scattering import (POOLINGS, VARIANTS, ScatteringConfig, feature_vector, path_lengths,
                         scatter)
from .serialization import read_models, write_features, write_models
from .wavelets2d import MorletParams

SCHEMA_VERSION = 1
SUBCOMMANDS = ("filters-audit", "scatter", "train", "eval", "selftest", "bench")


class UsageError(Exception):
    pass


class ValidationError(Exception):
    pass


# config

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "scattering": {"J": None, "C": 8, "K": None, "M": 2, "oversampling": 1,
                   "backend": "direct", "variant": "rigid-motion",
                   "pooling": "global-average", "crop": 0.0},
    "morlet": None,
    "angular": asdict(DEFAULT_ANGULAR),
    "train": {"dilation_factors": list(DILATIONS), "log_delta": 1e-6, "basis_dim": "all"},
    "splits": {"train_per_class": 10, "n_splits": 5, "file": None, "index": 0},
    "preprocess": {"size": None, "max_short_side": MAX_SHORT_SIDE},
    "dataset": None,
    "workers": None,
    "seed": 0,
}
_MORLET_KEYS = ("sigma", "xi", "slant", "sigma_phi")


def _merge(base, new, where):
    out = copy.deepcopy(base)
    for k, v in new.items():
        if k not in base:
            raise ValidationError(f"unknown config key {where}{k!r}")
        if k == "morlet":
            if v is not None:
                if not isinstance(v, dict) or set(v) != set(_MORLET_KEYS):
                    raise ValidationError(f"morlet must be null or have keys {_MORLET_KEYS}")
            out[k] = copy.deepcopy(v)
        elif isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ValidationError(f"config key {where}{k!r} must be an object")
            out[k] = _merge(base[k], v, f"{where}{k}.")
        else:
            out[k] = v
    return out


def load_config(path=None):
    """Defaults overlaid with the JSON file at ``path``."""
    if path is None:
        return copy.deepcopy(DEFAULTS)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise OSError(f"cannot read config {path}: {e.strerror or e}") from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ValidationError(f"config {path} must hold a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(f"config {path}: schema_version must be {SCHEMA_VERSION}, "
                              f"got {doc.get('schema_version')!r}")
    return _merge(DEFAULTS, doc, "")


def _int(v, name, lo=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(f"{name} must be an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ValidationError(f"{name} must be >= {lo}, got {v}")
    return v


class RunConfig:
    """Validated config plus the module objects built from it."""

    def __init__(self, raw):
        self.raw = raw
        sc = raw["scattering"]
        try:
            params = None if raw["morlet"] is None else MorletParams(**raw["morlet"])
            angular = AngularParams(**raw["angular"])
            self.scattering = ScatteringConfig(
                J=sc["J"], C=sc["C"], K=sc["K"], M=sc["M"], oversampling=sc["oversampling"],
                backend=sc["backend"], params=params, angular=angular)
            t = raw["train"]
            basis = t["basis_dim"]
            self.train = TrainConfig(dilation_factors=tuple(t["dilation_factors"]),
                                     log_delta=t["log_delta"], basis_dim=basis)
        except (TypeError, ValueError) as e:
            raise ValidationError(str(e)) from e
        if sc["variant"] not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}, got {sc['variant']!r}")
        if sc["pooling"] not in POOLINGS:
            raise ValidationError(f"pooling must be one of {POOLINGS}, got {sc['pooling']!r}")
        if not (isinstance(sc["crop"], (int, float)) and 0 <= sc["crop"] < 0.5):
            raise ValidationError(f"crop must lie in [0, 0.5), got {sc['crop']!r}")
        self.variant, self.pooling, self.crop = sc["variant"], sc["pooling"], float(sc["crop"])
        sp = raw["splits"]
        _int(sp["train_per_class"], "splits.train_per_class", 1)
        _int(sp["n_splits"], "splits.n_splits", 1)
        _int(sp["index"], "splits.index", 0)
        seed = _int(raw["seed"], "seed", 0)
        if seed > MASK64:
            raise ValidationError("seed must fit in 64 bits")
        self.split_spec = SplitSpec(sp["train_per_class"], sp["n_splits"], seed)
        pre = raw["preprocess"]
        if pre["size"] is not None:
            if not (isinstance(pre["size"], list) and len(pre["size"]) == 2):
                raise ValidationError("preprocess.size must be null or [height, width]")
            for v in pre["size"]:
                _int(v, "preprocess.size", 8)
        if pre["max_short_side"] is not None:
            _int(pre["max_short_side"], "preprocess.max_short_side", 8)
        if raw["workers"] is not None:
            _int(raw["workers"], "workers", 1)

    @property
    def workers(self):
        return self.raw["workers"] or os.cpu_count() or 1

    def snapshot(self):
        """Config as embedded in output files (workers excluded: outputs do not depend on it)."""
        d = copy.deepcopy(self.raw)
        d.pop("workers")
        return d


# image preparation and features

def prepare_image(x, run):
    """Resize, crop or pad as configured, then center crop to a multiple of ``2^J``."""
    pre = run.raw["preprocess"]
    J = run.scattering.J_for(x.shape)
    if pre["size"] is None:
        m = 2 ** J
        h, w = (x.shape[0] // m) * m, (x.shape[1] // m) * m
        if min(h, w) < 8:
            raise ValidationError(f"image {x.shape} too small for J={J}")
        r0, c0 = (x.shape[0] - h) // 2, (x.shape[1] - w) // 2
        x = x[r0:r0 + h, c0:c0 + w]
    return x


def read_image(path, run):
    pre = run.raw["preprocess"]
    x = load_image(path, crop_or_pad_to=pre["size"], max_short_side=pre["max_short_side"])
    return prepare_image(x, run)


def featurize(x, run):
    """Pooled feature vector, path labels and per-path lengths."""
    out = scatter(x, run.scattering, run.variant)
    v = feature_vector(out, run.pooling, run.crop)
    return v, [p.label() for p in out.paths], path_lengths(out, run.pooling, run.crop)


def _augmented(path, raw):
    """Train-side stack and test-side average of log features over dilations."""
    from .classifier import scale_pooled_features

    run = RunConfig(raw)
    x = read_image(path, run)
    stack = scale_pooled_features(x, lambda y: featurize(y, run)[0], run.train.dilation_factors,
                                  run.train.log_delta, average=False)
    return stack


def _map(fn, items, raw, workers):
    """Ordered map; output does not depend on ``workers``."""
    if workers <= 1 or len(items) <= 1:
        return [fn(i, raw) for i in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items, [raw] * len(items)))


# subcommands

def _emit(doc, out_path):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if out_path:
        _write_text(out_path, text)


def _write_text(path, text):
    try:
        d = os.path.dirname(os.path.abspath(path))
        os.makedirs(d, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e


def cmd_filters_audit(run, args):
    from .rm_wavelets import angular_lp_audit, build_angular_bank
    from .wavelets2d import GATE, build_filter_bank, littlewood_paley_audit

    cfg = run.scattering
    n = args.grid
    mode = "morlet" if cfg.backend == "direct" else "cascade"
    J = cfg.J_for((n, n))
    try:
        fb = build_filter_bank(cfg.params, J=J, C=cfg.C, grid=(n, n), mode=mode, gate=None)
        ab = build_angular_bank(cfg.n_theta, cfg.K_eff, cfg.angular, gate=None)
    except ValueError as e:
        raise ValidationError(str(e)) from e
    rep = littlewood_paley_audit(fb)
    lo, hi = angular_lp_audit(ab)
    spatial_gate = GATE[mode]
    ok2d = rep.epsilon < spatial_gate and rep.max_sum <= 1 + 1e-3
    ok1d = 1 - lo < 0.5 and hi <= 1 + 1e-3
    doc = {"config": run.snapshot(), "grid": [n, n], "J": J,
           "spatial": dict(rep.as_dict(), mode=mode, gate=spatial_gate,
                           params=asdict(fb.params), passed=bool(ok2d)),
           "angular": {"min_sum": lo, "max_sum": hi, "epsilon": 1 - lo, "gate": 0.5,
                       "n_theta": cfg.n_theta, "K": cfg.K_eff, "passed": bool(ok1d)}}
    _emit(doc, args.out)
    return 0 if ok2d and ok1d else 1


def _inputs(paths):
    files = []
    for p in paths:
        if os.path.isdir(p):
            for root, dirs, names in os.walk(p):
                dirs.sort()
                files += [os.path.join(root, n) for n in sorted(names)
                          if n.lower().endswith((".png", ".pgm", ".ppm", ".pnm", ".jpg",
                                                 ".jpeg", ".tif", ".tiff", ".bmp"))]
        elif os.path.isfile(p):
            files.append(p)
        else:
            raise FileNotFoundError(f"input not found: {p}")
    if not files:
        raise FileNotFoundError(f"no images under {', '.join(paths)}")
    return files


def _scatter_one(path, raw):
    run = RunConfig(raw)
    x = read_image(path, run)
    v, labels, lengths = featurize(x, run)
    return v, labels, lengths, list(x.shape)


def cmd_scatter(run, args):
    files = _inputs(args.inputs)
    out = args.out or "features"
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out}: {e.strerror or e}") from e
    results = _map(_scatter_one, files, run.raw, run.workers)
    names = _unique_names(files)
    for f, name, (v, labels, lengths, shape) in zip(files, names, results):
        target = os.path.join(out, name + ".rmscat")
        try:
            write_features(target, v, labels, lengths, run.snapshot(), source=os.path.basename(f),
                           shape=shape, variant=run.variant, pooling=run.pooling, crop=run.crop)
        except OSError as e:
            raise OSError(f"cannot write {target}: {e.strerror or e}") from e
        print(f"{f} -> {target} ({v.size} values)")
    return 0


def _unique_names(files):
    common = os.path.commonpath([os.path.abspath(f) for f in files]) if len(files) > 1 else None
    names = []
    for f in files:
        if common and os.path.abspath(f) != common:
            rel = os.path.relpath(os.path.abspath(f), common)
        else:
            rel = os.path.basename(f)
        names.append(os.path.splitext(rel)[0].replace(os.sep, "__"))
    return names


def _dataset(run, args):
    root = args.dataset or run.raw["dataset"]
    if not root:
        raise ValidationError("no dataset given (positional argument or config 'dataset')")
    if not os.path.isdir(root):
        raise FileNotFoundError(f"dataset directory not found: {root}")
    try:
        manifest = scan_dataset(root)
    except ValueError as e:
        raise ValidationError(str(e)) from e
    sfile = run.raw["splits"]["file"]
    try:
        if sfile:
            splits = import_splits(sfile, manifest)
        else:
            splits = make_splits(manifest, run.split_spec)
    except ValueError as e:
        raise ValidationError(str(e)) from e
    return manifest, splits


def _features(manifest, keys, run):
    paths = [os.path.join(manifest.root, k) for k in keys]
    missing = [p for p in paths if not os.path.isfile(p)]
    if missing:
        raise FileNotFoundError("missing dataset files: " + ", ".join(missing))
    stacks = _map(_augmented, paths, run.raw, run.workers)
    return dict(zip(keys, stacks))


def _preprocessing(run):
    pre = run.raw["preprocess"]
    return {"grayscale": "luma 0.299/0.587/0.114", "range": "[0, 1]",
            "max_short_side": pre["max_short_side"], "crop_or_pad_to": pre["size"],
            "crop_to_multiple_of_2^J": pre["size"] is None,
            "dilations": list(run.train.dilation_factors), "log_delta": run.train.log_delta}


def cmd_train(run, args):
    manifest, splits = _dataset(run, args)
    idx = run.raw["splits"]["index"]
    if idx >= len(splits):
        raise ValidationError(f"split index {idx} out of range ({len(splits)} splits)")
    train, _ = splits[idx]
    feats = _features(manifest, sorted({k for _, k in train}), run)
    by_class = {}
    for c, k in train:
        by_class.setdefault(c, []).append(feats[k])
    models = fit_models({c: np.vstack(v) for c, v in by_class.items()}, run.train)
    out = args.out or "model.rmscatm"
    try:
        write_models(out, models, run.snapshot(), classes=manifest.names,
                     fingerprint=manifest.fingerprint, split_index=idx,
                     train=[[c, k] for c, k in train], preprocessing=_preprocessing(run))
    except OSError as e:
        raise OSError(f"cannot write {out}: {e.strerror or e}") from e
    print(f"wrote {len(models)} class models (dim {models[0].dim}) to {out}")
    return 0


def cmd_eval(run, args):
    manifest, splits = _dataset(run, args)
    if args.model:
        try:
            header, models = read_models(args.model)
        except ValueError as e:
            raise ValidationError(str(e)) from e
        if header.get("fingerprint") != manifest.fingerprint:
            raise ValidationError("model was trained on a different dataset listing")
        _, test = splits[header["split_index"]]
        feats = _features(manifest, sorted({k for _, k in test}), run)
        hits = sum(classify(models, feats[k].mean(axis=0)) == c for c, k in test)
        acc = hits / len(test) if test else 1.0
        report = {"mean_accuracy": acc, "std_accuracy": 0.0, "per_split": [acc],
                  "model": os.path.basename(args.model), "split_index": header["split_index"]}
    else:
        keys = sorted({k for tr, te in splits for _, k in tr + te})
        stacks = _features(manifest, keys, run)
        test_feats = {k: s.mean(axis=0) for k, s in stacks.items()}
        report = evaluate_features(stacks, test_feats, splits, run.train).as_dict()
    report.update(config=run.snapshot(), classes=manifest.names, fingerprint=manifest.fingerprint,
                  n_splits=len(splits), preprocessing=_preprocessing(run))
    _emit(report, args.out)
    return 0


def cmd_selftest(run, args):
    from .selftest import run_selftest

    return 0 if run_selftest(seed=run.split_spec.seed) else 1


def cmd_bench(run, args):
    from .bench import run_bench

    report = run_bench(seed=run.split_spec.seed, repeats=args.repeats, include_taps=not args.quick)
    report["config"] = run.snapshot()
    _emit(report, args.out)
    return 0


COMMANDS = {"filters-audit": cmd_filters_audit, "scatter": cmd_scatter, "train": cmd_train,
            "eval": cmd_eval, "selftest": cmd_selftest, "bench": cmd_bench}


# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _u64(s):
    v = int(s, 0)
    if not 0 <= v <= MASK64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--workers", type=_positive, help="worker processes (default: all CPUs)")
    common.add_argument("--seed", type=_u64, help="unsigned 64-bit seed for splits")
    common.add_argument("--backend", choices=("direct", "cascade"))
    common.add_argument("--out", help="output path")
    p = _Parser(prog="rmscat", description="Rigid-motion scattering for texture classification.")
    sub = p.add_subparsers(dest="command", metavar="{" + ",".join(SUBCOMMANDS) + "}",
                           parser_class=_Parser)
    a = sub.add_parser("filters-audit", parents=[common], help="Littlewood-Paley audits")
    a.add_argument("--grid", type=_positive, default=256, help="square grid side (default 256)")
    s = sub.add_parser("scatter", parents=[common], help="write RMSCAT1 feature files")
    s.add_argument("inputs", nargs="+", help="image files or directories")
    for name, hlp in (("train", "fit class models on one split"),
                      ("eval", "accuracy over splits")):
        t = sub.add_parser(name, parents=[common], help=hlp)
        t.add_argument("dataset", nargs="?", help="dataset root with one directory per class")
        if name == "eval":
            t.add_argument("--model", help="score this model on its split instead")
    sub.add_parser("selftest", parents=[common], help="quick property checks")
    b = sub.add_parser("bench", parents=[common], help="kernel timings and scaling exponents")
    b.add_argument("--repeats", type=_positive, default=3)
    b.add_argument("--quick", action="store_true", help="skip the taps-engine scaling run")
    return p


def run_command(argv):
    """Run one subcommand; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage() + "rmscat: error: a subcommand is required")
        raw = load_config(args.config)
        if args.workers is not None:
            raw["workers"] = args.workers
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.backend is not None:
            raw["scattering"]["backend"] = args.backend
        run = RunConfig(raw)
        return COMMANDS[args.command](run, args)
    except UsageError as e:
        sys.stderr.write(str(e) + "\n")
        return 1
    except (ValidationError, ValueError) as e:
        sys.stderr.write(f"rmscat: validation error: {e}\n")
        return 1
    except OSError as e:
        sys.stderr.write(f"rmscat: I/O error: {e}\n")
        return 2


def main(argv=None):
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    main()
