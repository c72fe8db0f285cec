"""Command-line entry point: synth, train, eval, infer, stream, bench, gradcheck.

Settings come from (lowest to highest precedence) built-in defaults, a
``key = value`` config file, a ``--preset``, and explicit flags.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import net
from .core import GESTURE_CLASSES, LoadError, SyntheticSpec, load_dataset, load_sample, save_dataset, split_samples, synth_generate
from .gradcheck import run_gradcheck
from .net import CheckpointError, ModelConfig, ModelParameters, PRESETS, flop_breakdown, init_params
from .preprocess import AugmentConfig, PreprocessConfig, preprocess
from .stream import StreamConfig, replay_source, stream_recognize, write_event_log
from .training import DivergenceError, TrainConfig, evaluate, train

log = logging.getLogger("tesla_rapture")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

SECTIONS = {
    "model": ModelConfig,
    "train": TrainConfig,
    "preprocess": PreprocessConfig,
    "augment": AugmentConfig,
    "stream": StreamConfig,
}
# keys that would collide or are set elsewhere
SKIP = {("train", "seed"), ("stream", "checkpoint"), ("stream", "fps")}


class UsageError(Exception):
    pass


def _config_keys() -> dict[str, tuple[str, dataclasses.Field]]:
    keys = {}
    for section, cls in SECTIONS.items():
        for f in dataclasses.fields(cls):
            if (section, f.name) in SKIP:
                continue
            keys[f.name] = (section, f)
    return keys


CONFIG_KEYS = _config_keys()


def _field_type(f: dataclasses.Field, default):
    if isinstance(default, bool):
        return "bool"
    if isinstance(default, tuple):
        return "tuple"
    if isinstance(default, int) or f.name == "no_gesture_class":
        return "int"
    return "float"


def _parse_value(key: str, text: str):
    section, f = CONFIG_KEYS[key]
    default = getattr(SECTIONS[section](), f.name)
    kind = _field_type(f, default)
    text = text.strip()
    try:
        if kind == "bool":
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                raise ValueError(text)
            return low in ("true", "1", "yes", "on")
        if kind == "tuple":
            return tuple(int(v) for v in text.strip("()[] ").split(",") if v.strip())
        if kind == "int":
            if text.lower() in ("none", ""):
                return None
            return int(text)
        return float(text)
    except ValueError:
        raise UsageError(f"bad value for {key}: {text!r}") from None


def read_config_file(path) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    values = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "seed":
            values["seed"] = int(val)
            continue
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _parse_value(key, val.strip('"'))
    return values


@dataclasses.dataclass
class RunConfig:
    model: ModelConfig
    train: TrainConfig
    preprocess: PreprocessConfig
    augment: AugmentConfig
    stream: StreamConfig
    seed: int = 0

    def as_text(self) -> str:
        lines = [f"seed = {self.seed}"]
        for section in SECTIONS:
            obj = getattr(self, section)
            for f in dataclasses.fields(obj):
                if (section, f.name) in SKIP:
                    continue
                v = getattr(obj, f.name)
                if isinstance(v, tuple):
                    v = ",".join(str(x) for x in v)
                lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        d = {"seed": self.seed}
        for section in SECTIONS:
            d[section] = dataclasses.asdict(getattr(self, section))
        return d


def build_run_config(args, num_classes=None) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    if getattr(args, "preset", None):
        values.update(PRESETS[args.preset])
    for key in CONFIG_KEYS:
        v = getattr(args, "cfg_" + key, None)
        if v is not None:
            values[key] = _parse_value(key, v)
    seed = args.seed if args.seed is not None else values.pop("seed", 0)
    values.pop("seed", None)
    if num_classes is not None:
        values["num_classes"] = num_classes
    per = {s: {} for s in SECTIONS}
    for key, v in values.items():
        per[CONFIG_KEYS[key][0]][key] = v
    per["train"]["seed"] = seed
    if getattr(args, "fps", None) is not None:
        per["stream"]["fps"] = args.fps
    try:
        objs = {s: SECTIONS[s](**per[s]) for s in SECTIONS}
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from None
    return RunConfig(seed=seed, **objs)


# --------------------------------------------------------------------------
# subcommands


def _out_dir(args, default: str) -> Path:
    out = Path(args.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_config(out: Path, rc: RunConfig) -> None:
    (out / "run_config.txt").write_text(rc.as_text())


def cmd_synth(args) -> int:
    names = args.class_names.split(",") if args.class_names else list(GESTURE_CLASSES[: args.classes])
    if args.no_gesture:
        names.append("no-gesture")
    spec = SyntheticSpec(
        classes=tuple(names), frames=args.frames_per_gesture, points_min=args.points_min,
        points_max=args.points_max, noise_sigma=args.noise, samples_per_class=args.per_class,
        seed=args.seed or 0,
    )
    samples = synth_generate(spec)
    sizes = [int(v) for v in args.split.split(",")] if args.split else None
    if sizes is None:
        n = len(samples)
        sizes = [n - 2 * (n * 15 // 100), n * 15 // 100, n * 15 // 100]
    if len(sizes) != 3:
        raise UsageError("--split needs three comma-separated sizes")
    splits = split_samples(samples, tuple(sizes), spec.seed)
    out = _out_dir(args, "synth")
    manifest = save_dataset(splits, out, names)
    (out / "synth_config.json").write_text(json.dumps(dataclasses.asdict(spec), sort_keys=True) + "\n")
    print(manifest)
    return EXIT_OK


def _load_classes(manifest) -> list[str]:
    return [c for c in (Path(manifest).parent / "classes.txt").read_text().splitlines() if c.strip()]


def _prep(samples, rc: RunConfig):
    return [preprocess(s, rc.preprocess, rc.seed) for s in samples]


def cmd_train(args) -> int:
    data = load_dataset(args.data)
    rc = build_run_config(args, len(_load_classes(args.data)))
    out = _out_dir(args, "run")
    _write_config(out, rc)
    tr, va = _prep(data["train"], rc), _prep(data["validation"], rc)
    hist_path = out / "metrics.csv"

    def on_epoch(rec):
        log.info("epoch %d  lr %.3g  loss %.4f  val_acc %.4f", rec.epoch, rec.lr, rec.train_loss, rec.val_acc)

    result = train(tr, va, rc.model, rc.train, rc.augment, on_epoch=on_epoch)
    hist_path.write_text(result.history_csv())
    result.params.save(out / "checkpoint.json", {"run_config": rc.as_dict(), "best_epoch": result.best_epoch})
    report = evaluate(va, result.params)
    doc = {"split": "validation", **report.to_dict(), "best_epoch": result.best_epoch, "run_config": rc.as_dict()}
    (out / "validation_report.json").write_text(json.dumps(doc, indent=1) + "\n")
    print(out / "checkpoint.json")
    return EXIT_OK


def _load_checkpoint(path) -> ModelParameters:
    if not Path(path).is_file():
        raise LoadError(f"checkpoint not found: {path}")
    return ModelParameters.load(path)


def cmd_eval(args) -> int:
    params = _load_checkpoint(args.checkpoint)
    data = load_dataset(args.data)
    rc = build_run_config(args, params.config.num_classes)
    samples = _prep(data[args.split], rc)
    if not samples:
        raise LoadError(f"split {args.split!r} is empty")
    report = evaluate(samples, params)
    doc = {"split": args.split, **report.to_dict(), "run_config": rc.as_dict()}
    text = json.dumps(doc, indent=1) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_infer(args) -> int:
    params = _load_checkpoint(args.checkpoint)
    rc = build_run_config(args, params.config.num_classes)
    lines = []
    for path in args.samples:
        s = preprocess(load_sample(path), rc.preprocess, rc.seed)
        scores = net.predict_proba(s, params)
        label = int(np.argmax(scores))
        lines.append(json.dumps({"path": str(path), "label": label, "scores": scores.tolist()}))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_stream(args) -> int:
    params = _load_checkpoint(args.checkpoint)
    rc = build_run_config(args, params.config.num_classes)
    source = replay_source(args.source, rc.stream.fps, args.idle_padding, args.fast_forward)
    events = stream_recognize(source, params, rc.stream, rc.preprocess)
    out = Path(args.out or "events.jsonl")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_event_log(events, out)
    _write_config(out.parent, rc)
    print(f"{len(events)} events -> {out}")
    return EXIT_OK


def bench(cfg: ModelConfig, sample, params: ModelParameters, passes: int = 10) -> dict:
    """Mean forward latency at batch sizes 1 and 16, after one warm-up pass."""
    net.classify_forward(sample, cfg, params)
    row = {}
    for bs in (1, 16):
        t0 = time.perf_counter()
        for _ in range(passes):
            for _ in range(bs):
                net.classify_forward(sample, cfg, params)
        row[f"latency_b{bs}_s"] = (time.perf_counter() - t0) / passes
    row.update(flop_breakdown(cfg, sample))
    row["flops"] = row["point"] + row["edge"] + row["attention_scores"] + row["gesture"]
    return row


def cmd_bench(args) -> int:
    rc = build_run_config(args, args.num_classes)
    if args.sample:
        sample = preprocess(load_sample(args.sample), rc.preprocess, rc.seed)
    else:
        spec = SyntheticSpec(classes=("swipe-left",), samples_per_class=1, seed=rc.seed)
        sample = preprocess(synth_generate(spec)[0], rc.preprocess, rc.seed)
    params = _load_checkpoint(args.checkpoint) if args.checkpoint else init_params(rc.model, rc.seed)
    row = bench(rc.model, sample, params, args.passes)
    row = {"preset": args.preset or "custom", "k": rc.model.k, "alpha": rc.model.alpha, "points": sample.n_points, **row}
    out = _out_dir(args, "bench")
    text = ",".join(row) + "\n" + ",".join(str(v) for v in row.values()) + "\n"
    (out / f"bench_{row['preset']}.csv").write_text(text)
    _write_config(out, rc)
    print(text, end="")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    if not args.tiny:
        raise UsageError("only the --tiny gradient check is supported")
    tables = run_gradcheck(seed=args.seed or 0, points=args.points, h=args.h)
    worst = max(max(t.values()) for t in tables)
    for i, t in enumerate(tables):
        name = max(t, key=t.get)
        print(f"point {i}: max relative error {t[name]:.3e} ({name})")
    ok = worst <= args.tol
    print(f"gradcheck {'PASS' if ok else 'FAIL'}: worst {worst:.3e} vs tolerance {args.tol:g}")
    return EXIT_OK if ok else EXIT_NUMERIC


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_shared(p, with_model=True):
    p.add_argument("--config", help="flat 'key = value' config file")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--threads", type=int, help="cap on BLAS worker threads; 1 is fully serial")
    p.add_argument("--out", help="output file or directory")
    if with_model:
        p.add_argument("--preset", choices=sorted(PRESETS), help="tesla: k=32 alpha=10 L=1; tesla-v: k=2 alpha=10 L=1")
        group = p.add_argument_group("configuration overrides")
        for key, (section, _) in CONFIG_KEYS.items():
            group.add_argument("--" + key.replace("_", "-"), dest="cfg_" + key, metavar="V", help=f"[{section}] {key}")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tesla-rapture", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic gesture dataset")
    _add_shared(p, with_model=False)
    p.add_argument("--classes", type=int, default=8, help="use the first N gesture classes")
    p.add_argument("--class-names", help="comma-separated class names (overrides --classes)")
    p.add_argument("--no-gesture", action="store_true", help="add a random-motion no-gesture class")
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--frames-per-gesture", type=int, default=24)
    p.add_argument("--points-min", type=int, default=5)
    p.add_argument("--points-max", type=int, default=10)
    p.add_argument("--noise", type=float, default=0.05, help="point scatter sigma in meters")
    p.add_argument("--split", help="train,validation,test sizes (default 70/15/15 percent)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model on a manifest")
    _add_shared(p)
    p.add_argument("--data", required=True, help="manifest.csv")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on one split")
    _add_shared(p)
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", default="test", choices=["train", "validation", "test"])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("infer", help="classify individual sample files")
    _add_shared(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("samples", nargs="+")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("stream", help="replay frames through the real-time segmenter")
    _add_shared(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--source", nargs="+", required=True, help="sample CSVs or recorded stream files")
    p.add_argument("--fps", type=float, help="replay frame rate (default 30)")
    p.add_argument("--fast-forward", action="store_true", help="do not pace frames in real time")
    p.add_argument("--idle-padding", type=int, default=0, help="empty frames appended after each source")
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("bench", help="latency and FLOP count on one gesture")
    _add_shared(p)
    p.add_argument("--checkpoint")
    p.add_argument("--sample", help="sample CSV (default: one synthetic gesture)")
    p.add_argument("--passes", type=int, default=10)
    p.set_defaults(func=cmd_bench, num_classes=None)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    _add_shared(p, with_model=False)
    p.add_argument("--tiny", action="store_true", help="tiny model: n=8, f_o=8, m=2, c=3")
    p.add_argument("--points", type=int, default=3, help="random parameter points")
    p.add_argument("--h", type=float, default=1e-6)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)
    return parser


def _thread_limit(n):
    if not n:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        with _thread_limit(args.threads):
            return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LoadError, CheckpointError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DivergenceError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
