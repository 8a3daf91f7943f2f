"""Command-line surface: gen-data | train | attribute | compare | verify.

Exit codes: 0 success, 1 usage or input error, 2 verify found a gating
failure. Every output file is written atomically (temp file + rename).
JSON outputs use sorted keys, so identical flags and seeds give
byte-identical files.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import attribution as attr
from . import checks, data, train as train_mod
from .attribution import AttributionConfig, Method, SaliencyMap, compare_maps
from .model import CAM_LAYER, Model, load_model
from .scores import ScoreKind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def atomic_write_bytes(path, blob: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _write_pgm(path, image) -> None:
    img = np.asarray(image, dtype=np.float64)
    pix = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    atomic_write_bytes(path, header + pix.tobytes())


def _json_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# argument plumbing


def build_parser() -> _Parser:
    p = _Parser(prog="gradattr", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="command")

    g = sub.add_parser("gen-data", help="write a synthetic dataset as PGM files + manifest")
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--count", type=int, default=16)
    g.add_argument("--out-dir", required=True)

    t = sub.add_parser("train", help="train the reference classifier and save its weights")
    t.add_argument("--seed", type=int, default=42)
    t.add_argument("--epochs", type=int, default=20)
    t.add_argument("--lr", type=float, default=0.05)
    t.add_argument("--train-count", type=int, default=4000)
    t.add_argument("--val-count", type=int, default=1000)
    t.add_argument("--batch-size", type=int, default=32)
    t.add_argument("--out", required=True)

    a = sub.add_parser("attribute", help="compute one saliency map (PGM + overlay + JSON)")
    a.add_argument("--model", required=True)
    a.add_argument("--method", default="gradcam",
                   choices=[m.value for m in Method])
    a.add_argument("--score", default=None, choices=[k.value for k in ScoreKind])
    a.add_argument("--class", dest="class_index", type=int, default=None,
                   help="target class (default: predicted class)")
    a.add_argument("--layer", default=CAM_LAYER)
    a.add_argument("--steps", type=int, default=50)
    a.add_argument("--baseline", default="zeros", help="'zeros' or a PGM file")
    a.add_argument("--seed", type=int, default=42, help="dataset seed for --index")
    a.add_argument("--index", type=int, default=None, help="sample index in the seeded dataset")
    a.add_argument("--input", default=None, help="PGM image instead of --index")
    a.add_argument("--format", default="pgm", choices=["pgm", "json"],
                   help="json skips the images and dumps raw floats only")
    a.add_argument("--out", required=True, help="output path prefix")

    c = sub.add_parser("compare", help="compare two saved maps, or render a method/score grid")
    c.add_argument("--a", default=None, help="first map JSON")
    c.add_argument("--b", default=None, help="second map JSON")
    c.add_argument("--out", default=None, help="metrics JSON (default: stdout)")
    c.add_argument("--grid", action="store_true",
                   help="render CAM methods x scores for --samples instead")
    c.add_argument("--model", default=None)
    c.add_argument("--samples", default=None, help="comma-separated sample indices")
    c.add_argument("--seed", type=int, default=42)
    c.add_argument("--steps", type=int, default=50)
    c.add_argument("--layer", default=CAM_LAYER)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--out-dir", default=None)

    v = sub.add_parser("verify", help="run the full identity check suite")
    v.add_argument("--model", default=None, help="trained weights; omit to run model-free checks only")
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--out", default=None, help="report JSON (default: stdout)")
    return p


def _load_model_arg(path) -> Model:
    if not Path(path).is_file():
        raise FileNotFoundError(f"model file not found: {path}")
    return load_model(path)


def _resolve_input(args) -> np.ndarray:
    if (args.input is None) == (args.index is None):
        raise ValueError("exactly one of --input or --index is required")
    if args.input is not None:
        return data.read_pgm(args.input)
    return data.gen_sample(args.seed, args.index).image


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_data(args) -> int:
    samples = data.gen_dataset(args.seed, args.count)
    manifest = data.export_dataset(samples, args.out_dir)
    print(f"wrote {args.count} samples and {manifest}")
    return 0


def cmd_train(args) -> int:
    train_set = data.gen_dataset(args.seed, args.train_count)
    val_set = data.gen_dataset(args.seed + 1, args.val_count)
    model = train_mod.train(args.seed, args.epochs, args.lr, train_set, val_set,
                            batch_size=args.batch_size)
    blob_path = Path(args.out)
    tmp_target = blob_path.parent / f".{blob_path.name}.stage"
    model.save(tmp_target)
    os.replace(tmp_target, blob_path)
    print(_json_dumps({
        "epochs": args.epochs,
        "lr": args.lr,
        "seed": args.seed,
        "train_seconds": round(model.train_seconds, 3),
        "val_accuracy": model.val_accuracy,
    }), end="")
    return 0


def _build_config(args) -> AttributionConfig:
    baseline = None
    if args.baseline != "zeros":
        baseline = data.read_pgm(args.baseline)
    return AttributionConfig(
        method=Method.parse(args.method),
        score=ScoreKind.parse(args.score) if args.score else None,
        class_index=args.class_index,
        layer=args.layer,
        steps=args.steps,
        baseline=baseline,
    )


def cmd_attribute(args) -> int:
    model = _load_model_arg(args.model)
    image = _resolve_input(args)
    cfg = _build_config(args)
    sal = attr.attribute(model, image, cfg)
    out = Path(args.out)
    atomic_write_text(out.with_suffix(".json"), sal.to_json())
    written = [str(out.with_suffix(".json"))]
    if args.format == "pgm":
        _write_pgm(out.with_suffix(".pgm"), sal.normalized)
        _write_pgm(out.with_name(out.name + "_overlay").with_suffix(".pgm"),
                   attr.overlay(image, sal))
        written += [str(out.with_suffix(".pgm")), str(out.with_name(out.name + "_overlay.pgm"))]
    print(f"wrote {', '.join(written)}")
    return 0


def _grid_for_sample(model: Model, seed: int, index: int, steps: int, layer: str):
    sample = data.gen_sample(seed, index)
    c = model.predict(sample.image)
    maps = {}
    for method in (Method.GRAD_CAM, Method.GRAD_CAM_PLUS, Method.RSI_GRAD_CAM):
        for kind in ScoreKind:
            cfg = AttributionConfig(method, kind, c, layer=layer, steps=steps)
            maps[f"{method.value}|{kind.value}"] = attr.attribute(model, sample.image, cfg)
    return sample, c, maps


def render_method_grid(model: Model, seed: int, sample_ids: list[int], out_dir,
                       steps: int = 50, layer: str = CAM_LAYER, workers: int = 1) -> list[Path]:
    """For each sample: 9 overlay PGMs (3 CAM methods x 3 scores) plus a JSON
    index with the comparison metrics of all 36 map pairs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def work(index: int):
        return _grid_for_sample(model, seed, index, steps, layer)

    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, sample_ids))  # map preserves order
    else:
        results = [work(i) for i in sample_ids]

    written = []
    for index, (sample, c, maps) in zip(sample_ids, results):
        files = {}
        for key, sal in maps.items():
            name = f"sample{index:04d}_{key.replace('|', '_')}.pgm"
            _write_pgm(out / name, attr.overlay(sample.image, sal))
            files[key] = name
        keys = sorted(maps)
        comparisons = []
        for i, ka in enumerate(keys):
            for kb in keys[i + 1:]:
                m = compare_maps(maps[ka], maps[kb]).to_dict()
                m.update({"a": ka, "b": kb})
                comparisons.append(m)
        index_path = out / f"sample{index:04d}_index.json"
        atomic_write_text(index_path, _json_dumps({
            "class": c,
            "comparisons": comparisons,
            "files": files,
            "label": sample.label,
            "sample": index,
        }))
        written.append(index_path)
    return written


def cmd_compare(args) -> int:
    if args.grid:
        if not args.model or not args.samples or not args.out_dir:
            raise ValueError("--grid needs --model, --samples and --out-dir")
        model = _load_model_arg(args.model)
        ids = [int(tok) for tok in args.samples.split(",") if tok]
        paths = render_method_grid(model, args.seed, ids, args.out_dir,
                                   steps=args.steps, layer=args.layer, workers=args.workers)
        print(f"wrote {len(paths)} sample grids under {args.out_dir}")
        return 0
    if not args.a or not args.b:
        raise ValueError("compare needs --a and --b (or --grid)")
    map_a = SaliencyMap.from_dict(json.loads(Path(args.a).read_text()))
    map_b = SaliencyMap.from_dict(json.loads(Path(args.b).read_text()))
    metrics = compare_maps(map_a, map_b).to_dict()
    text = _json_dumps(metrics)
    if args.out:
        atomic_write_text(args.out, text)
    else:
        print(text, end="")
    return 0


def cmd_verify(args) -> int:
    model = _load_model_arg(args.model) if args.model else None
    report = checks.run_all_checks(args.seed, model)
    text = report.to_json()
    if args.out:
        atomic_write_text(args.out, text)
    else:
        print(text, end="")
    for entry in report.entries:
        marker = {"passed": "ok", "failed": "FAIL", "skipped": "skip", "info": "info"}[entry.status]
        print(f"[{marker:>4}] {entry.id}: measured={entry.measured_error!r} tol={entry.tolerance!r}",
              file=sys.stderr)
    return 0 if report.passed() else 2


_COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "attribute": cmd_attribute,
    "compare": cmd_compare,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError, train_mod.TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
