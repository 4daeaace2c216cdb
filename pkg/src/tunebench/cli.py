"""Command-line front end: ingest -> summarize -> benchmark -> tune -> report."""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import FEATURE_NAMES, parse_dataset, summarize, write_dataset
from .evaluation import grid_from_json, render_report, run_benchmark
from .ingestion import FetchConfig, FetchError, PlaylistRef, assemble_dataset, fetch_playlist_features
from .models import (
    ALGORITHM_TAGS,
    default_spec,
    fit,
    model_to_json,
)
from .seeding import stable_seed
from .tuning import builtin_rf_space, search, space_from_json, trace_to_json, verdict

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

REPORT_EXTENSIONS = {"markdown": "md", "csv": "csv", "json": "json"}


@dataclass
class CliConfig:
    datasets: dict[str, str] = field(default_factory=dict)
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHM_TAGS))
    k: int = 10
    seed: int = 42
    standardize: bool = False
    output_dir: str = "."
    report_formats: list[str] = field(default_factory=lambda: ["markdown", "csv", "json"])

    def validate(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if not self.datasets:
            raise ValueError("at least one dataset required")
        if not self.algorithms:
            raise ValueError("at least one algorithm required")
        for tag in self.algorithms:
            if tag not in ALGORITHM_TAGS:
                raise ValueError(f"unknown algorithm {tag!r}; expected one of {ALGORITHM_TAGS}")
        for fmt in self.report_formats:
            if fmt not in REPORT_EXTENSIONS:
                raise ValueError(f"unknown report format {fmt!r}")


def _load_config_file(path: str) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _split_list(value) -> list[str]:
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return [str(v) for v in value]


def _resolve_config(args) -> CliConfig:
    cfg = CliConfig()
    if getattr(args, "config", None):
        raw = _load_config_file(args.config)
        if "datasets" in raw:
            cfg.datasets = {str(k): str(v) for k, v in raw["datasets"].items()}
        if "algorithms" in raw:
            cfg.algorithms = _split_list(raw["algorithms"])
        cfg.k = int(raw.get("k", cfg.k))
        cfg.seed = int(raw.get("seed", cfg.seed))
        cfg.standardize = bool(raw.get("standardize", cfg.standardize))
        cfg.output_dir = str(raw.get("output_dir", cfg.output_dir))
        if "report_formats" in raw:
            cfg.report_formats = _split_list(raw["report_formats"])

    for entry in getattr(args, "data", None) or []:
        if "=" in entry:
            name, path = entry.split("=", 1)
        else:
            name, path = Path(entry).stem, entry
        cfg.datasets[name] = path
    if getattr(args, "algos", None):
        tags = _split_list(args.algos)
        cfg.algorithms = list(ALGORITHM_TAGS) if tags == ["all"] else tags
    if getattr(args, "folds", None) is not None:
        cfg.k = args.folds
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "standardize", False):
        cfg.standardize = True
    if getattr(args, "out_dir", None):
        cfg.output_dir = args.out_dir
    if getattr(args, "formats", None):
        cfg.report_formats = _split_list(args.formats)
    cfg.validate()
    return cfg


def _write_atomic(path: Path, content: str):
    """Write via a temp file and rename, so readers never see a torn report."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_dataset(path: str, name: str):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_dataset(fh.read(), name)


# --- subcommands ----------------------------------------------------------------


def cmd_ingest(args) -> int:
    token = args.token or os.environ.get("SPOTIFY_TOKEN")
    if args.live and not token:
        print(
            "error: live mode requires an auth token; pass --token or set SPOTIFY_TOKEN",
            file=sys.stderr,
        )
        return 1
    if not args.live and not args.fixture:
        print("error: pass --fixture DIR or --live", file=sys.stderr)
        return 1
    cfg = FetchConfig(
        source="live" if args.live else "fixture",
        fixture_dir=Path(args.fixture) if args.fixture else None,
        token=token,
        batch_size=args.batch_size,
        max_retries=args.max_retries,
    )
    liked = fetch_playlist_features(PlaylistRef(args.liked, "liked"), cfg)
    disliked = fetch_playlist_features(PlaylistRef(args.disliked, "disliked"), cfg)
    name = args.name or Path(args.out).stem
    ds = assemble_dataset(liked, disliked, name)
    _write_atomic(Path(args.out), write_dataset(ds))
    disliked_n, liked_n = ds.class_counts()
    print(f"wrote {args.out}: {len(ds)} instances ({liked_n} liked, {disliked_n} disliked)")
    return 0


def cmd_summarize(args) -> int:
    ds = _read_dataset(args.data, Path(args.data).stem)
    summary = summarize(ds)
    width = max(len(n) for n in FEATURE_NAMES) + 2
    header = f"{'class':<10}" + "".join(f"{n:>{width}}" for n in FEATURE_NAMES)
    print(f"dataset: {ds.name} ({summary.liked_count} liked, {summary.disliked_count} disliked)")
    print(header)
    for cls, means in (("liked", summary.liked_means), ("disliked", summary.disliked_means)):
        cells = []
        for n in FEATURE_NAMES:
            mark = "*" if summary.higher_class(n) == cls else " "
            cells.append(f"{means[n]:>{width - 1}.5f}{mark}")
        print(f"{cls:<10}" + "".join(cells))
    print("(* marks the class with the higher mean)")
    return 0


def cmd_benchmark(args) -> int:
    cfg = _resolve_config(args)
    datasets = [_read_dataset(path, name) for name, path in cfg.datasets.items()]
    specs = [default_spec(tag) for tag in cfg.algorithms]
    grid = run_benchmark(specs, datasets, k=cfg.k, seed=cfg.seed, standardize=cfg.standardize)

    out_dir = Path(cfg.output_dir)
    for fmt in cfg.report_formats:
        _write_atomic(out_dir / f"report.{REPORT_EXTENSIONS[fmt]}", render_report(grid, fmt))
    print(render_report(grid, "markdown"), end="")

    if args.save_models:
        cache = Path(args.save_models)
        for ds in datasets:
            for spec in specs:
                model = fit(spec, ds, seed=stable_seed(cfg.seed, ds.name, spec.algorithm, "full"))
                _write_atomic(cache / f"{ds.name}-{spec.algorithm}.model.json", model_to_json(model))

    if grid.all_failed():
        print("error: every benchmark cell failed", file=sys.stderr)
        return 1
    return 0


def cmd_tune(args) -> int:
    ds = _read_dataset(args.data, Path(args.data).stem)
    if args.space:
        with open(args.space, "r", encoding="utf-8") as fh:
            space = space_from_json(fh.read(), n_iter=args.n_iter, k=args.folds)
    else:
        space = builtin_rf_space(n_iter=args.n_iter, k=args.folds)

    started = time.monotonic()
    trace = search(space, ds, seed=args.seed, strategy=args.strategy)
    elapsed = time.monotonic() - started
    _write_atomic(Path(args.out), trace_to_json(trace))

    result = verdict(trace)
    best = trace.best
    evaluated = len(trace.entries)
    failed = sum(1 for e in trace.entries if e.error is not None)
    print(f"evaluated {evaluated} candidate(s) in {elapsed:.1f}s ({failed} failed)")
    print(f"best params: {best.params if best else 'n/a'}")
    print(f"best score: {'n/a' if result.best_score is None else f'{result.best_score:.4f}'}")
    print(f"default score: {result.default_score:.4f}")
    print(f"verdict: {result.winner}")
    print(f"trace written to {args.out}")
    return 0


def cmd_report(args) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        grid = grid_from_json(fh.read())
    text = render_report(grid, args.format)
    if args.out:
        _write_atomic(Path(args.out), text)
    else:
        print(text, end="")
    return 0


# --- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tunebench",
        description="Benchmark six classifiers on per-user audio-feature datasets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build a labeled dataset CSV from two playlists")
    p.add_argument("--liked", required=True, help="playlist id holding liked songs")
    p.add_argument("--disliked", required=True, help="playlist id holding disliked songs")
    p.add_argument("--fixture", help="directory of <playlist>.features.json fixture files")
    p.add_argument("--live", action="store_true", help="fetch from the live audio-features API")
    p.add_argument("--token", help="API bearer token (default: $SPOTIFY_TOKEN)")
    p.add_argument("--batch-size", type=int, default=100, help="track ids per feature request")
    p.add_argument("--max-retries", type=int, default=3, help="retry budget for 429/5xx replies")
    p.add_argument("--name", help="dataset name (default: output file stem)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("summarize", help="print per-class attribute means")
    p.add_argument("data", help="dataset CSV path")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("benchmark", help="cross-validate algorithms over datasets")
    p.add_argument("--data", action="append", help="dataset CSV path or name=path (repeatable)")
    p.add_argument("--algos", help="comma list of logreg,nb,svm,mlp,knn,rf or 'all'")
    p.add_argument("--folds", type=int, help="cross-validation fold count (default 10)")
    p.add_argument("--seed", type=int, help="master seed (default 42)")
    p.add_argument("--standardize", action="store_true",
                   help="z-score features, fitted on training folds only")
    p.add_argument("--out-dir", help="directory for report files (default .)")
    p.add_argument("--formats", help="comma list of markdown,csv,json (default all)")
    p.add_argument("--config", help="tunebench.toml-style config file")
    p.add_argument("--save-models", help="directory to cache full-dataset fitted models as JSON")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("tune", help="sequential hyperparameter search for the forest")
    p.add_argument("--data", required=True, help="dataset CSV path")
    p.add_argument("--n-iter", type=int, default=32, help="candidates to evaluate (default 32)")
    p.add_argument("--space", help="JSON file overriding the built-in search space")
    p.add_argument("--folds", type=int, default=10, help="cross-validation fold count")
    p.add_argument("--seed", type=int, default=42, help="master seed")
    p.add_argument("--strategy", choices=("random", "surrogate"), default="random",
                   help="candidate selection strategy")
    p.add_argument("--out", default="trace.json", help="trace output path")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("report", help="re-render report files from report.json")
    p.add_argument("--in", dest="input", required=True, help="report.json path")
    p.add_argument("--format", choices=("markdown", "csv", "json"), default="markdown")
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FetchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
