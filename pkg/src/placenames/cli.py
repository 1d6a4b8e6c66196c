"""Command line: ``placenames {clean,run,report,score}``.

Exit codes: 0 success, 1 contract or data error, 2 configuration or I/O error.
Progress goes to stderr; results go to files (tables are also echoed to stdout).
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (
    OLD_ENGLISH, OLD_NORSE, OTHERS, PlaceName, Rejected, apply_recipe, build_clean_corpus,
    load_derivations, load_manifest, normalize, read_corpus, read_names_file, write_corpus,
    write_drop_log,
)
from .errors import ConfigError, ContractError, PlaceNamesError
from .features import SCHEMA_VERSION
from .forest import ForestConfig
from .pipeline import (
    PipelineConfig, ScoreTable, load_models, read_metrics, run_all, score_external,
    subsample_corpus, write_metrics,
)
from .report import REPORTS, oe_on_table, render, write_report, write_reports
from .resample import ResampleConfig

log = logging.getLogger("placenames")

DEFAULT_RUN = {
    "corpus": None,
    "out": "run",
    "seed": 0,
    "k_folds": 10,
    "cutpoint": 0.5,
    "pairs": None,
    "subsample": None,
    "jobs": 1,
    "external": {},
    "resample": {"smote_k": 5, "enn_k": 3},
    "forest": {"n_trees": 100, "max_depth": None, "min_samples_split": 5,
               "max_features": "sqrt", "bootstrap": True},
}


def load_run_config(path) -> dict:
    """Read a JSON run configuration; relative paths resolve against its folder."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text("utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    unknown = set(raw) - set(DEFAULT_RUN)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg = {**DEFAULT_RUN, **raw}
    cfg["resample"] = {**DEFAULT_RUN["resample"], **raw.get("resample", {})}
    cfg["forest"] = {**DEFAULT_RUN["forest"], **raw.get("forest", {})}
    base = path.parent

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    if not cfg["corpus"]:
        raise ConfigError("config needs a 'corpus' entry")
    cfg["corpus"] = resolve(cfg["corpus"])
    if not cfg["corpus"].exists():
        raise ConfigError(f"corpus file not found: {cfg['corpus']}")
    cfg["out"] = resolve(cfg["out"])
    cfg["external"] = {k: resolve(v) for k, v in cfg["external"].items()}
    for k, p in cfg["external"].items():
        if not p.exists():
            raise ConfigError(f"external names file for {k!r} not found: {p}")
    if cfg["k_folds"] < 2:
        raise ConfigError("k_folds must be >= 2")
    return cfg


def _parse_pairs(text):
    if text is None:
        return None
    pairs = [p.strip().upper() for p in text.split(",") if p.strip()]
    bad = [p for p in pairs if p not in OTHERS]
    if bad:
        raise ConfigError(f"unknown pair(s): {', '.join(bad)}; choose from {', '.join(OTHERS)}")
    return pairs


def _normalize_names(raw_names):
    kept, notes = [], []
    for raw in raw_names:
        try:
            norm = normalize(raw)
        except Rejected as rej:
            notes.append(f"{raw}: skipped ({rej.reason.value})")
            continue
        if norm != raw:
            notes.append(f"{raw}: normalized to {norm}")
        kept.append(PlaceName(raw, norm, "EXT"))
    return kept, notes


# --------------------------------------------------------------------------
# commands


def cmd_clean(args) -> int:
    entries = load_manifest(args.config)
    corpus = build_clean_corpus(entries)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_corpus(corpus, out / "corpus.tsv")
    write_drop_log(corpus, out / "drop_log.csv")
    csv_text, md = render("counts", counts=corpus.counts)
    (out / "counts.csv").write_text(csv_text, encoding="utf-8")
    print(md, end="")
    print(f"total: {sum(corpus.counts.values())} kept, {len(corpus.drop_log)} dropped", file=sys.stderr)
    return 0


def cmd_run(args) -> int:
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.jobs is not None:
        cfg["jobs"] = args.jobs
    if args.pairs is not None:
        cfg["pairs"] = _parse_pairs(args.pairs)
    if args.out is not None:
        cfg["out"] = Path(args.out)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    corpus = read_corpus(cfg["corpus"])
    if cfg["subsample"]:
        corpus = subsample_corpus(corpus, float(cfg["subsample"]), cfg["seed"])
    external = {}
    for label, path in cfg["external"].items():
        external[label], _ = _normalize_names(read_names_file(path))

    pcfg = PipelineConfig(
        k_folds=cfg["k_folds"],
        resample=ResampleConfig(**cfg["resample"]),
        forest=ForestConfig(**cfg["forest"]),
        cutpoint=cfg["cutpoint"],
        seed=cfg["seed"],
    )
    result = run_all(corpus, pcfg, pairs=cfg["pairs"], external=external,
                     model_dir=out / "models", jobs=cfg["jobs"])

    result.table.to_csv(out / "scores.csv")
    write_metrics(result.metrics, out / "metrics.csv")
    (out / "metrics.json").write_text(json.dumps(
        {"pairs": [m.as_dict() for m in result.metrics],
         "ensemble_accuracy": result.ensemble_accuracy,
         "cutpoint": pcfg.cutpoint}, indent=2), encoding="utf-8")
    for label, ext in result.external.items():
        ext_table = ScoreTable(ext.names, [label] * len(ext.names), ext.pairs, ext.pair_scores, ext.ensemble)
        ext_table.to_csv(out / f"external_{label}.csv")

    manifest = {
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "config": {k: (str(v) if isinstance(v, Path) else v) for k, v in cfg.items() if k != "external"},
        "external": {k: str(v) for k, v in cfg["external"].items()},
        "pipeline": asdict(pcfg),
        "corpus_sha256": corpus.checksum(),
        "corpus_counts": corpus.counts,
        "scores_sha256": _sha256(out / "scores.csv"),
        "timings": {r.pair: r.seconds for r in result.pairs} | {"total": time.perf_counter() - t0},
        "folds": {r.pair: [asdict(f) for f in r.folds] for r in result.pairs},
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str), encoding="utf-8")

    _, md = render("accuracy", metrics=result.metrics)
    print(md, end="")
    print(f"\nEnsemble accuracy on England names (cut point {pcfg.cutpoint}): {result.ensemble_accuracy:.3f}")
    return 0


def _sha256(path) -> str:
    import hashlib
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_report(args) -> int:
    table = ScoreTable.from_csv(args.scores)
    which = [w.strip() for w in args.which.split(",")] if args.which != "all" else list(REPORTS)
    bad = [w for w in which if w not in REPORTS]
    if bad:
        raise ConfigError(f"unknown report(s): {', '.join(bad)}")
    out = Path(args.out)
    written = []
    simple = [w for w in which if w not in ("accuracy", "oe-on", "breakdown")]
    written += write_reports(table, out, simple, cutpoint=args.cutpoint, top_n=args.top)
    if "accuracy" in which:
        if not args.metrics:
            raise ConfigError("accuracy report needs --metrics")
        written += write_reports(table, out, ["accuracy"], metrics=read_metrics(args.metrics))
    if "breakdown" in which:
        if not args.name:
            raise ConfigError("breakdown report needs --name")
        try:
            written += write_reports(table, out, ["breakdown"], names=args.name)
        except KeyError as exc:
            raise ContractError(f"name not found among England rows: {exc.args[0]}") from None
    if "oe-on" in which:
        written += _oe_on(args, out)
    for p in written:
        print(p)
    return 0


def _oe_on(args, out) -> list[Path]:
    if not args.models:
        raise ConfigError("oe-on report needs --models")
    if args.derivations:
        entries = load_derivations(args.derivations)
        oe_names = apply_recipe(entries, OLD_ENGLISH)
        on_names = apply_recipe(entries, OLD_NORSE)
    elif args.oe and args.on:
        oe_names, _ = _normalize_names(read_names_file(args.oe))
        on_names, _ = _normalize_names(read_names_file(args.on))
    else:
        raise ConfigError("oe-on report needs --derivations, or both --oe and --on")
    models = load_models(args.models)
    missing = [p for p in ("DEN", "SWE", "NOR") if p not in models]
    if missing:
        raise ConfigError(f"oe-on report needs models for {', '.join(missing)}")
    oe = score_external(models, oe_names)
    on = score_external(models, on_names)
    cols = oe_on_table(oe, on)
    return write_report(out, "oe_on", "oe_on", columns=cols, n_oe=len(oe.names), n_on=len(on.names))


def cmd_score(args) -> int:
    raw = read_names_file(args.names)
    names, notes = _normalize_names(raw)
    for note in notes:
        print(f"# {note}")
    if not names:
        return 0
    models = load_models(args.models, _parse_pairs(args.pairs))
    ext = score_external(models, names)
    print("\t".join(["name", *ext.pairs, "ensemble"]))
    ens = ext.ensemble
    for i, n in enumerate(ext.names):
        print("\t".join([n, *(f"{ext.pair_scores[p][i]:.3f}" for p in ext.pairs), f"{ens[i]:.3f}"]))
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="placenames", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("clean", help="normalize and de-duplicate raw country files")
    p.add_argument("--config", required=True, help="JSON corpus manifest")
    p.add_argument("--out", default="corpus", help="output directory")
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("run", help="cross-validated scoring for all pairs")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--pairs", help="comma-separated country codes, e.g. ROM,DEN")
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="tables and rankings from a score table")
    p.add_argument("--scores", required=True, help="scores.csv written by 'run'")
    p.add_argument("--which", default="rankings", help=f"comma list of {', '.join(REPORTS)}, or 'all'")
    p.add_argument("--metrics", help="metrics.csv written by 'run'")
    p.add_argument("--name", action="append", help="name for the breakdown report (repeatable)")
    p.add_argument("--models", help="models directory written by 'run' (oe-on)")
    p.add_argument("--derivations", help="derivation extract CSV (oe-on)")
    p.add_argument("--oe", help="Old English names file (oe-on)")
    p.add_argument("--on", help="Old Norse names file (oe-on)")
    p.add_argument("--cutpoint", type=float, default=0.5)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--out", default="reports")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("score", help="score new names with saved fold models")
    p.add_argument("--models", required=True)
    p.add_argument("--names", required=True, help="file with one name per line")
    p.add_argument("--pairs")
    p.set_defaults(func=cmd_score)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ContractError, PlaceNamesError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
