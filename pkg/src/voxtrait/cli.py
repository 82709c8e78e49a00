"""Command-line interface.

Subcommands cover the full workflow: ``synth`` writes a synthetic
corpus, ``extract`` turns recordings plus ratings into a feature CSV,
``rate`` cross-validates the rating model, ``duration-sweep`` compares
segment lengths, ``cluster-sweep`` runs the dimensionality-reduction
loop, and ``characterize`` produces the final acoustic-factor report.

Settings resolve in three layers: built-in defaults, then a ``--config``
file of ``key = value`` lines, then explicit command-line flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, audio_io, pipeline, plots
from . import synth as synth_mod
from .features import (
    AnalysisParams,
    build_matrix,
    read_features_csv,
    write_features_csv,
    write_norm_sidecar,
)


def _cast_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _cast_duration(s: str):
    s = s.strip()
    if s == "sentence":
        return "sentence"
    value = float(s)
    if value <= 0:
        raise ValueError("duration must be positive (seconds) or 'sentence'")
    return value


def _cast_split_mode(s: str) -> str:
    mode = s.strip().lower().replace("-", "_")
    if mode not in ("per_speaker", "grouped", "plain"):
        raise ValueError(f"split mode must be per-speaker, grouped, or plain; got {s!r}")
    return mode


def _cast_sex(s: str) -> str:
    sex = s.strip().lower()
    if sex not in audio_io.SEX_CLASSES:
        raise ValueError(f"sex must be one of {audio_io.SEX_CLASSES}, got {s!r}")
    return sex


#: Keys accepted in a --config file, with their parsers.
CONFIG_SCHEMA = {
    "folds": int,
    "split_mode": _cast_split_mode,
    "seed": int,
    "trees": int,
    "grid_search": _cast_bool,
    "grid_folds": int,
    "workers": int,
    "vif_threshold": float,
    "r_test_tolerance": float,
    "duration": _cast_duration,
    "sex": _cast_sex,
    "pitch_floor": float,
    "pitch_ceiling": float,
    "voicing_threshold": float,
    "lpc_order": int,
    "formant_rate": int,
    "speed_of_sound": float,
    "min_tail_s": float,
}


def parse_config_file(path) -> dict:
    """Parse ``key = value`` lines; blank lines, comments, and INI-style
    section headers are ignored."""
    path = Path(path)
    out = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("[") and line.endswith("]"):
            continue
        if "=" not in line:
            raise ValueError(f"{path.name}:{lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        value = value.strip().strip('"').strip("'")
        if key not in CONFIG_SCHEMA:
            raise ValueError(f"{path.name}:{lineno}: unknown config key {key!r}")
        try:
            out[key] = CONFIG_SCHEMA[key](value)
        except ValueError as exc:
            raise ValueError(f"{path.name}:{lineno}: bad value for {key!r}: {exc}") from exc
    return out


def _load_cfg(args) -> dict:
    cfg_path = getattr(args, "config", None)
    return parse_config_file(cfg_path) if cfg_path else {}


def _pick(args, cfg: dict, name: str, default=None):
    """Layered lookup: CLI flag beats config file beats default."""
    cli = getattr(args, name, None)
    if cli is not None:
        return cli
    if name in cfg:
        return cfg[name]
    return default


def _analysis_params(args, cfg: dict) -> AnalysisParams:
    kwargs = {}
    for name in ("pitch_floor", "pitch_ceiling", "voicing_threshold",
                 "lpc_order", "formant_rate", "speed_of_sound", "min_tail_s"):
        value = _pick(args, cfg, name)
        if value is not None:
            kwargs[name] = value
    return AnalysisParams(**kwargs)


def _pipeline_config(args, cfg: dict) -> pipeline.PipelineConfig:
    if getattr(args, "no_grid_search", None):
        grid_search = False
    else:
        grid_search = cfg.get("grid_search", True)
    grid = None
    grid_json = getattr(args, "grid_json", None)
    if grid_json:
        with open(grid_json, encoding="utf-8") as f:
            grid = json.load(f)
    hp = None
    hp_json = getattr(args, "hp_json", None)
    if hp_json:
        with open(hp_json, encoding="utf-8") as f:
            hp = json.load(f)
    return pipeline.PipelineConfig(
        folds=_pick(args, cfg, "folds", 4),
        split_mode=_pick(args, cfg, "split_mode", "per_speaker"),
        seed=_pick(args, cfg, "seed", 42),
        n_estimators=_pick(args, cfg, "trees", 1000),
        grid=grid,
        grid_search=grid_search,
        hp=hp,
        grid_cv_folds=_pick(args, cfg, "grid_folds", 10),
        vif_threshold=_pick(args, cfg, "vif_threshold", pipeline.VIF_THRESHOLD),
        r_test_tolerance=_pick(args, cfg, "r_test_tolerance", pipeline.R_TEST_TOLERANCE),
        workers=_pick(args, cfg, "workers", 1),
        analysis=_analysis_params(args, cfg),
    )


def _load_corpus(args, cfg: dict):
    """Manifest + ratings -> (one-sex recordings, per-speaker labels)."""
    entries = audio_io.read_manifest(args.manifest)
    sex = _pick(args, cfg, "sex")
    if sex is not None:
        entries = [e for e in entries if e.sex_class == sex]
        if not entries:
            raise ValueError(f"manifest has no {sex} speakers")
    else:
        sexes = sorted({e.sex_class for e in entries})
        if len(sexes) > 1:
            raise ValueError(
                "manifest mixes male and female speakers; pass --sex to pick "
                "one class (the pipeline is sex-specific)"
            )
    labels = audio_io.normalize_ratings(audio_io.read_ratings_csv(args.ratings))
    return pipeline.load_recordings(entries), labels


def _load_matrix(args):
    rows, labels = read_features_csv(args.features)
    return build_matrix(rows, labels)


def _print_metrics(metrics: dict) -> None:
    print(
        "test:  r={r_test:.4f}  R2={r2_test:.4f}  MSE={mse_test:.4f}".format(**metrics)
    )
    print(
        "train: r={r_train:.4f}  R2={r2_train:.4f}  MSE={mse_train:.4f}".format(**metrics)
    )


# ---------------------------------------------------------------------------
# Subcommands


def cmd_synth(args) -> int:
    spec = synth_mod.SynthSpec.from_json(args.spec) if args.spec else synth_mod.SynthSpec()
    paths = synth_mod.generate_corpus(spec, args.seed, args.out)
    n_wavs = sum(1 for _ in (paths.root / "wav").glob("*.wav"))
    print(f"corpus: {n_wavs} recordings -> {paths.root}")
    print(f"manifest: {paths.manifest}")
    print(f"ratings:  {paths.ratings}")
    return 0


def cmd_extract(args) -> int:
    cfg = _load_cfg(args)
    duration = _pick(args, cfg, "duration")
    if duration is None:
        raise ValueError("no duration given (flag --duration or config key)")
    recs, labels = _load_corpus(args, cfg)
    params = _analysis_params(args, cfg)
    rows, matrix = pipeline.extract_features(recs, labels, duration, params)
    write_features_csv(args.out, rows, labels)
    write_norm_sidecar(str(args.out) + ".norm.json", matrix)
    print(
        f"extracted {matrix.n_samples} segments from "
        f"{len(set(matrix.speaker_ids))} speakers -> {args.out}"
    )
    return 0


def cmd_rate(args) -> int:
    cfg = _load_cfg(args)
    config = _pipeline_config(args, cfg)
    matrix = _load_matrix(args)
    report = pipeline.rate_features(matrix, config)
    print(
        f"{report['n_samples']} samples, {report['n_speakers']} speakers, "
        f"{report['folds']}-fold {report['split_mode']} validation "
        f"(hp: {report['hp_source']})"
    )
    _print_metrics(report["metrics"])
    if args.out:
        pipeline.write_report(report, args.out)
        print(f"report -> {args.out}")
    return 0


def cmd_duration_sweep(args) -> int:
    cfg = _load_cfg(args)
    config = _pipeline_config(args, cfg)
    recs, labels = _load_corpus(args, cfg)
    durations = (
        [_cast_duration(part) for part in args.durations.split(",")]
        if args.durations
        else pipeline.DEFAULT_DURATIONS
    )
    report = pipeline.duration_sweep(recs, labels, durations, config)
    pipeline.write_report(report, args.out)
    if args.svg:
        Path(args.svg).write_text(plots.render_duration_curves(report), encoding="utf-8")
    print(f"optimal duration: {report['optimal_duration']}")
    print(f"report -> {args.out}")
    return 0


def cmd_cluster_sweep(args) -> int:
    cfg = _load_cfg(args)
    config = _pipeline_config(args, cfg)
    matrix = _load_matrix(args)
    report = pipeline.cluster_sweep(matrix, config)
    pipeline.write_report(report, args.out)
    if args.svg:
        Path(args.svg).write_text(
            plots.render_dendrogram(report["merges"], report["leaf_names"],
                                    cut_k=report["optimal_k"]),
            encoding="utf-8",
        )
    if args.vif_svg:
        Path(args.vif_svg).write_text(plots.render_vif_curve(report), encoding="utf-8")
    if args.metrics_svg:
        Path(args.metrics_svg).write_text(plots.render_metric_curves(report),
                                          encoding="utf-8")
    met = "met" if report["performance_criterion_met"] else "NOT met"
    print(f"optimal k = {report['optimal_k']} (performance criterion {met})")
    print(f"report -> {args.out}")
    return 0


def cmd_characterize(args) -> int:
    cfg = _load_cfg(args)
    config = _pipeline_config(args, cfg)
    matrix = _load_matrix(args)
    if args.k == "auto":
        sweep = pipeline.cluster_sweep(matrix, config)
        k = sweep["optimal_k"]
        print(f"sweep chose k = {k}")
    else:
        k = int(args.k)
    report = pipeline.characterize(
        matrix, k, config,
        sex=args.sex, duration=args.duration,
    )
    pipeline.write_report(report, args.out)
    if args.pie_svg:
        Path(args.pie_svg).write_text(plots.render_importance_pie(report),
                                      encoding="utf-8")
    print(f"k = {report['k']} clusters, max VIF = {report['max_vif']:.3f}")
    for rank, name in enumerate(report["ranking"], 1):
        weight = next(c["weight"] for c in report["clusters"] if c["name"] == name)
        print(f"  {rank}. {name}  {100.0 * weight:.1f}%")
    _print_metrics(report["metrics"])
    print(f"report -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxtrait",
        description="Acoustic analysis of perceived vocal masculinity/femininity.",
    )
    parser.add_argument("--version", action="version", version=f"voxtrait {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--folds", type=int, help="cross-validation folds (default 4)")
    model.add_argument("--split-mode", type=_cast_split_mode, dest="split_mode",
                       help="per-speaker, grouped, or plain")
    model.add_argument("--seed", type=int, help="master random seed (default 42)")
    model.add_argument("--trees", type=int, help="trees per forest (default 1000)")
    model.add_argument("--workers", type=int, help="parallel sweep cells (default 1)")
    model.add_argument("--no-grid-search", action="store_const", const=True,
                       dest="no_grid_search",
                       help="skip hyperparameter search; use the anchor settings")
    model.add_argument("--grid-json", dest="grid_json",
                       help="JSON file with hyperparameter grid axes")
    model.add_argument("--hp-json", dest="hp_json",
                       help="JSON file with fixed hyperparameters (skips search)")
    model.add_argument("--grid-folds", type=int, dest="grid_folds",
                       help="folds inside the grid search (default 10)")
    model.add_argument("--vif-threshold", type=float, dest="vif_threshold",
                       help="severe-multicollinearity cutoff (default 5)")
    model.add_argument("--r-tolerance", type=float, dest="r_test_tolerance",
                       help="allowed r_test drop vs the unclustered baseline")

    analysis = argparse.ArgumentParser(add_help=False)
    analysis.add_argument("--pitch-floor", type=float, dest="pitch_floor")
    analysis.add_argument("--pitch-ceiling", type=float, dest="pitch_ceiling")
    analysis.add_argument("--voicing-threshold", type=float, dest="voicing_threshold")
    analysis.add_argument("--lpc-order", type=int, dest="lpc_order")
    analysis.add_argument("--formant-rate", type=int, dest="formant_rate")
    analysis.add_argument("--min-tail", type=float, dest="min_tail_s",
                          help="shortest kept trailing segment, seconds")

    p = sub.add_parser("synth", parents=[common],
                       help="generate a deterministic synthetic corpus")
    p.add_argument("--spec", help="synthesis spec JSON (defaults used if omitted)")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True, help="output corpus directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", parents=[common, analysis],
                       help="extract the 23 acoustic measures to CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ratings", required=True)
    p.add_argument("--duration", type=_cast_duration,
                   help="segment length in seconds, or 'sentence'")
    p.add_argument("--sex", type=_cast_sex, help="speaker class to extract")
    p.add_argument("--out", required=True, help="output feature CSV")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("rate", parents=[common, model],
                       help="cross-validate the rating model on features")
    p.add_argument("--features", required=True)
    p.add_argument("--out", help="optional JSON report path")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("duration-sweep", parents=[common, model, analysis],
                       help="compare segment durations end to end")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ratings", required=True)
    p.add_argument("--sex", type=_cast_sex)
    p.add_argument("--durations", help="comma list, e.g. 1,2,5,7,10,sentence")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--svg", help="optional metric-curve SVG")
    p.set_defaults(func=cmd_duration_sweep)

    p = sub.add_parser("cluster-sweep", parents=[common, model],
                       help="sweep cluster counts with VIF monitoring")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--svg", help="optional dendrogram SVG with the chosen cut")
    p.add_argument("--vif-svg", dest="vif_svg", help="optional VIF-curve SVG")
    p.add_argument("--metrics-svg", dest="metrics_svg",
                   help="optional metric-curve SVG")
    p.set_defaults(func=cmd_cluster_sweep)

    p = sub.add_parser("characterize", parents=[common, model],
                       help="weight acoustic factors at a chosen cluster count")
    p.add_argument("--features", required=True)
    p.add_argument("--k", default="auto", help="'auto' or an explicit cluster count")
    p.add_argument("--sex", type=_cast_sex, help="annotation for the report")
    p.add_argument("--duration", type=_cast_duration,
                   help="annotation for the report")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--pie-svg", dest="pie_svg", help="optional importance-pie SVG")
    p.set_defaults(func=cmd_characterize)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
