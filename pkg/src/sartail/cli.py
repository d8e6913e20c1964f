"""Command-line pipeline orchestration.

Subcommands: gen | denoise | compose | fit | predict | evaluate.
Exit codes: 0 success, 1 contract error, 2 I/O error. Every subcommand
writes a resolved-config snapshot next to its outputs.
"""

import argparse
import os
import sys

import numpy as np

from . import config as cfgmod
from . import ensemble, knn, metrics, raster, sampling, synthgen
from .embeddings import class_histogram, read_embedding_set, write_embedding_set
from .errors import MissingPairError, SartailError, TargetError

_RASTER_SUFFIXES = (".pgm", ".png")


def _add_global_flags(parser, default):
    parser.add_argument("--config", default=default, help="flat key=value config file")
    parser.add_argument("--seed", type=int, default=default, help="master RNG seed")
    parser.add_argument(
        "--threads", type=int, default=default, help="worker threads for batch prediction"
    )
    parser.add_argument(
        "--metric", choices=("euclidean", "cosine"), default=default, help="distance metric"
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sartail",
        description="Long-tail SAR classification pipeline",
    )
    _add_global_flags(parser, default=None)
    # Accept the global flags after the subcommand as well; SUPPRESS keeps
    # unset sub-level flags from clobbering values parsed before it.
    common = argparse.ArgumentParser(add_help=False)
    _add_global_flags(common, default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic long-tail embedding file")
    p.add_argument("--out", required=True, help="output embedding file")
    p.add_argument("--n-classes", type=int, default=10)
    p.add_argument("--head-size", type=int, default=10_000)
    p.add_argument("--ratio", type=float, default=1000.0, help="head/tail imbalance ratio")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--spread", type=float, default=1.0, help="within-class std dev")
    p.add_argument("--separation", type=float, default=3.0, help="centroid scale")
    p.add_argument("--holdout-out", help="also write a balanced holdout file")
    p.add_argument("--holdout-per-class", type=int, default=50)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("denoise", parents=[common], help="Lee-filter every raster in a directory")
    p.add_argument("--in-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--window", type=int, help="odd Lee window side (default 7)")
    p.add_argument("--noise", help="noise variance, or 'auto'")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("compose", parents=[common], help="stack SAR / denoised / EO triples into composites")
    p.add_argument("--sar-dir", required=True)
    p.add_argument("--denoised-dir", required=True)
    p.add_argument("--eo-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--size", type=int, help="composite side in pixels (default 56)")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("fit", parents=[common], help="balance an embedding file and train the KNN ensemble")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n-subsets", type=int)
    p.add_argument("--k", type=int, dest="k_neighbors")
    p.add_argument("--per-class-target", type=int)
    p.add_argument("--nearmiss-target", type=int)
    p.add_argument("--nearmiss-m", type=int)
    p.add_argument("--nearmiss-k", type=int)
    p.add_argument("--normalize", action="store_true", default=None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", parents=[common], help="run the ensemble over an embedding file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True, help="predictions CSV")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", parents=[common], help="score a predictions CSV against truth labels")
    p.add_argument("--predictions", required=True)
    p.add_argument("--truth", required=True, help="embedding file carrying true labels")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_evaluate)

    return parser


def _resolve_config(args, extra_overrides=None):
    file_values = cfgmod.read_config_file(args.config) if args.config else {}
    overrides = {
        "seed": args.seed,
        "threads": args.threads,
        "metric": args.metric,
    }
    overrides.update(extra_overrides or {})
    return cfgmod.resolve(file_values, overrides)


def _snapshot(cfg, ref):
    """Write the resolved config next to the command's outputs."""
    if os.path.isdir(ref):
        path = os.path.join(ref, "resolved_config.txt")
    else:
        path = str(ref) + ".config"
    cfgmod.write_resolved(cfg, path)


def _iter_rasters(directory):
    for name in sorted(os.listdir(directory)):
        if name.lower().endswith(_RASTER_SUFFIXES):
            yield name


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_gen(args):
    cfg = _resolve_config(args)
    gen_cfg = synthgen.GeneratorConfig(
        n_classes=args.n_classes,
        head_size=args.head_size,
        imbalance_ratio=args.ratio,
        dim=args.dim,
        cluster_spread=args.spread,
        cluster_separation=args.separation,
        seed=cfg.seed,
    )
    emb = synthgen.generate_longtail(gen_cfg)
    write_embedding_set(emb, args.out)
    synthgen.write_counts_csv(emb, args.out + ".counts.csv")
    if args.holdout_out:
        write_embedding_set(synthgen.generate_holdout(gen_cfg, args.holdout_per_class), args.holdout_out)
    _snapshot(cfg, args.out)
    hist = class_histogram(emb)
    print(f"wrote {args.out}: n={emb.n} dim={emb.dim} classes={emb.n_classes} "
          f"ratio={hist.imbalance_ratio:.1f}")
    return 0


def cmd_denoise(args):
    overrides = {"lee_window": args.window}
    if args.noise is not None:
        overrides["lee_noise_variance"] = cfgmod._parse_auto_float(args.noise)
    cfg = _resolve_config(args, overrides)
    lee_cfg = raster.LeeConfig(window=cfg.lee_window, noise_variance=cfg.lee_noise_variance)

    os.makedirs(args.out_dir, exist_ok=True)
    processed = 0
    failures = []
    for name in _iter_rasters(args.in_dir):
        src = os.path.join(args.in_dir, name)
        dst = os.path.join(args.out_dir, name)
        try:
            raster.save_raster(raster.lee_filter(raster.load_raster(src), lee_cfg), dst)
            processed += 1
        except (SartailError, OSError, ValueError) as exc:
            failures.append((name, exc))
            print(f"error: {name}: {exc}", file=sys.stderr)
    _snapshot(cfg, args.out_dir)
    print(f"denoised {processed} raster(s), {len(failures)} failed")
    return 1 if failures else 0


def cmd_compose(args):
    cfg = _resolve_config(args, {"target_size": args.size})
    os.makedirs(args.out_dir, exist_ok=True)

    dirs = (args.sar_dir, args.denoised_dir, args.eo_dir)
    stems = [{os.path.splitext(n)[0]: n for n in _iter_rasters(d)} for d in dirs]
    all_stems = sorted(set().union(*[set(s) for s in stems]))

    missing = []
    written = 0
    failures = 0
    for stem in all_stems:
        if not all(stem in s for s in stems):
            absent = [d for d, s in zip(("sar", "denoised", "eo"), stems) if stem not in s]
            missing.append((stem, absent))
            continue
        try:
            channels = [
                raster.load_raster(os.path.join(d, s[stem])) for d, s in zip(dirs, stems)
            ]
            comp = raster.compose_channels(*channels, target=cfg.target_size)
            raster.write_composite(comp, os.path.join(args.out_dir, stem + ".ltcr"))
            written += 1
        except (SartailError, OSError, ValueError) as exc:
            failures += 1
            print(f"error: {stem}: {exc}", file=sys.stderr)
    _snapshot(cfg, args.out_dir)
    for stem, absent in missing:
        print(f"missing pair: {stem} (absent from: {', '.join(absent)})", file=sys.stderr)
    print(f"composed {written} triple(s), {len(missing)} unmatched, {failures} failed")
    if missing:
        raise MissingPairError(f"{len(missing)} stem(s) without a full SAR/denoised/EO triple")
    return 1 if failures else 0


def cmd_fit(args):
    cfg = _resolve_config(
        args,
        {
            "n_subsets": args.n_subsets,
            "k_neighbors": args.k_neighbors,
            "per_class_target": args.per_class_target,
            "nearmiss_target": args.nearmiss_target,
            "nearmiss_m": args.nearmiss_m,
            "nearmiss_k": args.nearmiss_k,
            "normalize": args.normalize,
        },
    )
    emb = read_embedding_set(args.embeddings)
    os.makedirs(args.out_dir, exist_ok=True)

    sampler = sampling.SamplerConfig(
        metric=cfg.metric,
        nearmiss_shortlist_m=cfg.nearmiss_m,
        nearmiss_k=cfg.nearmiss_k,
        seed=cfg.seed,
    )
    counts_before = np.bincount(emb.labels, minlength=emb.n_classes)

    links = sampling.find_tomek_links(emb, sampler)
    cleaned, kept_tomek = sampling.remove_tomek_majority(emb, links)
    removed_tomek = _removed_per_class(emb.labels, kept_tomek, emb.n_classes)

    cleaned_counts = np.bincount(cleaned.labels, minlength=emb.n_classes)
    min_count = int(cleaned_counts[cleaned_counts > 0].min())
    per_class_target = cfg.per_class_target if cfg.per_class_target is not None else min_count
    if per_class_target > min_count:
        raise TargetError(
            f"per-class target {per_class_target} exceeds smallest cleaned class ({min_count})"
        )
    nearmiss_cap = (
        cfg.nearmiss_target
        if cfg.nearmiss_target is not None
        else cfg.n_subsets * per_class_target
    )
    targets = np.full(emb.n_classes, nearmiss_cap, dtype=np.int64)
    reduced, kept_nm = sampling.nearmiss3_select(cleaned, targets, sampler)
    removed_nearmiss = _removed_per_class(cleaned.labels, kept_nm, emb.n_classes)

    plan = sampling.build_balanced_subsets(reduced, cfg.n_subsets, per_class_target, sampler)
    sampling.write_subset_plan(plan, os.path.join(args.out_dir, "subsets.ltsp"))

    members = []
    member_paths = []
    for i, subset in enumerate(plan.subsets):
        members.append(knn.build_index(reduced, subset, cfg.metric, cfg.normalize))
        member_paths.append(os.path.join(args.out_dir, f"member_{i:02d}.ltix"))
    model = ensemble.EnsembleModel(members=members, k=cfg.k_neighbors, n_classes=emb.n_classes)
    manifest = os.path.join(args.out_dir, "model.manifest")
    ensemble.save_model(model, manifest, member_paths)

    _write_cleaning_report(
        os.path.join(args.out_dir, "cleaning_report.csv"),
        len(links),
        counts_before,
        removed_tomek,
        removed_nearmiss,
        np.bincount(reduced.labels, minlength=emb.n_classes),
    )
    _snapshot(cfg, args.out_dir)
    print(
        f"fit: {len(links)} tomek link(s), kept {reduced.n}/{emb.n} samples, "
        f"{cfg.n_subsets} member(s) with {per_class_target}/class, wrote {manifest}"
    )
    return 0


def _removed_per_class(labels_before, kept_indices, n_classes):
    removed = np.bincount(labels_before, minlength=n_classes).astype(np.int64)
    removed -= np.bincount(labels_before[kept_indices], minlength=n_classes)
    return removed


def _write_cleaning_report(path, n_links, before, tomek_removed, nearmiss_removed, after):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("key,class,value\n")
        fh.write(f"links_found,,{n_links}\n")
        for c in range(before.shape[0]):
            fh.write(f"count_before,{c},{int(before[c])}\n")
        for c in range(before.shape[0]):
            fh.write(f"removed_tomek,{c},{int(tomek_removed[c])}\n")
        for c in range(before.shape[0]):
            fh.write(f"removed_nearmiss,{c},{int(nearmiss_removed[c])}\n")
        for c in range(before.shape[0]):
            fh.write(f"count_after,{c},{int(after[c])}\n")


def cmd_predict(args):
    cfg = _resolve_config(args)
    model = ensemble.load_model(args.manifest)
    emb = read_embedding_set(args.embeddings)
    predictions = ensemble.ensemble_predict_batch(model, emb.vectors, threads=cfg.threads)
    ensemble.write_predictions_csv(predictions, args.out)
    _snapshot(cfg, args.out)
    print(f"predicted {len(predictions)} sample(s) -> {args.out}")
    return 0


def cmd_evaluate(args):
    cfg = _resolve_config(args)
    pred_labels, proba = ensemble.read_predictions_csv(args.predictions)
    truth = read_embedding_set(args.truth)
    if truth.n != pred_labels.shape[0]:
        raise SartailError(
            f"predictions ({pred_labels.shape[0]}) and truth ({truth.n}) row counts differ"
        )
    report = metrics.evaluate(pred_labels, proba, truth.labels)
    os.makedirs(args.out_dir, exist_ok=True)
    metrics.write_report_csv(report, os.path.join(args.out_dir, "report.csv"))
    metrics.write_recall_csv(report, os.path.join(args.out_dir, "per_class_recall.csv"))
    _snapshot(cfg, args.out_dir)
    print(metrics.format_report(report))
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage problems are contract errors.
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except (SartailError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
