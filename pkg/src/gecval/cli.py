"""Command-line surface binding the pipeline end to end.

Subcommands: extract-edits, label-ged, gen-pairs, train, score, metaeval,
window, pairwise. Runs are driven by one JSON config file (--config) with
all seeds explicit; outputs land under --out. Exit codes: 0 success,
1 usage/config error, 2 data error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import metaeval as me
from . import plots
from .encoder import (
    EncoderConfig,
    build_vocab,
    content_hash,
    load_checkpoint,
    new_checkpoint,
    save_checkpoint,
)
from .errors import DataError, GecvalError, UsageError
from .gedlabel import format_labeled, get_taxonomy, project_labels
from .impact import build_pair_dataset, write_pair_dataset
from .scoring import read_scores_tsv, score_corpus, write_scores_json, write_scores_tsv
from .training import (
    TrainConfig,
    ranking_accuracy,
    train_ged,
    train_qe,
    write_training_log,
)

EMPTY_PLACEHOLDER = "<empty>"

DEFAULT_CONFIG = {
    "paths": {},
    "taxonomy": "binary",
    "encoder": {"dim": 16, "depth": 1},
    "split": {"ratios": [0.8, 0.1, 0.1], "seed": 0},
    "ged_train": {"epochs": 5, "learning_rate": 0.5, "batch_size": 8},
    "qe_train": {"epochs": 10, "learning_rate": 0.5, "batch_size": 8},
    "pairs": {"k": 8, "seed": 0, "annotator": 0},
    "scoring": {"mode": "filter_free", "theta": 0.9},
    "selection": {"seeds": [0, 1, 2, 3, 4]},
    "analysis": {
        "window": 4,
        "bootstrap_iterations": 1000,
        "bootstrap_seed": 0,
        "trueskill_seed": 0,
        "figures": True,
    },
}


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fp:
        try:
            user = json.load(fp)
        except json.JSONDecodeError as exc:
            raise UsageError(f"invalid JSON in config {path}: {exc}") from exc
    config = {}
    for section, defaults in DEFAULT_CONFIG.items():
        if isinstance(defaults, dict):
            merged = dict(defaults)
            merged.update(user.get(section, {}))
            config[section] = merged
        else:
            config[section] = user.get(section, defaults)
    config["taxonomy"] = user.get("taxonomy", DEFAULT_CONFIG["taxonomy"])
    if config["taxonomy"] not in ("binary", "op4", "pos25", "full55"):
        raise UsageError(f"unknown taxonomy {config['taxonomy']!r}")
    for key in ("seed",):
        if config["split"].get(key, 0) < 0 or config["pairs"].get(key, 0) < 0:
            raise UsageError("seeds must be non-negative")
    if any(s < 0 for s in config["selection"]["seeds"]):
        raise UsageError("selection seeds must be non-negative")
    config["_base_dir"] = str(path.parent)
    return config


def _resolve(config: dict, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else Path(config["_base_dir"]) / p


def require_path(config: dict, key: str) -> Path:
    value = config["paths"].get(key)
    if not value:
        raise UsageError(f"config is missing paths.{key}")
    path = _resolve(config, value)
    if not path.exists():
        raise UsageError(f"paths.{key} does not exist: {path}")
    return path


def load_parallel(path: Path) -> list:
    text = Path(path).read_text(encoding="utf-8")
    first = next((ln for ln in text.splitlines() if ln.strip()), "")
    if path.suffix == ".m2" or (first.startswith("S ") and "\t" not in first):
        return corpus_mod.parse_m2(text)
    return corpus_mod.parse_parallel_tsv(text)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def _write_json(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(doc, fp, sort_keys=True, indent=2)
        fp.write("\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_extract_edits(args) -> int:
    src = Path(args.infile)
    if not src.exists():
        raise UsageError(f"input file not found: {src}")
    pairs = load_parallel(src)
    Path(args.outfile).write_text(corpus_mod.serialize_m2(pairs), encoding="utf-8")
    print(f"wrote {len(pairs)} blocks to {args.outfile}")
    return 0


def cmd_label_ged(args) -> int:
    src = Path(args.infile)
    if not src.exists():
        raise UsageError(f"input file not found: {src}")
    taxonomy = get_taxonomy(args.taxonomy)
    pairs = load_parallel(src)
    labeled = [
        project_labels(p.source, p.edits_for(args.annotator), taxonomy,
                       empty_placeholder=EMPTY_PLACEHOLDER)
        for p in pairs
    ]
    Path(args.outfile).write_text(format_labeled(labeled, taxonomy), encoding="utf-8")
    print(f"wrote {len(labeled)} labeled sentences to {args.outfile}")
    return 0


def cmd_gen_pairs(args) -> int:
    src = Path(args.infile)
    if not src.exists():
        raise UsageError(f"input file not found: {src}")
    ckpt_path = Path(args.checkpoint)
    if not ckpt_path.exists():
        raise UsageError(f"checkpoint not found: {ckpt_path}")
    ckpt = load_checkpoint(ckpt_path)
    pairs = load_parallel(src)
    dataset = build_pair_dataset(ckpt, pairs, k=args.k, seed=args.seed,
                                 annotator=args.annotator)
    out = _out_dir(args)
    write_pair_dataset(dataset, out / "pairs.jsonl")
    print(f"wrote {len(dataset)} pairs to {out / 'pairs.jsonl'}")
    return 0


def _labeled_split(split, taxonomy, annotator):
    labeled = []
    for pair in split:
        sent = project_labels(pair.source, pair.edits_for(annotator), taxonomy,
                              empty_placeholder=EMPTY_PLACEHOLDER)
        if sent.tokens:
            labeled.append(sent)
    return labeled


def cmd_train(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    taxonomy = get_taxonomy(config["taxonomy"])
    pairs = load_parallel(require_path(config, "parallel"))
    split_spec = corpus_mod.SplitSpec(
        ratios=tuple(config["split"]["ratios"]), seed=config["split"]["seed"]
    )
    train_split, dev_split, devtest_split = corpus_mod.split_dataset(pairs, split_spec)
    if not train_split or not dev_split or not devtest_split:
        raise DataError("train stage: empty split; provide more parallel data")
    annotator = config["pairs"]["annotator"]

    vocab = build_vocab(
        [p.source for p in train_split]
        + [c for p in train_split for c in p.corrections]
    )
    ged_train_set = _labeled_split(train_split, taxonomy, annotator)
    ged_dev_set = _labeled_split(dev_split, taxonomy, annotator)

    pair_seed = config["pairs"]["seed"]
    k = config["pairs"]["k"]
    seeds = list(config["selection"]["seeds"])
    runs = {}

    def run_seed(seed: int):
        encoder_cfg = EncoderConfig(
            vocab=vocab,
            dim=config["encoder"]["dim"],
            depth=config["encoder"]["depth"],
            seed=seed,
        )
        ged_cfg = TrainConfig(seed=seed, **{
            key: config["ged_train"][key]
            for key in ("epochs", "learning_rate", "batch_size")
        })
        ged_result = train_ged(encoder_cfg, ged_cfg, taxonomy, ged_train_set, ged_dev_set)
        ged_ckpt = ged_result.checkpoint
        pair_sets = {}
        for name, split, tag in (
            ("train", train_split, 0),
            ("dev", dev_split, 1),
            ("devtest", devtest_split, 2),
        ):
            pair_sets[name] = build_pair_dataset(
                ged_ckpt, split, k=k, seed=_derive_seed(pair_seed, seed, tag),
                annotator=annotator,
            )
            if not pair_sets[name]:
                raise DataError(
                    f"train stage: no usable pairs generated for the {name} split"
                )
        qe_cfg = TrainConfig(seed=seed, **{
            key: config["qe_train"][key]
            for key in ("epochs", "learning_rate", "batch_size")
        })
        qe_result = train_qe(ged_ckpt, qe_cfg, pair_sets["train"], pair_sets["dev"])
        qe_ckpt = qe_result.checkpoint
        save_checkpoint(ged_ckpt, out / f"ged_seed{seed}.json")
        save_checkpoint(qe_ckpt, out / f"qe_seed{seed}.json")
        write_training_log(ged_result.history, out / f"train_log_ged_seed{seed}.jsonl")
        write_training_log(qe_result.history, out / f"train_log_qe_seed{seed}.jsonl")
        runs[seed] = {
            "seed": seed,
            "ged_checkpoint": f"ged_seed{seed}.json",
            "ged_hash": content_hash(ged_ckpt),
            "ged_selected_epoch": ged_result.selected_epoch,
            "ged_dev_metric": ged_result.history[ged_result.selected_epoch - 1].dev_metric,
            "qe_checkpoint": f"qe_seed{seed}.json",
            "qe_hash": content_hash(qe_ckpt),
            "qe_selected_epoch": qe_result.selected_epoch,
            "qe_dev_accuracy": qe_result.history[qe_result.selected_epoch - 1].dev_metric,
            "pair_counts": {name: len(ps) for name, ps in pair_sets.items()},
        }
        runs[seed]["_devtest_pairs"] = pair_sets["devtest"]
        return qe_ckpt

    # Each run generates its own devtest pairs with its own GED model, so
    # seed selection scores every candidate on its matching devtest set.
    checkpoints = {}
    for seed in seeds:
        checkpoints[seed] = run_seed(seed)
        runs[seed]["devtest_accuracy"] = ranking_accuracy(
            checkpoints[seed], runs[seed].pop("_devtest_pairs")
        )
    best = max(sorted(runs), key=lambda s: runs[s]["devtest_accuracy"])
    final = checkpoints[best]
    save_checkpoint(final, out / "final_checkpoint.json")
    manifest = {
        "taxonomy": taxonomy.name,
        "split": {"ratios": list(split_spec.ratios), "seed": split_spec.seed},
        "pairs": {"k": k, "seed": pair_seed, "annotator": annotator},
        "seeds": [runs[s] for s in seeds],
        "selected_seed": best,
        "final_checkpoint": "final_checkpoint.json",
        "final_hash": content_hash(final),
    }
    _write_json(out / "manifest.json", manifest)
    print(f"selected seed {best} "
          f"(devtest accuracy {runs[best]['devtest_accuracy']:.4f}); "
          f"wrote {out / 'manifest.json'}")
    return 0


def cmd_score(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    judgments = corpus_mod.load_judgments(require_path(config, "judgments"))
    ckpt_path = Path(args.checkpoint) if args.checkpoint else require_path(config, "checkpoint")
    if not ckpt_path.exists():
        raise UsageError(f"checkpoint not found: {ckpt_path}")
    qe_ckpt = load_checkpoint(ckpt_path)
    mode = args.mode or config["scoring"]["mode"]
    theta = config["scoring"]["theta"] if args.theta is None else args.theta
    sim_ckpt = None
    if mode == "legacy":
        sim_path = config["paths"].get("sim_checkpoint")
        if sim_path:
            sim_ckpt = load_checkpoint(_resolve(config, sim_path))
        else:
            # Vanilla encoder: fresh seeded initialization of the same config.
            sim_ckpt = new_checkpoint(qe_ckpt.config)
    records = score_corpus(qe_ckpt, judgments, mode=mode, sim_checkpoint=sim_ckpt,
                           theta=theta)
    write_scores_tsv(records, out / "scores.tsv")
    write_scores_json(records, out / "scores.json", qe_checkpoint=qe_ckpt, mode=mode,
                      theta=theta if mode == "legacy" else None)
    print(f"wrote {len(records)} scores to {out / 'scores.tsv'}")
    return 0


def _load_metric_scores(config) -> dict:
    metrics = config["paths"].get("metrics")
    if not metrics:
        raise UsageError("config is missing paths.metrics ({name: score TSV})")
    loaded = {}
    for name in sorted(metrics):
        path = _resolve(config, metrics[name])
        if not path.exists():
            raise UsageError(f"score file for metric {name!r} not found: {path}")
        loaded[name] = read_scores_tsv(path)
    return loaded


def _rankings(config, judgments, metric_scores):
    seed = config["analysis"]["trueskill_seed"]
    human = me.human_ranking_trueskill(judgments, seed=seed)
    metric_rankings = {
        name: me.metric_ranking_trueskill(scores, judgments, seed=seed)
        for name, scores in metric_scores.items()
    }
    return human, metric_rankings


def _window_rows(config, judgments, human, metric_rankings):
    w = config["analysis"]["window"]
    return {
        name: me.window_analysis(ranking, human, w)
        for name, ranking in sorted(metric_rankings.items())
    }


def _write_window_csv(rows_by_metric, path) -> None:
    lines = ["metric,start_rank,pearson,spearman"]
    for name, rows in sorted(rows_by_metric.items()):
        for r in rows:
            lines.append(f"{name},{r.start_rank},{r.pearson!r},{r.spearman!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_matrix_csv(matrix, path) -> None:
    n = matrix.shape[0]
    lines = ["A\\B," + ",".join(str(j + 1) for j in range(n))]
    for i in range(n):
        cells = [
            "" if not np.isfinite(matrix[i, j]) else repr(float(matrix[i, j]))
            for j in range(n)
        ]
        lines.append(f"{i + 1}," + ",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_metaeval(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    judgments = corpus_mod.load_judgments(require_path(config, "judgments"))
    metric_scores = _load_metric_scores(config)
    human, metric_rankings = _rankings(config, judgments, metric_scores)
    ts_seed = config["analysis"]["trueskill_seed"]

    reports = {}
    for name in sorted(metric_scores):
        reports[name] = me.correlation_report(
            metric_scores[name], judgments, human_ranking=human,
            metric_ranking=metric_rankings[name], seed=ts_seed,
        )

    human_mu = {r.system: r.mu for r in human}
    order = sorted(human_mu)
    williams_rows = []
    bootstrap_rows = []
    names = sorted(metric_scores)
    for i, name_a in enumerate(names):
        for name_b in names[i + 1 :]:
            mu_a = {r.system: r.mu for r in metric_rankings[name_a]}
            mu_b = {r.system: r.mu for r in metric_rankings[name_b]}
            r12 = reports[name_a].pearson_r
            r13 = reports[name_b].pearson_r
            try:
                r23 = me.pearson([mu_a[s] for s in order], [mu_b[s] for s in order])
                t_stat, p_value = me.williams_test(r12, r13, r23, len(order))
            except me.MetaevalError:
                r23, t_stat, p_value = float("nan"), float("nan"), float("nan")
            williams_rows.append(
                {"metric_a": name_a, "metric_b": name_b, "r12": r12, "r13": r13,
                 "r23": r23, "n": len(order), "t": t_stat, "p": p_value}
            )
            bootstrap_rows.append(
                {
                    "metric_a": name_a,
                    "metric_b": name_b,
                    "iterations": config["analysis"]["bootstrap_iterations"],
                    "p_b_ge_a": me.bootstrap_compare(
                        metric_scores[name_a], metric_scores[name_b],
                        judgments.human_pairwise,
                        iterations=config["analysis"]["bootstrap_iterations"],
                        seed=config["analysis"]["bootstrap_seed"],
                    ),
                }
            )

    window_rows = _window_rows(config, judgments, human, metric_rankings)
    groups = {
        name: me.pairwise_rank_groups(scores, judgments)
        for name, scores in sorted(metric_scores.items())
    }

    report_doc = {
        "human_ranking": [
            {"system": r.system, "mu": r.mu, "sigma": r.sigma} for r in human
        ],
        "metrics": {
            name: {
                "system": {
                    "pearson_r": rep.pearson_r,
                    "spearman_rho": rep.spearman_rho,
                    "n_systems": rep.n_systems,
                },
                "sentence": {
                    "accuracy": rep.accuracy,
                    "kendall_tau": rep.kendall_tau,
                    "n_pairs": rep.n,
                },
                "ranking": [
                    {"system": r.system, "mu": r.mu, "sigma": r.sigma}
                    for r in metric_rankings[name]
                ],
            }
            for name, rep in reports.items()
        },
        "williams": williams_rows,
        "bootstrap": bootstrap_rows,
    }
    _write_json(out / "report.json", report_doc)

    lines = ["metric\tpearson_r\tspearman_rho\taccuracy\tkendall_tau\tn_systems\tn_pairs"]
    for name in names:
        rep = reports[name]
        lines.append(
            f"{name}\t{rep.pearson_r!r}\t{rep.spearman_rho!r}\t{rep.accuracy!r}"
            f"\t{rep.kendall_tau!r}\t{rep.n_systems}\t{rep.n}"
        )
    (out / "report.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["metric_a\tmetric_b\tr12\tr13\tr23\tn\tt\tp"]
    for row in williams_rows:
        lines.append(
            f"{row['metric_a']}\t{row['metric_b']}\t{row['r12']!r}\t{row['r13']!r}"
            f"\t{row['r23']!r}\t{row['n']}\t{row['t']!r}\t{row['p']!r}"
        )
    (out / "williams.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["metric_a\tmetric_b\titerations\tp_b_ge_a"]
    for row in bootstrap_rows:
        lines.append(
            f"{row['metric_a']}\t{row['metric_b']}\t{row['iterations']}"
            f"\t{row['p_b_ge_a']!r}"
        )
    (out / "bootstrap.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    _write_window_csv(window_rows, out / "window.csv")
    for name, grp in groups.items():
        _write_matrix_csv(me.pairwise_matrix(grp), out / f"pairwise_{name}.csv")
    if len(names) >= 2:
        diff = me.pairwise_tau_difference(groups[names[0]], groups[names[1]])
        diff_matrix = me.pairwise_matrix(groups[names[0]], values=diff)
        _write_matrix_csv(diff_matrix, out / "pairwise_diff.csv")
    if config["analysis"]["figures"]:
        plots.save_window_figure(window_rows, out / "window.png")
        for name, grp in groups.items():
            plots.save_pairwise_heatmap(
                me.pairwise_matrix(grp), out / f"pairwise_{name}.png",
                title=f"{name}: Kendall tau by rank pair",
            )
        if len(names) >= 2:
            plots.save_pairwise_heatmap(
                diff_matrix, out / "pairwise_diff.png",
                title=f"tau difference: {names[0]} - {names[1]}", symmetric=True,
            )
    print(f"wrote meta-evaluation reports for {len(names)} metrics to {out}")
    return 0


def cmd_window(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    judgments = corpus_mod.load_judgments(require_path(config, "judgments"))
    metric_scores = _load_metric_scores(config)
    human, metric_rankings = _rankings(config, judgments, metric_scores)
    window_rows = _window_rows(config, judgments, human, metric_rankings)
    _write_window_csv(window_rows, out / "window.csv")
    if config["analysis"]["figures"]:
        plots.save_window_figure(window_rows, out / "window.png")
    n_rows = sum(len(v) for v in window_rows.values())
    print(f"wrote {n_rows} window rows to {out / 'window.csv'}")
    return 0


def cmd_pairwise(args) -> int:
    config = load_config(args.config)
    out = _out_dir(args)
    judgments = corpus_mod.load_judgments(require_path(config, "judgments"))
    metric_scores = _load_metric_scores(config)
    names = sorted(metric_scores)
    groups = {
        name: me.pairwise_rank_groups(scores, judgments)
        for name, scores in sorted(metric_scores.items())
    }
    for name, grp in groups.items():
        _write_matrix_csv(me.pairwise_matrix(grp), out / f"pairwise_{name}.csv")
        if config["analysis"]["figures"]:
            plots.save_pairwise_heatmap(
                me.pairwise_matrix(grp), out / f"pairwise_{name}.png",
                title=f"{name}: Kendall tau by rank pair",
            )
    if len(names) >= 2:
        diff = me.pairwise_tau_difference(groups[names[0]], groups[names[1]])
        diff_matrix = me.pairwise_matrix(groups[names[0]], values=diff)
        _write_matrix_csv(diff_matrix, out / "pairwise_diff.csv")
        if config["analysis"]["figures"]:
            plots.save_pairwise_heatmap(
                diff_matrix, out / "pairwise_diff.png",
                title=f"tau difference: {names[0]} - {names[1]}", symmetric=True,
            )
    print(f"wrote pairwise matrices for {len(names)} metrics to {out}")
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gecval",
                     description="Reference-free GEC evaluation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-edits", parents=[], help="parallel data -> M2 file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.set_defaults(func=cmd_extract_edits)

    p = sub.add_parser("label-ged", help="parallel data -> token/label file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--taxonomy", default="binary",
                   choices=["binary", "op4", "pos25", "full55"])
    p.add_argument("--annotator", type=int, default=0)
    p.set_defaults(func=cmd_label_ged)

    p = sub.add_parser("gen-pairs", help="generate ordered training pairs")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--annotator", type=int, default=0)
    p.set_defaults(func=cmd_gen_pairs)

    p = sub.add_parser("train", help="run GED then QE training with seed selection")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score system outputs with a trained checkpoint")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--mode", default=None, choices=["filter_free", "legacy"])
    p.add_argument("--theta", type=float, default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("metaeval", help="correlation and significance reports")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_metaeval)

    p = sub.add_parser("window", help="sliding-window correlation analysis")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_window)

    p = sub.add_parser("pairwise", help="pairwise rank-group agreement matrices")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pairwise)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except GecvalError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
