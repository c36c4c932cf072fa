"""Command-line surface and experiment orchestration.

Pipeline: gen-synth -> ingest -> features -> train -> prune -> eval -> vuln
-> report. Every stage writes a run manifest with its config hash; chained
stages verify lineage. Exit codes: 0 ok, 2 usage/config, 3 data integrity,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import config as config_mod
from . import evaluation, features, graph, learner, manifests, pruning, synth, vuln
from .errors import CGPruneError, IntegrityError, UsageError
from .ioutil import atomic_write_text, read_json, write_json

logger = logging.getLogger("cgprune")


# ---------------------------------------------------------------- helpers

def _map_programs(jobs: int, fn: Callable, items: Sequence):
    """Fan out per-program work; results come back in submission order."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _load_graph_file(path: Path) -> graph.CallGraph:
    if not path.exists():
        raise IntegrityError(f"graph file not found: {path}")
    return graph.load_call_graph(path.read_text(encoding="utf-8"))


def _corpus_manifest(corpus_dir: Path) -> dict:
    path = corpus_dir / "corpus.json"
    if not path.exists():
        raise UsageError(f"{corpus_dir} has no corpus.json")
    return read_json(path)


def _static_path(corpus_dir: Path, pid: str) -> Path:
    return corpus_dir / "programs" / pid / "static_0cfa.json"


def _dynamic_path(corpus_dir: Path, pid: str) -> Path:
    return corpus_dir / "programs" / pid / "dynamic.json"


def _corpus_for_program(corpus_dirs: Sequence[Path], pid: str) -> Path:
    for d in corpus_dirs:
        if _static_path(d, pid).exists():
            return d
    raise IntegrityError(f"program {pid!r} not found in any corpus directory")


def _labels_manifest(labels_dir: Path) -> dict:
    path = labels_dir / "dataset_manifest.json"
    if not path.exists():
        raise IntegrityError(f"{labels_dir} has no dataset_manifest.json")
    return read_json(path)


def _combined_split(labels_dir: Path) -> tuple[list[str], list[str]]:
    doc = _labels_manifest(labels_dir)
    combined = doc["combined"]
    return list(combined["train_programs"]), list(combined["test_programs"])


def _select_programs(labels_dir: Path, which: str) -> list[str]:
    train, test = _combined_split(labels_dir)
    if which == "train":
        return train
    if which == "test":
        return test
    if which == "all":
        return train + test
    raise UsageError(f"--programs must be train/test/all, got {which!r}")


def _program_seed(seed: int, pid: str, programs: Sequence[str]) -> tuple[int, int]:
    return (seed, sorted(programs).index(pid))


def _filtered_static(corpus_dirs: Sequence[Path], pid: str, prefixes: Sequence[str]) -> graph.CallGraph:
    corpus = _corpus_for_program(corpus_dirs, pid)
    static = _load_graph_file(_static_path(corpus, pid))
    return graph.filter_stdlib_edges(static, prefixes)


def _feature_map_for(features_dir: Path, pid: str) -> features.FeatureSet:
    path = features_dir / "features" / f"{pid}.csv"
    if not path.exists():
        raise IntegrityError(f"no feature file for program {pid!r} in {features_dir}")
    fam = manifests.read_run_manifest(features_dir).config.get("family", "struct")
    return features.read_feature_csv(path.read_text(encoding="utf-8"), family=str(fam))


# ---------------------------------------------------------------- commands

def cmd_gen_synth(args: argparse.Namespace, cfg: dict) -> int:
    out_dir = Path(args.out or cfg.get("out") or _usage("gen-synth needs --out"))
    overrides = {
        f"synth.{k}": getattr(args, dest)
        for k, dest in [
            ("programs", "programs"), ("test_programs", "test_programs"),
            ("imbalance", "imbalance"), ("signal_strength", "signal"),
            ("missed_edge_rate", "missed_rate"), ("name", "name"),
            ("app_nodes", "app_nodes"), ("dep_nodes", "dep_nodes"),
        ]
    }
    cfg = config_mod.apply_overrides(cfg, overrides)
    synth_cfg = synth.SynthConfig(seed=cfg["seed"], **cfg["synth"])
    corpus = synth.generate_corpus(synth_cfg)
    for pid, (static, dynamic) in corpus.programs.items():
        atomic_write_text(_static_path(out_dir, pid), graph.dump_call_graph(static) + "\n")
        atomic_write_text(_dynamic_path(out_dir, pid), graph.dump_call_graph(dynamic) + "\n")
    write_json(out_dir / "corpus.json", corpus.manifest_dict())
    manifests.write_run_manifest(out_dir, "gen-synth", asdict(synth_cfg), seed=cfg["seed"])
    logger.info("wrote synthetic corpus with %d programs to %s", synth_cfg.programs, out_dir)
    return 0


def cmd_ingest(args: argparse.Namespace, cfg: dict) -> int:
    out_dir = Path(args.out or cfg.get("out") or _usage("ingest needs --out"))
    corpus_dirs = [Path(c) for c in args.corpus]
    prefixes = tuple(cfg["stdlib_prefixes"])
    cap = args.sample_cap if args.sample_cap is not None else cfg["sample_cap"]
    seed = cfg["seed"]

    datasets = []
    inputs = {}
    all_counts: dict[str, dict[str, int]] = {}
    all_train: list[str] = []
    all_test: list[str] = []
    total_prune = total_retain = 0
    for corpus_dir in corpus_dirs:
        doc = _corpus_manifest(corpus_dir)
        inputs[f"corpus:{doc['name']}"] = manifests.read_run_manifest(corpus_dir).config_hash
        kept_programs: list[str] = []
        counts: dict[str, dict[str, int]] = {}
        ds_prune = ds_retain = 0
        program_ids = sorted(doc["programs"])
        for pid in program_ids:
            dyn_path = _dynamic_path(corpus_dir, pid)
            if not dyn_path.exists():
                logger.warning("skipping %s: no dynamic call graph next to the static one", pid)
                continue
            static = graph.filter_stdlib_edges(
                _load_graph_file(_static_path(corpus_dir, pid)), prefixes
            )
            dynamic = _load_graph_file(dyn_path)
            labeled = graph.label_edges(static, dynamic)
            labeled = graph.sample_large_program(
                labeled, cap=cap, seed=_program_seed(seed, pid, program_ids)
            )
            n_retain = sum(1 for le in labeled if le.label == graph.RETAIN)
            counts[pid] = {
                "edges": len(labeled),
                "retain": n_retain,
                "prune": len(labeled) - n_retain,
            }
            ds_retain += n_retain
            ds_prune += len(labeled) - n_retain
            atomic_write_text(
                out_dir / "labeled" / f"{pid}.jsonl", graph.write_labeled_edges(labeled)
            )
            kept_programs.append(pid)
        manifest = graph.DatasetManifest(
            name=doc["name"],
            train_programs=tuple(p for p in doc["train"] if p in kept_programs),
            test_programs=tuple(p for p in doc["test"] if p in kept_programs),
            edge_counts=counts,
            pr_ratio=(ds_prune / ds_retain) if ds_retain else 0.0,
        )
        datasets.append(manifest)
        all_counts.update(counts)
        all_train.extend(manifest.train_programs)
        all_test.extend(manifest.test_programs)
        total_prune += ds_prune
        total_retain += ds_retain

    combined = graph.DatasetManifest(
        name="combined",
        train_programs=tuple(all_train),
        test_programs=tuple(all_test),
        edge_counts=all_counts,
        pr_ratio=(total_prune / total_retain) if total_retain else 0.0,
    )
    write_json(
        out_dir / "dataset_manifest.json",
        {
            "datasets": [d.to_json_dict() for d in datasets],
            "combined": combined.to_json_dict(),
        },
    )
    manifests.write_run_manifest(
        out_dir,
        "ingest",
        {"stdlib_prefixes": list(prefixes), "sample_cap": cap},
        inputs=inputs,
        seed=seed,
    )
    logger.info(
        "ingested %d program(s); combined P/R ratio %.3f",
        len(all_counts),
        combined.pr_ratio,
    )
    return 0


def cmd_features(args: argparse.Namespace, cfg: dict) -> int:
    out_dir = Path(args.out or cfg.get("out") or _usage("features needs --out"))
    corpus_dirs = [Path(c) for c in args.corpus]
    labels_dir = Path(args.labels)
    labels_manifest = manifests.read_run_manifest(labels_dir)
    prefixes = tuple(labels_manifest.config["stdlib_prefixes"])
    family = args.family or cfg["feature"]["family"]
    sig_dim = args.sig_dim if args.sig_dim is not None else cfg["feature"]["sig_dim"]
    embeddings_dir = args.embeddings or cfg["feature"]["embeddings"]

    train, test = _combined_split(labels_dir)
    programs = train + test
    timings: dict[str, dict[str, float]] = {}

    def one(pid: str):
        static = _filtered_static(corpus_dirs, pid, prefixes)
        sem_map = None
        if embeddings_dir:
            emb_path = Path(embeddings_dir) / f"{pid}.jsonl"
            if emb_path.exists():
                sem_map = features.load_semantic_embeddings(emb_path.read_text(encoding="utf-8"))
        start = time.perf_counter()
        fset = features.edge_feature_matrix(
            static, family, semantic_vectors=sem_map, signature_dim=sig_dim
        )
        elapsed = time.perf_counter() - start
        return pid, fset, elapsed

    for pid, fset, elapsed in _map_programs(cfg["jobs"], one, programs):
        atomic_write_text(out_dir / "features" / f"{pid}.csv", features.write_feature_csv(fset))
        timings[pid] = {"feature_s": elapsed}
        if fset.fallback_edges:
            logger.info("%s: %d edge(s) used the signature fallback", pid, len(fset.fallback_edges))

    write_json(out_dir / "timings.json", timings)
    manifests.write_run_manifest(
        out_dir,
        "features",
        {"family": family, "sig_dim": sig_dim, "embeddings": bool(embeddings_dir)},
        inputs={"labels": labels_manifest.config_hash},
        seed=cfg["seed"],
    )
    return 0


def _train_config_from(cfg: dict, args: argparse.Namespace) -> tuple[learner.TrainConfig, int]:
    overrides = {
        "train.w_retain": getattr(args, "w1", None),
        "train.learning_rate": getattr(args, "lr", None),
        "train.epochs": getattr(args, "epochs", None),
        "train.hidden_dim": getattr(args, "hidden_dim", None),
    }
    cfg = config_mod.apply_overrides(cfg, overrides)
    section = dict(cfg["train"])
    hidden_dim = section.pop("hidden_dim", 0)
    return learner.TrainConfig(seed=cfg["seed"], **section), hidden_dim


def _joined_training_data(
    labels_dir: Path, features_dir: Path, programs: Iterable[str]
) -> tuple[np.ndarray, np.ndarray]:
    xs: list[np.ndarray] = []
    ys: list[int] = []
    for pid in programs:
        path = labels_dir / "labeled" / f"{pid}.jsonl"
        if not path.exists():
            raise IntegrityError(f"no labeled edges for program {pid!r} in {labels_dir}")
        labeled = graph.read_labeled_edges(path.read_text(encoding="utf-8"))
        fmap = _feature_map_for(features_dir, pid).as_map()
        for le in labeled:
            vec = fmap.get(le.edge.key())
            if vec is None:
                raise IntegrityError(
                    f"program {pid!r}: labeled edge {le.edge.key()!r} has no feature row"
                )
            xs.append(vec)
            ys.append(le.label)
    if not xs:
        raise IntegrityError("no training samples found")
    return np.stack(xs), np.asarray(ys, dtype=np.int64)


def cmd_train(args: argparse.Namespace, cfg: dict) -> int:
    out_dir = Path(args.out or cfg.get("out") or _usage("train needs --out"))
    labels_dir, features_dir = Path(args.labels), Path(args.features)
    labels_manifest = manifests.read_run_manifest(labels_dir)
    features_manifest = manifests.read_run_manifest(features_dir)
    manifests.check_lineage("train", features_manifest, labels_manifest, "labels")

    train_cfg, hidden_dim = _train_config_from(cfg, args)
    train_programs, _ = _combined_split(labels_dir)
    x, y = _joined_training_data(labels_dir, features_dir, train_programs)
    result = learner.train(x, y, train_cfg, hidden_dim=hidden_dim)

    atomic_write_text(out_dir / "model.json", learner.dump_model(result.model, train_cfg) + "\n")
    atomic_write_text(out_dir / "training_log.csv", learner.training_log_csv(result))
    manifests.write_run_manifest(
        out_dir,
        "train",
        {**asdict(train_cfg), "hidden_dim": hidden_dim,
         "family": features_manifest.config.get("family")},
        inputs={
            "labels": labels_manifest.config_hash,
            "features": features_manifest.config_hash,
        },
        seed=cfg["seed"],
    )
    logger.info("trained model on %d samples; final epoch loss %.6f", len(y), result.epoch_losses[-1])
    return 0


def cmd_prune(args: argparse.Namespace, cfg: dict) -> int:
    out_dir = Path(args.out or cfg.get("out") or _usage("prune needs --out"))
    corpus_dirs = [Path(c) for c in args.corpus]
    labels_dir, features_dir, model_dir = Path(args.labels), Path(args.features), Path(args.model)
    labels_manifest = manifests.read_run_manifest(labels_dir)
    features_manifest = manifests.read_run_manifest(features_dir)
    model_manifest = manifests.read_run_manifest(model_dir)
    manifests.check_lineage("prune", model_manifest, features_manifest, "features")
    manifests.check_lineage("prune", model_manifest, labels_manifest, "labels")
    manifests.check_lineage("prune", features_manifest, labels_manifest, "labels")

    tau = args.tau if args.tau is not None else cfg["prune"]["tau"]
    mode = args.mode or cfg["prune"]["mode"]
    prefixes = tuple(labels_manifest.config["stdlib_prefixes"])
    programs = _select_programs(labels_dir, args.programs)
    model_text = (model_dir / "model.json").read_text(encoding="utf-8")
    model_ref = model_manifest.config_hash[:12]
    timings: dict[str, dict[str, float]] = {}

    def one(pid: str):
        static = _filtered_static(corpus_dirs, pid, prefixes)
        fmap = _feature_map_for(features_dir, pid).as_map()
        model = learner.load_model(model_text)
        start = time.perf_counter()
        pruned = pruning.prune_graph(static, model, fmap, tau, mode=mode, model_ref=model_ref)
        elapsed = time.perf_counter() - start
        return pid, pruned, elapsed

    for pid, pruned, elapsed in _map_programs(cfg["jobs"], one, programs):
        atomic_write_text(out_dir / "pruned" / f"{pid}.json", pruning.dump_pruned_graph(pruned) + "\n")
        atomic_write_text(out_dir / "probs" / f"{pid}.csv", pruning.probability_csv(pruned))
        timings[pid] = {"inference_s": elapsed}

    write_json(out_dir / "timings.json", timings)
    manifests.write_run_manifest(
        out_dir,
        "prune",
        {
            "tau": tau,
            "mode": mode,
            "programs": args.programs,
            "model_ref": model_ref,
            "w_retain": model_manifest.config.get("w_retain"),
            "family": features_manifest.config.get("family"),
        },
        inputs={
            "labels": labels_manifest.config_hash,
            "features": features_manifest.config_hash,
            "model": model_manifest.config_hash,
        },
        seed=cfg["seed"],
    )
    return 0


def _evaluate_graphs(
    corpus_dirs: Sequence[Path],
    pairs: Iterable[tuple[str, graph.CallGraph]],
    config_echo: dict,
) -> evaluation.EvalReport:
    scores = []
    for pid, static_like in pairs:
        corpus = _corpus_for_program(corpus_dirs, pid)
        dynamic = _load_graph_file(_dynamic_path(corpus, pid))
        scores.append(evaluation.evaluate_program(static_like, dynamic))
    return evaluation.macro_average(scores, config_echo)


def cmd_eval(args: argparse.Namespace, cfg: dict) -> int:
    out_dir = Path(args.out or cfg.get("out") or _usage("eval needs --out"))
    corpus_dirs = [Path(c) for c in args.corpus]
    pruned_dir = Path(args.pruned)
    pruned_manifest = manifests.read_run_manifest(pruned_dir)
    pruned_files = sorted((pruned_dir / "pruned").glob("*.json"))
    if not pruned_files:
        raise IntegrityError(f"no pruned graphs under {pruned_dir}")

    echo = {
        "tau": pruned_manifest.config.get("tau"),
        "w_retain": pruned_manifest.config.get("w_retain"),
        "family": pruned_manifest.config.get("family"),
    }
    loaded = []
    for path in pruned_files:
        g = _load_graph_file(path)
        loaded.append((g.program_id, g))
    reports = {"pruned": _evaluate_graphs(corpus_dirs, loaded, echo)}

    if args.include_unpruned:
        prefixes = tuple(cfg["stdlib_prefixes"])
        unpruned = [
            (pid, _filtered_static(corpus_dirs, pid, prefixes)) for pid, _ in loaded
        ]
        reports["unpruned"] = _evaluate_graphs(corpus_dirs, unpruned, {"tau": None})
    if args.include_random:
        tau = echo["tau"] or 0.5
        rnd = []
        for pid, g in loaded:
            prefixes = tuple(cfg["stdlib_prefixes"])
            base = _filtered_static(corpus_dirs, pid, prefixes)
            model = learner.RandomClassifier(seed=cfg["seed"])
            fmap = {e.key(): np.zeros(1) for e in base.edges}
            rnd.append((pid, pruning.prune_graph(base, model, fmap, tau).to_call_graph()))
        reports["random"] = _evaluate_graphs(corpus_dirs, rnd, {"tau": tau, "model": "random"})

    write_json(
        out_dir / "eval_report.json",
        {name: rep.to_json_dict() for name, rep in reports.items()},
    )
    for name, rep in reports.items():
        suffix = "" if name == "pruned" else f"_{name}"
        atomic_write_text(out_dir / f"eval_report{suffix}.csv", rep.to_csv())
    manifests.write_run_manifest(
        out_dir,
        "eval",
        {"include_unpruned": args.include_unpruned, "include_random": args.include_random},
        inputs={"pruned": pruned_manifest.config_hash},
        seed=cfg["seed"],
    )
    macro = reports["pruned"]
    logger.info(
        "macro P=%.3f R=%.3f F1=%.3f F2=%.3f",
        macro.macro_precision, macro.macro_recall, macro.macro_f1, macro.macro_f2,
    )
    return 0


def cmd_sweep(args: argparse.Namespace, cfg: dict) -> int:
    out_dir = Path(args.out or cfg.get("out") or _usage("sweep needs --out"))
    corpus_dirs = [Path(c) for c in args.corpus]
    labels_dir, features_dir = Path(args.labels), Path(args.features)
    labels_manifest = manifests.read_run_manifest(labels_dir)
    features_manifest = manifests.read_run_manifest(features_dir)
    manifests.check_lineage("sweep", features_manifest, labels_manifest, "labels")

    w1_grid = config_mod.parse_grid(args.w1_grid) if args.w1_grid else list(cfg["sweep"]["w1_grid"])
    tau_grid = config_mod.parse_grid(args.tau_grid) if args.tau_grid else list(cfg["sweep"]["tau_grid"])
    tau_grid = sorted(tau_grid)
    mode = cfg["prune"]["mode"]
    prefixes = tuple(labels_manifest.config["stdlib_prefixes"])
    train_programs, test_programs = _combined_split(labels_dir)
    x, y = _joined_training_data(labels_dir, features_dir, train_programs)
    base_cfg, hidden_dim = _train_config_from(cfg, args)

    test_graphs = {
        pid: _filtered_static(corpus_dirs, pid, prefixes) for pid in test_programs
    }
    test_features = {pid: _feature_map_for(features_dir, pid).as_map() for pid in test_programs}
    test_dynamic = {
        pid: _load_graph_file(_dynamic_path(_corpus_for_program(corpus_dirs, pid), pid))
        for pid in test_programs
    }

    cells: list[evaluation.GridCell] = []
    for w1 in w1_grid:
        train_cfg = learner.TrainConfig(**{**asdict(base_cfg), "w_retain": w1})
        model = learner.train(x, y, train_cfg, hidden_dim=hidden_dim).model
        per_tau_scores: dict[float, list[evaluation.ProgramScore]] = {t: [] for t in tau_grid}
        for pid in test_programs:
            swept = pruning.threshold_sweep(
                test_graphs[pid], model, test_features[pid], tau_grid, mode=mode
            )
            for tau, pruned in swept:
                per_tau_scores[tau].append(
                    evaluation.evaluate_program(pruned, test_dynamic[pid])
                )
        for tau in tau_grid:
            report = evaluation.macro_average(
                per_tau_scores[tau], {"w_retain": w1, "tau": tau}
            )
            cells.append(evaluation.GridCell(w_retain=w1, tau=tau, report=report))
        logger.info("swept w1=%.2f over %d threshold(s)", w1, len(tau_grid))

    atomic_write_text(out_dir / "grid.csv", evaluation.grid_csv(cells))
    manifests.write_run_manifest(
        out_dir,
        "sweep",
        {"w1_grid": w1_grid, "tau_grid": tau_grid, "mode": mode,
         "train": asdict(base_cfg), "hidden_dim": hidden_dim},
        inputs={
            "labels": labels_manifest.config_hash,
            "features": features_manifest.config_hash,
        },
        seed=cfg["seed"],
    )
    return 0


def cmd_vuln(args: argparse.Namespace, cfg: dict) -> int:
    out_dir = Path(args.out or cfg.get("out") or _usage("vuln needs --out"))
    corpus_dirs = [Path(c) for c in args.corpus]
    labels_dir = Path(args.labels)
    labels_manifest = manifests.read_run_manifest(labels_dir)
    prefixes = tuple(labels_manifest.config["stdlib_prefixes"])
    _, test_programs = _combined_split(labels_dir)
    vuln_cfg_base = {
        "k": args.k if args.k is not None else cfg["vuln"]["k"],
        "warmup_runs": cfg["vuln"]["warmup_runs"],
        "measured_runs": cfg["vuln"]["measured_runs"],
    }

    pruned_inputs: dict[str, Path] = {}
    for spec_text in args.pruned or []:
        if "=" not in spec_text:
            raise UsageError(f"--pruned expects LABEL=DIR, got {spec_text!r}")
        label, _, dir_text = spec_text.partition("=")
        pruned_inputs[label] = Path(dir_text)

    configs: dict[str, list[vuln.VulnReport]] = {"unpruned": []}
    input_hashes = {"labels": labels_manifest.config_hash}
    for label, pdir in pruned_inputs.items():
        configs[label] = []
        input_hashes[f"pruned:{label}"] = manifests.read_run_manifest(pdir).config_hash

    for pid in test_programs:
        base = _filtered_static(corpus_dirs, pid, prefixes)
        pid_index = sorted(test_programs).index(pid)
        cfg_vuln = vuln.VulnConfig(
            seed=cfg["seed"] + 1_000_003 * pid_index, **vuln_cfg_base
        )
        vulns = vuln.mark_vulnerable(base, cfg_vuln)
        configs["unpruned"].append(vuln.timed_analysis(base, vulns, cfg_vuln, tau=None))
        for label, pdir in pruned_inputs.items():
            pruned_graph = _load_graph_file(pdir / "pruned" / f"{pid}.json")
            tau = manifests.read_run_manifest(pdir).config.get("tau")
            configs[label].append(vuln.timed_analysis(pruned_graph, vulns, cfg_vuln, tau=tau))

    write_json(
        out_dir / "vuln_report.json",
        {label: vuln.vuln_reports_json(reports, label) for label, reports in configs.items()},
    )
    rows = [vuln.vuln_summary_row(label, reports) for label, reports in configs.items()]
    atomic_write_text(out_dir / "vuln_summary.csv", vuln.vuln_summary_csv(rows))
    manifests.write_run_manifest(
        out_dir, "vuln", vuln_cfg_base, inputs=input_hashes, seed=cfg["seed"]
    )
    return 0


def cmd_report(args: argparse.Namespace, cfg: dict) -> int:
    out_dir = Path(args.out or cfg.get("out") or _usage("report needs --out"))
    corpus_dirs = [Path(c) for c in args.corpus]
    labels_dir = Path(args.labels)
    _, test_programs = _combined_split(labels_dir)

    feature_times = read_json(Path(args.features) / "timings.json") if args.features else {}
    infer_times = read_json(Path(args.prune) / "timings.json") if args.prune else {}
    timings = []
    for pid in test_programs:
        corpus = _corpus_for_program(corpus_dirs, pid)
        static = _load_graph_file(_static_path(corpus, pid))
        timings.append(
            evaluation.ProgramTiming(
                program_id=pid,
                generation_s=static.generation_time_s or 0.0,
                feature_s=feature_times.get(pid, {}).get("feature_s", 0.0),
                inference_s=infer_times.get(pid, {}).get("inference_s", 0.0),
            )
        )
    report = evaluation.runtime_report(timings)
    atomic_write_text(out_dir / "runtime_report.csv", report.to_csv())

    summary: dict = {"runtime": report.summary()}
    if args.eval:
        summary["eval"] = read_json(Path(args.eval) / "eval_report.json")
    if args.vuln:
        summary["vuln_summary_csv"] = (Path(args.vuln) / "vuln_summary.csv").read_text(
            encoding="utf-8"
        )
    write_json(out_dir / "report_summary.json", summary)
    logger.info("runtime totals: %s", report.summary()["total_s"])
    return 0


# ---------------------------------------------------------------- wiring

def _usage(message: str) -> None:
    raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cgprune",
        description="Learned pruning of false edges in static call graphs.",
    )
    parser.add_argument("--config", help="YAML config file; flags override it")
    parser.add_argument("--seed", type=int, help="global random seed")
    parser.add_argument("--jobs", type=int, help="worker threads for per-program stages")
    parser.add_argument("--out", help="output directory for the subcommand")
    parser.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate a synthetic benchmark corpus")
    p.add_argument("--programs", type=int)
    p.add_argument("--test-programs", type=int, dest="test_programs")
    p.add_argument("--imbalance", type=float)
    p.add_argument("--signal", type=float)
    p.add_argument("--missed-rate", type=float, dest="missed_rate")
    p.add_argument("--name")
    p.add_argument("--app-nodes", type=int, dest="app_nodes")
    p.add_argument("--dep-nodes", type=int, dest="dep_nodes")
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("ingest", help="filter, label against dynamic CGs, and sample")
    p.add_argument("--corpus", action="append", required=True)
    p.add_argument("--sample-cap", type=int, dest="sample_cap")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("features", help="extract per-edge feature vectors")
    p.add_argument("--corpus", action="append", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--family", choices=list(features.FEATURE_FAMILIES))
    p.add_argument("--sig-dim", type=int, dest="sig_dim")
    p.add_argument("--embeddings")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train the weighted edge classifier")
    p.add_argument("--labels", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--w1", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden-dim", type=int, dest="hidden_dim")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("prune", help="apply a trained model under a threshold")
    p.add_argument("--corpus", action="append", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--tau", type=float)
    p.add_argument("--mode", choices=list(pruning.DECISION_MODES))
    p.add_argument("--programs", default="test")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("eval", help="score pruned graphs against dynamic oracles")
    p.add_argument("--corpus", action="append", required=True)
    p.add_argument("--pruned", required=True)
    p.add_argument("--include-unpruned", action="store_true")
    p.add_argument("--include-random", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid search over training weights x thresholds")
    p.add_argument("--corpus", action="append", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--w1-grid", dest="w1_grid")
    p.add_argument("--tau-grid", dest="tau_grid")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("vuln", help="vulnerability reachability on (pruned) graphs")
    p.add_argument("--corpus", action="append", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--pruned", action="append",
                   help="LABEL=DIR of a prune output; repeatable")
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_vuln)

    p = sub.add_parser("report", help="aggregate evaluation and runtime accounting")
    p.add_argument("--corpus", action="append", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--features")
    p.add_argument("--prune")
    p.add_argument("--eval", dest="eval")
    p.add_argument("--vuln", dest="vuln")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = config_mod.load_config(args.config)
        cfg = config_mod.apply_overrides(
            cfg, {"seed": args.seed, "jobs": args.jobs, "out": args.out}
        )
        return args.func(args, cfg)
    except CGPruneError as exc:
        logger.error("%s", exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
