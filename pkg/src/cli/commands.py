"""
Pipeline commands: gen, train, eval, probe and ablate.
Each command reads and writes files only; identical inputs and seeds give
byte-identical outputs.
"""
import logging
from pathlib import Path

from src.cli.config import RunConfig, config_to_text
from src.core.reporting import print_banner, print_status, print_table
from src.core.storage import write_csv, write_json
from src.data_processing.graph_builder import AugmentConfig, build_graphs, rebuild_augmentation
from src.data_processing.scene_generator import generate_dataset
from src.data_processing.scene_io import load_graphs, read_scenes, save_graphs, save_scenes
from src.experiments.ablation import run_ablation
from src.introspection.clustering import agglomerate, distance_matrix, mean_embeddings
from src.introspection.embeddings import collect_embeddings, collect_predicate_embeddings
from src.introspection.export import export_embeddings, write_cluster_tree, write_heatmap, write_probe_report
from src.introspection.probe import linear_probe
from src.model.checkpoint import load_checkpoint, save_checkpoint
from src.training.layout import compose_layout, predict_layout, render_layout_png
from src.training.metrics import evaluate
from src.training.trainer import train

logger = logging.getLogger(__name__)

SCENES_FILE = "scenes.json"
GRAPHS_FILE = "graphs.json"
PROBE_ARTIFACTS = ("probe_report.json", "embeddings.csv", "embeddings_top{k}.csv", "distance_heatmap.csv",
                   "cluster_tree.json")
PREDICATES_FILE = "predicate_embeddings.csv"


def load_dataset(data_dir, cfg: RunConfig, vocab=None):
    """
    Scenes from data_dir/scenes.json and their graphs. The stored graphs are
    used when they line up with the kept scenes; otherwise graphs are rebuilt
    from the scenes with cfg.seed and cfg.edges_per_node.
    """
    data_dir = Path(data_dir)
    report = read_scenes(data_dir / SCENES_FILE, vocab, min_objects=cfg.min_objects,
                         max_objects=cfg.max_objects, min_area=cfg.min_area)
    scenes = report.scenes
    graphs = None
    if (data_dir / GRAPHS_FILE).exists():
        graphs = load_graphs(data_dir / GRAPHS_FILE, report.vocab)
        aligned = len(graphs) == len(scenes) and all(
            list(g.node_categories) == s.categories for g, s in zip(graphs, scenes))
        if not aligned:
            logger.warning("%s does not match the kept scenes; rebuilding graphs", data_dir / GRAPHS_FILE)
            graphs = None
    if graphs is None:
        graphs = build_graphs(scenes, cfg.seed, cfg.edges_per_node, AugmentConfig(enabled=False))
    return scenes, graphs, report


def cmd_gen(cfg: RunConfig, out_dir):
    """Generate scenes and their graphs (augmented per the variant)."""
    out_dir = Path(out_dir)
    vocab = cfg.vocab()
    scenes = generate_dataset(cfg.scene_config())
    augment = cfg.augment_config()
    graphs = build_graphs(scenes, cfg.seed, cfg.edges_per_node, augment)
    for graph in graphs:
        graph.check(vocab.num_predicates)
    save_scenes(out_dir / SCENES_FILE, scenes, vocab)
    save_graphs(out_dir / GRAPHS_FILE, graphs, vocab)

    n_objects = sum(len(s) for s in scenes)
    base = sum(g.base_edge_count for g in graphs)
    augmented = sum(g.augmented_edge_count for g in graphs)
    print_banner(f"Generated {len(scenes)} scenes ({cfg.variant})")
    print_status("🧩", f"objects: {n_objects}")
    print_status("🔗", f"base edges: {base}")
    print_status("🌄", f"augmented edges: {augmented}"
                 + (f" in {sum(1 for g in graphs if g.augmented_edge_count)} scenes" if augment.enabled else ""))
    print_status("💾", f"wrote {out_dir / SCENES_FILE} and {out_dir / GRAPHS_FILE}")
    return {"scenes": len(scenes), "objects": n_objects, "base_edges": base, "augmented_edges": augmented}


def history_path(ckpt_path):
    ckpt_path = Path(ckpt_path)
    return ckpt_path.with_name(f"{ckpt_path.stem}_history.csv")


def cmd_train(cfg: RunConfig, data_dir, ckpt_out, progress=False):
    scenes, graphs, report = load_dataset(data_dir, cfg)
    train_cfg = cfg.train_config(progress=progress)
    model, history = train(scenes, graphs, train_cfg, cfg.gcn_config(), report.vocab, cfg.head_config())
    extra = {
        "variant": cfg.variant,
        "seed": cfg.seed,
        "edges_per_node": cfg.edges_per_node,
        "augmentation": {"enabled": train_cfg.augmentation.enabled,
                         "overlap_threshold": train_cfg.augmentation.overlap_threshold,
                         "max_augmented_per_scene": train_cfg.augmentation.max_augmented_per_scene},
        "loss_weights": train_cfg.weights.to_dict(),
        "run_config": config_to_text(cfg),
    }
    save_checkpoint(ckpt_out, model, extra)
    history.write_csv(history_path(ckpt_out))

    print_banner(f"Trained {cfg.variant} on {len(scenes)} scenes")
    print_status("📉", f"loss: epoch 1 {history.losses[0]:.6f} -> epoch {len(history.rows)} {history.losses[-1]:.6f}")
    print_status("💾", f"checkpoint {ckpt_out}, history {history_path(ckpt_out)}")
    return model, history


def _checkpoint_augmentation(extra, cfg: RunConfig):
    stored = extra.get("augmentation")
    if not stored:
        return cfg.augment_config()
    return AugmentConfig(enabled=bool(stored["enabled"]), overlap_threshold=float(stored["overlap_threshold"]),
                         max_augmented_per_scene=stored.get("max_augmented_per_scene"))


def _load_for_checkpoint(cfg, ckpt, data_dir):
    model, extra = load_checkpoint(ckpt)
    # rebuilt graphs must match the ones the checkpoint was trained on
    graph_cfg = cfg.with_overrides(seed=int(extra.get("seed", cfg.seed)),
                                   edges_per_node=int(extra.get("edges_per_node", cfg.edges_per_node)))
    scenes, graphs, _ = load_dataset(data_dir, graph_cfg, vocab=model.vocab)
    augment = _checkpoint_augmentation(extra, cfg)
    graphs = [rebuild_augmentation(s, g, augment) for s, g in zip(scenes, graphs)]
    return model, extra, scenes, graphs, augment


def cmd_eval(cfg: RunConfig, ckpt, data_dir, out_path):
    """Metrics JSON for a checkpoint; optionally PNG renderings of the first layouts."""
    model, extra, scenes, graphs, augment = _load_for_checkpoint(cfg, ckpt, data_dir)
    report = evaluate(scenes, graphs, model, augment)
    payload = {"variant": extra.get("variant"), "checkpoint": Path(ckpt).name}
    payload.update(report.to_dict())
    write_json(out_path, payload, indent=2)

    out_dir = Path(out_path).parent
    for i in range(min(cfg.render_layouts, len(scenes))):
        grid = compose_layout(predict_layout(graphs[i], model), cfg.canvas_resolution,
                              labels=graphs[i].node_categories)
        render_layout_png(grid, model.vocab.object_categories, out_dir / f"layout_{i:04d}.png", cfg.palette)

    print_banner(f"Evaluation of {Path(ckpt).name}")
    print_table([{"metric": "mIoU", "value": report.mean_iou},
                 {"metric": "relation score", "value": report.relation_score},
                 {"metric": "relation score (base edges)", "value": report.relation_score_base}],
                ["metric", "value"])
    print_status("💾", f"wrote {out_path}")
    return report


def cmd_probe(cfg: RunConfig, ckpt, data_dir, out_dir):
    """Probe report, full and top-k embedding CSVs, distance heatmap and cluster tree."""
    out_dir = Path(out_dir)
    model, extra, scenes, graphs, _ = _load_for_checkpoint(cfg, ckpt, data_dir)
    probe_cfg = cfg.probe_config()
    emb = collect_embeddings(graphs, model, source=extra.get("variant", cfg.variant))
    report = linear_probe(emb, split_seed=probe_cfg.split_seed, C=probe_cfg.C, iterations=probe_cfg.iterations,
                          test_fraction=probe_cfg.test_fraction, report_top=probe_cfg.report_top)

    means = mean_embeddings(emb, probe_cfg.mean_top_k)
    labels = list(means)
    dist = distance_matrix(means)
    tree = agglomerate(dist, labels)
    report.clustering = {"labels": labels, "distances": dist.tolist(), "tree": tree.to_dict()}

    names = [name.format(k=probe_cfg.export_top_k) for name in PROBE_ARTIFACTS]
    write_probe_report(out_dir / names[0], report)
    export_embeddings(emb, out_dir / names[1])
    export_embeddings(emb, out_dir / names[2], top_k=probe_cfg.export_top_k)
    write_heatmap(out_dir / names[3], labels, dist, tree.leaf_order)
    write_cluster_tree(out_dir / names[4], tree)
    if cfg.export_predicates:
        predicates = collect_predicate_embeddings(graphs, model, source=emb.source)
        export_embeddings(predicates, out_dir / PREDICATES_FILE)
        names.append(PREDICATES_FILE)

    print_banner(f"Probe of {Path(ckpt).name}")
    print_status("🎯", f"mean accuracy {report.mean_accuracy:.4f} over {len(report.per_class_accuracy)} classes")
    if report.excluded_classes:
        print_status("⚠️", f"excluded classes: {', '.join(sorted(report.excluded_classes))}")
    print_status("💾", f"wrote {len(names)} files to {out_dir}")
    return report


def cmd_ablate(cfg: RunConfig, out_dir):
    out_dir = Path(out_dir)
    result = run_ablation(cfg)
    write_csv(out_dir / "ablation_runs.csv", result.runs)
    write_json(out_dir / "ablation_summary.json", result.to_dict(), indent=2)

    print_banner(f"Ablation over seeds {', '.join(str(s) for s in cfg.ablation_seeds)}")
    print_table(result.summary.to_dict(orient="records"),
                ["variant", "miou", "relation_score", "relation_score_base", "probe_mean_accuracy"])
    if result.correlation is not None:
        print_status("📈", f"probe accuracy vs relation score correlation: {result.correlation:.4f}")
    if result.comparison is not None:
        cmp = result.comparison
        print_status("✅" if cmp["relation_order_holds"] else "⚠️",
                     f"relation score triplet_da - baseline: {cmp['relation_gap']}")
        print_status("✅" if cmp["probe_gap_holds"] else "⚠️",
                     f"probe accuracy triplet_da - baseline: {cmp['probe_gap']}")
    return result
