import json

import pandas as pd
import pytest

from src.cli.commands import cmd_gen
from src.cli.config import RunConfig, config_to_text, load_run_config, parse_config_text, parse_overrides
from src.cli.main import main
from src.core.errors import ConfigError
from src.core.vocab import PREDICATES
from src.model.checkpoint import load_checkpoint

TINY = [
    "n_scenes=10", "mask_side=4", "embed_dim=4", "hidden_dim=6", "n_layers=1", "object_mask_side=4",
    "triplet_mask_side=6", "epochs=2", "batch_size=4", "render_layouts=1", "canvas_resolution=8",
    "probe_iterations=20",
]


def _tiny_args(*extra):
    args = []
    for pair in TINY + list(extra):
        args += ["--set", pair]
    return args


def test_parse_flat_config_text():
    cfg = parse_config_text("epochs = 5\nvariant = baseline  # preset\n# comment\nablation_seeds = 4, 5\n"
                            "max_augmented_per_scene = 6\nlearning_rate = 0.01\n")
    assert cfg.epochs == 5
    assert cfg.variant == "baseline"
    assert cfg.ablation_seeds == (4, 5)
    assert cfg.max_augmented_per_scene == 6
    assert cfg.learning_rate == 0.01
    assert cfg.batch_size == RunConfig().batch_size


def test_unknown_key_and_bad_value():
    with pytest.raises(ConfigError, match="unknown config key"):
        parse_config_text("epoch = 5\n")
    with pytest.raises(ConfigError, match="invalid value"):
        parse_overrides(["epochs=many"])
    with pytest.raises(ConfigError):
        parse_overrides(["epochs"])


def test_config_text_reads_back_equal():
    cfg = RunConfig(variant="triplet", epochs=7, ablation_seeds=(1, 9), max_augmented_per_scene=3)
    assert parse_config_text(config_to_text(cfg)) == cfg
    assert parse_config_text(config_to_text(RunConfig())) == RunConfig()


def test_precedence_file_then_overrides_then_flags(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed = 3\nepochs = 4\nvariant = triplet\n")
    cfg = load_run_config(path, ["epochs=6", "seed=5"], seed=8, variant="baseline")
    assert (cfg.seed, cfg.epochs, cfg.variant) == (8, 6, "baseline")


def test_variant_presets():
    baseline = RunConfig(variant="baseline")
    assert baseline.loss_weights().w_tmask == 0.0 and baseline.loss_weights().w_superbox == 0.0
    assert not baseline.augment_config().enabled
    triplet = RunConfig(variant="triplet", w_tmask=2.0)
    assert triplet.loss_weights().w_tmask == 2.0
    assert not triplet.augment_config().enabled
    assert RunConfig(variant="triplet_da").augment_config().enabled


def test_invalid_values_rejected():
    for bad in (["variant=fancy"], ["seed=-1"], ["probe_C=0"], ["n_categories=11"], ["epochs=0"]):
        with pytest.raises(ConfigError):
            load_run_config(None, bad)


def test_exit_codes(tmp_path, capsys):
    assert main(["gen", "--out", str(tmp_path), "--set", "bogus=1"]) == 2
    assert main(["train", "--data", str(tmp_path / "missing"), "--ckpt", str(tmp_path / "m.json")]) == 5
    (tmp_path / "broken").mkdir()
    (tmp_path / "broken" / "scenes.json").write_text("{not json")
    assert main(["train", "--data", str(tmp_path / "broken"), "--ckpt", str(tmp_path / "m.json")]) == 3
    assert "❌" in capsys.readouterr().out


def _pipeline(root):
    data, ckpt = root / "data", root / "model.json"
    assert main(["gen", "--out", str(data), *_tiny_args()]) == 0
    assert main(["train", "--data", str(data), "--ckpt", str(ckpt), *_tiny_args()]) == 0
    assert main(["eval", "--data", str(data), "--ckpt", str(ckpt), "--out", str(root / "eval" / "metrics.json"),
                 *_tiny_args()]) == 0
    assert main(["probe", "--data", str(data), "--ckpt", str(ckpt), "--out", str(root / "probe"),
                 *_tiny_args()]) == 0
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_pipeline_is_reproducible(tmp_path):
    first = _pipeline(tmp_path / "a")
    second = _pipeline(tmp_path / "b")
    assert first == second
    assert {"data/scenes.json", "data/graphs.json", "model.json", "model_history.csv", "eval/metrics.json",
            "eval/layout_0000.png"} <= set(first)
    probe_files = sorted(name for name in first if name.startswith("probe/"))
    assert probe_files == ["probe/cluster_tree.json", "probe/distance_heatmap.csv", "probe/embeddings.csv",
                           "probe/embeddings_top5.csv", "probe/probe_report.json"]
    metrics = json.loads(first["eval/metrics.json"])
    assert metrics["n_scenes"] == 10
    assert 0.0 <= metrics["mean_iou"] <= 1.0


def test_data_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("TRIPLET_LAYOUT_DATA_DIR", str(tmp_path / "env"))
    assert main(["gen", *_tiny_args("n_scenes=3")]) == 0
    assert (tmp_path / "env" / "scenes.json").exists()


def test_diverging_training_exits_with_numerical_code(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["gen", "--out", str(data), *_tiny_args()]) == 0
    code = main(["train", "--data", str(data), "--ckpt", str(tmp_path / "m.json"),
                 *_tiny_args("learning_rate=1e300")])
    assert code == 4
    out = capsys.readouterr().out
    assert "❌" in out and "non-finite loss at epoch" in out
    assert not (tmp_path / "m.json").exists()


def test_three_variants_on_one_dataset(tmp_path):
    data = tmp_path / "data"
    assert main(["gen", "--out", str(data), *_tiny_args()]) == 0
    for variant in ("baseline", "triplet", "triplet_da"):
        ckpt = tmp_path / f"model_{variant}.json"
        assert main(["train", "--data", str(data), "--ckpt", str(ckpt), "--variant", variant, *_tiny_args()]) == 0
        _, extra = load_checkpoint(ckpt)
        assert extra["variant"] == variant
        assert extra["augmentation"]["enabled"] == (variant == "triplet_da")
    assert len(list(tmp_path.glob("model_*_history.csv"))) == 3


def test_gen_adds_depth_edges_only_for_triplet_da(tmp_path):
    augmented = cmd_gen(load_run_config(None, ["mask_side=4"], variant="triplet_da"), tmp_path / "da")
    plain = cmd_gen(load_run_config(None, ["mask_side=4"], variant="triplet"), tmp_path / "plain")
    # TODO: pin the exact augmented edge count for the default seed once it is recorded from a reference run
    assert augmented["augmented_edges"] > 0
    assert plain["augmented_edges"] == 0
    assert augmented["base_edges"] == plain["base_edges"]
    graphs = json.loads((tmp_path / "da" / "graphs.json").read_text())["graphs"]
    assert sum(e["aug"] for g in graphs for e in g["edges"]) == augmented["augmented_edges"]


def test_rebuilt_graphs_follow_the_checkpoint_seed(tmp_path):
    data, ckpt = tmp_path / "data", tmp_path / "model.json"
    assert main(["gen", "--out", str(data), *_tiny_args()]) == 0
    (data / "graphs.json").unlink()
    assert main(["train", "--data", str(data), "--ckpt", str(ckpt), *_tiny_args()]) == 0
    outputs = []
    for seed in ("0", "5"):
        out = tmp_path / f"eval_{seed}" / "metrics.json"
        assert main(["eval", "--data", str(data), "--ckpt", str(ckpt), "--out", str(out), "--seed", seed,
                     *_tiny_args()]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_probe_can_export_predicate_embeddings(tmp_path):
    data, ckpt, out = tmp_path / "data", tmp_path / "model.json", tmp_path / "probe"
    assert main(["gen", "--out", str(data), *_tiny_args()]) == 0
    assert main(["train", "--data", str(data), "--ckpt", str(ckpt), *_tiny_args()]) == 0
    assert main(["probe", "--data", str(data), "--ckpt", str(ckpt), "--out", str(out),
                 *_tiny_args("export_predicates=true", "probe_report_top=2")]) == 0
    frame = pd.read_csv(out / "predicate_embeddings.csv")
    assert list(frame.columns[:3]) == ["label", "category_name", "v0"]
    assert set(frame["category_name"]) <= set(PREDICATES)
    graphs = json.loads((data / "graphs.json").read_text())["graphs"]
    assert len(frame) == sum(len(g["edges"]) for g in graphs)
    report = json.loads((out / "probe_report.json").read_text())
    assert len(report["top_class_accuracy"]) <= 2
    assert len(list(out.iterdir())) == 6


def test_probe_settings_reach_the_probe_config():
    cfg = load_run_config(None, ["probe_report_top=3", "export_predicates=yes"])
    assert cfg.probe_config().report_top == 3
    assert cfg.export_predicates is True
