import json

import numpy as np
import pytest

from voxact.cli import main
from voxact.dataset_io import load_dataset
from voxact.errors import InvalidInputError
from voxact.runconfig import RunConfig

TINY = {
    "grid_size": "8",
    "patch_size": "4",
    "num_latents": "4",
    "latent_dim": "8",
    "num_self_attn_layers": "1",
    "embed_dim": "16",
    "rotation_bin_deg": "30.0",
    "num_lang_tokens": "4",
    "lang_feature_dim": "8",
    "num_attention_heads": "1",
    "voxel_feature_dim": "8",
    "ff_mult": "2",
    "batch_size": "2",
    "total_iterations": "4",
    "checkpoint_interval": "4",
    "camera_resolution": "24",
    "frames_per_segment": "3",
    "aug_trans_range": "0,0,0",
    "aug_yaw_range_deg": "0",
    "tasks": "press_button",
    "color_pool": "red,blue",
    "demos_per_task": "2",
}


def tiny_args(*extra):
    args = list(extra)
    for key, value in TINY.items():
        args += ["--set", f"{key}={value}"]
    return args


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """generate -> train once; downstream commands reuse the outputs."""
    root = tmp_path_factory.mktemp("cli")
    ds = root / "dataset"
    run = root / "run"
    assert main(tiny_args("generate", "--out", str(ds), "--seed", "5")) == 0
    assert main(tiny_args("train", "--dataset", str(ds), "--out", str(run))) == 0
    return ds, run


class TestRunConfig:
    def test_unknown_keys_listed_together(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("grid_size = 8\nbogus_key = 1\nanother_bad = 2\n")
        with pytest.raises(InvalidInputError) as err:
            RunConfig.load(cfg)
        assert "bogus_key" in str(err.value) and "another_bad" in str(err.value)

    def test_file_then_flag_precedence(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("seed = 1\nbatch_size = 4\n")
        config = RunConfig.load(cfg, {"seed": "9"})
        assert config.seed == 9 and config.batch_size == 4

    def test_comments_and_blank_lines(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("# a comment\n\nseed = 3  # trailing\n")
        assert RunConfig.load(cfg).seed == 3

    def test_round_trip_through_text(self, tmp_path):
        config = RunConfig.load(None, {"seed": "7", "tasks": "press_button", "color_pool": "red,blue"})
        cfg = tmp_path / "resolved.txt"
        cfg.write_text(config.to_text())
        again = RunConfig.load(cfg)
        assert again == config

    def test_bad_value_reported(self, tmp_path):
        with pytest.raises(InvalidInputError, match="seed"):
            RunConfig.load(None, {"seed": "banana"})


class TestGenerate:
    def test_dataset_round_trips(self, pipeline):
        ds, _ = pipeline
        episodes = load_dataset(ds)
        assert len(episodes) == 2
        assert all(ep.task_id == "press_button" for ep in episodes)
        assert (ds / "resolved_config.txt").exists()

    def test_zero_demos_valid_manifest(self, tmp_path):
        out = tmp_path / "empty"
        args = tiny_args("generate", "--out", str(out)) + ["--set", "demos_per_task=0"]
        assert main(args) == 0
        assert load_dataset(out) == []

    def test_generate_is_reproducible(self, tmp_path, pipeline):
        ds, _ = pipeline
        out = tmp_path / "again"
        assert main(tiny_args("generate", "--out", str(out), "--seed", "5")) == 0
        a = load_dataset(ds)
        b = load_dataset(out)
        np.testing.assert_array_equal(
            a[0].frames[0].views[0].depth_image, b[0].frames[0].views[0].depth_image
        )


class TestTrain:
    def test_outputs_exist(self, pipeline):
        _, run = pipeline
        assert (run / "checkpoint_final.pt").exists()
        assert (run / "loss_log.txt").exists()
        snapshot = run / "resolved_config.txt"
        assert snapshot.exists()
        # the snapshot is loadable and reproduces the run configuration
        config = RunConfig.load(snapshot)
        assert config.total_iterations == 4

    def test_missing_dataset_fails_cleanly(self, tmp_path):
        code = main(tiny_args("train", "--dataset", str(tmp_path / "nope"), "--out", str(tmp_path / "o")))
        assert code == 2


class TestEval:
    def test_report_written(self, pipeline, tmp_path):
        ds, run = pipeline
        out = tmp_path / "eval"
        code = main(
            tiny_args(
                "eval",
                "--checkpoint", str(run / "checkpoint_final.pt"),
                "--out", str(out),
                "--set", "episodes_per_task=2",
                "--set", "max_steps=3",
            )
        )
        assert code == 0
        report = json.loads((out / "eval_report.json").read_text())
        assert "press_button" in report["per_task"]
        assert sum(r["episodes"] for r in report["rows"]) == 2

    def test_grid_mismatch_rejected(self, pipeline, tmp_path):
        _, run = pipeline
        args = tiny_args(
            "eval", "--checkpoint", str(run / "checkpoint_final.pt"), "--out", str(tmp_path / "x")
        )
        args += ["--set", "grid_size=16", "--set", "patch_size=4"]
        assert main(args) == 2


class TestPredict:
    def test_prints_match_field(self, pipeline, capsys):
        ds, run = pipeline
        code = main(
            tiny_args(
                "predict",
                "--checkpoint", str(run / "checkpoint_final.pt"),
                "--dataset", str(ds),
                "--tuple-id", "0",
            )
        )
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert "match" in out and "predicted" in out and "label" in out

    def test_bad_tuple_id(self, pipeline):
        ds, run = pipeline
        code = main(
            tiny_args(
                "predict",
                "--checkpoint", str(run / "checkpoint_final.pt"),
                "--dataset", str(ds),
                "--tuple-id", "9999",
            )
        )
        assert code == 2


class TestInspect:
    def test_writes_heatmaps_and_summary(self, pipeline, tmp_path):
        ds, run = pipeline
        out = tmp_path / "inspect"
        code = main(
            tiny_args(
                "inspect",
                "--checkpoint", str(run / "checkpoint_final.pt"),
                "--dataset", str(ds),
                "--tuple-id", "0",
                "--out", str(out),
            )
        )
        assert code == 0
        for name in ("q_trans_max_x.png", "q_trans_max_y.png", "q_trans_max_z.png"):
            assert (out / name).exists()
        summary = (out / "summary.txt").read_text()
        assert "argmax matches label" in summary

    def test_heatmap_values_are_valid_distribution_projection(self, pipeline, tmp_path):
        ds, run = pipeline
        from voxact.agent import ActingPolicy
        from voxact.runconfig import RunConfig
        from voxact.trainer import TrainingSet
        from scipy.special import softmax

        config = RunConfig.load(None, dict(TINY))
        episodes = load_dataset(ds)
        dataset = TrainingSet.from_episodes(
            episodes, config.workspace_bounds(), config.rotation_bin_deg
        )
        tup = dataset.materialize(0)
        agent = ActingPolicy.from_checkpoint(run / "checkpoint_final.pt", bounds=config.workspace_bounds())
        from voxact.policy import predict_q

        q = predict_q(agent.model, tup.voxel_obs.channels, tup.proprio,
                      agent.lang_encoder.encode(tup.language_goal))
        probs = softmax(q.q_trans.astype(np.float64).ravel()).reshape(q.q_trans.shape)
        for axis in range(3):
            proj = probs.max(axis=axis)
            assert np.all(proj > 0.0) and np.all(proj <= 1.0)

    def test_swapped_goal_mode_runs(self, pipeline, tmp_path):
        ds, run = pipeline
        out = tmp_path / "swap"
        code = main(
            tiny_args(
                "inspect",
                "--checkpoint", str(run / "checkpoint_final.pt"),
                "--dataset", str(ds),
                "--tuple-id", "0",
                "--out", str(out),
                "--goal", "push the blue button",
            )
        )
        assert code == 0
        assert "push the blue button" in (out / "summary.txt").read_text()
