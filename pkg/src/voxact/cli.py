"""Command-line entry points: generate | train | eval | predict | inspect.

Every command takes --config (key-value file), --seed, --out, and repeated
--set key=value overrides; precedence is file < flags. Each run writes a
resolved-config snapshot next to its outputs so it can be reproduced from
that file alone.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .action_codec import select_best_action, undiscretize
from .agent import ActingPolicy
from .dataset_io import load_dataset, save_dataset
from .demos import extract_keyframes
from .errors import VoxactError
from .policy import load_checkpoint, predict_q
from .runconfig import RunConfig
from .toyworld import evaluate, generate_demo
from .trainer import TrainingSet, train


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="key-value config file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", type=Path, default=None, help="output path")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )


def _load_config(args) -> RunConfig:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise VoxactError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.out is not None:
        overrides["out"] = str(args.out)
    if getattr(args, "dataset", None) is not None:
        overrides["dataset"] = str(args.dataset)
    return RunConfig.load(args.config, overrides)


def _write_snapshot(config: RunConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "resolved_config.txt").write_text(config.to_text())


def cmd_generate(args) -> int:
    config = _load_config(args)
    if not config.out:
        raise VoxactError("generate needs --out (or out= in the config)")
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    if not out.is_dir():
        raise VoxactError(f"cannot write dataset to {out}")

    world = config.make_world()
    episodes = []
    for task_index, task in enumerate(config.make_tasks()):
        demo_count = 0
        keyframe_counts = []
        for i in range(config.demos_per_task):
            rng = np.random.default_rng(np.random.SeedSequence([config.seed, task_index, i]))
            variation = int(rng.integers(task.num_variations))
            demo_seed = int(rng.integers(2**31))
            episode = generate_demo(world, task, variation, demo_seed, config.frames_per_segment)
            keyframe_counts.append(len(extract_keyframes(episode, config.vel_epsilon)))
            episodes.append(episode)
            demo_count += 1
        kf = f"keyframes {min(keyframe_counts)}-{max(keyframe_counts)}" if keyframe_counts else "no demos"
        print(f"{task.task_id}: {demo_count} demos, {kf}")
    save_dataset(episodes, out)
    _write_snapshot(config, out)
    print(f"dataset written to {out}")
    return 0


def cmd_train(args) -> int:
    config = _load_config(args)
    if not config.dataset:
        raise VoxactError("train needs --dataset (or dataset= in the config)")
    if not config.out:
        raise VoxactError("train needs --out (or out= in the config)")
    episodes = load_dataset(config.dataset)
    out = Path(config.out)
    _write_snapshot(config, out)
    result = train(
        episodes,
        config.policy_config(),
        config.train_config(),
        out,
        bounds=config.workspace_bounds(),
        vel_epsilon=config.vel_epsilon,
        resume_from=args.resume,
        progress_every=args.progress_every,
    )
    print(f"final checkpoint: {result.checkpoint_path}")
    print(f"loss log: {result.loss_log_path}")
    return 0


def cmd_eval(args) -> int:
    config = _load_config(args)
    if not config.out:
        raise VoxactError("eval needs --out (or out= in the config)")
    agent = ActingPolicy.from_checkpoint(args.checkpoint, bounds=config.workspace_bounds())
    if agent.model.config.grid_size != config.grid_size:
        raise VoxactError(
            f"checkpoint grid {agent.model.config.grid_size} does not match "
            f"environment grid {config.grid_size}"
        )
    report = evaluate(
        agent,
        config.make_world(),
        config.make_tasks(),
        episodes_per_task=config.episodes_per_task,
        max_steps=config.max_steps,
        seed=config.seed,
    )
    out = Path(config.out)
    report_path = out / "eval_report.json" if not out.suffix else out
    report.save(report_path)
    _write_snapshot(config, report_path.parent)
    for task_id, score in report.per_task.items():
        print(f"{task_id}: mean score {score:.1f}")
    print(f"report written to {report_path}")
    return 0


def _load_tuple(config: RunConfig, tuple_id: int):
    episodes = load_dataset(config.dataset)
    dataset = TrainingSet.from_episodes(
        episodes, config.workspace_bounds(), config.rotation_bin_deg, config.vel_epsilon
    )
    if not 0 <= tuple_id < len(dataset):
        raise VoxactError(f"tuple id {tuple_id} out of range [0, {len(dataset)})")
    return dataset.materialize(tuple_id)


def cmd_predict(args) -> int:
    config = _load_config(args)
    if not config.dataset:
        raise VoxactError("predict needs --dataset (or dataset= in the config)")
    tup = _load_tuple(config, args.tuple_id)
    agent = ActingPolicy.from_checkpoint(args.checkpoint, bounds=config.workspace_bounds())
    goal = args.goal if args.goal else tup.language_goal
    q = predict_q(agent.model, tup.voxel_obs.channels, tup.proprio, agent.lang_encoder.encode(goal))
    action = select_best_action(q)
    cont = undiscretize(action, config.workspace_bounds(), config.rotation_bin_deg)
    result = {
        "goal": goal,
        "predicted": {
            "trans_index": list(action.trans_index),
            "rot_indices": list(action.rot_indices),
            "open": action.open,
            "collide": action.collide,
            "position": [round(float(v), 6) for v in cont.position],
        },
        "label": {
            "trans_index": list(tup.target.trans_index),
            "rot_indices": list(tup.target.rot_indices),
            "open": tup.target.open,
            "collide": tup.target.collide,
        },
        "match": action == tup.target,
    }
    print(json.dumps(result, indent=2))
    return 0


def cmd_inspect(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from scipy.special import softmax

    config = _load_config(args)
    if not config.dataset:
        raise VoxactError("inspect needs --dataset (or dataset= in the config)")
    if not config.out:
        raise VoxactError("inspect needs --out (or out= in the config)")
    tup = _load_tuple(config, args.tuple_id)
    agent = ActingPolicy.from_checkpoint(args.checkpoint, bounds=config.workspace_bounds())
    goal = args.goal if args.goal else tup.language_goal
    q = predict_q(agent.model, tup.voxel_obs.channels, tup.proprio, agent.lang_encoder.encode(goal))
    action = select_best_action(q)

    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    probs = softmax(np.asarray(q.q_trans, dtype=np.float64).ravel()).reshape(q.q_trans.shape)
    written = []
    for axis, name in enumerate("xyz"):
        image = probs.max(axis=axis)
        path = out / f"q_trans_max_{name}.png"
        plt.imsave(path, image, cmap="viridis")
        written.append(path)

    summary = [
        f"goal: {goal}",
        f"dataset goal: {tup.language_goal}",
        f"predicted trans_index: {action.trans_index}",
        f"label trans_index: {tup.target.trans_index}",
        f"predicted rot_indices: {action.rot_indices}  open: {action.open}  collide: {action.collide}",
        f"label rot_indices: {tup.target.rot_indices}  open: {tup.target.open}  collide: {tup.target.collide}",
        f"argmax matches label: {action == tup.target}",
    ]
    summary_path = out / "summary.txt"
    summary_path.write_text("\n".join(summary) + "\n")
    for path in written + [summary_path]:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="voxact", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="script expert demos into a dataset")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train a policy on a dataset")
    _add_common(p)
    p.add_argument("--dataset", type=Path, default=None)
    p.add_argument("--resume", type=Path, default=None, help="checkpoint to resume from")
    p.add_argument("--progress-every", type=int, default=0, help="print loss every N iterations")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run seeded evaluation episodes")
    _add_common(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="predict the action for one dataset tuple")
    _add_common(p)
    p.add_argument("--dataset", type=Path, default=None)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--tuple-id", type=int, required=True)
    p.add_argument("--goal", type=str, default=None, help="replace the tuple's goal")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("inspect", help="dump translation value heatmaps for one tuple")
    _add_common(p)
    p.add_argument("--dataset", type=Path, default=None)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--tuple-id", type=int, required=True)
    p.add_argument("--goal", type=str, default=None, help="swapped-goal mode")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VoxactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
