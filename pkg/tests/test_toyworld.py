import numpy as np
import pytest

from voxact.action_codec import DiscreteAction
from voxact.demos import extract_keyframes
from voxact.toyworld import (
    PALETTE_NAMES,
    RandomActionAgent,
    ScriptedReplayAgent,
    ToyWorld,
    evaluate,
    generate_demo,
    make_task,
    run_episode,
    scripted_expert,
)
from voxact.toyworld.evaluate import DEFAULT_EPISODES_PER_TASK, DEFAULT_MAX_STEPS
from voxact.toyworld.expert import NUM_JOINTS
from voxact.toyworld.scene import BUTTON_HEIGHT, GRIPPER_HOME, IDENTITY_QUAT
from voxact.voxelizer import fuse, voxel_index_of


@pytest.fixture(scope="module")
def world():
    return ToyWorld(grid_size=32, camera_resolution=48)


class TestReset:
    def test_deterministic(self, world):
        task = make_task("press_button", colors=["red", "blue", "lime"])
        views_a, goal_a, state_a = world.reset(task, 1, seed=5)
        views_b, goal_b, state_b = world.reset(task, 1, seed=5)
        assert goal_a == goal_b
        for va, vb in zip(views_a, views_b):
            np.testing.assert_array_equal(va.rgb_image, vb.rgb_image)
            np.testing.assert_array_equal(va.depth_image, vb.depth_image)
        for oa, ob in zip(state_a.objects, state_b.objects):
            np.testing.assert_array_equal(oa.position, ob.position)
            assert oa.color_name == ob.color_name

    def test_different_seeds_differ(self, world):
        task = make_task("press_button", colors=["red", "blue", "lime"])
        _, _, state_a = world.reset(task, 1, seed=5)
        _, _, state_b = world.reset(task, 1, seed=6)
        moved = any(
            np.linalg.norm(oa.position - ob.position) > 1e-6
            for oa, ob in zip(state_a.objects, state_b.objects)
        )
        assert moved

    def test_twenty_color_goal_strings(self, world):
        task = make_task("press_button")
        goals = {task.goal(v) for v in range(task.num_variations)}
        assert len(goals) == 20
        assert all(g.startswith("push the ") and g.endswith(" button") for g in goals)
        assert task.num_variations == len(PALETTE_NAMES)

    def test_every_variation_unique_goal(self):
        for task_id in ("press_button", "stack_block", "put_in_slot"):
            task = make_task(task_id)
            goals = [task.goal(v) for v in range(task.num_variations)]
            assert len(goals) == len(set(goals))

    def test_objects_inside_workspace(self, world):
        task = make_task("stack_block")
        for seed in range(5):
            _, _, state = world.reset(task, 0, seed)
            for obj in state.objects:
                assert np.all(obj.position >= 0.0) and np.all(obj.position <= 1.0)


class TestRenderingGeometry:
    def test_backprojection_reproduces_surface_voxels(self, world):
        task = make_task("press_button", colors=["red", "blue", "lime"])
        views, _, state = world.reset(task, 0, seed=11)
        grid = fuse(views, world.bounds)
        for obj in state.objects:
            top = obj.position + [0.0, 0.0, obj.size[2] / 2.0]
            idx = voxel_index_of(top, world.bounds)
            assert grid.occupancy[idx] == 1.0, f"{obj.color_name} {obj.shape} not in grid"

    def test_render_backproject_error_below_1e6(self, world):
        # overhead camera: every hit point must lie on a known surface plane
        task = make_task("press_button", colors=["red", "blue", "lime"])
        views, _, state = world.reset(task, 0, seed=3)
        overhead = views[1]
        from voxact.voxelizer import project_pointcloud

        points, colors = project_pointcloud(overhead)
        surface_zs = {0.05}  # table top
        for obj in state.objects:
            surface_zs.add(round(obj.position[2] + obj.size[2] / 2.0, 12))
        gripper_zs = {
            round(state.gripper.position[2] + 0.03, 12),
        }
        ok = 0
        for p in points:
            dz = min(abs(p[2] - z) for z in surface_zs | gripper_zs)
            if dz < 1e-6:
                ok += 1
        assert ok / len(points) > 0.99

    def test_depth_zero_outside_scene(self, world):
        task = make_task("press_button", colors=["red", "blue", "lime"])
        views, _, _ = world.reset(task, 0, seed=3)
        front = views[0]
        assert np.any(front.depth_image == 0.0)  # sky pixels have no return


class TestStep:
    def test_close_on_empty_space(self, world):
        task = make_task("stack_block")
        _, _, state = world.reset(task, 0, seed=2)
        action = DiscreteAction((16, 16, 28), (0, 0, 0), open=0, collide=0)
        outcome = world.step(task, state, action)
        assert outcome.state.gripper.held_object is None
        assert outcome.state.gripper.open == 0
        assert not outcome.done

    def test_grasp_radius_boundary_inclusive(self, world):
        task = make_task("stack_block")
        _, _, state = world.reset(task, 0, seed=2)
        block = state.objects[0]
        pos = block.position + np.array([world.grasp_radius, 0.0, 0.0])
        new = world.apply_gripper(state, pos, IDENTITY_QUAT, open_bit=0)
        assert new.gripper.held_object == block.object_id

    def test_just_outside_grasp_radius_misses(self, world):
        task = make_task("stack_block")
        _, _, state = world.reset(task, 0, seed=2)
        block = state.objects[0]
        pos = block.position + np.array([world.grasp_radius + 1e-6, 0.0, 0.0])
        new = world.apply_gripper(state, pos, IDENTITY_QUAT, open_bit=0)
        assert new.gripper.held_object is None

    def test_press_requires_closed_gripper(self, world):
        task = make_task("press_button", colors=["red", "blue", "lime"])
        _, _, state = world.reset(task, 0, seed=4)
        button = state.objects[0]
        top = button.position + [0.0, 0.0, BUTTON_HEIGHT / 2.0]
        open_touch = world.apply_gripper(state, top, IDENTITY_QUAT, open_bit=1)
        assert not open_touch.find(button.object_id).pressed
        closed_touch = world.apply_gripper(state, top, IDENTITY_QUAT, open_bit=0)
        assert closed_touch.find(button.object_id).pressed

    def test_invalid_action_terminates(self, world):
        task = make_task("press_button", colors=["red", "blue", "lime"])
        _, _, state = world.reset(task, 0, seed=4)
        bad = DiscreteAction((99, 0, 0), (0, 0, 0), open=1, collide=0)
        outcome = world.step(task, state, bad)
        assert outcome.invalid and outcome.done and not outcome.success

    def test_step_is_pure(self, world):
        task = make_task("press_button", colors=["red", "blue", "lime"])
        _, _, state = world.reset(task, 0, seed=4)
        before = [o.position.copy() for o in state.objects]
        action = DiscreteAction((16, 16, 20), (0, 0, 0), open=0, collide=0)
        world.step(task, state, action)
        for obj, pos in zip(state.objects, before):
            np.testing.assert_array_equal(obj.position, pos)
        assert state.gripper.open == 1


class TestScriptedExpert:
    def test_press_button_two_waypoints(self, world):
        task = make_task("press_button", colors=["red", "blue", "lime"])
        _, _, state = world.reset(task, 0, seed=8)
        assert len(task.expert_waypoints(state)) == 2

    def test_keyframes_recover_waypoints(self, world):
        for task_id in ("press_button", "stack_block", "put_in_slot"):
            kwargs = {"colors": ["red", "blue", "lime"]} if task_id == "press_button" else {}
            task = make_task(task_id, **kwargs)
            _, _, state = world.reset(task, 0, seed=1)
            n_waypoints = len(task.expert_waypoints(state))
            demo = scripted_expert(world, task, state, frames_per_segment=5)
            kfs = extract_keyframes(demo)
            assert kfs == [5 * (i + 1) for i in range(n_waypoints)]
            assert kfs[-1] == len(demo.frames) - 1

    def test_keyframe_count_in_expected_range(self, world):
        for task_id in ("press_button", "stack_block", "put_in_slot"):
            kwargs = {"colors": ["red", "blue", "lime"]} if task_id == "press_button" else {}
            demo = generate_demo(world, make_task(task_id, **kwargs), 0, seed=3)
            count = len(extract_keyframes(demo))
            assert 2 <= count <= 17

    def test_interior_frames_above_velocity_threshold(self, world):
        task = make_task("press_button", colors=["red", "blue", "lime"])
        demo = generate_demo(world, task, 0, seed=2)
        kfs = set(extract_keyframes(demo))
        for i, frame in enumerate(demo.frames):
            assert frame.joint_velocities.shape == (NUM_JOINTS,)
            if 0 < i < len(demo.frames) and i not in kfs:
                assert np.max(np.abs(frame.joint_velocities)) > 0.1

    def test_collide_flags_mark_contact_segments(self, world):
        task = make_task("press_button", colors=["red", "blue", "lime"])
        demo = generate_demo(world, task, 0, seed=2)
        kfs = extract_keyframes(demo)
        # transit segment uses avoidance, press contact does not
        assert demo.collide_flags[kfs[0]] == 1
        assert demo.collide_flags[kfs[1]] == 0

    def test_demo_starts_at_home_open(self, world):
        task = make_task("stack_block")
        demo = generate_demo(world, task, 0, seed=2)
        np.testing.assert_allclose(demo.frames[0].gripper_pose[:3], GRIPPER_HOME)
        assert demo.frames[0].gripper_open == 1


class TestEvaluate:
    def test_default_protocol_values(self):
        assert DEFAULT_EPISODES_PER_TASK == 25
        assert DEFAULT_MAX_STEPS == 25

    def test_replay_agent_scores_100_everywhere(self, world):
        for task_id in ("press_button", "stack_block", "put_in_slot"):
            kwargs = {"colors": ["red", "blue", "lime"]} if task_id == "press_button" else {}
            task = make_task(task_id, **kwargs)
            agent = ScriptedReplayAgent(world, task)
            report = evaluate(agent, world, [task], episodes_per_task=10, max_steps=25, seed=17)
            assert report.per_task[task_id] == 100.0, task_id
            assert all(r.termination == "success" for r in report.episodes)

    def test_score_is_all_or_nothing(self, world):
        task = make_task("press_button", colors=["red", "blue", "lime"])
        agent = ScriptedReplayAgent(world, task)
        result = run_episode(agent, world, task, 0, seed=5)
        assert result.score in (0, 100)
        assert (result.score == 100) == (result.termination == "success")

    def test_random_agent_near_zero_on_stacking(self):
        small_world = ToyWorld(grid_size=32, camera_resolution=16)
        task = make_task("stack_block")
        agent = RandomActionAgent(small_world, seed=0)
        report = evaluate(agent, small_world, [task], episodes_per_task=200, max_steps=25, seed=23)
        assert report.per_task["stack_block"] <= 2.0

    def test_empty_task_list_empty_report(self, world):
        agent = RandomActionAgent(world, seed=0)
        report = evaluate(agent, world, [], episodes_per_task=5, seed=0)
        assert report.rows == [] and report.per_task == {}

    def test_report_table_fields(self, world):
        task = make_task("press_button", colors=["red", "blue", "lime"])
        agent = ScriptedReplayAgent(world, task)
        report = evaluate(agent, world, [task], episodes_per_task=4, seed=9)
        assert report.per_task["press_button"] == 100.0
        for row in report.rows:
            assert set(row) == {"task_id", "variation_id", "episodes", "mean_score", "terminations"}
        assert sum(r["episodes"] for r in report.rows) == 4

    def test_goal_swapper_changes_agent_goal_only(self, world):
        task = make_task("press_button", colors=["red", "blue", "lime"])
        seen = []

        class Probe:
            def act(self, obs, goal):
                seen.append(goal)
                return DiscreteAction((0, 0, 0), (0, 0, 0), open=1, collide=1)

        evaluate(Probe(), world, [task], episodes_per_task=2, max_steps=1, seed=1,
                 goal_swapper=lambda t, v, g: "push the plaid button")
        assert set(seen) == {"push the plaid button"}
