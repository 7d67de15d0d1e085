from __future__ import annotations

import numpy as np
import pytest

import tomforge as tf
from tomforge.cli import main
from tomforge.epistemic import WorldError


def test_pool_json_round_trip(tmp_path):
    pool = tf.ContextPool.default()
    path = tmp_path / "pool.json"
    pool.save(path)
    loaded = tf.ContextPool.load(path)
    assert loaded == pool
    spec_a = pool.sample(np.random.default_rng(5))
    spec_b = loaded.sample(np.random.default_rng(5))
    assert spec_a == spec_b


def test_pool_validation():
    with pytest.raises(WorldError):
        tf.ContextPool(names=("OnlyOne",), layouts=tf.ContextPool.default().layouts)
    with pytest.raises(WorldError):
        tf.ContextPool(names=("A", "B", "C"), layouts=())


def test_max_counts_reflect_layouts():
    pool = tf.ContextPool.default()
    assert pool.max_agents == 4
    assert pool.max_objects == 2
    small = tf.ContextPool.small()
    assert small.max_agents == 3
    assert len(small.layouts) == 1


def test_sampled_casts_vary_across_episodes():
    pool = tf.ContextPool.default()
    rng = np.random.default_rng(0)
    casts = [tuple(pool.sample(rng).agents) for _ in range(12)]
    assert len(set(casts)) > 6


def test_cli_accepts_custom_context_pool(tmp_path, capsys):
    pool = tf.ContextPool(
        names=("Ada", "Bo", "Cy"),
        layouts=(
            tf.Layout(("den", "attic"), {"chest": "den"}, ("pin",), 2),
        ),
    )
    path = tmp_path / "pool.json"
    pool.save(path)
    out = tmp_path / "trace.json"
    code = main(["generate", "--seed", "1", "--contexts", str(path), "--out", str(out)])
    assert code == 0
    trace = tf.StoryTrace.from_json(out.read_text())
    assert set(trace.world_spec.agents) <= {"Ada", "Bo", "Cy"}
    assert trace.world_spec.rooms == ("den", "attic")
