import numpy as np
import pytest
from hypothesis import given, strategies as st

from subplay.engine.config import EnvConfig
from subplay.engine.world import ADVERSARY, layout, observation_dim, observations, opponent_slots, reset
from subplay.observe import (
    Limitation, Mask, apply_mask, bucket_lookup, classify_subgame, make_mask, make_masks, subgame_partition,
    team_view, visibility,
)
from tests.oracles import binomial_by_enumeration

PP = EnvConfig(num_adversaries=1, num_victims=3)


def victim_slots(cfg):
    return np.concatenate([opponent_slots(cfg, ADVERSARY, j) for j in range(cfg.num_victims)])


def test_limitation_validation():
    with pytest.raises(ValueError):
        Limitation("fog")
    with pytest.raises(ValueError):
        Limitation("uncertainty", 1.5)
    with pytest.raises(ValueError):
        Limitation("distance", observable_distance=0.0)


def test_uncertainty_extremes():
    s = reset(PP, 0)
    rng = np.random.default_rng(0)
    m = make_mask(s, 0, Limitation("uncertainty", 0.0), rng)
    assert np.all(m.bits == 1) and m.num_visible == 3
    m = make_mask(s, 0, Limitation("uncertainty", 1.0), rng)
    assert np.all(m.bits[victim_slots(PP)] == 0) and m.num_visible == 0
    other = np.setdiff1d(np.arange(m.bits.size), victim_slots(PP))
    assert np.all(m.bits[other] == 1)


def test_distance_threshold():
    s = reset(PP, 0)
    lay = layout(PP)
    s.positions[lay.adversary_idx[0]] = (0.0, 0.0)
    s.positions[lay.victim_idx] = [(0.49, 0.0), (0.0, 0.51), (-0.7, 0.0)]
    seen = visibility(s, 0, Limitation("distance", observable_distance=0.5))
    assert seen.tolist() == [True, False, False]


def test_distance_monotone():
    rng = np.random.default_rng(1)
    for _ in range(100):
        s = reset(PP, rng)
        prev = set()
        for d in (0.25, 0.5, 1.0, 1.5, 2.0, 3.0):
            vis = make_mask(s, 0, Limitation("distance", observable_distance=d)).visible_victims
            assert prev <= vis
            prev = vis


def test_region_requires_forest():
    with pytest.raises(ValueError):
        visibility(reset(PP, 0), 0, Limitation("region"))
    wc = EnvConfig(num_adversaries=2, num_victims=3, environment="world_communication")
    s = reset(wc, 0)
    s.forest_center = np.array([0.0, 0.0])
    lay = layout(wc)
    s.positions[lay.victim_idx] = [(0.0, 0.1), (0.9, 0.9), (0.29, -0.29)]
    assert visibility(s, 0, Limitation("region")).tolist() == [False, True, False]


def test_mask_shares_value_per_victim():
    rng = np.random.default_rng(2)
    s = reset(PP, 0)
    for _ in range(200):
        m = make_mask(s, 0, Limitation("uncertainty", 0.5), rng)
        for j in range(3):
            vals = m.bits[opponent_slots(PP, ADVERSARY, j)]
            assert len(set(vals)) == 1
            assert (vals[0] == 1) == (j in m.visible_victims)


def test_drop_frequency():
    rng = np.random.default_rng(3)
    s = reset(PP, 0)
    seen = np.array([visibility(s, 0, Limitation("uncertainty", 0.3), rng) for _ in range(100_000 // 3)])
    assert abs((1 - seen.mean()) - 0.3) < 0.01


def test_visible_count_binomial():
    rng = np.random.default_rng(4)
    s = reset(PP, 0)
    counts = np.array([visibility(s, 0, Limitation("uncertainty", 0.25), rng).sum() for _ in range(100_000)])
    freq = np.bincount(counts, minlength=4) / counts.size
    assert np.all(np.abs(freq - binomial_by_enumeration(3, 0.75)) < 0.02)


def test_proactive_mask_stacks():
    rng = np.random.default_rng(5)
    s = reset(PP, 0)
    lim = Limitation("none", proactive_mask_rate=0.5)
    seen = np.array([visibility(s, 0, lim, rng) for _ in range(20_000)])
    assert abs(seen.mean() - 0.5) < 0.02


def test_apply_mask():
    rng = np.random.default_rng(6)
    o = rng.normal(size=22)
    assert np.array_equal(apply_mask(o, np.ones(22)), o)
    bits = rng.integers(0, 2, 22).astype(float)
    assert np.array_equal(apply_mask(o, bits), np.array([a * b for a, b in zip(o, bits)]))
    with pytest.raises(ValueError):
        apply_mask(o, np.ones(21))


def test_partition_examples():
    assert subgame_partition(3, 4) == ((0,), (1,), (2,), (3,))
    assert subgame_partition(3, 1) == ((0, 1, 2, 3),)
    assert subgame_partition(3, 2) == ((0, 1), (2, 3))
    assert subgame_partition(8, 3) == ((0, 1, 2), (3, 4, 5), (6, 7, 8))
    with pytest.raises(ValueError):
        subgame_partition(3, 5)
    with pytest.raises(ValueError):
        subgame_partition(3, 0)


@given(st.integers(1, 12), st.data())
def test_partition_covers_exactly_once(n, data):
    sub = data.draw(st.integers(1, n + 1))
    part = subgame_partition(n, sub)
    flat = [c for b in part for c in b]
    assert flat == list(range(n + 1))
    widths = [len(b) for b in part]
    assert max(widths) - min(widths) <= 1 and widths == sorted(widths)
    for c in range(n + 1):
        assert sum(c in b for b in part) == 1
        assert bucket_lookup(part)[c] == classify_subgame(c, part)


def test_classify_examples():
    part = subgame_partition(3, 4)
    assert classify_subgame(Mask(np.ones(22), frozenset()), part) == 0
    assert classify_subgame(Mask(np.ones(22), frozenset({0, 2})), part) == 2
    assert classify_subgame(4, subgame_partition(8, 3)) == 1


def test_team_view_matches_masks():
    cfg = EnvConfig(num_adversaries=2, num_victims=3)
    s = reset(cfg, 0)
    lim = Limitation("uncertainty", 0.5)
    bits, counts = team_view(s, lim, np.random.default_rng(7))
    masks = make_masks(s, lim, np.random.default_rng(7))
    for i, m in enumerate(masks):
        assert np.array_equal(bits[i], m.bits) and counts[i] == m.num_visible
    assert bits.shape == (2, observation_dim(cfg, ADVERSARY))
    masked = observations(s, ADVERSARY) * bits
    assert np.all(masked[bits == 0] == 0)
