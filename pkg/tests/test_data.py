import struct

import numpy as np
import pytest

from dyadgen.data import (
    PRESETS,
    DyadicPair,
    MotionSequence,
    NormStats,
    SkeletonSpec,
    delayed_mirror,
    denormalize,
    fit_norm_stats,
    from_grid_function,
    load_corpus,
    normalize,
    pairs_to_arrays,
    read_any,
    read_csv_motion,
    read_motion,
    read_pair,
    read_skeleton,
    save_corpus,
    split,
    swap_augment,
    synth_coupled,
    to_grid_function,
    write_csv_motion,
    write_motion,
    write_pair,
    write_skeleton,
)
from dyadgen.data.formats import decode, encode_motion, encode_pair
from dyadgen.errors import (
    BadDelay,
    BadHeader,
    BadJointIndex,
    BadMagic,
    EmptyDataset,
    MotionFormatError,
    NonFiniteValue,
    TrailingData,
    TruncatedFile,
)


def f32_motion(frames, joints, seed=0, dt=0.04):
    rng = np.random.default_rng(seed)
    pos = rng.standard_normal((frames, joints, 3)).astype(np.float32).astype(np.float64)
    return MotionSequence(pos, float(np.float32(dt)))


# formats ------------------------------------------------------------------------

def test_pmo1_byte_count():
    raw = encode_motion(f32_motion(3, 2))
    assert len(raw) == 4 + 4 + 4 + 4 + 72 == 88


def test_pmo1_layout_by_hand():
    m = f32_motion(2, 1, dt=0.5)
    raw = encode_motion(m)
    magic, joints, frames, dt = struct.unpack("<4sIIf", raw[:16])
    assert (magic, joints, frames, dt) == (b"PMO1", 1, 2, 0.5)
    vals = struct.unpack("<6f", raw[16:])
    np.testing.assert_array_equal(vals, m.positions.reshape(-1))


def test_round_trip_files(tmp_path):
    m = f32_motion(7, 3, seed=2)
    write_motion(tmp_path / "m.pmo1", m)
    back = read_motion(tmp_path / "m.pmo1")
    assert back.dt == m.dt
    assert back.positions.tobytes() == m.positions.tobytes()
    pair = DyadicPair(m, f32_motion(7, 3, seed=3), None)
    write_pair(tmp_path / "p.pmo2", pair)
    back = read_pair(tmp_path / "p.pmo2")
    assert back.actor_a.positions.tobytes() == pair.actor_a.positions.tobytes()
    assert back.actor_b.positions.tobytes() == pair.actor_b.positions.tobytes()
    assert (tmp_path / "p.pmo2").stat().st_size == 16 + 2 * 7 * 3 * 3 * 4


def test_bad_magic():
    raw = b"XXXX" + encode_motion(f32_motion(3, 2))[4:]
    with pytest.raises(BadMagic):
        decode(raw)


@pytest.mark.parametrize(
    "mutate, error",
    [
        (lambda r: r[:-1], TruncatedFile),
        (lambda r: r[:10], TruncatedFile),
        (lambda r: r[:2], TruncatedFile),
        (lambda r: r + b"\0", TrailingData),
        (lambda r: r[:4] + struct.pack("<I", 0) + r[8:], BadHeader),
        (lambda r: r[:8] + struct.pack("<I", 1) + r[12:], BadHeader),
        (lambda r: r[:12] + struct.pack("<f", -1.0) + r[16:], BadHeader),
        (lambda r: r[:12] + struct.pack("<f", float("nan")) + r[16:], BadHeader),
        (lambda r: r[:16] + struct.pack("<f", float("inf")) + r[20:], NonFiniteValue),
    ],
)
def test_corruptions_rejected(mutate, error):
    with pytest.raises(error):
        decode(mutate(encode_motion(f32_motion(3, 2))))


def test_errors_share_a_base():
    for err in (BadMagic, TruncatedFile, TrailingData, BadHeader, NonFiniteValue):
        assert issubclass(err, MotionFormatError)


def test_read_kind_mismatch(tmp_path):
    write_motion(tmp_path / "m.pmo1", f32_motion(3, 1))
    with pytest.raises(BadMagic):
        read_pair(tmp_path / "m.pmo1")
    assert isinstance(read_any(tmp_path / "m.pmo1"), MotionSequence)


def test_encode_rejects_float32_overflow():
    with pytest.raises(NonFiniteValue):
        encode_pair(DyadicPair(MotionSequence(np.full((2, 1, 3), 1e300), 0.1), MotionSequence(np.zeros((2, 1, 3)), 0.1)))


def test_csv_round_trip(tmp_path):
    m = f32_motion(5, 2, seed=4)
    write_csv_motion(tmp_path / "m.csv", m)
    header = (tmp_path / "m.csv").read_text().splitlines()[0]
    assert header == "x1,y1,z1,x2,y2,z2"
    back = read_csv_motion(tmp_path / "m.csv", m.dt)
    np.testing.assert_allclose(back.positions, m.positions, rtol=1e-8)
    np.savetxt(tmp_path / "plain.csv", m.flat(), delimiter=",")
    np.testing.assert_array_equal(read_csv_motion(tmp_path / "plain.csv", m.dt).positions, m.positions)


def test_csv_bad_columns(tmp_path):
    np.savetxt(tmp_path / "bad.csv", np.zeros((3, 4)), delimiter=",")
    with pytest.raises(ValueError):
        read_csv_motion(tmp_path / "bad.csv", 0.1)


# motion containers ----------------------------------------------------------------

def test_motion_validation():
    with pytest.raises(ValueError):
        MotionSequence(np.zeros((1, 2, 3)), 0.1)
    with pytest.raises(ValueError):
        MotionSequence(np.zeros((4, 2, 3)), 0.0)
    with pytest.raises(ValueError):
        DyadicPair(f32_motion(4, 2), f32_motion(5, 2))


def test_grid_function_layout():
    m = f32_motion(6, 3, seed=1)
    f = to_grid_function(m)
    assert f.channels == 9
    for j in range(3):
        np.testing.assert_array_equal(f.values[:, 3 * j], m.positions[:, j, 0])
    back = from_grid_function(f, m.duration)
    np.testing.assert_array_equal(back.positions, m.positions)
    assert back.dt == pytest.approx(m.dt)


def test_double_resolution_halves_dt():
    from dyadgen.grid import resample

    m = f32_motion(16, 2)
    fine = from_grid_function(resample(to_grid_function(m), 32), m.duration)
    assert fine.frames == 32
    assert fine.dt == pytest.approx(m.dt / 2)


# synthetic task -------------------------------------------------------------------

def dft_delay_oracle(x, shift_samples):
    """Band-limited circular delay by explicit DFT sums (no FFT)."""
    n = len(x)
    out = np.zeros_like(x)
    t = np.arange(n)
    for k in range(n // 2 + 1):
        ck = np.sum(x * np.exp(-2j * np.pi * k * t[:, None, None] / n), axis=0)
        wave = np.exp(2j * np.pi * k * (t[:, None, None] - shift_samples) / n)
        if k == 0 or (n % 2 == 0 and k == n // 2):
            out += (ck * wave).real / n
        else:
            out += 2 * (ck * wave).real / n
    return out


def test_zero_noise_is_delayed_mirror():
    pairs = synth_coupled(3, joints=4, frames=32, dt=1 / 30, delay=0.07, noise=0.0, seed=5)
    for p in pairs:
        a = p.actor_a
        shift = 0.07 / a.dt
        oracle = dft_delay_oracle(a.positions, shift) * np.array([-1.0, 1.0, 1.0])
        np.testing.assert_allclose(p.actor_b.positions, oracle, atol=1e-9)


def test_integer_frame_delay_is_a_roll():
    pairs = synth_coupled(2, frames=40, dt=0.25, delay=0.75, noise=0.0, seed=1, mirror=False)
    for p in pairs:
        np.testing.assert_allclose(p.actor_b.positions, np.roll(p.actor_a.positions, 3, axis=0), atol=1e-12)


def test_zero_delay_no_mirror_is_copy():
    for p in synth_coupled(2, delay=0.0, noise=0.0, mirror=False, seed=2):
        np.testing.assert_array_equal(p.actor_b.positions, p.actor_a.positions)


def test_synth_deterministic_and_noise_scale():
    a = synth_coupled(4, seed=9)
    b = synth_coupled(4, seed=9)
    assert all(np.array_equal(x.actor_b.positions, y.actor_b.positions) for x, y in zip(a, b))
    assert not np.array_equal(a[0].actor_a.positions, synth_coupled(4, seed=10)[0].actor_a.positions)
    resid = np.concatenate([(p.actor_b.positions - delayed_mirror(p.actor_a, 0.1)).ravel() for p in synth_coupled(64, noise=0.05, seed=3)])
    assert resid.std() == pytest.approx(0.05, rel=0.15)


def test_bad_delay():
    with pytest.raises(BadDelay):
        synth_coupled(1, frames=10, dt=0.1, delay=1.5)
    with pytest.raises(BadDelay):
        synth_coupled(1, delay=-0.1)


# corpus operations -----------------------------------------------------------------

def test_split_ratio_and_partition():
    items = list(range(10))
    tr, ev = split(items, 0.8, seed=0)
    assert (len(tr), len(ev)) == (8, 2)
    assert sorted(tr + ev) == items
    assert split(items, 0.8, seed=0) == (tr, ev)
    assert split(list(range(7)), 0.8, 1)[0].__len__() == 6
    with pytest.raises(EmptyDataset):
        split([], 0.8, 0)
    with pytest.raises(ValueError):
        split(items, 1.0, 0)


def test_normalize_round_trip_and_moments():
    pairs = synth_coupled(20, seed=4)
    normed, stats = normalize(pairs)
    back = denormalize(normed, stats)
    for p, q in zip(pairs, back):
        np.testing.assert_allclose(q.actor_a.positions, p.actor_a.positions, atol=1e-12)
        np.testing.assert_allclose(q.actor_b.positions, p.actor_b.positions, atol=1e-12)
    allpos = np.concatenate([m.positions for p in normed for m in (p.actor_a, p.actor_b)])
    assert np.max(np.abs(allpos.mean(axis=0))) < 1e-10
    assert np.max(np.abs(allpos.std(axis=0) - 1)) < 1e-10


def test_constant_coordinate_passes_through():
    pos = np.random.default_rng(0).standard_normal((8, 2, 3))
    pos[:, 1, 2] = 0.0
    pair = DyadicPair(MotionSequence(pos, 0.1), MotionSequence(pos, 0.1))
    normed, stats = normalize([pair])
    assert stats.std[1, 2] == 1.0
    assert np.all(normed[0].actor_a.positions[:, 1, 2] == 0.0)


def test_norm_stats_dict_round_trip():
    stats = fit_norm_stats(synth_coupled(3))
    back = NormStats.from_dict(stats.to_dict())
    np.testing.assert_array_equal(back.mean, stats.mean)
    np.testing.assert_array_equal(back.std, stats.std)


def test_swap_augment():
    p = synth_coupled(1)[0]
    assert swap_augment(p, True).actor_a is p.actor_b
    assert swap_augment(p, False) is p
    twice = swap_augment(swap_augment(p, True), True)
    assert twice.actor_a is p.actor_a and twice.actor_b is p.actor_b


def test_swap_marginal_monte_carlo():
    # A and B have distinct means; after random swaps actor A's mean is their average
    rng = np.random.default_rng(0)
    a = MotionSequence(np.zeros((2, 1, 3)), 0.1)
    b = MotionSequence(np.ones((2, 1, 3)), 0.1)
    pair = DyadicPair(a, b)
    coins = rng.random(10_000) < 0.5
    means = np.array([swap_augment(pair, c).actor_a.positions.mean() for c in coins])
    se = means.std() / np.sqrt(len(means))
    assert abs(means.mean() - 0.5) < 3 * se


def test_pairs_to_arrays_shapes_and_resampling():
    pairs = synth_coupled(3, frames=32)
    stats = fit_norm_stats(pairs)
    cond, resp = pairs_to_arrays(pairs, 64, stats)
    assert cond.shape == resp.shape == (3, 12, 64)
    cond32, _ = pairs_to_arrays(pairs, 32, stats)
    np.testing.assert_allclose(cond[:, :, ::2], cond32, atol=1e-10)
    expected = ((pairs[1].actor_a.positions - stats.mean) / stats.std).reshape(32, 12).T
    np.testing.assert_allclose(cond32[1], expected, atol=1e-12)


def test_corpus_directory(tmp_path):
    pairs = synth_coupled(3, seed=1)
    save_corpus(tmp_path, pairs, meta={"n": 3})
    names, back = load_corpus(tmp_path)
    assert names == ["pair_00000", "pair_00001", "pair_00002"]
    np.testing.assert_allclose(back[2].actor_b.positions, pairs[2].actor_b.positions, rtol=1e-6, atol=1e-6)
    with pytest.raises(EmptyDataset):
        load_corpus(tmp_path / "missing")


# skeletons -------------------------------------------------------------------------

def test_presets_are_consistent():
    assert PRESETS["toy4"].joints == 4
    assert PRESETS["ntu21"].joints == 21
    assert PRESETS["duet15"].joints == 15
    for skel in PRESETS.values():
        lengths = {tuple(sorted(e)) for e in skel.edges}
        for left, right in skel.mirrored:
            assert tuple(sorted(left)) in lengths and tuple(sorted(right)) in lengths


def test_skeleton_file_round_trip(tmp_path):
    write_skeleton(tmp_path / "s.txt", PRESETS["duet15"])
    assert read_skeleton(tmp_path / "s.txt") == PRESETS["duet15"]


def test_skeleton_rejects_bad_indices():
    with pytest.raises(BadJointIndex):
        SkeletonSpec(3, ((0, 3),))
    with pytest.raises(BadJointIndex):
        SkeletonSpec(3, ((1, 1),))
