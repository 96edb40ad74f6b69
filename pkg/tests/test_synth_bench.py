import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lrt import geometry as geo
from lrt.bench import (CSV_HEADER, BenchRow, make_instance, make_suite, run_benchmark)
from lrt.outer import OuterConfig
from lrt.synth import (KINDS, CorruptionSpec, TextureSpec, deform_and_corrupt, gen_texture,
                       interpolation_matrix, required_margin)


def exact_rank(img, rel=1e-10):
    s = np.linalg.svd(img, compute_uv=False)
    return int(np.sum(s > rel * s[0]))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(KINDS), st.integers(8, 40), st.integers(8, 40), st.integers(0, 10**6))
def test_texture_rank_and_range(kind, m, n, seed):
    spec = TextureSpec(kind, m, n, seed=seed)
    img = gen_texture(spec)
    assert img.shape == (n, m)
    assert img.min() >= 0 and img.max() <= 1
    assert exact_rank(img) == spec.rank
    assert np.array_equal(img, gen_texture(spec))


def test_texture_examples():
    assert exact_rank(gen_texture(TextureSpec("stripes", 13, 29, seed=4))) == 1
    assert exact_rank(gen_texture(TextureSpec("checkerboard", 16, 16))) <= 2
    assert exact_rank(gen_texture(TextureSpec("low_rank_product", 32, 32, 4, seed=1))) == 4


def test_texture_spec_errors():
    with pytest.raises(ValueError, match="rank 1"):
        TextureSpec("stripes", 16, 16, rank_target=3)
    with pytest.raises(ValueError, match="infeasible"):
        TextureSpec("low_rank_product", 4, 4, rank_target=5)
    with pytest.raises(ValueError):
        TextureSpec("plaid", 8, 8)
    with pytest.raises(ValueError):
        CorruptionSpec(1.0)


def test_no_deformation_no_corruption_is_identity():
    tex = gen_texture(TextureSpec("checkerboard", 20, 20, seed=2))
    scene, gt = deform_and_corrupt(tex, 0.0, CorruptionSpec(0.0), 3)
    assert np.array_equal(scene, tex)
    assert not gt.mask.any()


def test_corruption_count():
    tex = gen_texture(TextureSpec("stripes", 26, 26, seed=1))
    scene, gt = deform_and_corrupt(tex, 0.0, CorruptionSpec(0.05, seed=3), 3)
    assert gt.mask.shape == (20, 20) and gt.mask.sum() == 20
    crop = scene[3:23, 3:23]
    assert np.array_equal(crop[~gt.mask], tex[3:23, 3:23][~gt.mask])


def test_rotated_scene_unwarps_to_corrupted_texture():
    inst = make_instance(0, "grid_lines", 24, seed=8)
    scene, gt = inst.build()
    spec = TextureSpec("grid_lines", 24 + 2 * inst.margin, 24 + 2 * inst.margin, seed=8)
    m = inst.margin
    crop = gen_texture(spec)[m:m + 24, m:m + 24]
    back = geo.warp(scene, gt.tau, gt.window)
    assert np.max(np.abs(back[~gt.mask] - crop[~gt.mask])) < 1e-9
    assert gt.mask.sum() == round(0.05 * 24 * 24)


def test_mask_reproducible():
    a = make_instance(3, "checkerboard", 24, seed=77).build()
    b = make_instance(3, "checkerboard", 24, seed=77).build()
    assert np.array_equal(a[1].mask, b[1].mask)
    assert np.array_equal(a[0], b[0])


def test_margin_too_small():
    tex = gen_texture(TextureSpec("stripes", 24, 24))
    with pytest.raises(ValueError, match="too small"):
        deform_and_corrupt(tex, np.deg2rad(10), CorruptionSpec(0.0), 1)


def test_required_margin_fits_rotation():
    for deg in (0, 5, 10, 25):
        a = np.deg2rad(deg)
        m = required_margin(32, 32, a)
        win = geo.Window(m, m, 32, 32)
        xs, ys = geo.sample_points(geo.rotation_params(a), win)
        assert xs.min() >= 1 and ys.min() >= 1
        assert xs.max() <= 32 + 2 * m - 2 and ys.max() <= 32 + 2 * m - 2


def test_interpolation_matrix_matches_sampler():
    rng = np.random.default_rng(0)
    img = rng.random((9, 11))
    xs, ys = rng.uniform(0, 10, (5, 10)), rng.uniform(0, 8, (5, 10))
    B = interpolation_matrix(xs, ys, img.shape)
    assert np.allclose(B @ img.ravel(), geo.bilinear_sample(img, xs, ys).ravel(), atol=1e-14)


def test_suites():
    tiny = make_suite("tiny", 1)
    assert [i.texture.kind for i in tiny] == ["stripes", "checkerboard"]
    default = make_suite("default", 1)
    assert len(default) == 20 and len({i.id for i in default}) == 20
    assert {i.texture.m for i in default} == {32, 64}
    assert all(abs(np.rad2deg(i.angle) - 10) < 1e-12 for i in default)
    assert all(i.corruption.fraction == 0.05 for i in default)
    assert {i.texture.kind for i in default} == set(KINDS)
    with pytest.raises(ValueError):
        make_suite("huge")


def test_single_row_report():
    inst = make_instance(0, "stripes", 16, seed=1)
    rep = run_benchmark([inst], ["sgs"], OuterConfig(max_outer=1, init_angles=[-np.deg2rad(10)]))
    assert len(rep.rows) == 1
    assert rep.rows[0].outer == 1 and rep.rows[0].solver == "sgs"


def test_failures_become_rows():
    inst = make_instance(0, "stripes", 32, seed=1)  # margin fits 10 degrees, not 45
    rep = run_benchmark([inst], ["direct", "sgs"], OuterConfig(init_angles=[np.deg2rad(45)]))
    assert [r.outer for r in rep.rows] == [0, 0]
    assert all("no initial angle" in r.error for r in rep.rows)
    assert not rep.all_converged()
    assert rep.summary()[0].startswith("direct: median_iter=nan converged=0/1")


def test_bad_arguments():
    with pytest.raises(ValueError):
        run_benchmark([], ["sgs"])
    with pytest.raises(ValueError):
        run_benchmark(make_suite("tiny"), [])
    with pytest.raises(ValueError):
        run_benchmark(make_suite("tiny"), ["newton"])


def test_csv_format():
    row = BenchRow(1, 1, "sgs", 389, 0.123456, 2, 1.0567, 9.961e-4)
    assert row.csv_fields() == ["1", "1", "sgs", "389", "1.23e-01", "2", "1.06e+00", "9.96e-04"]


@pytest.fixture(scope="module")
def tiny_report():
    return run_benchmark(make_suite("tiny", 1))


def test_tiny_report_shape(tiny_report):
    rows = list(csv.reader(io.StringIO(tiny_report.to_csv())))
    assert rows[0] == CSV_HEADER
    keys = [(int(r[0]), int(r[1])) for r in rows[1:]]
    assert keys == sorted(keys)
    seen = {(int(r[0]), int(r[1]), r[2]) for r in rows[1:]}
    assert len(seen) == len(rows) - 1
    for r in tiny_report.rows:
        if r.converged:
            assert r.tol < 1e-3
    lines = tiny_report.summary()
    assert [ln.split(":")[0] for ln in lines] == ["direct", "sgs", "sgs_g"]


def test_tiny_report_recovers_truth(tiny_report):
    assert tiny_report.all_converged()
    for o in tiny_report.outcomes:
        assert o.angle_error_deg < 0.5
        assert o.result.per_round[-1].rank == o.instance.rank


def test_tiny_report_deterministic(tiny_report):
    again = run_benchmark(make_suite("tiny", 1))
    assert again.to_csv(include_time=False) == tiny_report.to_csv(include_time=False)
