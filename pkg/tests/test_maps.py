"""Map, region, and file-format tests with sampling and geometry oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergsearch.errors import (
    DegenerateMapError,
    MapFormatError,
    PreconditionError,
    UnknownAgentTypeError,
)
from ergsearch.maps import (
    GmmSpec,
    Rect,
    StartRegionSet,
    clip_nonnegative,
    generate_gmm_map,
    intersect_regions,
    load_map,
    load_regions,
    make_grid_map,
    mixture_density,
    normalize,
    project_to_regions,
    random_gmm_spec,
    random_start_regions,
    sample_start,
    save_map,
    save_regions,
)

DL = (1.0, 1.0)


class TestGridMap:
    def test_cell_points_cover_midpoints(self):
        grid = make_grid_map(np.zeros((2, 3)), (3.0, 2.0))
        pts = grid.cell_points()
        assert pts.shape == (6, 2)
        assert pts[0] == pytest.approx([0.5, 0.5])
        assert pts[2] == pytest.approx([2.5, 0.5])  # x varies fastest
        assert pts[3] == pytest.approx([0.5, 1.5])

    def test_normalize_unit_integral(self):
        rng = np.random.default_rng(3)
        grid = make_grid_map(rng.uniform(0.0, 2.0, (10, 14)), (2.0, 1.0))
        normed = normalize(grid)
        assert normed.integral() == pytest.approx(1.0, abs=1e-14)
        assert normed.is_normalized()

    def test_normalize_rejects_massless(self):
        with pytest.raises(DegenerateMapError):
            normalize(make_grid_map(np.zeros((4, 4)), DL))

    def test_clip_removes_negative_cells(self):
        grid = make_grid_map(np.array([[1.0, -0.5], [0.25, -2.0]]), DL)
        clipped = clip_nonnegative(grid)
        assert clipped.cells.min() == 0.0
        assert clipped.cells[0, 0] == 1.0


class TestGmm:
    def test_density_matches_manual_gaussian(self):
        mean = np.array([0.4, 0.6])
        spec = GmmSpec(components=((1.0, mean, np.eye(2) * 0.01),), seed=0)
        pt = np.array([[0.5, 0.5]])
        d2 = ((pt[0] - mean) ** 2).sum()
        want = np.exp(-d2 / 0.02) / (2 * np.pi * 0.01)
        got = mixture_density(spec, pt)[0]
        assert got == pytest.approx(want, rel=1e-12)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(PreconditionError):
            GmmSpec(
                components=(
                    (0.6, np.array([0.5, 0.5]), np.eye(2) * 0.01),
                    (0.6, np.array([0.2, 0.2]), np.eye(2) * 0.01),
                ),
                seed=0,
            )

    def test_covariance_must_be_positive_definite(self):
        with pytest.raises(PreconditionError):
            GmmSpec(
                components=((1.0, np.array([0.5, 0.5]), -np.eye(2)),), seed=0
            )

    def test_random_spec_components_inside_domain(self):
        for seed in range(10):
            spec = random_gmm_spec(seed, DL)
            assert 2 <= len(spec.components) <= 5
            total = sum(w for w, _, _ in spec.components)
            assert total == pytest.approx(1.0, abs=1e-12)
            for _, mean, _ in spec.components:
                assert np.all(mean >= 0) and np.all(mean <= 1)

    def test_generated_map_is_normalized(self):
        grid = generate_gmm_map(random_gmm_spec(4, DL), 40, 40, DL)
        assert grid.is_normalized()
        assert grid.cells.min() >= 0

    def test_mean_outside_domain_rejected(self):
        spec = GmmSpec(
            components=((1.0, np.array([1.5, 0.5]), np.eye(2) * 0.01),), seed=0
        )
        with pytest.raises(PreconditionError):
            generate_gmm_map(spec, 8, 8, DL)


class TestMapIO:
    def test_round_trip_is_bitwise(self, tmp_path):
        grid = generate_gmm_map(random_gmm_spec(9, DL), 23, 17, DL)
        path = tmp_path / "m.ergmap"
        save_map(grid, path)
        loaded = load_map(path)
        assert loaded.nx == grid.nx and loaded.ny == grid.ny
        assert np.array_equal(loaded.cells, grid.cells)
        assert np.array_equal(loaded.domain_lengths, grid.domain_lengths)
        save_map(loaded, tmp_path / "m2.ergmap")
        assert (tmp_path / "m.ergmap").read_bytes() == (
            tmp_path / "m2.ergmap"
        ).read_bytes()

    def test_bad_header_reports_line_one(self, tmp_path):
        path = tmp_path / "bad.ergmap"
        path.write_text("NOPE 9\n1 1 1.0 1.0\n0.5\n")
        with pytest.raises(MapFormatError) as err:
            load_map(path)
        assert err.value.line == 1

    def test_bad_cell_value_reports_its_line(self, tmp_path):
        path = tmp_path / "bad.ergmap"
        path.write_text("ERGMAP 1\n2 1 1.0 1.0\n0.5\nbogus\n")
        with pytest.raises(MapFormatError) as err:
            load_map(path)
        assert err.value.line == 4

    def test_negative_cell_rejected(self, tmp_path):
        path = tmp_path / "bad.ergmap"
        path.write_text("ERGMAP 1\n2 1 1.0 1.0\n0.5\n-0.25\n")
        with pytest.raises(MapFormatError):
            load_map(path)

    def test_wrong_cell_count_rejected(self, tmp_path):
        path = tmp_path / "bad.ergmap"
        path.write_text("ERGMAP 1\n2 2 1.0 1.0\n0.5\n0.5\n0.5\n")
        with pytest.raises(MapFormatError):
            load_map(path)


class TestRegions:
    def make_regions(self):
        return StartRegionSet(
            domain_lengths=np.array(DL),
            regions={
                0: [Rect(0.1, 0.1, 0.3, 0.3), Rect(0.5, 0.5, 0.9, 0.9)],
                1: [Rect(0.0, 0.7, 0.2, 0.95)],
            },
        )

    def test_unknown_type_raises(self):
        regions = self.make_regions()
        with pytest.raises(UnknownAgentTypeError):
            regions.rects_for(7)

    def test_rect_outside_domain_rejected(self):
        with pytest.raises(PreconditionError):
            StartRegionSet(
                domain_lengths=np.array(DL),
                regions={0: [Rect(0.5, 0.5, 1.2, 0.9)]},
            )

    def test_sampling_respects_area_weights(self):
        # rect areas 0.04 and 0.16: expect 20% / 80% of draws
        regions = self.make_regions()
        rng = np.random.default_rng(12)
        draws = np.array([sample_start(regions, 0, rng) for _ in range(10000)])
        in_small = (draws[:, 0] <= 0.3).mean()
        assert in_small == pytest.approx(0.2, abs=0.03)
        for p in draws[:100]:
            assert regions.contains(p, 0)

    def test_projection_matches_dense_grid_oracle(self):
        regions = self.make_regions()
        rects = regions.regions[0]
        grids = []
        for r in rects:
            xs = np.linspace(r.xmin, r.xmax, 320)
            ys = np.linspace(r.ymin, r.ymax, 320)
            gx, gy = np.meshgrid(xs, ys)
            grids.append(np.column_stack([gx.ravel(), gy.ravel()]))
        candidates = np.vstack(grids)
        rng = np.random.default_rng(21)
        for q in rng.uniform(-0.2, 1.2, (200, 2)):
            proj = project_to_regions(q, regions, 0)
            d_proj = np.hypot(*(proj - q))
            d_grid = np.hypot(
                candidates[:, 0] - q[0], candidates[:, 1] - q[1]
            ).min()
            assert d_proj <= d_grid + 1e-9
            assert abs(d_proj - d_grid) <= 2e-3

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(-0.5, 1.5, allow_nan=False),
        st.floats(-0.5, 1.5, allow_nan=False),
    )
    def test_projection_idempotent_and_feasible(self, x, y):
        regions = self.make_regions()
        proj = project_to_regions(np.array([x, y]), regions, 0)
        assert regions.contains(proj, 0)
        again = project_to_regions(proj, regions, 0)
        assert np.array_equal(proj, again)

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(-0.5, 1.5, allow_nan=False),
        st.floats(-0.5, 1.5, allow_nan=False),
        st.integers(0, 2**32 - 1),
    )
    def test_projection_distance_dominates_samples(self, x, y, seed):
        regions = self.make_regions()
        q = np.array([x, y])
        proj = project_to_regions(q, regions, 0)
        rng = np.random.default_rng(seed)
        sample = sample_start(regions, 0, rng)
        assert np.hypot(*(proj - q)) <= np.hypot(*(sample - q)) + 1e-12

    def test_random_regions_share_first_rect(self):
        rng = np.random.default_rng(31)
        regions = random_start_regions(rng, DL, type_ids=(0, 1, 2))
        first = {tid: regions.regions[tid][0] for tid in (0, 1, 2)}
        assert first[0] == first[1] == first[2]
        center = np.array(
            [
                (first[0].xmin + first[0].xmax) / 2,
                (first[0].ymin + first[0].ymax) / 2,
            ]
        )
        for tid in (0, 1, 2):
            assert regions.contains(center, tid)

    def test_region_round_trip(self, tmp_path):
        regions = self.make_regions()
        path = tmp_path / "r.ergstart"
        save_regions(regions, path)
        loaded = load_regions(path, DL)
        assert loaded.type_ids == [0, 1]
        assert loaded.regions[0] == regions.regions[0]
        assert loaded.regions[1] == regions.regions[1]

    def test_region_parse_error_carries_line(self, tmp_path):
        path = tmp_path / "r.ergstart"
        path.write_text("ERGSTART 1\n0 0.1 0.1 0.3 0.3\n1 0.5 oops 0.9 0.9\n")
        with pytest.raises(MapFormatError) as err:
            load_regions(path, DL)
        assert err.value.line == 3


class TestIntersectRegions:
    def two_type_set(self):
        return StartRegionSet(
            domain_lengths=np.array(DL),
            regions={
                0: [Rect(0.0, 0.0, 0.4, 0.4), Rect(0.6, 0.6, 0.9, 0.9)],
                1: [Rect(0.2, 0.2, 0.7, 0.7)],
            },
        )

    def test_hand_case_two_overlaps(self):
        rects = intersect_regions(self.two_type_set(), (0, 1))
        assert rects == (Rect(0.2, 0.2, 0.4, 0.4), Rect(0.6, 0.6, 0.7, 0.7))

    def test_single_type_is_identity(self):
        regions = self.two_type_set()
        assert intersect_regions(regions, (0,)) == tuple(regions.regions[0])

    def test_disjoint_types_give_empty(self):
        regions = StartRegionSet(
            domain_lengths=np.array(DL),
            regions={
                0: [Rect(0.0, 0.0, 0.2, 0.2)],
                1: [Rect(0.8, 0.8, 1.0, 1.0)],
            },
        )
        assert intersect_regions(regions, (0, 1)) == ()

    def test_edge_contact_does_not_count(self):
        regions = StartRegionSet(
            domain_lengths=np.array(DL),
            regions={
                0: [Rect(0.0, 0.0, 0.5, 0.5)],
                1: [Rect(0.5, 0.0, 1.0, 0.5)],
            },
        )
        assert intersect_regions(regions, (0, 1)) == ()

    def test_empty_type_list_rejected(self):
        with pytest.raises(PreconditionError):
            intersect_regions(self.two_type_set(), ())

    def test_membership_matches_all_types_on_dense_grid(self):
        # oracle: a point is in the intersection union exactly when it
        # is in every type's union
        rng = np.random.default_rng(77)
        for trial in range(6):
            type_ids = (0, 1) if trial % 2 == 0 else (0, 1, 2)
            regions = random_start_regions(rng, DL, type_ids=type_ids)
            rects = intersect_regions(regions, type_ids)
            xs = np.linspace(0.003, 0.997, 60)
            for x in xs:
                for y in xs:
                    p = (float(x), float(y))
                    expected = all(
                        regions.contains(p, t) for t in type_ids
                    )
                    got = any(r.contains(p) for r in rects)
                    assert got == expected, (trial, p)

    def test_generated_multi_type_sets_always_intersect(self):
        # the generator promises a rectangle shared by all types
        for seed in range(25):
            rng = np.random.default_rng(seed)
            regions = random_start_regions(rng, DL, type_ids=(0, 1))
            assert intersect_regions(regions, (0, 1))
