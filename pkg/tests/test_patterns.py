"""Pattern dictionary construction and per-antenna selections."""

import numpy as np
import pytest

from tribeam.channel import AngularGrid, assemble_full_channel
from tribeam.patterns import (EmSelection, PatternDictionary, boresight_selection,
                              build_dictionary, conventional_pattern,
                              dictionary_to_csv, em_gain, selected_patterns)

from conftest import random_realization, rng_for


class TestBuildDictionary:
    def test_centers_evenly_spaced_with_broadside_member_for_odd_count(self):
        grid = AngularGrid(180)
        d = build_dictionary(grid, 7)
        expect = -np.pi / 2 + (np.arange(1, 8) - 0.5) * np.pi / 7
        assert np.allclose(d.centers, expect, atol=1e-15)
        assert d.centers[3] == pytest.approx(0.0, abs=1e-15)

    def test_unit_energy_across_angle_for_every_column(self):
        for m, p in ((8, 2), (12, 7), (60, 7), (120, 7), (181, 9)):
            grid = AngularGrid(m)
            d = build_dictionary(grid, p)
            energy = np.sum(d.gains ** 2, axis=0) * (np.pi / m)
            assert np.all(np.abs(energy - 1.0) <= 1e-12)
            assert np.all(d.gains >= 0.0)

    def test_gain_values_do_not_depend_on_grid_resolution(self):
        # Same lobes sampled on finer grids: the peak converges, never rescales.
        peaks = []
        for m in (60, 120, 240, 480):
            d = build_dictionary(AngularGrid(m), 7)
            peaks.append(d.gains.max())
        assert np.all(np.abs(np.diff(peaks)) < 0.01)

    def test_each_pattern_peaks_at_its_center(self):
        grid = AngularGrid(63)
        d = build_dictionary(grid, 7)
        for p in range(7):
            peak_bin = int(np.argmax(d.gains[:, p]))
            assert peak_bin == grid.nearest_bin(d.centers[p])

    def test_single_pattern_dictionary(self):
        grid = AngularGrid(30)
        d = build_dictionary(grid, 1)
        assert d.n_patterns == 1
        assert np.sum(d.pattern(0) ** 2) * np.pi / 30 == pytest.approx(1.0, abs=1e-12)

    def test_lobe_support_follows_beamwidth(self):
        grid = AngularGrid(360)
        d = build_dictionary(grid, 5, beamwidth=np.pi / 10)
        for p in range(5):
            outside = np.abs(grid.angles - d.centers[p]) > np.pi / 10
            assert np.all(d.gains[outside, p] == 0.0)

    def test_more_patterns_than_bins_rejected(self):
        with pytest.raises(ValueError):
            build_dictionary(AngularGrid(4), 5)
        with pytest.raises(ValueError):
            build_dictionary(AngularGrid(4), 0)
        with pytest.raises(ValueError):
            build_dictionary(AngularGrid(4), 2, beamwidth=-1.0)

    def test_dictionary_validation(self):
        grid = AngularGrid(6)
        ok = build_dictionary(grid, 2)
        with pytest.raises(ValueError):
            PatternDictionary(grid=grid, gains=ok.gains[:, :1], centers=ok.centers)
        with pytest.raises(ValueError):
            PatternDictionary(grid=grid, gains=-ok.gains, centers=ok.centers)
        with pytest.raises(ValueError):
            PatternDictionary(grid=grid, gains=2.0 * ok.gains, centers=ok.centers)
        with pytest.raises(ValueError):
            PatternDictionary(grid=grid, gains=ok.gains[:-1], centers=ok.centers)


class TestConventionalPattern:
    def test_constant_gain_independent_of_grid(self):
        for m in (4, 60, 120):
            c = conventional_pattern(AngularGrid(m))
            assert c.shape == (m,)
            assert np.allclose(c, 1.0 / np.sqrt(np.pi), atol=1e-15)
            assert np.sum(c ** 2) * np.pi / m == pytest.approx(1.0, abs=1e-12)


class TestEmSelection:
    def test_from_relaxed_rounds_to_argmax(self):
        sel = EmSelection.from_relaxed(np.array([[0.2, 0.5, 0.3], [0.6, 0.2, 0.2]]))
        assert np.array_equal(sel.pattern_index, [1, 0])
        assert np.array_equal(sel.rounded, [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])

    def test_tie_breaks_to_smaller_index(self):
        sel = EmSelection.from_relaxed(np.array([[0.5, 0.5], [0.25, 0.75]]))
        assert np.array_equal(sel.pattern_index, [0, 1])

    def test_from_indices_round_trip(self):
        sel = EmSelection.from_indices([2, 0, 1], 3)
        assert np.array_equal(sel.pattern_index, [2, 0, 1])
        assert sel.n_antennas == 3
        assert np.array_equal(sel.relaxed, sel.rounded)

    def test_validation_errors(self):
        with pytest.raises(ValueError):
            EmSelection(relaxed=np.array([[0.7, 0.7]]), rounded=np.array([[1.0, 0.0]]))
        with pytest.raises(ValueError):
            EmSelection(relaxed=np.array([[0.5, 0.5]]), rounded=np.array([[0.5, 0.5]]))
        with pytest.raises(ValueError):
            EmSelection(relaxed=np.array([[0.2, 0.8]]), rounded=np.array([[1.0, 0.0]]))
        with pytest.raises(ValueError):
            EmSelection(relaxed=np.array([0.2, 0.8]), rounded=np.array([0.0, 1.0]))


class TestSelectionReadout:
    def test_em_gain_reads_selected_column(self):
        grid = AngularGrid(12)
        d = build_dictionary(grid, 3)
        sel = EmSelection.from_indices([0, 2, 1, 2], 3)
        for n in range(4):
            for b in (0, 5, 11):
                assert em_gain(sel, d, n, b) == d.gains[b, sel.pattern_index[n]]

    def test_selected_patterns_shape_and_rows(self):
        grid = AngularGrid(12)
        d = build_dictionary(grid, 3)
        sel = EmSelection.from_indices([1, 1, 0], 3)
        rows = selected_patterns(d, sel)
        assert rows.shape == (3, 12)
        assert np.array_equal(rows[0], d.gains[:, 1])
        assert np.array_equal(rows[2], d.gains[:, 0])

    def test_boresight_selection_picks_center_nearest_zero(self):
        grid = AngularGrid(60)
        d = build_dictionary(grid, 7)
        sel = boresight_selection(d, 5)
        assert np.all(sel.pattern_index == 3)
        d2 = build_dictionary(grid, 2)
        # centers at -pi/4 and +pi/4 tie in magnitude; smaller index wins
        assert np.all(boresight_selection(d2, 4).pattern_index == 0)

    def test_directed_pattern_beats_mismatched_one_on_its_own_cluster(self):
        # Two lobes splitting the half circle: a path under lobe 1 sees (near)
        # zero gain through lobe 0 and full gain through lobe 1.
        grid = AngularGrid(8)
        d = build_dictionary(grid, 2)
        real = random_realization(rng_for(11, 0), grid, 1)
        object.__setattr__(real, "aod", np.array([d.centers[1]]))
        object.__setattr__(real, "grid_bin", np.asarray([grid.nearest_bin(d.centers[1])]))
        h_match = assemble_full_channel(real, selected_patterns(d, EmSelection.from_indices([1, 1], 2)))
        h_wrong = assemble_full_channel(real, selected_patterns(d, EmSelection.from_indices([0, 0], 2)))
        assert np.linalg.norm(h_match) > 100 * np.linalg.norm(h_wrong)


class TestDictionaryCsv:
    def test_header_and_shape(self):
        d = build_dictionary(AngularGrid(10), 3)
        lines = dictionary_to_csv(d).strip().split("\n")
        assert lines[0] == "angle_rad,pattern_0,pattern_1,pattern_2"
        assert len(lines) == 11
