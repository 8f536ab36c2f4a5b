"""Channel model: grid geometry, steering, ray statistics and pattern reduction."""

import io

import numpy as np
import pytest

from tribeam.channel import (AngularGrid, ChannelRealization, ClusterParams,
                             assemble_full_channel, draw_realization,
                             realizations_to_csv, steering_vector)

from conftest import block_reduced_channel, random_patterns, random_realization, rng_for


class TestAngularGrid:
    def test_angles_strictly_increasing_and_span(self):
        for m in (1, 2, 7, 60, 181):
            grid = AngularGrid(m)
            assert grid.angles.shape == (m,)
            assert np.all(np.diff(grid.angles) > 0)
            assert grid.angles[-1] == pytest.approx(np.pi / 2, abs=5e-16)
            assert grid.angles[0] == pytest.approx(-np.pi / 2 + np.pi / m, rel=1e-15)

    def test_uniform_spacing(self):
        grid = AngularGrid(45)
        assert np.allclose(np.diff(grid.angles), np.pi / 45, rtol=0, atol=1e-14)

    def test_nearest_bin_recovers_grid_points(self):
        grid = AngularGrid(33)
        for m in range(33):
            assert grid.nearest_bin(grid.angles[m]) == m

    def test_nearest_bin_tie_goes_to_smaller_index(self):
        # M = 2 puts bins at exactly 0 and pi/2; pi/4 is exactly equidistant.
        grid = AngularGrid(2)
        assert grid.angles[0] == 0.0
        assert grid.nearest_bin(np.pi / 4) == 0

    def test_nearest_bin_clamps_out_of_range(self):
        grid = AngularGrid(10)
        assert grid.nearest_bin(-10.0) == grid.nearest_bin(-np.pi / 2)
        assert grid.nearest_bin(10.0) == grid.size - 1

    def test_nearest_bin_vectorized_matches_scalar(self):
        grid = AngularGrid(17)
        thetas = rng_for(1, 1).uniform(-np.pi / 2, np.pi / 2, 40)
        vec = grid.nearest_bin(thetas)
        assert list(vec) == [grid.nearest_bin(t) for t in thetas]

    def test_rejects_empty_grid(self):
        with pytest.raises(ValueError):
            AngularGrid(0)


class TestSteeringVector:
    def test_broadside_is_all_ones(self):
        assert np.array_equal(steering_vector(0.0, 4), np.ones(4, dtype=complex))

    def test_endfire_alternates_sign(self):
        v = steering_vector(np.pi / 2, 2)
        assert v[0] == 1.0 + 0.0j
        assert v[1] == pytest.approx(-1.0, abs=1e-15)

    def test_unit_modulus_and_geometric_progression(self):
        theta = 0.3
        v = steering_vector(theta, 8)
        assert np.allclose(np.abs(v), 1.0, atol=1e-15)
        ratio = np.exp(-1j * np.pi * np.sin(theta))
        assert np.allclose(v[1:] / v[:-1], ratio, atol=1e-14)
        assert v[0] == 1.0 + 0.0j

    def test_rejects_empty_array(self):
        with pytest.raises(ValueError):
            steering_vector(0.1, 0)


class TestClusterParams:
    def test_gain_follows_log_distance_law(self):
        params = ClusterParams(nominal_aod=[[0.1, -0.2]], angle_spread=[[0.0, 0.0]],
                               distance=[[50.0, 100.0]], path_exponent=[[2.5, 3.0]],
                               rays_per_cluster=2, ref_loss_db=30.0, ref_distance=1.0)
        expect = 10.0 ** (-3.0) * np.array([50.0 ** -2.5, 100.0 ** -3.0])
        assert np.allclose(params.gain()[0], expect, rtol=1e-14)

    def test_scalar_inputs_promote_to_one_user_one_cluster(self):
        params = ClusterParams(nominal_aod=0.2, angle_spread=0.0, distance=10.0,
                               path_exponent=2.0, rays_per_cluster=1)
        assert params.n_users == 1 and params.n_clusters == 1 and params.n_paths == 1

    def test_draw_respects_ranges_and_shape(self):
        params = ClusterParams.draw(3, 2, 4, rng_for(2, 0), aod_range=(-0.5, 0.5),
                                    distance_range=(10.0, 20.0), exponent_range=(2.0, 2.2))
        assert params.nominal_aod.shape == (3, 2)
        assert np.all((params.nominal_aod >= -0.5) & (params.nominal_aod <= 0.5))
        assert np.all((params.distance >= 10.0) & (params.distance <= 20.0))
        assert np.all((params.path_exponent >= 2.0) & (params.path_exponent <= 2.2))
        assert params.n_paths == 8

    def test_validation_errors(self):
        good = dict(nominal_aod=[[0.0]], angle_spread=[[0.0]], distance=[[1.0]],
                    path_exponent=[[2.0]], rays_per_cluster=1)
        with pytest.raises(ValueError):
            ClusterParams(**{**good, "angle_spread": [[0.0, 0.1]]})
        with pytest.raises(ValueError):
            ClusterParams(**{**good, "rays_per_cluster": 0})
        with pytest.raises(ValueError):
            ClusterParams(**{**good, "nominal_aod": [[2.0]]})
        with pytest.raises(ValueError):
            ClusterParams(**{**good, "angle_spread": [[-0.1]]})
        with pytest.raises(ValueError):
            ClusterParams(**{**good, "distance": [[0.0]]})


class TestDrawRealization:
    def _params(self, spread, rays=3):
        return ClusterParams(nominal_aod=[[-0.4, 0.3]], angle_spread=[[spread, spread]],
                             distance=[[60.0, 80.0]], path_exponent=[[2.6, 2.8]],
                             rays_per_cluster=rays)

    def test_zero_spread_puts_rays_at_nominals(self, grid60):
        real = draw_realization(self._params(0.0), grid60, [3, 0])[0]
        assert np.allclose(real.aod, np.repeat([-0.4, 0.3], 3), atol=0)
        assert np.array_equal(real.grid_bin, grid60.nearest_bin(real.aod))

    def test_amplitudes_equal_parent_cluster_gain(self, grid60):
        params = self._params(0.01)
        real = draw_realization(params, grid60, [3, 1])[0]
        assert np.allclose(real.gain, np.repeat(params.gain()[0], 3), rtol=0)

    def test_same_seed_is_bit_identical(self, grid60):
        a = draw_realization(self._params(0.02), grid60, [3, 2])[0]
        b = draw_realization(self._params(0.02), grid60, [3, 2])[0]
        assert np.array_equal(a.aod, b.aod) and np.array_equal(a.phase, b.phase)
        assert np.array_equal(a.gain, b.gain) and np.array_equal(a.grid_bin, b.grid_bin)

    def test_deviation_statistics(self, grid60):
        spread = np.pi / 36
        params = ClusterParams(nominal_aod=[[0.0]], angle_spread=[[spread]],
                               distance=[[50.0]], path_exponent=[[2.5]],
                               rays_per_cluster=100_000)
        real = draw_realization(params, grid60, [3, 3])[0]
        assert np.std(real.aod) == pytest.approx(spread, rel=0.02)
        assert np.all((real.phase >= 0.0) & (real.phase < 2 * np.pi))
        assert np.mean(real.phase) == pytest.approx(np.pi, rel=0.02)

    def test_angles_clamped_to_half_circle(self):
        grid = AngularGrid(16)
        params = ClusterParams(nominal_aod=[[np.pi / 2]], angle_spread=[[0.5]],
                               distance=[[50.0]], path_exponent=[[2.5]], rays_per_cluster=200)
        real = draw_realization(params, grid, [3, 4])[0]
        assert np.all(np.abs(real.aod) <= np.pi / 2)

    def test_one_realization_per_user(self, grid60):
        params = ClusterParams.draw(3, 2, 2, rng_for(3, 5))
        reals = draw_realization(params, grid60, [3, 5])
        assert len(reals) == 3
        assert all(r.n_paths == 4 for r in reals)


class TestChannelVectors:
    def test_spatial_channel_stacks_weighted_steering_blocks(self, grid16):
        real = random_realization(rng_for(4, 0), grid16, 3)
        stacked = real.spatial_channel(5)
        coef = real.gain * np.exp(1j * real.phase)
        for l in range(3):
            block = stacked[l * 5:(l + 1) * 5]
            assert np.allclose(block, coef[l] * steering_vector(real.aod[l], 5), atol=1e-15)

    def test_pattern_free_sums_paths_with_unit_gain(self, grid16):
        real = random_realization(rng_for(4, 1), grid16, 4)
        h = real.pattern_free(6)
        coef = real.gain * np.exp(1j * real.phase)
        expect = sum(coef[l] * steering_vector(real.aod[l], 6) for l in range(4))
        assert np.allclose(h, expect, atol=1e-15)

    def test_pattern_free_single_path_has_constant_modulus(self, grid16):
        real = random_realization(rng_for(4, 2), grid16, 1)
        h = real.pattern_free(8)
        assert np.allclose(np.abs(h), real.gain[0], rtol=1e-13)

    def test_length_mismatch_rejected(self, grid16):
        with pytest.raises(ValueError):
            ChannelRealization(grid=grid16, aod=np.zeros(2), phase=np.zeros(2),
                               gain=np.zeros(2), grid_bin=np.zeros(3, dtype=int))


class TestAssembleFullChannel:
    def test_single_path_reduces_to_scaled_steering(self, grid16):
        real = random_realization(rng_for(5, 0), grid16, 1)
        patterns = random_patterns(rng_for(5, 1), 6, grid16.size)
        h = assemble_full_channel(real, patterns)
        coef = (real.gain * np.exp(1j * real.phase))[0]
        expect = patterns[:, real.grid_bin[0]] * coef * steering_vector(real.aod[0], 6)
        assert np.allclose(h, expect, atol=1e-16)

    def test_zero_pattern_gain_annihilates_that_path(self, grid16):
        real = random_realization(rng_for(5, 2), grid16, 2)
        patterns = random_patterns(rng_for(5, 3), 4, grid16.size)
        patterns[:, real.grid_bin[0]] = 0.0
        h = assemble_full_channel(real, patterns)
        only_second = ChannelRealization(grid=grid16, aod=real.aod[1:], phase=real.phase[1:],
                                         gain=real.gain[1:], grid_bin=real.grid_bin[1:])
        assert np.allclose(h, assemble_full_channel(only_second, patterns), atol=1e-16)

    def test_matches_block_matrix_construction(self, grid16):
        for i in range(10):
            rng = rng_for(5, 4, i)
            real = random_realization(rng, grid16, 3)
            patterns = random_patterns(rng, 5, grid16.size)
            fast = assemble_full_channel(real, patterns)
            slow = block_reduced_channel(real, patterns)
            assert np.linalg.norm(fast - slow) <= 1e-12 * max(1.0, np.linalg.norm(slow))

    def test_shape_validation(self, grid16):
        real = random_realization(rng_for(5, 5), grid16, 2)
        with pytest.raises(ValueError):
            assemble_full_channel(real, np.ones(grid16.size))
        with pytest.raises(ValueError):
            assemble_full_channel(real, np.ones((4, grid16.size + 1)))


class TestRealizationsCsv:
    def test_header_and_row_count(self, grid16):
        params = ClusterParams.draw(2, 2, 2, rng_for(6, 0))
        reals = draw_realization(params, grid16, [6, 0])
        text = realizations_to_csv(reals)
        lines = text.strip().split("\n")
        assert lines[0] == "user,path,aod_rad,phase_rad,gain,grid_bin"
        assert len(lines) == 1 + 2 * 4

    def test_writes_to_supplied_handle(self, grid16):
        params = ClusterParams.draw(1, 1, 1, rng_for(6, 1))
        reals = draw_realization(params, grid16, [6, 1])
        buf = io.StringIO()
        assert realizations_to_csv(reals, fh=buf) == ""
        assert buf.getvalue() == realizations_to_csv(reals)
