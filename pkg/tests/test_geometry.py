import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otfs_airborne.config import SPEED_OF_LIGHT, LinkBudget, ScenarioConfig, load_config
from otfs_airborne.errors import ConfigError
from otfs_airborne.geometry import (
    angles_toward,
    doppler_shift,
    hap_position,
    link_kinematics,
    max_supported_velocity,
    place_users,
    tier_centers,
    user_angles,
)


class TestPlaceUsers:
    def test_one_tier_has_six_interferers(self, rng):
        layout = place_users(ScenarioConfig.desk(tier_count=1), rng)
        assert layout.interferer_count == 6

    def test_no_tiers_only_intended_user(self, rng):
        layout = place_users(ScenarioConfig.desk(tier_count=0), rng)
        assert layout.user_count == 1
        assert layout.interferer_count == 0

    def test_five_tiers_enumerated(self, rng):
        config = ScenarioConfig.paper()
        layout = place_users(config, rng)
        counts = np.bincount(layout.tier_of_user)
        assert counts.tolist() == [1, 6, 12, 18, 24, 30]
        assert layout.interferer_count == 90
        assert config.interferer_count == 90

    def test_tier_centers_at_multiples_of_reuse_distance(self):
        config = ScenarioConfig.paper()
        centers, tiers = tier_centers(config)
        dist = np.hypot(*(centers - centers[0]).T)
        np.testing.assert_allclose(dist, tiers * config.reuse_distance_m, atol=1e-9)

    @pytest.mark.parametrize("seed", range(10))
    def test_users_inside_their_discs(self, seed):
        config = ScenarioConfig.paper()
        layout = place_users(config, np.random.default_rng(seed))
        offsets = np.hypot(*(layout.positions[:, :2] - layout.cell_centers).T)
        assert np.all(offsets <= config.micro_radius_m)
        assert np.all(layout.positions[:, 2] == -config.altitude_m)

    def test_intended_user_in_cell_of_interest(self, desk, rng):
        layout = place_users(desk, rng)
        cx, cy = desk.mci_center
        assert math.hypot(layout.positions[0, 0] - cx, layout.positions[0, 1] - cy) <= desk.micro_radius_m

    def test_same_seed_bit_identical(self, desk):
        a = place_users(desk, np.random.default_rng(7)).positions
        b = place_users(desk, np.random.default_rng(7)).positions
        assert a.tobytes() == b.tobytes()

    def test_disc_sampling_not_center_biased(self):
        config = ScenarioConfig.desk(tier_count=0)
        rng = np.random.default_rng(3)
        radii = []
        for _ in range(4000):
            p = place_users(config, rng).positions[0, :2]
            radii.append(math.dist(p, config.mci_center) / config.micro_radius_m)
        # uniform over a disc: P(rho <= 1/2) = 1/4
        assert abs(np.mean(np.asarray(radii) <= 0.5) - 0.25) < 0.03


class TestPlatform:
    def test_origin_at_start(self, desk):
        np.testing.assert_array_equal(hap_position(0.0, desk), [0.0, 0.0, 0.0])

    def test_linear_motion(self):
        config = ScenarioConfig.desk(velocity_mps=150.0)
        np.testing.assert_allclose(hap_position(1.0, config), [150.0, 0.0, 0.0])

    def test_heading_y(self):
        config = ScenarioConfig.desk(velocity_mps=100.0, heading_unit_vector=(0.0, 1.0, 0.0))
        np.testing.assert_allclose(hap_position(2.0, config), [0.0, 200.0, 0.0])

    def test_negative_time_rejected(self, desk):
        with pytest.raises(ValueError):
            hap_position(-1.0, desk)


class TestAngles:
    H = 10_000.0

    def test_nadir(self):
        a = user_angles([0.0, 0.0, -self.H], [0.0, 0.0, 0.0])
        assert a.zenith_rad == 0.0
        assert a.azimuth_rad == 0.0

    def test_forty_five_degrees(self):
        a = user_angles([self.H, 0.0, -self.H], [0.0, 0.0, 0.0])
        assert a.zenith_rad == pytest.approx(math.pi / 4, abs=1e-15)
        assert a.azimuth_rad == 0.0

    def test_azimuth_quarter_turn(self):
        a = user_angles([0.0, self.H, -self.H], [0.0, 0.0, 0.0])
        assert a.azimuth_rad == pytest.approx(math.pi / 2, abs=1e-15)

    def test_azimuth_half_open_interval(self):
        a = user_angles([-5.0, -0.0, -self.H], [0.0, 0.0, 0.0])
        assert a.azimuth_rad == pytest.approx(math.pi)

    @given(
        x=st.floats(-2e4, 2e4), y=st.floats(-2e4, 2e4),
    )
    def test_ranges(self, x, y):
        zen, az = angles_toward(np.array([[x, y, -self.H]]), np.zeros(3))
        assert 0.0 <= zen[0] <= math.pi / 2
        assert -math.pi < az[0] <= math.pi


class TestKinematics:
    def test_doppler_anchor(self):
        assert doppler_shift(28e9, 150.0, 0.0) == pytest.approx(14e3, abs=1e-9)

    def test_orthogonal_motion_has_no_doppler(self):
        assert doppler_shift(28e9, 150.0, math.pi / 2) == pytest.approx(0.0, abs=1e-9)

    def test_doppler_100_mps(self):
        assert doppler_shift(28e9, 100.0, 0.0) == pytest.approx(9333.333333, rel=1e-9)

    def test_delay_and_doppler_from_geometry(self, desk):
        user = np.array([desk.altitude_m, 0.0, -desk.altitude_m])
        kin = link_kinematics(user, 0.0, desk)
        assert kin.distance_m == pytest.approx(desk.altitude_m * math.sqrt(2))
        assert kin.delay_s == kin.distance_m / SPEED_OF_LIGHT
        assert kin.aspect_angle_rad == pytest.approx(math.pi / 4)
        assert kin.doppler_hz == pytest.approx(14e3 / math.sqrt(2))

    def test_user_at_nadir_sees_no_doppler(self, desk):
        kin = link_kinematics([0.0, 0.0, -desk.altitude_m], 0.0, desk)
        assert kin.doppler_hz == pytest.approx(0.0, abs=1e-9)

    @settings(max_examples=50)
    @given(x=st.floats(-3e4, 3e4), y=st.floats(-3e4, 3e4), t=st.floats(0, 1e-3))
    def test_bounds(self, x, y, t):
        config = ScenarioConfig.desk()
        kin = link_kinematics([x, y, -config.altitude_m], t, config)
        assert kin.delay_s >= config.altitude_m / SPEED_OF_LIGHT
        assert abs(kin.doppler_hz) <= config.carrier_hz * config.velocity_mps / SPEED_OF_LIGHT + 1e-9

    @pytest.mark.parametrize(
        "spacing, carrier, expected, tol",
        [(30e3, 28e9, 160.7, 0.05), (60e3, 28e9, 321.4, 0.05), (30e3, 60e9, 75.0, 1e-9)],
    )
    def test_max_supported_velocity(self, spacing, carrier, expected, tol):
        assert max_supported_velocity(spacing, carrier) == pytest.approx(expected, abs=tol)


class TestConfig:
    def test_paper_defaults(self):
        c = ScenarioConfig.paper()
        assert (c.subcarriers, c.doppler_bins, c.array_side, c.tier_count) == (512, 16, 100, 5)
        assert c.bandwidth_hz == pytest.approx(15.36e6)
        assert c.reuse_distance_m == 4 * c.micro_radius_m

    def test_desk_profile(self):
        c = ScenarioConfig.desk()
        assert (c.subcarriers, c.doppler_bins, c.array_side, c.tier_count) == (64, 16, 16, 1)
        assert c.micro_radius_m * c.array_side == pytest.approx(75.0 * 100)

    @pytest.mark.parametrize(
        "bad",
        [
            dict(micro_radius_m=1000.0, reuse_distance_m=4000.0),
            dict(reuse_distance_m=310.0),
            dict(velocity_mps=170.0),
            dict(subcarriers=500),
            dict(doppler_bins=2),
            dict(qam_order=16),
            dict(waveform_selector="fbmc"),
            dict(heading_unit_vector=(1.0, 1.0, 0.0)),
        ],
    )
    def test_invariants(self, bad):
        with pytest.raises(ConfigError):
            ScenarioConfig.paper(**bad)

    def test_json_round_trip(self, tmp_path):
        c = ScenarioConfig.desk(rng_seed=9, mci_center_m=(100.0, 50.0))
        path = tmp_path / "c.json"
        path.write_text(json.dumps(c.to_dict()))
        assert load_config(path) == c

    def test_json_partial_overrides_base(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"velocity_mps": 100.0, "link_budget": {"tx_power_dbm": 8.0}}))
        c = load_config(path, base=ScenarioConfig.desk())
        assert c.velocity_mps == 100.0
        assert c.subcarriers == 64
        assert c.link_budget == LinkBudget(tx_power_dbm=8.0)

    def test_unknown_key_is_an_error(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"velocty_mps": 100.0}))
        with pytest.raises(ConfigError, match="velocty_mps"):
            load_config(path)

    def test_unknown_link_budget_key(self):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict({"link_budget": {"tx_powr": 1}})
