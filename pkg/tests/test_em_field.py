import math
from dataclasses import replace

import numpy as np
import pytest

from wdmlink.em_field import (
    EmConstants,
    ModeIndex,
    NearFieldWarning,
    boresight_reference_peak,
    green_dyadic_ff,
    gz_kernel,
    peak_location_boresight,
    peak_locations_general,
    radiation_pattern,
    received_field_profile,
    spatial_frequency,
)
from wdmlink.geometry import LinkGeometry, source_direction
from wdmlink.quadrature import QuadratureSpec


class TestEmConstants:
    def test_wavenumber(self):
        k = EmConstants(wavelength=0.01)
        assert abs(k.kappa * k.wavelength - 2.0 * math.pi) < 1e-12
        assert k.z0 == 376.73

    def test_validation(self):
        with pytest.raises(ValueError):
            EmConstants(wavelength=0.0)
        with pytest.raises(ValueError):
            EmConstants(wavelength=0.01, z0=-1.0)


class TestSpatialFrequency:
    def test_center_mode_is_dc(self):
        assert spatial_frequency(21, 41, 0.2) == 0.0

    def test_low_mode(self):
        assert spatial_frequency(19, 41, 0.2) == pytest.approx(-4.0 * math.pi / 0.2, rel=1e-15)

    def test_high_mode(self):
        assert spatial_frequency(26, 41, 0.2) == pytest.approx(10.0 * math.pi / 0.2, rel=1e-15)

    def test_mode_bounds(self):
        with pytest.raises(ValueError):
            spatial_frequency(0, 41, 0.2)
        with pytest.raises(ValueError):
            spatial_frequency(42, 41, 0.2)


class TestGreenDyadic:
    def test_axial_separation_has_no_longitudinal_field(self):
        k = EmConstants(wavelength=0.01)
        G = green_dyadic_ff(np.array([0.0, 0.0, 3.0]), np.zeros(3), k)
        assert abs(G[2, 2]) < 1e-16

    def test_amplitude_law(self):
        k = EmConstants(wavelength=0.01)
        d = 0.01 * 1e6
        G = green_dyadic_ff(np.array([d, 0.0, 0.0]), np.zeros(3), k)
        assert np.max(np.abs(G)) == pytest.approx(1.0 / (4.0 * math.pi * d), rel=1e-12)

    def test_transverse_entry_closed_form(self):
        k = EmConstants(wavelength=0.01)
        G = green_dyadic_ff(np.array([5.0, 0.0, 0.0]), np.zeros(3), k)
        expected = np.exp(1j * k.kappa * 5.0) / (20.0 * math.pi)
        assert G[1, 1] == pytest.approx(expected, rel=1e-12)

    def test_coincident_points_rejected(self):
        k = EmConstants(wavelength=0.01)
        with pytest.raises(ValueError):
            green_dyadic_ff(np.zeros(3), np.zeros(3), k)

    def test_near_field_warns(self):
        k = EmConstants(wavelength=0.01)
        with pytest.warns(NearFieldWarning):
            green_dyadic_ff(np.array([0.05, 0.0, 0.0]), np.zeros(3), k)


class TestGzKernel:
    def test_vertical_source_closed_form(self, rng):
        k = EmConstants(wavelength=0.02)
        u = rng.uniform(-3.0, 3.0, size=(50, 3))
        u[:, 0] += 4.0
        got = gz_kernel(u, 0.0, 0.0, k)
        d = np.linalg.norm(u, axis=-1)
        expected = np.exp(1j * k.kappa * d) * (u[:, 0] ** 2 + u[:, 1] ** 2) / (4.0 * math.pi * d**3)
        assert np.allclose(got, expected, rtol=1e-13, atol=0.0)

    def test_axial_direction_vanishes(self):
        k = EmConstants(wavelength=0.02)
        assert gz_kernel(np.array([0.0, 0.0, 2.0]), 0.0, 0.0, k) == 0.0

    def test_matches_dyadic_contraction_at_quoted_point(self):
        k = EmConstants(wavelength=0.01)
        th = math.radians(10.0)
        u = np.array([5.0, 0.0, 1.0])
        G = green_dyadic_ff(u, np.zeros(3), k)
        expected = G[2, :] @ source_direction(th, 0.0)
        assert gz_kernel(u, th, 0.0, k) == pytest.approx(expected, rel=1e-12)

    def test_matches_dyadic_contraction_randomized(self, rng):
        k = EmConstants(wavelength=0.01)
        worst = 0.0
        for _ in range(1000):
            u = rng.uniform(-2.0, 2.0, size=3)
            u[0] += 3.0
            th = rng.uniform(0.0, math.pi)
            ph = rng.uniform(0.0, 2.0 * math.pi)
            reference = green_dyadic_ff(u, np.zeros(3), k)[2, :] @ source_direction(th, ph)
            got = gz_kernel(u, th, ph, k)
            if reference != 0.0:
                worst = max(worst, abs(got - reference) / abs(reference))
        assert worst < 1e-12


class TestRadiationPattern:
    def test_peak_value_identity(self, full_scale):
        k = EmConstants(full_scale.wdm.wavelength)
        for n in range(1, full_scale.wdm.n_modes + 1):
            m = ModeIndex.from_mode_number(n, full_scale.wdm.n_modes, full_scale.geometry.L_s, k)
            g = min(1.0, max(-1.0, m.gamma_n))
            val = radiation_pattern(math.acos(g), m, full_scale.geometry, k)
            assert abs(val - (1.0 - g * g)) < 1e-12

    def test_center_mode_broadside_maximum(self, desk):
        k = EmConstants(desk.wdm.wavelength)
        m = ModeIndex.from_mode_number(11, 21, desk.geometry.L_s, k)
        assert radiation_pattern(math.pi / 2.0, m, desk.geometry, k) == pytest.approx(1.0, abs=1e-15)

    def test_grid_argmax_near_cone_angle(self, full_scale):
        # gamma = 0.25 beams toward acos(0.25) = 75.52 deg
        k = EmConstants(full_scale.wdm.wavelength)
        m = ModeIndex.from_mode_number(26, 41, full_scale.geometry.L_s, k)
        assert m.gamma_n == pytest.approx(0.25, rel=1e-15)
        grid = np.radians(np.arange(0.0, 180.0001, 0.01))
        vals = radiation_pattern(grid, m, full_scale.geometry, k)
        best = math.degrees(grid[int(np.argmax(vals))])
        assert abs(best - math.degrees(math.acos(0.25))) < 0.5

    def test_range_validation(self, desk):
        k = EmConstants(desk.wdm.wavelength)
        m = ModeIndex.from_mode_number(11, 21, desk.geometry.L_s, k)
        with pytest.raises(ValueError):
            radiation_pattern(-0.1, m, desk.geometry, k)
        with pytest.raises(ValueError):
            radiation_pattern(math.pi + 0.1, m, desk.geometry, k)


class TestReceivedFieldProfile:
    def test_center_mode_profile_is_symmetric(self, desk):
        k = EmConstants(desk.wdm.wavelength)
        m = ModeIndex.from_mode_number(11, 21, desk.geometry.L_s, k)
        grid = np.linspace(-0.5, 0.5, 401)
        prof = np.abs(received_field_profile(m, desk.geometry, k, grid, desk.wdm.quadrature))
        assert np.max(np.abs(prof - prof[::-1])) < 1e-9 * np.max(prof)

    def test_in_segment_peaks_match_predictor(self, desk):
        # gamma in {0, +/-0.1, +/-0.2}: the only desk modes whose beam
        # crosses the receive segment; location tolerance max(lam, 2 dx_grid),
        # amplitude within 5% of (1 - gamma^2)^{3/2}
        k = EmConstants(desk.wdm.wavelength)
        grid = np.linspace(-0.5, 0.5, 2001)
        step = grid[1] - grid[0]
        e0 = boresight_reference_peak(desk.geometry, k, grid, desk.wdm.quadrature)
        for n in (9, 10, 11, 12, 13):
            m = ModeIndex.from_mode_number(n, 21, desk.geometry.L_s, k)
            peak = peak_location_boresight(m, desk.geometry)
            assert peak.in_segment
            prof = np.abs(
                received_field_profile(m, desk.geometry, k, grid, desk.wdm.quadrature)
            )
            i = int(np.argmax(prof))
            assert abs(grid[i] - peak.r_z) <= max(desk.wdm.wavelength, 2.0 * step)
            predicted = (1.0 - m.gamma_n**2) ** 1.5
            assert prof[i] / e0 == pytest.approx(predicted, rel=0.05)

    def test_tilted_center_mode_peak(self, desk):
        # 10 degree tilt moves the center-mode peak to -d_x tan(theta) with
        # normalized amplitude near cos^2(theta)
        th = math.radians(10.0)
        geom = replace(desk.geometry, theta_s=th)
        k = EmConstants(desk.wdm.wavelength)
        grid = np.linspace(-0.5, 0.5, 2001)
        step = grid[1] - grid[0]
        m = ModeIndex.from_mode_number(11, 21, desk.geometry.L_s, k)
        prof = np.abs(received_field_profile(m, geom, k, grid, desk.wdm.quadrature))
        e0 = boresight_reference_peak(geom, k, grid, desk.wdm.quadrature)
        i = int(np.argmax(prof))
        assert abs(grid[i] - (-desk.geometry.d_x * math.tan(th))) <= max(
            desk.wdm.wavelength, 2.0 * step
        )
        assert prof[i] / e0 == pytest.approx(math.cos(th) ** 2, rel=0.05)

    def test_grid_outside_segment_rejected(self, desk):
        k = EmConstants(desk.wdm.wavelength)
        m = ModeIndex.from_mode_number(11, 21, desk.geometry.L_s, k)
        with pytest.raises(ValueError):
            received_field_profile(
                m, desk.geometry, k, np.array([0.0, 0.51]), desk.wdm.quadrature
            )

    def test_short_range_warns(self, desk):
        geom = replace(desk.geometry, d_x=0.1)  # below the 10-wavelength guard
        k = EmConstants(desk.wdm.wavelength)
        m = ModeIndex.from_mode_number(11, 21, desk.geometry.L_s, k)
        with pytest.warns(NearFieldWarning):
            received_field_profile(m, geom, k, np.zeros(1), desk.wdm.quadrature)


class TestPeakLocationBoresight:
    def test_center_mode_at_segment_level(self, desk):
        k = EmConstants(desk.wdm.wavelength)
        m = ModeIndex.from_mode_number(11, 21, desk.geometry.L_s, k)
        peak = peak_location_boresight(m, desk.geometry)
        assert peak.r_z == 0.0
        assert peak.in_segment

    def test_quarter_gamma(self):
        geom = LinkGeometry(L_s=0.2, L_r=3.0, d_x=5.0)
        m = ModeIndex(n=26, kappa_n=0.25 * 2.0 * math.pi / 0.01, gamma_n=0.25)
        peak = peak_location_boresight(m, geom)
        assert peak.r_z == pytest.approx(1.2910, abs=5e-5)
        assert peak.in_segment

    def test_grazing_gamma_far_outside(self):
        geom = LinkGeometry(L_s=0.2, L_r=3.0, d_x=5.0)
        m = ModeIndex(n=41, kappa_n=0.999 * 2.0 * math.pi / 0.01, gamma_n=0.999)
        peak = peak_location_boresight(m, geom)
        assert peak.r_z == pytest.approx(111.8, abs=0.1)
        assert not peak.in_segment

    def test_parallel_direction_rejected(self, desk):
        m = ModeIndex(n=1, kappa_n=0.0, gamma_n=1.0)
        with pytest.raises(ValueError):
            peak_location_boresight(m, desk.geometry)


class TestPeakLocationsGeneral:
    def test_reduces_to_boresight(self, desk):
        k = EmConstants(desk.wdm.wavelength)
        for n in (8, 10, 11, 13, 15):
            m = ModeIndex.from_mode_number(n, 21, desk.geometry.L_s, k)
            peaks = peak_locations_general(m, desk.geometry)
            assert len(peaks) == 1
            reference = peak_location_boresight(m, desk.geometry)
            assert peaks[0].r_z == pytest.approx(reference.r_z, abs=1e-12)
            assert peaks[0].in_segment == reference.in_segment

    def test_tilted_center_mode(self, desk):
        th = math.radians(10.0)
        geom = replace(desk.geometry, theta_s=th)
        m = ModeIndex(n=11, kappa_n=0.0, gamma_n=0.0)
        peaks = peak_locations_general(m, geom)
        assert len(peaks) == 1
        assert peaks[0].r_z == pytest.approx(-desk.geometry.d_x * math.tan(th), rel=1e-12)
        assert peaks[0].in_segment

    def test_no_intersection_when_discriminant_negative(self, desk):
        # sin^2(phi) sin^2(theta) = 0.413 > 1 - gamma^2 = 0.36
        geom = replace(desk.geometry, theta_s=math.radians(40.0), phi_s=math.radians(90.0))
        m = ModeIndex(n=19, kappa_n=0.0, gamma_n=0.8)
        assert peak_locations_general(m, geom) == []

    def test_degenerate_denominator(self, desk):
        # cos^2(theta) == gamma^2 collapses the quadratic to a linear equation
        geom = replace(desk.geometry, theta_s=math.pi / 3.0)
        m = ModeIndex(n=16, kappa_n=0.5 * 2.0 * math.pi / 0.02, gamma_n=0.5)
        peaks = peak_locations_general(m, geom)
        assert len(peaks) == 1
        assert peaks[0].r_z == pytest.approx(-desk.geometry.d_x * math.tan(math.pi / 6.0), rel=1e-12)

    def test_roots_lie_on_beam_cone(self, desk, rng):
        # every admissible root keeps r_hat . s_hat = gamma_n
        k = EmConstants(desk.wdm.wavelength)
        checked = 0
        for _ in range(300):
            n = int(rng.integers(2, 21))
            th = rng.uniform(0.0, math.radians(60.0))
            ph = rng.uniform(0.0, 2.0 * math.pi)
            geom = replace(desk.geometry, theta_s=th, phi_s=ph)
            m = ModeIndex.from_mode_number(n, 21, desk.geometry.L_s, k)
            s_hat = source_direction(th, ph)
            for peak in peak_locations_general(m, geom):
                r = np.array([geom.d_x, 0.0, peak.r_z])
                r_hat = r / np.linalg.norm(r)
                assert abs(float(r_hat @ s_hat) - m.gamma_n) < 1e-9
                checked += 1
        assert checked > 100


class TestBoresightReferencePeak:
    def test_matches_center_mode_maximum(self, desk):
        k = EmConstants(desk.wdm.wavelength)
        grid = np.linspace(-0.5, 0.5, 801)
        m = ModeIndex.from_mode_number(11, 21, desk.geometry.L_s, k)
        prof = np.abs(received_field_profile(m, desk.geometry, k, grid, desk.wdm.quadrature))
        e0 = boresight_reference_peak(desk.geometry, k, grid, desk.wdm.quadrature)
        assert e0 == pytest.approx(float(np.max(prof)), rel=1e-12)

    def test_independent_of_orientation(self, desk):
        k = EmConstants(desk.wdm.wavelength)
        grid = np.linspace(-0.5, 0.5, 801)
        tilted = replace(desk.geometry, theta_s=0.4, phi_s=1.0)
        a = boresight_reference_peak(desk.geometry, k, grid, desk.wdm.quadrature)
        b = boresight_reference_peak(tilted, k, grid, desk.wdm.quadrature)
        assert a == b
