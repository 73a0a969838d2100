import math
from fractions import Fraction
from unittest import skipUnless

import numpy as np
from django.test import SimpleTestCase

from reconstruction.exceptions import MalformedFrameError
from reconstruction.geometry import SonarIntrinsics
from reconstruction.preprocessing import (
    BackgroundStats,
    BinaryPolarMap,
    SonarFrame,
    binarize,
    decimate_max,
    estimate_background,
    preprocess,
    to_cartesian,
)
from reconstruction.tests.factories import ACCEPTANCE, FULL_SONAR, random_frame, small_sonar


def sonar(n_range_bins, n_beams):
    return SonarIntrinsics(n_beams=n_beams, n_range_bins=n_range_bins, hfov=math.radians(130), vfov=math.radians(20), max_range=2.0)


def naive_binarize(data, bg, half_window):
    """Подвійний цикл з точною раціональною арифметикою"""
    n_rows, n_beams = data.shape
    sigma = bg.sigma_bg if bg.sigma_bg > 0 else 1.0
    gate = bg.mu_bg + 2.0 * sigma
    result = np.zeros(data.shape, dtype=np.uint8)
    for r in range(n_rows):
        if max(int(v) for v in data[r]) < gate:
            continue
        window = [int(v) for v in data[max(0, r - half_window):min(n_rows, r + half_window + 1)].ravel()]
        n = len(window)
        mean = Fraction(sum(window), n)
        variance = sum((Fraction(v) - mean) ** 2 for v in window) / n
        for b in range(n_beams):
            p = Fraction(int(data[r, b]))
            result[r, b] = int(p > mean and (p - mean) ** 2 > variance)
    return result


def row_loop_binarize(data, bg, half_window):
    """Рядковий цикл у цілих числах numpy - еталон для великих кадрів"""
    data = data.astype(np.int64)
    n_rows, _ = data.shape
    sigma = bg.sigma_bg if bg.sigma_bg > 0 else 1.0
    result = np.zeros(data.shape, dtype=np.uint8)
    for r in range(n_rows):
        if data[r].max() < bg.mu_bg + 2.0 * sigma:
            continue
        window = data[max(0, r - half_window):min(n_rows, r + half_window + 1)].ravel()
        n, s1, s2 = window.size, int(window.sum()), int((window * window).sum())
        excess = n * data[r] - s1
        result[r] = (excess > 0) & (excess * excess > n * s2 - s1 * s1)
    return result


class BackgroundTests(SimpleTestCase):
    def test_constant_background(self):
        frame = SonarFrame(np.full((20, 16), 5, dtype=np.uint8), sonar(20, 16))
        self.assertEqual(estimate_background(frame), BackgroundStats(5.0, 0.0))

    def test_zero_frame(self):
        frame = SonarFrame(np.zeros((20, 16), dtype=np.uint8), sonar(20, 16))
        self.assertEqual(estimate_background(frame), BackgroundStats(0.0, 0.0))

    def test_alternating_background(self):
        data = np.zeros((20, 16), dtype=np.uint8)
        data[:10] = np.where(np.indices((10, 16)).sum(axis=0) % 2 == 0, 4, 6)
        stats = estimate_background(SonarFrame(data, sonar(20, 16)))
        self.assertAlmostEqual(stats.mu_bg, 5.0)
        self.assertAlmostEqual(stats.sigma_bg, 1.0)

    def test_too_few_rows(self):
        frame = SonarFrame(np.zeros((5, 16), dtype=np.uint8), sonar(5, 16))
        with self.assertRaises(MalformedFrameError):
            estimate_background(frame, 10)

    def test_frame_shape_is_checked(self):
        with self.assertRaises(MalformedFrameError):
            SonarFrame(np.zeros((19, 16), dtype=np.uint8), sonar(20, 16))


class BinarizeTests(SimpleTestCase):
    def test_zero_frame(self):
        frame = SonarFrame(np.zeros((20, 16), dtype=np.uint8), sonar(20, 16))
        result = binarize(frame, estimate_background(frame), 5)
        self.assertEqual(result.occupied_count, 0)

    def test_rows_below_gate_are_empty(self):
        data = np.full((20, 16), 5, dtype=np.uint8)
        data[15, 3] = 6
        frame = SonarFrame(data, sonar(20, 16))
        # sigma_bg = 0 замінюється на 1, поріг рядка 7
        result = binarize(frame, BackgroundStats(5.0, 0.0), 5)
        self.assertEqual(result.occupied_count, 0)

    def test_single_bright_pixel(self):
        data = np.full((20, 16), 5, dtype=np.uint8)
        data[15, 7] = 255
        frame = SonarFrame(data, sonar(20, 16))
        result = binarize(frame, estimate_background(frame), 5)
        expected = np.zeros((20, 16), dtype=np.uint8)
        expected[15, 7] = 1
        np.testing.assert_array_equal(result.data, expected)

    def test_matches_naive_reference(self):
        rng = np.random.default_rng(10)
        for k in range(20):
            rows, beams = rng.integers(12, 30), rng.integers(4, 20)
            frame = random_frame(sonar(rows, beams), rng, 0, int(rng.integers(8, 256)))
            bg = estimate_background(frame)
            half_window = int(rng.integers(1, 7))
            np.testing.assert_array_equal(
                binarize(frame, bg, half_window).data,
                naive_binarize(frame.data, bg, half_window),
                err_msg=f"кадр #{k}",
            )

    def test_idempotent(self):
        rng = np.random.default_rng(11)
        frame = random_frame(small_sonar(), rng)
        bg = estimate_background(frame)
        np.testing.assert_array_equal(binarize(frame, bg, 5).data, binarize(frame, bg, 5).data)

    def test_raising_occupied_pixel_keeps_it_occupied(self):
        rng = np.random.default_rng(12)
        for _ in range(30):
            frame = random_frame(sonar(30, 12), rng, 0, 200)
            bg = estimate_background(frame)
            result = binarize(frame, bg, 3).data
            occupied = np.argwhere(result)
            if not len(occupied):
                continue
            r, b = occupied[rng.integers(len(occupied))]
            brighter = frame.data.copy()
            brighter[r, b] = min(255, int(brighter[r, b]) + int(rng.integers(1, 56)))
            raised = binarize(SonarFrame(brighter, frame.intrinsics), bg, 3).data
            self.assertEqual(raised[r, b], 1)

    def test_gaussian_noise_rarely_occupied(self):
        rng = np.random.default_rng(13)
        data = np.clip(np.rint(rng.normal(50.0, 10.0, size=(200, 64))), 0, 255).astype(np.uint8)
        frame = SonarFrame(data, sonar(200, 64))
        result = binarize(frame, BackgroundStats(50.0, 10.0), 5)
        self.assertLess(result.occupied_count / data.size, 0.2)

    def test_invalid_window(self):
        frame = SonarFrame(np.zeros((20, 16), dtype=np.uint8), sonar(20, 16))
        with self.assertRaises(ValueError):
            binarize(frame, BackgroundStats(0.0, 0.0), 0)

    @skipUnless(ACCEPTANCE, "перевірка приймання (OASIS_ACCEPTANCE=1)")
    def test_full_size_frames_match_reference(self):
        rng = np.random.default_rng(14)
        for _ in range(1000):
            frame = random_frame(FULL_SONAR, rng, 0, int(rng.integers(16, 256)))
            bg = estimate_background(frame)
            np.testing.assert_array_equal(binarize(frame, bg, 5).data, row_loop_binarize(frame.data, bg, 5))


class DecimationTests(SimpleTestCase):
    def test_factor_one_is_identity(self):
        frame = random_frame(small_sonar(), np.random.default_rng(20))
        self.assertIs(decimate_max(frame, 1), frame)

    def test_block_max(self):
        data = np.arange(16, dtype=np.uint8).reshape(4, 4)
        result = decimate_max(SonarFrame(data, sonar(4, 4)), 2)
        np.testing.assert_array_equal(result.data, [[5, 7], [13, 15]])
        self.assertEqual(result.intrinsics.shape, (2, 2))

    def test_matches_naive_block_max(self):
        rng = np.random.default_rng(21)
        frame = random_frame(sonar(16, 16), rng)
        result = decimate_max(frame, 4)
        for i in range(4):
            for j in range(4):
                self.assertEqual(result.data[i, j], frame.data[4 * i:4 * i + 4, 4 * j:4 * j + 4].max())

    def test_padding_uneven_shape(self):
        data = np.ones((5, 6), dtype=np.uint8)
        result = decimate_max(SonarFrame(data, sonar(5, 6)), 2)
        self.assertEqual(result.data.shape, (3, 3))
        self.assertEqual(result.intrinsics.shape, (3, 3))
        self.assertAlmostEqual(result.intrinsics.range_resolution, 2 * sonar(5, 6).range_resolution)

    def test_invalid_factor(self):
        with self.assertRaises(ValueError):
            decimate_max(random_frame(small_sonar(), np.random.default_rng(22)), 0)

    def test_preprocess_decimates_raw_frame(self):
        frame = random_frame(small_sonar(), np.random.default_rng(23))
        result = preprocess(frame, 5, 10, 2)
        self.assertEqual(result.intrinsics.shape, (50, 32))
        # Бінаризація працює вже на зменшеному кадрі інтенсивностей
        decimated = decimate_max(frame, 2)
        expected = binarize(decimated, estimate_background(decimated, 10), 5)
        np.testing.assert_array_equal(result.data, expected.data)


class CartesianTests(SimpleTestCase):
    def test_zero_map(self):
        intr = small_sonar()
        image = to_cartesian(BinaryPolarMap(np.zeros(intr.shape), intr), 0.02)
        self.assertEqual(int(image.data.sum()), 0)

    def test_dimensions_cover_fan(self):
        intr = small_sonar()
        pitch = 0.03
        image = to_cartesian(BinaryPolarMap(np.zeros(intr.shape), intr), pitch)
        rows, cols = image.data.shape
        self.assertGreaterEqual(rows * pitch, intr.max_range)
        self.assertGreaterEqual(cols * pitch, 2 * intr.max_range * math.sin(intr.hfov / 2))

    def test_full_map_stays_inside_fan(self):
        intr = small_sonar()
        image = to_cartesian(BinaryPolarMap(np.ones(intr.shape), intr), 0.02)
        x, y = image.pixel_centers()
        r, az = np.hypot(x, y), np.arctan2(y, x)
        inside = (r <= intr.max_range) & (np.abs(az) <= intr.hfov / 2)
        np.testing.assert_array_equal(image.data.astype(bool), inside)

    def test_single_cell(self):
        intr = small_sonar()
        range_bin, beam = 60, 20
        data = np.zeros(intr.shape)
        data[range_bin, beam] = 1
        pitch = intr.range_resolution
        image = to_cartesian(BinaryPolarMap(data, intr), pitch)
        x, y = image.pixel_centers()
        selected = image.data.astype(bool)
        self.assertTrue(selected.any())
        r, az = np.hypot(x[selected], y[selected]), np.arctan2(y[selected], x[selected])
        self.assertTrue(np.all(np.abs(r - intr.bin_center_range(range_bin)) <= pitch))
        self.assertTrue(np.all(np.abs(az - intr.beam_azimuth(beam)) <= intr.beam_spacing / 2 + 1e-12))
