import csv
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from reconstruction.services.benchmark_service import (
    BenchReport,
    BenchRow,
    describe_host,
    render_bench_frames,
    run_bench,
)
from reconstruction.tests.factories import make_config


class BenchReportTests(SimpleTestCase):
    def test_cubic_slope(self):
        rows = [BenchRow(v, 0, 0.0, 2e-4 / v ** 3) for v in (0.2, 0.1, 0.05)]
        self.assertAlmostEqual(BenchReport(frames=10, rows=rows).scaling_slope(), 3.0, places=9)

    def test_slope_needs_two_sizes(self):
        self.assertIsNone(BenchReport(frames=1, rows=[BenchRow(0.1, 10, 0.0, 0.01)]).scaling_slope())

    def test_table_and_fps(self):
        row = BenchRow(0.1, 1500, 0.2, 0.05)
        self.assertAlmostEqual(row.fps, 20.0)
        table = BenchReport(frames=5, rows=[row, BenchRow(0.05, 9000, 0.5, 0.4)]).format_table()
        self.assertIn("0.100", table)
        self.assertIn("log-log", table)

    def test_host_description(self):
        host = describe_host()
        self.assertGreaterEqual(host["cpu_logical"], 1)
        self.assertGreater(host["memory_gb"], 0)


class RunBenchTests(SimpleTestCase):
    def setUp(self):
        self.config = make_config()

    def test_requires_two_sizes(self):
        with self.assertRaises(ValueError):
            run_bench(self.config, [0.1], frames=2, rendered=[])
        with self.assertRaises(ValueError):
            run_bench(self.config, [0.1, 0.2], frames=0)

    def test_smaller_voxels_mean_larger_template(self):
        frames = render_bench_frames(self.config, 8, seed=4, elevation_samples=5)
        self.assertEqual(len(frames), 8)
        report = run_bench(self.config, [0.2, 0.1, 0.05], frames=8, rendered=frames)
        sizes = [row.voxel_size for row in report.rows]
        voxels = [row.template_voxels for row in report.rows]
        self.assertEqual(sizes, [0.2, 0.1, 0.05])
        self.assertTrue(voxels[0] < voxels[1] < voxels[2])
        self.assertTrue(all(row.mean_seconds > 0 for row in report.rows))
        self.assertIsNotNone(report.scaling_slope())

        with tempfile.TemporaryDirectory() as out:
            path = report.write_csv(Path(out) / "bench.csv")
            with open(path, newline="", encoding="utf-8") as f:
                rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["voxel_size", "template_voxels", "mean_seconds_per_frame", "fps"])
        self.assertEqual(len(rows), 4)

    def test_repeated_voxel_size_gives_similar_timings(self):
        frames = render_bench_frames(self.config, 30, seed=5, elevation_samples=5)
        report = run_bench(self.config, [0.1, 0.1], frames=30, rendered=frames)
        first, second = (row.mean_seconds for row in report.rows)
        self.assertEqual(report.rows[0].template_voxels, report.rows[1].template_voxels)
        self.assertLessEqual(max(first, second), 3.0 * min(first, second))
        self.assertIsNone(report.scaling_slope())
