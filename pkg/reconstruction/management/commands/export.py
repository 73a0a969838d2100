"""
Команда для експорту збереженої сітки у PLY
"""
from reconstruction.management.base import PipelineCommand
from reconstruction.meshing import build_mesh
from reconstruction.utils.grid_store import load_grid
from reconstruction.utils.ply_export import write_mesh, write_occupied_voxels


class Command(PipelineCommand):
    help = "Експортує центри зайнятих вокселів (і за потреби сітку трикутників) у PLY"

    config_overrides = False

    def add_arguments(self, parser):
        parser.add_argument("--grid", type=str, required=True, help="Файл сітки")
        parser.add_argument("--ply", type=str, required=True, help="PLY для центрів зайнятих вокселів")
        parser.add_argument("--mesh", type=str, help="PLY для сітки трикутників")
        parser.add_argument("--ascii", action="store_true", help="ASCII PLY замість двійкового")
        self.add_config_arguments(parser)

    def run(self, **options):
        snapshot = load_grid(options["grid"])
        lines = [f"🧊 Зайнятих вокселів: {snapshot.count:,}"]

        path = write_occupied_voxels(options["ply"], snapshot, ascii=options["ascii"])
        lines.append(f"💾 Вокселі: {path or 'порожньо, файл не записано'}")

        if options["mesh"]:
            meshing = self.load_config(options).meshing
            mesh = build_mesh(snapshot, meshing.iso, meshing.smoothing_iterations, meshing.smoothing_lambda)
            path = write_mesh(options["mesh"], mesh, ascii=options["ascii"])
            lines.append(f"🔺 Сітка: {len(mesh.triangles):,} трикутників -> {path or 'порожньо, файл не записано'}")

        self.summary("✅ ЕКСПОРТ ЗАВЕРШЕНО", lines)
