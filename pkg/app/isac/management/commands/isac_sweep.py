from isac.runner import run_experiment

from ._common import IsacCommand


class Command(IsacCommand):
    help = "Run every configured scheme over the sweep axis and seeds of an experiment config"

    default_subdir = "sweep"

    def handle(self, *args, **options):
        cfg = self.load_config(options)
        out = self.output_dir(options)
        self.stdout.write(
            f"sweep {cfg.sweep_axis}: {len(cfg.sweep_points)} values x {len(cfg.seeds)} seeds "
            f"x {len(cfg.schemes)} schemes"
        )
        summary = self.guarded(
            lambda: run_experiment("isac_sweep", cfg, out, self.workers(options), options["record_runtime"])
        )
        self.report(summary, "isac_sweep")
