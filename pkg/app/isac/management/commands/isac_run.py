from dataclasses import replace

from isac.runner import run_experiment

from ._common import IsacCommand


class Command(IsacCommand):
    help = "Design beams and antenna positions with the alternating optimization, one instance per seed"

    default_subdir = "run"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--export-channel",
            action="store_true",
            help="Also write channel_<seed>.json with the lattice channel and its path draw",
        )

    def handle(self, *args, **options):
        cfg = self.load_config(options)
        cfg = replace(cfg, schemes=("proposed",), sweep_axis="none", sweep_values=())
        out = self.output_dir(options)
        summary = self.guarded(
            lambda: run_experiment(
                "isac_run",
                cfg,
                out,
                self.workers(options),
                options["record_runtime"],
                with_channels=options["export_channel"],
            )
        )
        self.report(summary, "isac_run")
