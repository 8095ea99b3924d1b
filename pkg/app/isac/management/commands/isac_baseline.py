from dataclasses import replace

from isac.runner import run_experiment

from ._common import IsacCommand


class Command(IsacCommand):
    help = "Solve the fixed half-wavelength array and the antenna-selection baselines"

    default_subdir = "baseline"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--scheme",
            choices=["baseline_fixed", "baseline_as", "both"],
            default="both",
            help="Which baseline to run",
        )

    def handle(self, *args, **options):
        cfg = self.load_config(options)
        schemes = ("baseline_fixed", "baseline_as") if options["scheme"] == "both" else (options["scheme"],)
        cfg = replace(cfg, schemes=schemes)
        out = self.output_dir(options)
        summary = self.guarded(
            lambda: run_experiment("isac_baseline", cfg, out, self.workers(options), options["record_runtime"])
        )
        self.report(summary, "isac_baseline")
