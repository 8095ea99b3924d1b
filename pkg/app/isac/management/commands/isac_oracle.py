from dataclasses import replace

from isac.runner import run_experiment

from ._common import IsacCommand


class Command(IsacCommand):
    help = "Enumerate every feasible placement and report the gap of the alternating optimization"

    default_subdir = "oracle"

    def handle(self, *args, **options):
        cfg = self.load_config(options)
        cfg = replace(cfg, schemes=("proposed", "oracle"))
        out = self.output_dir(options)
        summary = self.guarded(
            lambda: run_experiment("isac_oracle", cfg, out, self.workers(options), options["record_runtime"])
        )
        gap = summary.details.get("oracle_gap", {})
        median = gap.get("median_relative_gap")
        if median is not None:
            self.stdout.write(f"oracle pairs: {gap['pairs']}, median relative gap {median:.4%}")
        self.report(summary, "isac_oracle")
