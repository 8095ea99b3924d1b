from isac.runner import run_chance_check

from ._common import IsacCommand


class Command(IsacCommand):
    help = "Check the sensing outage of designed beams against exponential RCS draws"

    default_subdir = "chance"

    def handle(self, *args, **options):
        # --samples is already folded into run.mc_samples
        cfg = self.load_config(options)
        samples = cfg.mc_samples
        out = self.output_dir(options)
        summary = self.guarded(lambda: run_chance_check(cfg, out, samples, self.workers(options)))
        self.stdout.write(f"outage tolerance {cfg.outage:g}, {samples} samples per target")
        self.report(summary, "isac_verify_chance")
