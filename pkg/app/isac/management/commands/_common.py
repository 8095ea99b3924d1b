"""Flags and error mapping shared by the isac_* management commands."""
from __future__ import annotations

from dataclasses import replace
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from app.logging import LEVELS, set_verbosity
from isac.config import ExperimentConfig, parse_config
from isac.errors import ConfigError, IsacError, OracleSizeError
from isac.runner import RunSummary

EXIT_FLAGGED = 1
EXIT_CONFIG = 2
EXIT_OUTPUT = 3
EXIT_GUARD = 4


def parse_seeds(raw: str) -> tuple[int, ...]:
    """``"0,1,2"`` or ``"0-4"`` or a mix of both."""
    seeds: list[int] = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            low, high = part.split("-", 1)
            seeds.extend(range(int(low), int(high) + 1))
        else:
            seeds.append(int(part))
    return tuple(seeds)


class IsacCommand(BaseCommand):
    """Base for commands that load an experiment config and write into an output directory."""

    default_subdir = "run"

    def add_arguments(self, parser):
        parser.add_argument("--config", type=Path, default=None, help="Experiment config (JSON, dotted keys)")
        parser.add_argument("--out", type=Path, default=None, help="Output directory")
        parser.add_argument("--seeds", type=str, default=None, help="Seed list, e.g. 0,1,2 or 0-19")
        parser.add_argument(
            "--profile", choices=["desk", "paper"], default=None, help="Defaults for keys the config omits"
        )
        parser.add_argument("--workers", type=int, default=None, help="Worker processes (0 = one per core)")
        parser.add_argument("--samples", type=int, default=None, help="Monte Carlo RCS samples")
        parser.add_argument("--log", choices=sorted(LEVELS), default="normal", help="Log verbosity")
        parser.add_argument(
            "--record-runtime",
            action="store_true",
            help="Write wall-clock seconds into results.csv (breaks byte-identical reruns)",
        )

    def load_config(self, options) -> ExperimentConfig:
        set_verbosity(options["log"])
        overrides: dict = {}
        if options["seeds"]:
            try:
                overrides["seeds"] = parse_seeds(options["seeds"])
            except ValueError:
                raise CommandError(f"bad --seeds value {options['seeds']!r}", returncode=EXIT_CONFIG)
        if options["samples"] is not None:
            overrides["mc_samples"] = options["samples"]
        try:
            cfg = parse_config(options["config"], options["profile"] or settings.ISAC_PROFILE)
            return replace(cfg, **overrides) if overrides else cfg
        except ConfigError as exc:
            raise CommandError(f"config error at {exc.key}: {exc.message}", returncode=EXIT_CONFIG)

    def output_dir(self, options) -> Path:
        return options["out"] or Path(settings.ISAC_OUTPUT_DIR) / self.default_subdir

    def workers(self, options) -> int:
        return options["workers"] if options["workers"] is not None else settings.ISAC_WORKERS

    def guarded(self, action):
        """Run ``action`` and map package errors to non-zero exits."""
        try:
            return action()
        except OracleSizeError as exc:
            raise CommandError(f"oracle refused: {exc}", returncode=EXIT_GUARD)
        except ConfigError as exc:
            raise CommandError(f"config error at {exc.key}: {exc.message}", returncode=EXIT_CONFIG)
        except OSError as exc:
            raise CommandError(f"cannot write output: {exc}", returncode=EXIT_OUTPUT)
        except IsacError as exc:
            raise CommandError(str(exc), returncode=EXIT_FLAGGED)

    def report(self, summary: RunSummary, label: str) -> None:
        for path in summary.outputs:
            self.stdout.write(f"  wrote {path}")
        if not summary.ok:
            shown = "; ".join(summary.flagged[:10])
            more = f" (+{len(summary.flagged) - 10} more)" if len(summary.flagged) > 10 else ""
            raise CommandError(
                f"{label}: {len(summary.flagged)} flagged: {shown}{more}", returncode=EXIT_FLAGGED
            )
        self.stdout.write(self.style.SUCCESS(f"{label}: {len(summary.records)} records, no flagged failures"))
