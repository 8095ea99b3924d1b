import logging

from app.logging import ContextDefaultsFilter, build_logging, set_verbosity
from app.metrics import INSTANCES_TOTAL, export_metrics


def test_context_defaults_fill_missing_fields():
    record = logging.LogRecord("isac.placement", logging.INFO, __file__, 1, "ao_finished", None, None)
    assert ContextDefaultsFilter().filter(record)
    assert (record.run_id, record.seed, record.scheme) == ("-", "-", "-")
    assert record.event == "ao_finished"


def test_build_logging_levels():
    config = build_logging("DEBUG")
    assert config["loggers"]["isac"]["level"] == "DEBUG"
    assert config["root"]["level"] == "WARNING"
    assert config["formatters"]["json"]["rename_fields"] == {"asctime": "ts", "levelname": "level"}


def test_set_verbosity():
    set_verbosity("quiet")
    assert logging.getLogger("isac").level == logging.WARNING
    set_verbosity("debug")
    assert logging.getLogger("isac").isEnabledFor(logging.DEBUG)
    set_verbosity("normal")


def test_export_metrics(tmp_path):
    INSTANCES_TOTAL.labels(scheme="proposed", outcome="feasible").inc()
    text = export_metrics(tmp_path).read_text(encoding="utf-8")
    assert 'isac_instances_total{outcome="feasible",scheme="proposed"}' in text
