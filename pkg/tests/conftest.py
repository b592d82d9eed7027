"""Shared fixtures; the Enron corpus is ingested once per session."""

import os

import pytest

from pushsched.cli import main
from pushsched.trace import parse_trace_csv

ENRON_MAILDIR = os.environ.get("PUSHSCHED_ENRON_MAILDIR")
ENRON_CSV = os.environ.get("PUSHSCHED_ENRON_CSV")

ENRON_SKIP_REASON = (
    "Enron corpus not supplied; set PUSHSCHED_ENRON_MAILDIR (maildir root) "
    "or PUSHSCHED_ENRON_CSV (pre-ingested canonical trace CSV)"
)


def enron_supplied() -> bool:
    return bool(ENRON_MAILDIR or ENRON_CSV)


@pytest.fixture(scope="session")
def enron_traces(tmp_path_factory):
    """Per-user traces from the Enron corpus, analysis-local timestamps."""
    if not enron_supplied():
        pytest.skip(ENRON_SKIP_REASON)
    if ENRON_CSV:
        with open(ENRON_CSV, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        out = tmp_path_factory.mktemp("enron") / "trace.csv"
        code = main(["ingest", ENRON_MAILDIR, "--out", str(out), "--tz-offset", "-21600"])
        assert code == 0, "enron maildir ingest failed"
        text = out.read_text(encoding="utf-8")
    traces = parse_trace_csv(text)
    assert traces, "supplied Enron corpus produced no traces"
    return traces
