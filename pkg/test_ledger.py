import json
from pathlib import Path

from qict.catalog import load_document
from qict.db.models import Run, RunArtifact, RunStatus
from qict.ledger import fail_run, finish_run, recent_runs, start_run
from qict.schemas import validate_scenario


def _scenario(name="fig5a"):
    return validate_scenario(load_document(name))


def test_start_run(ledger_db):
    run = start_run(ledger_db, _scenario(), Path("out/fig5a"))
    assert run.id is not None
    assert run.status == RunStatus.RUNNING
    assert run.kind == "visibility-sweep"
    assert run.out_dir == "out/fig5a"


def test_large_seeds_survive(ledger_db):
    scenario = _scenario().model_copy(update={"seed": 2 ** 64 - 1})
    run = start_run(ledger_db, scenario, Path("out"))
    assert int(ledger_db.get(Run, run.id).seed) == 2 ** 64 - 1


def test_finish_run_records_artifacts(ledger_db):
    run = start_run(ledger_db, _scenario(), Path("out"))
    finish_run(ledger_db, run, {"metrics": {"fit_slope": 0.61}}, [Path("out/visibility_sweep.csv"),
                                                                   Path("out/summary.json")])
    stored = ledger_db.get(Run, run.id)
    assert stored.status == RunStatus.SUCCEEDED
    assert stored.finished_at is not None
    assert json.loads(stored.summary) == {"metrics": {"fit_slope": 0.61}}
    assert sorted(a.kind for a in stored.artifacts) == ["csv", "json"]
    assert ledger_db.query(RunArtifact).count() == 2


def test_fail_run(ledger_db):
    run = start_run(ledger_db, _scenario(), Path("out"))
    fail_run(ledger_db, run, "delay beyond Nyquist")
    stored = ledger_db.get(Run, run.id)
    assert stored.status == RunStatus.FAILED
    assert stored.error == "delay beyond Nyquist"
    assert stored.artifacts == []


def test_recent_runs_newest_first(ledger_db):
    for name in ("fig5a", "fig5b", "mirror-fd"):
        start_run(ledger_db, _scenario(name), Path("out") / name)
    runs = recent_runs(ledger_db, limit=2)
    assert [r.scenario for r in runs] == ["mirror-fd", "fig5b"]
