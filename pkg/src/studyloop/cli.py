"""Operator command line: serve, seed, ingest, pair, simulate, report."""
from __future__ import annotations

import json
import random
import sys
from datetime import datetime, timezone

import click

from .config import EngineConfig
from .core import EngineError, ManualClock
from .engine import Engine
from .sim import CLASS_CATALOG, CLASS_TOPICS, SIM_EPOCH, StudentProfile, default_profiles, simulate
from .store import Store
from .ttm import mock_attempts

SEED_EPOCH = datetime(2026, 1, 5, tzinfo=timezone.utc)


def _engine_for(store_path, config_path=None, clock=None) -> Engine:
    config = EngineConfig.load(config_path)
    store = Store.load(store_path) if store_path else Store()
    if store_path:
        store.path = store_path
    return Engine(config, store, clock)


@click.group()
def main():
    """Persuasive study-habit engine."""


@main.command()
@click.option("--port", default=8000, show_default=True, envvar="STUDYLOOP_PORT")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--store", "store_path", default=None, envvar="STUDYLOOP_STORE",
              help="Snapshot path for durable state.")
@click.option("--config", "config_path", default=None, help="Engine config JSON.")
@click.option("--tick-seconds", default=30, show_default=True,
              help="Dispatcher heartbeat interval.")
@click.option("--webapp", "webapp_dir", default="frontend", show_default=True,
              help="Static web UI directory to mount at /app (skipped if absent).")
def serve(port, host, store_path, config_path, tick_seconds, webapp_dir):
    """Run the HTTP API with a background dispatcher loop."""
    import threading

    import uvicorn

    from .api import create_app

    engine = _engine_for(store_path, config_path)
    app = create_app(engine, webapp_dir=webapp_dir)
    stop = threading.Event()

    def heartbeat():
        while not stop.wait(tick_seconds):
            try:
                engine.tick()
                engine.save()
            except Exception as exc:  # keep the loop alive; operators read logs
                click.echo(f"tick error: {exc}", err=True)

    thread = threading.Thread(target=heartbeat, daemon=True)
    thread.start()
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    finally:
        stop.set()
        engine.save()


@main.command()
@click.option("--students", "count", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--store", "store_path", required=True, help="Snapshot path to write.")
def seed(count, seed, store_path):
    """Populate a store with deterministic synthetic students."""
    rng = random.Random(f"seed:{seed}")
    store = Store(path=store_path)
    engine = Engine(EngineConfig(rng_seed=seed), store, ManualClock(SEED_EPOCH))
    for index in range(count):
        sid = f"stu{index:03d}"
        class_a = CLASS_CATALOG[index % len(CLASS_CATALOG)]
        class_b = CLASS_CATALOG[(index + 1) % len(CLASS_CATALOG)]
        engine.create_student(
            display_name=f"Student {index:03d}",
            timezone="UTC",
            classes=[class_a[0], class_b[0]],
            share_schedule=rng.random() < 0.7,
            student_id=sid,
        )
        blocks = [
            {"day": c[1], "start": c[2], "end": c[3], "kind": "class", "class_id": c[0]}
            for c in (class_a, class_b)
        ]
        if rng.random() < 0.5:
            blocks.append({"day": 4, "start": 9 * 60, "end": 13 * 60, "kind": "work"})
        engine.set_timetable(sid, blocks)
        engine.set_preference(sid, "early" if rng.random() < 0.5 else "late")
        from .performance import all_items

        engine.record_responses(sid, {item: rng.randint(2, 6) for item in sorted(all_items())})
    attempts = mock_attempts(
        [f"stu{i:03d}" for i in range(count)],
        {c[0]: [CLASS_TOPICS[c[0]]] for c in CLASS_CATALOG},
        seed=seed,
        start=SEED_EPOCH,
    )
    engine.ingest_attempts(attempts)
    path = store.save()
    click.echo(f"seeded {count} students into {path}")


@main.command("ingest-ttm")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "store_path", required=True)
def ingest_ttm(file, store_path):
    """Ingest a JSON-lines file of test attempts."""
    engine = _engine_for(store_path)
    result = engine.store.attempts.ingest_jsonl(file)
    engine.store.append_event({"type": "ttm_ingest_file", "file": file, **result.to_json()})
    engine.save()
    click.echo(json.dumps(result.to_json(), indent=2, sort_keys=True))
    if result.rejected and not result.accepted:
        raise SystemExit(1)


@main.command()
@click.option("--class", "class_id", required=True)
@click.option("--topic", required=True)
@click.option("--store", "store_path", required=True)
def pair(class_id, topic, store_path):
    """Run the blind-pairing batch for one class and topic."""
    engine = _engine_for(store_path)
    try:
        result = engine.pair_class(class_id, topic)
    except EngineError as exc:
        click.echo(str(exc), err=True)
        raise SystemExit(1)
    engine.save()
    click.echo(
        json.dumps(
            {
                "pairs": [p.to_json() for p in result.pairs],
                "unpaired": result.unpaired,
            },
            indent=2,
            sort_keys=True,
        )
    )


@main.command("simulate")
@click.option("--weeks", default=12, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--students", "count", default=10, show_default=True,
              help="Synthetic student count when no profile file is given.")
@click.option("--profiles", "profiles_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON list of student profiles.")
@click.option("--gate/--no-gate", default=True, show_default=True,
              help="Route triggers through the motivation/ability gate.")
@click.option("--store", "store_path", default=None,
              help="Write the final engine state to this snapshot.")
def simulate_cmd(weeks, seed, count, profiles_path, gate, store_path):
    """Simulate synthetic students for several weeks; metrics JSON on stdout."""
    if profiles_path:
        with open(profiles_path) as fh:
            profiles = [StudentProfile.from_json(row) for row in json.load(fh)]
    else:
        profiles = default_profiles(count, seed)
    from .sim import Simulation

    run = Simulation(profiles, weeks, seed, gate_enabled=gate)
    metrics = run.run()
    if store_path:
        run.engine.store.path = store_path
        run.engine.store.save()
    click.echo(json.dumps([m.to_json() for m in metrics], indent=2, sort_keys=True))


@main.command()
@click.option("--student", "student_id", required=True)
@click.option("--store", "store_path", required=True)
@click.option("--out", "out_dir", default="reports", show_default=True)
def report(student_id, store_path, out_dir):
    """Render a student's CSV report and figures."""
    from .report import render_report

    engine = _engine_for(store_path)
    try:
        result = render_report(engine, student_id, out_dir)
    except EngineError as exc:
        click.echo(str(exc), err=True)
        raise SystemExit(1)
    metrics = result["metrics"]
    adherence = metrics["adherence"]
    click.echo(f"student: {student_id}")
    click.echo(f"adherence: {'n/a' if adherence is None else f'{adherence:.2f}'} ({metrics['band']})")
    click.echo(f"csv: {result['csv'][0]}")
    for figure in result["figures"]:
        click.echo(f"figure: {figure}")


if __name__ == "__main__":
    main()
