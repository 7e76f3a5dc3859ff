"""Per-step run records in `<out>/pipeline_runs.db`.

Each pipeline step runs inside a PipelineTracker; on exit one row lands in
`pipeline_runs` and one row per metric in `run_metrics`. The `report`
command and the drift check read them back.
"""

import sqlite3
import time
from contextlib import closing
from datetime import datetime, timezone
from pathlib import Path

from indoor_behaviour_ai.monitoring.logger import get_logger

logger = get_logger("monitoring.pipeline_tracker")

DB_NAME = "pipeline_runs.db"

SCHEMA = """
CREATE TABLE IF NOT EXISTS pipeline_runs (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    run_at TEXT NOT NULL,
    step TEXT NOT NULL,
    seed INTEGER,
    duration_sec REAL NOT NULL,
    items_in INTEGER NOT NULL,
    items_out INTEGER NOT NULL,
    items_skipped INTEGER NOT NULL,
    status TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS run_metrics (
    run_id INTEGER NOT NULL REFERENCES pipeline_runs(id),
    metric_name TEXT NOT NULL,
    metric_value REAL NOT NULL
);
"""


def connect(db_path: Path) -> sqlite3.Connection:
    """Open the run database, creating the schema on first use."""
    db_path = Path(db_path)
    db_path.parent.mkdir(parents=True, exist_ok=True)
    conn = sqlite3.connect(db_path)
    conn.executescript(SCHEMA)
    return conn


def latest_metric(db_path: Path, step: str, metric_name: str) -> float | None:
    """Most recent stored value of `metric_name` for `step`, or None."""
    if not Path(db_path).exists():
        return None
    try:
        with closing(connect(db_path)) as conn:
            row = conn.execute(
                """
                SELECT m.metric_value FROM run_metrics m
                JOIN pipeline_runs r ON m.run_id = r.id
                WHERE r.step = ? AND m.metric_name = ?
                ORDER BY r.id DESC LIMIT 1
                """,
                (step, metric_name),
            ).fetchone()
    except sqlite3.Error as e:
        logger.warning("Cannot read %s: %s", db_path, e)
        return None
    return row[0] if row else None


class PipelineTracker:
    """Times one step and stores its counts and metrics.

        with PipelineTracker("train", out_dir / DB_NAME, seed=7) as tracker:
            tracker.add_metric("beta_mean", 1.02)
            tracker.record(items_in=960, items_out=1, items_skipped=0)

    Exceptions inside the block are recorded as status "failed" and re-raised.
    """

    def __init__(self, step: str, db_path: Path, seed: int | None = None):
        self.step = step
        self.db_path = Path(db_path)
        self.seed = seed
        self.counts = (0, 0, 0)
        self.metrics: dict[str, float] = {}
        self._recorded = False
        self._started = 0.0

    def __enter__(self) -> "PipelineTracker":
        self._started = time.perf_counter()
        logger.info("Starting step: %s", self.step)
        return self

    def add_metric(self, name: str, value: float):
        self.metrics[name] = float(value)

    def record(self, items_in: int, items_out: int, items_skipped: int):
        self.counts = (int(items_in), int(items_out), int(items_skipped))
        self._recorded = True

    def check_drift(self, metric_name: str, value: float, threshold_pct: float) -> float | None:
        """Percent change of a metric against this step's previous run; warns past the threshold."""
        previous = latest_metric(self.db_path, self.step, metric_name)
        if not previous:
            return None
        drift_pct = abs(value - previous) / abs(previous) * 100
        self.add_metric(f"{metric_name}_drift_pct", round(drift_pct, 1))
        if drift_pct > threshold_pct:
            logger.warning(
                "ANOMALY: %s drifted %.1f%% since the last %s run (%.4g -> %.4g)",
                metric_name, drift_pct, self.step, previous, value,
            )
        return drift_pct

    def _status(self, failed: bool) -> str:
        if failed:
            return "failed"
        if not self._recorded:
            return "no_data"
        return "partial" if self.counts[2] > 0 else "success"

    def __exit__(self, exc_type, exc_val, exc_tb):
        duration = round(time.perf_counter() - self._started, 2)
        status = self._status(exc_type is not None)
        items_in, items_out, skipped = self.counts
        logger.info(
            "Step %s finished in %.1fs: in=%d, out=%d, skipped=%d, status=%s",
            self.step, duration, items_in, items_out, skipped, status,
        )

        try:
            with closing(connect(self.db_path)) as conn, conn:
                run_id = conn.execute(
                    "INSERT INTO pipeline_runs (run_at, step, seed, duration_sec, items_in, items_out, items_skipped, status)"
                    " VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                    (datetime.now(timezone.utc).isoformat(), self.step, self.seed, duration, *self.counts, status),
                ).lastrowid
                conn.executemany(
                    "INSERT INTO run_metrics (run_id, metric_name, metric_value) VALUES (?, ?, ?)",
                    [(run_id, name, value) for name, value in self.metrics.items()],
                )
        except sqlite3.Error as e:
            logger.error("Failed to store the %s run in %s: %s", self.step, self.db_path, e)
        else:
            if self.metrics:
                logger.info(
                    "Step %s metrics: %s", self.step, ", ".join(f"{k}={v:.4g}" for k, v in self.metrics.items()),
                )
        return False
