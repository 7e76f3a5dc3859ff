from contextlib import closing
from pathlib import Path

import pandas as pd

from indoor_behaviour_ai.monitoring.logger import get_logger
from indoor_behaviour_ai.monitoring.pipeline_tracker import connect

logger = get_logger("monitoring.report")

STEPS = ["simulate", "featurize", "train", "decode", "analyse"]
RUN_FIELDS = {
    "seed": "Seed",
    "duration_sec": "Duration (s)",
    "items_in": "Items in",
    "items_out": "Items out",
    "items_skipped": "Skipped",
    "status": "Status",
}


def load_runs(db_path: Path) -> tuple[pd.DataFrame, pd.DataFrame]:
    with closing(connect(db_path)) as conn:
        runs = pd.read_sql_query("SELECT * FROM pipeline_runs ORDER BY id", conn)
        metrics = pd.read_sql_query("SELECT run_id, metric_name, metric_value FROM run_metrics", conn)
    return runs, metrics


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and pd.isna(value)):
        return "-"
    if isinstance(value, float):
        if value.is_integer():
            return str(int(value))
        return f"{value:.4g}"
    return str(value)


def _delta(current, previous) -> str:
    if pd.isna(previous) or pd.isna(current) or current == previous:
        return ""
    try:
        diff = float(current) - float(previous)
    except (TypeError, ValueError):
        return " (changed)"
    return f" ({diff:+.3g})"


def step_table(runs: pd.DataFrame, metrics: pd.DataFrame, step: str) -> pd.DataFrame:
    """Rows = run fields then metrics; columns current / previous for the last two runs of `step`."""
    last = runs[runs["step"] == step].tail(2).iloc[::-1]
    if last.empty:
        return pd.DataFrame()
    columns = ["current", "previous"][: len(last)]
    rows = {"Date": [at[:16] for at in last["run_at"]]}
    for field, label in RUN_FIELDS.items():
        rows[label] = list(last[field])
    picked = metrics[metrics["run_id"].isin(last["id"])]
    for name, group in picked.groupby("metric_name"):
        values = dict(zip(group["run_id"], group["metric_value"]))
        rows[name] = [values.get(run_id) for run_id in last["id"]]
    return pd.DataFrame.from_dict(rows, orient="index", columns=columns)


def generate_report(db_path: Path) -> str:
    db_path = Path(db_path)
    if not db_path.exists():
        return f"No run database at {db_path}. Run a pipeline command first."

    runs, metrics = load_runs(db_path)
    lines = ["", "=" * 60, "  PIPELINE REPORT: Last vs Previous", "=" * 60]
    totals = [0.0, 0.0]
    for step in STEPS:
        table = step_table(runs, metrics, step)
        if table.empty:
            lines.append(f"\n  {step}: no runs yet")
            continue
        lines += ["", f"  [{step.upper()}]", f"  {'':30s} {'Current':>12s}  {'Previous':>12s}", f"  {'-' * 56}"]
        for label, row in table.iterrows():
            current = row["current"]
            previous = row["previous"] if "previous" in table.columns else None
            lines.append(f"  {label:30s} {_fmt(current):>12s}  {_fmt(previous):>12s}{_delta(current, previous)}")
        for k, column in enumerate(table.columns):
            totals[k] += float(table.at["Duration (s)", column])

    lines += ["", f"  {'-' * 56}"]
    lines.append(f"  {'Current total duration':30s} {totals[0]:>11.1f}s")
    lines.append(f"  {'Previous total duration':30s} {totals[1]:>11.1f}s")
    lines += ["=" * 60, ""]
    return "\n".join(lines)


def print_report(db_path: Path):
    report = generate_report(db_path)
    print(report)
    logger.info("Pipeline report generated from %s", db_path)
