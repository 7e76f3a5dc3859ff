from pathlib import Path

from indoor_behaviour_ai.analysis.behaviour_report import build_report, read_decode_csv, write_report
from indoor_behaviour_ai.errors import InputValidationError
from indoor_behaviour_ai.model.run_decode import decode_dir
from indoor_behaviour_ai.monitoring.logger import get_logger
from indoor_behaviour_ai.monitoring.pipeline_tracker import DB_NAME, PipelineTracker
from indoor_behaviour_ai.settings import RunConfig, load_config
from indoor_behaviour_ai.simulate.layout import load_layout

logger = get_logger("analysis.run_analyse")

REPORT_DIR = "report"


def run(config: RunConfig, inputs: list[Path] | None = None) -> list[Path]:
    """Behaviour report from decode CSVs; the first two inputs form the MI pair."""
    with PipelineTracker("analyse", config.output_dir / DB_NAME, seed=config.seed) as tracker:
        layout = load_layout(config.layout_path)
        if not inputs:
            inputs = [decode_dir(config) / f"{p.value}.csv" for p in config.residents]
            inputs = [p for p in inputs if p.exists()]
        if not inputs:
            raise InputValidationError(f"no decode files given or found under {decode_dir(config)}")

        decodes = {Path(p).stem: read_decode_csv(Path(p)) for p in inputs}
        report = build_report(decodes, layout.rooms, layout.rooms[layout.bedroom], config.analysis)
        written = write_report(report, config.output_dir / REPORT_DIR)

        if report.mi_by_daypart is not None and len(report.mi_by_daypart):
            tracker.add_metric("mi_bits_mean", float(report.mi_by_daypart["mi_bits"].mean()))
        tracker.add_metric("lz76_mean", float(report.lz_by_day["lz76"].mean()))
        if len(report.sleep_activity):
            tracker.add_metric("night_alpha_mean", float(report.sleep_activity["mean_alpha"].mean()))
        skipped = sum(len(days) for days in report.skipped_nights.values())
        tracker.record(items_in=len(decodes), items_out=len(written), items_skipped=skipped)
        return written


if __name__ == "__main__":
    run(RunConfig.from_dict(load_config()))
