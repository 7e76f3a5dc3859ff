from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from indoor_behaviour_ai.analysis.activity import activity_totals, sleep_disturbance
from indoor_behaviour_ai.analysis.charts import line_chart
from indoor_behaviour_ai.analysis.complexity import lz_by_day
from indoor_behaviour_ai.analysis.information import (
    DEFAULT_DAYPARTS,
    MIN_BUCKET_WINDOWS,
    Daypart,
    OccupancyPair,
    stratify_mi,
)
from indoor_behaviour_ai.errors import AlignmentError, ConfigError, InputValidationError, ModelDataMismatchError
from indoor_behaviour_ai.monitoring.logger import get_logger

logger = get_logger("analysis.behaviour_report")

DECODE_COLUMNS = ("window_start", "label", "score", "alpha")
TIME_TOLERANCE_S = 1e-6


@dataclass(frozen=True)
class AnalysisConfig:
    dayparts: tuple[Daypart, ...] = DEFAULT_DAYPARTS
    night_span: tuple[float, float] = (0.0, 6.0)
    lag: int = 0
    min_bucket_windows: int = MIN_BUCKET_WINDOWS
    lz_segments_per_day: int = 1

    def __post_init__(self):
        if self.lag < 0:
            raise ConfigError("analysis.lag must be >= 0")
        if self.min_bucket_windows < 1 or self.lz_segments_per_day < 1:
            raise ConfigError("analysis.min_bucket_windows and analysis.lz_segments_per_day must be >= 1")
        start, end = self.night_span
        if not 0 <= start <= end <= 24:
            raise ConfigError(f"analysis.night_span must lie within a day, got {self.night_span}")

    @classmethod
    def from_dict(cls, raw: dict) -> "AnalysisConfig":
        kwargs = {}
        if "dayparts" in raw:
            kwargs["dayparts"] = tuple(Daypart(**dp) for dp in raw["dayparts"])
        if "night_span" in raw:
            kwargs["night_span"] = tuple(float(h) for h in raw["night_span"])
        for key in ("lag", "min_bucket_windows", "lz_segments_per_day"):
            if key in raw:
                kwargs[key] = int(raw[key])
        return cls(**kwargs)


@dataclass
class BehaviourReport:
    lz_by_day: pd.DataFrame
    activity_by_room_by_day: pd.DataFrame
    sleep_activity: pd.DataFrame
    mi_by_daypart: pd.DataFrame | None = None  # needs two residents
    skipped_nights: dict[str, list[int]] = field(default_factory=dict)


def read_decode_csv(path: Path) -> pd.DataFrame:
    """Load a decode file; empty or time-unsorted files are alignment failures."""
    path = Path(path)
    if not path.exists():
        raise InputValidationError(f"decode file not found: {path}")
    try:
        frame = pd.read_csv(path)
    except pd.errors.EmptyDataError as e:
        raise AlignmentError(f"decode file {path} is empty") from e
    missing = [c for c in DECODE_COLUMNS if c not in frame]
    if missing:
        raise InputValidationError(f"decode file {path} lacks columns {missing}")
    if frame.empty:
        raise AlignmentError(f"decode file {path} has no windows")
    if np.any(np.diff(frame["window_start"].to_numpy(dtype=float)) <= 0):
        raise AlignmentError(f"window_start in {path} is not strictly increasing")
    return frame


def occupancy_pair(frame_a: pd.DataFrame, frame_b: pd.DataFrame, room_names) -> OccupancyPair:
    times_a = frame_a["window_start"].to_numpy(dtype=float)
    times_b = frame_b["window_start"].to_numpy(dtype=float)
    if len(times_a) != len(times_b) or not np.allclose(times_a, times_b, rtol=0, atol=TIME_TOLERANCE_S):
        raise AlignmentError(
            f"resident decodes are not aligned ({len(times_a)} vs {len(times_b)} windows)"
        )
    codes = [pd.Categorical(f["label"], categories=list(room_names)).codes for f in (frame_a, frame_b)]
    return OccupancyPair(room_a=codes[0], room_b=codes[1], times=times_a)


def build_report(
    decodes: dict[str, pd.DataFrame], room_names: tuple[str, ...], bedroom: str, config: AnalysisConfig,
) -> BehaviourReport:
    """MI (first two residents), LZ76, per-room activity and night summaries from decode frames."""
    if not decodes:
        raise InputValidationError("analysis needs at least one decode file")
    for name, frame in decodes.items():
        unknown = sorted(set(frame["label"].astype(str)) - set(room_names))
        if unknown:
            raise ModelDataMismatchError(f"{name} decodes rooms outside the layout: {unknown[:5]}")

    lz_parts, activity_parts, sleep_parts, skipped = [], [], [], {}
    for name, frame in decodes.items():
        labels = frame["label"].astype(str).to_numpy()
        times = frame["window_start"].to_numpy(dtype=float)
        alpha = frame["alpha"].to_numpy(dtype=float)

        lz = lz_by_day(labels, times, config.lz_segments_per_day)
        lz.insert(0, "resident", name)
        lz_parts.append(lz)

        totals = activity_totals(alpha, labels, times, room_names)
        totals.insert(0, "resident", name)
        activity_parts.append(totals)

        sleep, no_night = sleep_disturbance(alpha, labels, times, bedroom, config.night_span)
        sleep.insert(0, "resident", name)
        sleep_parts.append(sleep)
        skipped[name] = no_night

    mi = None
    if len(decodes) >= 2:
        (name_a, frame_a), (name_b, frame_b) = list(decodes.items())[:2]
        pair = occupancy_pair(frame_a, frame_b, room_names)
        mi = stratify_mi(pair, config.dayparts, lag=config.lag, min_windows=config.min_bucket_windows)
        mi.insert(0, "pair", f"{name_a}|{name_b}")
        mi.insert(len(mi.columns) - 1, "lag", config.lag)
        logger.info("MI: %d bucket(s) for %s vs %s at lag %d", len(mi), name_a, name_b, config.lag)
    else:
        logger.info("Single resident: MI section omitted")

    return BehaviourReport(
        lz_by_day=pd.concat(lz_parts, ignore_index=True),
        activity_by_room_by_day=pd.concat(activity_parts, ignore_index=True),
        sleep_activity=pd.concat(sleep_parts, ignore_index=True),
        mi_by_daypart=mi,
        skipped_nights=skipped,
    )


def write_report(report: BehaviourReport, out_dir: Path) -> list[Path]:
    """CSV bundle plus one SVG chart per section."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def csv(frame: pd.DataFrame, name: str):
        path = out_dir / name
        frame.to_csv(path, index=False, float_format="%.10g")
        written.append(path)

    if report.mi_by_daypart is not None:
        csv(report.mi_by_daypart, "mi_by_daypart.csv")
        written.append(line_chart(
            report.mi_by_daypart, "day", "mi_bits", "daypart",
            "Mutual information of room occupancy", "MI (bits)", out_dir / "mi_by_daypart.svg",
        ))

    csv(report.lz_by_day, "lz_by_day.csv")
    lz = report.lz_by_day.assign(series=report.lz_by_day["resident"] + "/" + report.lz_by_day["segment"].astype(str))
    written.append(line_chart(
        lz, "day", "lz76", "series", "Location complexity (LZ76)", "phrases", out_dir / "complexity_by_day.svg",
    ))

    csv(report.activity_by_room_by_day, "activity_by_room_by_day.csv")
    rooms = [c for c in report.activity_by_room_by_day.columns if c not in ("resident", "day", "total")]
    long = report.activity_by_room_by_day.melt(
        id_vars=["resident", "day"], value_vars=rooms, var_name="room", value_name="activity",
    )
    long["series"] = long["resident"] + "/" + long["room"]
    written.append(line_chart(
        long, "day", "activity", "series", "Total activity per room", "activity (g)", out_dir / "activity_by_room.svg",
    ))

    csv(report.sleep_activity, "sleep_activity.csv")
    written.append(line_chart(
        report.sleep_activity, "day", "mean_alpha", "resident",
        "Night-time activity", "mean activity (g)", out_dir / "sleep_activity.svg",
    ))

    skipped = [{"resident": r, "day": d} for r, days in report.skipped_nights.items() for d in days]
    csv(pd.DataFrame(skipped, columns=["resident", "day"]), "skipped_nights.csv")
    logger.info("Wrote behaviour report (%d files) to %s", len(written), out_dir)
    return written
