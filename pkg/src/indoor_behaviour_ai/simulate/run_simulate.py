from dataclasses import replace
from pathlib import Path

from indoor_behaviour_ai.monitoring.logger import get_logger
from indoor_behaviour_ai.monitoring.pipeline_tracker import DB_NAME, PipelineTracker
from indoor_behaviour_ai.settings import RunConfig, load_config
from indoor_behaviour_ai.simulate.layout import layout_to_dict, load_layout
from indoor_behaviour_ai.simulate.schedule import shadow_schedule
from indoor_behaviour_ai.simulate.trace_io import file_digest, write_manifest, write_trace_jsonl
from indoor_behaviour_ai.simulate.traces import simulate_free_living, simulate_walkthrough

logger = get_logger("simulate.run_simulate")

TRACES_DIR = "traces"
WALKTHROUGH = "walkthrough"


def trace_dir(config: RunConfig) -> Path:
    return config.output_dir / TRACES_DIR


def run(config: RunConfig) -> Path:
    """Simulate the walkthrough and every resident, write JSONL traces and a seeded manifest."""
    with PipelineTracker("simulate", config.output_dir / DB_NAME, seed=config.seed) as tracker:
        layout = load_layout(config.layout_path)
        out_dir = trace_dir(config)
        out_dir.mkdir(parents=True, exist_ok=True)

        walk = simulate_walkthrough(layout, config.simulation)
        traces = [(WALKTHROUGH, walk)]

        leader = None
        for k, persona in enumerate(config.residents):
            # Residents get their own seed so their days differ; persona only changes the accelerometer.
            cfg = replace(config.simulation, seed=config.seed + k)
            schedule = None
            if config.shadowing and leader is not None:
                schedule = shadow_schedule(leader, config.shadow_lag_s)
            trace = simulate_free_living(
                layout, cfg, config.free_living_days, persona,
                schedule=schedule, horizon_hours=config.horizon_hours,
            )
            if leader is None:
                leader = trace.schedule
            traces.append((persona.value, trace))

        files = {}
        samples = 0
        for name, trace in traces:
            path = write_trace_jsonl(trace, out_dir / f"{name}.jsonl")
            files[name] = {
                "path": path.name,
                "sha256": file_digest(path),
                "persona": trace.persona.value,
                "clock_offset_s": trace.clock_offset_s,
                "duration_s": trace.duration_s,
            }
            samples += trace.rssi.shape[0] + trace.accel.shape[0]

        manifest = write_manifest(out_dir, {
            "seed": config.seed,
            "layout": layout_to_dict(layout),
            "rssi_rate_hz": config.simulation.rssi_rate_hz,
            "accel_rate_hz": config.simulation.accel_rate_hz,
            "shift_offset": config.simulation.shift_offset,
            "free_living_days": config.free_living_days,
            "horizon_hours": config.horizon_hours,
            "shadowing": config.shadowing,
            "traces": files,
        })
        logger.info("Simulated %d trace(s) into %s", len(traces), out_dir)
        tracker.add_metric("walkthrough_minutes", walk.duration_s / 60)
        tracker.add_metric("samples", samples)
        tracker.record(items_in=len(traces), items_out=len(files), items_skipped=0)
        return manifest


if __name__ == "__main__":
    run(RunConfig.from_dict(load_config()))
