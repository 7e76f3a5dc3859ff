import argparse
import sys
from pathlib import Path

from indoor_behaviour_ai.analysis.run_analyse import run as run_analyse
from indoor_behaviour_ai.errors import PipelineError
from indoor_behaviour_ai.model.run_decode import run as run_decode
from indoor_behaviour_ai.model.run_train import run as run_train
from indoor_behaviour_ai.monitoring.logger import get_logger, set_level
from indoor_behaviour_ai.monitoring.pipeline_tracker import DB_NAME
from indoor_behaviour_ai.monitoring.report import print_report
from indoor_behaviour_ai.pipeline import Ablation
from indoor_behaviour_ai.settings import RunConfig, load_config
from indoor_behaviour_ai.simulate.run_simulate import run as run_simulate
from indoor_behaviour_ai.transform.run_featurize import run as run_featurize

logger = get_logger("main")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML or JSON file merged over config/config.yaml")
    common.add_argument("--seed", type=int, help="root seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output directory (overrides paths.output)")
    common.add_argument("--no-kmm", action="store_true", help="ablation: all importance weights 1")
    common.add_argument("--no-ssl", action="store_true", help="ablation: skip the self-training term")
    common.add_argument("--no-gate", action="store_true", help="ablation: never close the transition gate")

    parser = argparse.ArgumentParser(
        prog="indoor-behaviour",
        description="Room-level localisation and behaviour analysis from wearable RSSI.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write walkthrough and resident traces")
    sub.add_parser("featurize", parents=[common], help="window traces into feature CSVs")
    sub.add_parser("train", parents=[common], help="KMM weights + CRF training")
    decode = sub.add_parser("decode", parents=[common], help="Viterbi-decode feature CSVs or traces")
    decode.add_argument("--model", type=Path, help="checkpoint (default <out>/model/model.json)")
    decode.add_argument("inputs", nargs="*", type=Path, help="feature .csv or trace .jsonl files")
    analyse = sub.add_parser("analyse", parents=[common], help="behaviour report from decode CSVs")
    analyse.add_argument("inputs", nargs="*", type=Path, help="decode CSVs; the first two form the MI pair")
    sub.add_parser("report", parents=[common], help="compare the last two runs of every step")
    sub.add_parser("run", parents=[common], help="simulate -> featurize -> train -> decode -> analyse")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    ablation = Ablation(no_kmm=args.no_kmm, no_ssl=args.no_ssl, no_gate=args.no_gate)

    try:
        raw = load_config(args.config)
        level = raw.get("monitoring", {}).get("log_level")
        if level:
            set_level(level)
        config = RunConfig.from_dict(raw, seed=args.seed, output_dir=args.out)
    except PipelineError as e:
        logger.error("Configuration rejected: %s", e)
        return e.exit_code

    steps = {
        "simulate": lambda: run_simulate(config),
        "featurize": lambda: run_featurize(config),
        "train": lambda: run_train(config, ablation),
        "decode": lambda: run_decode(config, getattr(args, "model", None), getattr(args, "inputs", None)),
        "analyse": lambda: run_analyse(config, getattr(args, "inputs", None)),
    }
    if args.command == "report":
        print_report(config.output_dir / DB_NAME)
        return 0
    names = list(steps) if args.command == "run" else [args.command]

    logger.info("=== %s START (seed %d, out %s) ===", args.command, config.seed, config.output_dir)
    for name in names:
        logger.info("--- Running step: %s ---", name)
        try:
            steps[name]()
        except PipelineError as e:
            logger.error("Step %s failed: %s", name, e)
            logger.error("=== %s ABORTED (exit %d) ===", args.command, e.exit_code)
            return e.exit_code

    logger.info("=== %s COMPLETE ===", args.command)
    if args.command == "run":
        print_report(config.output_dir / DB_NAME)
    return 0


if __name__ == "__main__":
    sys.exit(main())
