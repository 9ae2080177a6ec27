import os
import sys
import logging
from pathlib import Path
from typing import List, Optional
import argparse
from dotenv import load_dotenv

from src.orchestrator.pipeline_orchestrator import PipelineOrchestrator
from src.services.dataset_io import read_raw_records
from src.stages.category_encoder import CATEGORY_CEILINGS, Attribute, CategoryEncoder, check_counts, load_mapping
from src.stages.leiden_normalizer import AnnotationLexicon, LeidenNormalizer
from src.utils.config import AuthenticityPolicy, PipelineConfig, load_settings, settings_to_fields
from src.utils.errors import ConfigError, ForgeError

# Load environment variables
load_dotenv()

logger = logging.getLogger("forge")

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(log_file: Optional[str] = None) -> None:
    """Log to stderr (stdout and the dataset carry only data), plus an optional file"""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        # Ensure the log directory exists BEFORE setting up FileHandler
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))

    logging.basicConfig(
        level=os.getenv("LOG_LEVEL", "INFO"),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="forge", description="Build the processed Palaeohispanic inscription dataset")
    parser.add_argument("--config", help="YAML settings file (default: $FORGE_CONFIG or config/config.yaml)")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Transform a raw export into the 36-column dataset")
    run.add_argument("--input", required=True, help="Raw export (CSV or TSV with header)")
    run.add_argument("--output", required=True, help="Processed dataset path")
    run.add_argument("--gazetteers", help="Directory holding the gazetteer files")
    run.add_argument("--mappings", help="Category mapping file")
    run.add_argument("--lexicon", help="Annotation lexicon file")
    run.add_argument("--modifiers", help="Chronology modifier table")
    run.add_argument("--drop-false", action="store_true", help="Drop records marked FALSE")
    run.add_argument("--drop-suspicious", action="store_true", help="Drop records marked FALSE or SUSPICIOUS")
    run.add_argument("--report", help="Write the run report (JSON) here")
    run.add_argument("--workers", type=int, help="Records transformed concurrently")
    run.add_argument("--delimiter", help="Input delimiter (default: detect comma or tab)")

    check = commands.add_parser("check-mappings", help="Validate the category mapping against the ceilings")
    check.add_argument("--mappings", help="Category mapping file")
    check.add_argument("--input", help="Raw export whose distinct categories are counted")
    check.add_argument(
        "--expect-exact",
        action="store_true",
        help="Fail unless the export's distinct categories equal the ceilings",
    )

    normalize = commands.add_parser("normalize", help="Normalize one inscription text")
    normalize.add_argument("--text", required=True, help="Raw inscription text")
    normalize.add_argument("--lexicon", help="Annotation lexicon file")
    normalize.add_argument("--trace", action="store_true", help="Print the text after every rule")
    return parser


def _policy(args: argparse.Namespace) -> Optional[AuthenticityPolicy]:
    if args.drop_suspicious:
        return AuthenticityPolicy.DROP_FALSE_AND_SUSPICIOUS
    if args.drop_false:
        return AuthenticityPolicy.DROP_FALSE
    return None


def _ceilings(settings) -> dict:
    configured = settings_to_fields(settings).get("ceilings")
    if configured is None:
        return dict(CATEGORY_CEILINGS)
    try:
        return {Attribute(k.upper()): v for k, v in configured.items()}
    except ValueError as e:
        raise ConfigError(f"categories.ceilings: {e}")


def _setting_path(settings, override: Optional[str], key: str) -> Path:
    value = override or settings_to_fields(settings).get(key)
    if not value:
        raise ConfigError(f"No {key} given on the command line or in the configuration")
    return Path(value)


def cmd_run(args: argparse.Namespace, settings) -> int:
    config = PipelineConfig.build(
        settings,
        {
            "input": args.input,
            "output": args.output,
            "gazetteer_dir": args.gazetteers,
            "mappings": args.mappings,
            "lexicon": args.lexicon,
            "modifiers": args.modifiers,
            "policy": _policy(args),
            "report": args.report,
            "workers": args.workers,
            "delimiter": args.delimiter,
        },
    )

    logger.info("=" * 80)
    logger.info("PALAEOHISPANIC DATASET FORGE")
    logger.info("=" * 80)
    logger.info(f"Input: {config.input}")
    logger.info(f"Output: {config.output}")
    logger.info(f"Policy: {config.policy.value}")

    report = PipelineOrchestrator(config).run()

    logger.info("=" * 80)
    logger.info("RUN COMPLETED SUCCESSFULLY!")
    logger.info("=" * 80)
    logger.info(f"Records in: {report.records_in}")
    logger.info(f"Records out: {report.records_out}")
    logger.info(f"Records filtered: {report.records_filtered}")
    logger.info(f"Unresolved places: {len(report.unresolved_place_names)}")
    logger.info(f"Unparsed dating fragments: {len(report.unparsed_dating_fragments)}")
    logger.info(f"Normalization warnings: {len(report.normalization_warnings)}")
    return 0


def cmd_check_mappings(args: argparse.Namespace, settings) -> int:
    ceilings = _ceilings(settings)
    mappings = load_mapping(_setting_path(settings, args.mappings, "mappings"), ceilings)
    for attribute, mapping in mappings.items():
        print(f"{attribute.value}: {len(mapping.codes)} categories (ceiling {ceilings.get(attribute)})")

    if not args.input:
        return 0

    observed = CategoryEncoder(mappings).distinct_categories(read_raw_records(args.input))
    for attribute, count in observed.items():
        print(f"{attribute.value}: {count} distinct in {args.input}")
    if args.expect_exact:
        mismatches = check_counts(observed, ceilings)
        for mismatch in mismatches:
            logger.error(mismatch)
        return 1 if mismatches else 0
    return 0


def cmd_normalize(args: argparse.Namespace, settings) -> int:
    lexicon = AnnotationLexicon.from_file(_setting_path(settings, args.lexicon, "lexicon"))
    normalizer = LeidenNormalizer(lexicon)
    if args.trace:
        for step, text in normalizer.trace(args.text):
            print(f"{step:<12} {text}")
    warnings: List[str] = []
    print(normalizer.normalize_text(args.text, warnings))
    for warning in warnings:
        logger.warning(warning)
    return 0


COMMANDS = {
    "run": cmd_run,
    "check-mappings": cmd_check_mappings,
    "normalize": cmd_normalize,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point"""
    args = build_parser().parse_args(argv)

    try:
        settings = load_settings(args.config)
    except ConfigError as e:
        setup_logging()
        logger.error(str(e))
        return 1

    setup_logging(settings_to_fields(settings).get("log_file"))

    try:
        return COMMANDS[args.command](args, settings)
    except ForgeError as e:
        logger.error("=" * 80)
        logger.error("RUN FAILED")
        logger.error("=" * 80)
        logger.error(f"Error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
