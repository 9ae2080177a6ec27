from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional
import json
import logging
import os

from pydantic import BaseModel, Field, model_validator

from src.models.records import OUTPUT_COLUMNS, ProcessedRecord, RawRecord, validate_corpus
from src.services.dataset_io import emit_dataset, format_row, read_raw_records
from src.stages.base_stage import IssueKind, RecordIssue
from src.stages.category_encoder import Attribute, CategoryEncoder, load_mapping
from src.stages.chronology_parser import ChronologyParser, load_modifiers
from src.stages.geo_resolver import GeoResolver
from src.stages.leiden_normalizer import AnnotationLexicon, LeidenNormalizer
from src.utils.config import PipelineConfig
from src.utils.errors import ConfigError, EmitError, ForgeError


class RunReport(BaseModel):
    """Summary of one dataset run, written as JSON next to the dataset"""

    records_in: int = 0
    records_out: int = 0
    records_filtered: int = 0
    nulls_per_column: Dict[str, int] = Field(default_factory=dict)
    distinct_categories: Dict[str, int] = Field(default_factory=dict)
    unresolved_place_names: List[str] = Field(default_factory=list)
    unparsed_dating_fragments: List[str] = Field(default_factory=list)
    normalization_warnings: List[str] = Field(default_factory=list)
    unmapped_values: List[str] = Field(default_factory=list)
    validation_violations: List[str] = Field(default_factory=list)
    processing_time_seconds: float = 0.0

    @model_validator(mode="after")
    def _check_counts(self):
        if self.records_in != self.records_out + self.records_filtered:
            raise ValueError(
                f"records_in {self.records_in} != records_out {self.records_out} + filtered {self.records_filtered}"
            )
        return self

    def add_issues(self, issues: List[RecordIssue]) -> None:
        sinks = {
            IssueKind.NORMALIZATION: self.normalization_warnings,
            IssueKind.UNPARSED_DATING: self.unparsed_dating_fragments,
            IssueKind.UNRESOLVED_PLACE: self.unresolved_place_names,
            IssueKind.UNMAPPED_VALUE: self.unmapped_values,
            IssueKind.VALIDATION: self.validation_violations,
        }
        for issue in issues:
            sinks[issue.kind].append(f"{issue.ref_hesperia}: {issue.detail}")


def count_nulls(records: List[ProcessedRecord]) -> Dict[str, int]:
    """Empty output cells per column."""
    counts = dict.fromkeys(OUTPUT_COLUMNS, 0)
    for record in records:
        for column, cell in zip(OUTPUT_COLUMNS, format_row(record)):
            if cell is None or cell == "":
                counts[column] += 1
    return counts


class PipelineOrchestrator:
    """Runs ingestion, filtering, the four transformations and emission"""

    def __init__(self, config: PipelineConfig):
        if not logging.getLogger().handlers:
            logging.basicConfig(level=os.getenv("LOG_LEVEL", "INFO"))

        self.logger = logging.getLogger("Orchestrator")
        self.config = config

        # Filled by load_resources(); read-only afterwards
        self.normalizer: Optional[LeidenNormalizer] = None
        self.chronology: Optional[ChronologyParser] = None
        self.geo: Optional[GeoResolver] = None
        self.encoder: Optional[CategoryEncoder] = None

        self.state = {
            "status": "initialized",
            "current_step": None,
            "outputs": {},
            "errors": [],
        }

    def load_resources(self) -> None:
        """Load lexicon, modifier table, gazetteers and category mappings."""
        ceilings = None
        if self.config.ceilings is not None:
            try:
                ceilings = {Attribute(k.upper()): v for k, v in self.config.ceilings.items()}
            except ValueError as e:
                raise ConfigError(f"categories.ceilings: {e}")

        self.normalizer = LeidenNormalizer(AnnotationLexicon.from_file(self.config.lexicon))
        self.chronology = ChronologyParser(load_modifiers(self.config.modifiers))
        self.geo = GeoResolver.from_config(self.config.gazetteers, self.config.gazetteer_dir)
        self.encoder = CategoryEncoder(load_mapping(self.config.mappings, ceilings))

    def run(self) -> RunReport:
        """
        Produce the processed dataset described by the configuration

        Returns:
            RunReport with counts and the per-record issues
        """
        self.logger.info("Starting dataset run")
        start_time = datetime.now()
        self.state["status"] = "running"

        try:
            # Step 1: Resources
            self.logger.info("Step 1: Loading resources")
            self.state["current_step"] = "load_resources"
            self.load_resources()
            self.logger.info("✓ Resources loaded")

            # Step 2: Raw export
            self.logger.info(f"Step 2: Reading {self.config.input}")
            self.state["current_step"] = "read_input"
            raw_records = read_raw_records(self.config.input, self.config.delimiter)
            self.state["outputs"]["records_in"] = len(raw_records)
            self.logger.info(f"✓ {len(raw_records)} records read")

            # Step 3: Corpus validation (reported, never fatal)
            self.logger.info("Step 3: Validating corpus")
            self.state["current_step"] = "validate"
            violations = validate_corpus(raw_records)
            for violation in violations:
                self.logger.warning(violation)
            self.logger.info(f"✓ Validation completed ({len(violations)} violations)")

            # Step 4: Authenticity policy
            self.logger.info(f"Step 4: Applying authenticity policy {self.config.policy.value}")
            self.state["current_step"] = "filter"
            kept = [r for r in raw_records if self.config.policy.keeps(r.authenticity)]
            self.logger.info(f"✓ {len(raw_records) - len(kept)} records filtered out")

            # Step 5: Transformations
            self.logger.info(f"Step 5: Transforming {len(kept)} records ({self.config.workers} workers)")
            self.state["current_step"] = "transform"
            results = self._transform_all(kept)
            processed = [record for record, _ in results]
            self.logger.info("✓ Records transformed")

            # Step 6: Emission
            self.logger.info(f"Step 6: Writing {self.config.output}")
            self.state["current_step"] = "emit"
            emit_dataset(processed, self.config.output)
            self.logger.info("✓ Dataset written")

            report = RunReport(
                records_in=len(raw_records),
                records_out=len(processed),
                records_filtered=len(raw_records) - len(kept),
                nulls_per_column=count_nulls(processed),
                distinct_categories={
                    attribute.value: count for attribute, count in self.encoder.distinct_categories(kept).items()
                },
                validation_violations=list(violations),
            )
            for _, issues in results:
                report.add_issues(issues)
            report.processing_time_seconds = round((datetime.now() - start_time).total_seconds(), 2)

            # Step 7: Report
            if self.config.report is not None:
                self.logger.info(f"Step 7: Writing report {self.config.report}")
                self.state["current_step"] = "report"
                self._save_report(report, self.config.report)
                self.logger.info("✓ Report written")

            self.state["status"] = "completed"
            self.state["outputs"]["records_out"] = report.records_out
            self.logger.info(f"Dataset run completed in {report.processing_time_seconds:.2f} seconds")
            return report

        except ForgeError as e:
            self.logger.error(f"Run aborted at {self.state['current_step']}: {e}")
            self.state["status"] = "failed"
            self.state["errors"].append(str(e))
            raise

    def transform(self, record: RawRecord) -> ProcessedRecord:
        """Run the four stages on one record and return the output row."""
        processed, _ = self._transform(record)
        return processed

    def _transform_all(self, records: List[RawRecord]):
        if self.config.workers <= 1 or len(records) < 2:
            return [self._transform(r) for r in records]
        # map() yields results in submission order
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            return list(pool.map(self._transform, records))

    def _transform(self, record: RawRecord):
        fields: Dict[str, Any] = record.model_dump(exclude={"authenticity"})
        issues: List[RecordIssue] = []
        # Order is fixed so warnings come out the same on every run
        for stage in (self.normalizer, self.chronology, self.geo, self.encoder):
            output = stage.process(record)
            issues.extend(output.pop("issues", []))
            fields.update(output)
        return ProcessedRecord(**fields), issues

    def _save_report(self, report: RunReport, path: Path) -> None:
        """Save the run report as pretty JSON"""
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8") as f:
                json.dump(report.model_dump(mode="json"), f, indent=2, ensure_ascii=False)
        except OSError as e:
            raise EmitError(f"cannot write report to {path}: {e}")

    def get_status(self) -> Dict[str, Any]:
        """Get current workflow status"""
        return self.state
