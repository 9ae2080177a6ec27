from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Dict, List
import logging

from pydantic import BaseModel, ConfigDict

from src.models.records import RawRecord


class IssueKind(str, Enum):
    NORMALIZATION = "normalization"
    UNPARSED_DATING = "unparsed_dating"
    UNRESOLVED_PLACE = "unresolved_place"
    UNMAPPED_VALUE = "unmapped_value"
    VALIDATION = "validation"


class RecordIssue(BaseModel):
    """A per-record data problem; reported, never fatal"""

    model_config = ConfigDict(frozen=True)

    ref_hesperia: str
    kind: IssueKind
    detail: str


class BaseStage(ABC):
    """Base class for all per-record transformation stages"""

    def __init__(self, name: str):
        self.name = name

        # Per-stage logger name (nice for tracing a single record through the run)
        self.logger = logging.getLogger(name)

    @abstractmethod
    def process(self, record: RawRecord) -> Dict[str, Any]:
        """
        Transform one record.

        Returns the output columns this stage owns, plus an "issues" list of
        RecordIssue values.
        """
        raise NotImplementedError

    def issue(self, record: RawRecord, kind: IssueKind, detail: str) -> RecordIssue:
        """Build an issue for a record and log it as a warning"""
        ref = record.ref_hesperia or "<no ref>"
        self.logger.warning(f"[{ref}] {detail}")
        return RecordIssue(ref_hesperia=ref, kind=kind, detail=detail)

    @staticmethod
    def validate_input(input_data: Dict[str, Any], required_fields: List[str]) -> bool:
        """Validate that input contains required fields"""
        for field in required_fields:
            if field not in input_data:
                raise ValueError(f"Missing required field: {field}")
        return True
