"""Findings reported by the manifest and config checks.

Rule ids read SCOPE-NNN for errors and SCOPE-WNN for warnings, where SCOPE
is MANIFEST (a stage directory) or CONFIG (a resolved pipeline config).
"""

import re
from enum import Enum

from pydantic import BaseModel, computed_field, model_validator
from typing_extensions import Self

RULE_ID = re.compile(r"^(MANIFEST|CONFIG)-(W?)(\d{2,3})$")


class Severity(str, Enum):
    """ERROR fails the run (exit 1); WARN is reported and the run goes on."""

    ERROR = "ERROR"
    WARN = "WARN"


class RuleScope(str, Enum):
    """What a rule inspects."""

    MANIFEST = "MANIFEST"
    CONFIG = "CONFIG"


class Diagnostic(BaseModel, frozen=True):
    """One finding from a manifest or config rule.

    Attributes:
        rule_id: Stable identifier, e.g. "MANIFEST-003" or "CONFIG-W01"
        severity: ERROR or WARN; must agree with the W marker of rule_id
        message: What is wrong, naming the subject, sinus or field
        path: Offending row or field, e.g. "instances[12]" or "sampling.n"
        fix: Suggested remedy, e.g. "set sampling.allow_off_grid: true"
    """

    rule_id: str
    severity: Severity
    message: str
    path: str
    fix: str

    @model_validator(mode="after")
    def _check_rule_id(self) -> Self:
        match = RULE_ID.match(self.rule_id)
        if match is None:
            raise ValueError(
                f"rule_id must look like MANIFEST-001 or CONFIG-W01, got {self.rule_id!r}"
            )
        is_warning = bool(match.group(2))
        if is_warning != (self.severity is Severity.WARN):
            raise ValueError(f"{self.rule_id} does not match severity {self.severity.value}")
        return self

    @computed_field  # type: ignore[prop-decorator]
    @property
    def scope(self) -> RuleScope:
        return RuleScope(self.rule_id.split("-", 1)[0])

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    @property
    def sort_key(self) -> tuple[int, str, str]:
        """Errors first, then rule id, then path."""
        return (0 if self.is_error else 1, self.rule_id, self.path)
