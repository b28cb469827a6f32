"""Pass/fail reports with certificates, shared by validators and verifiers."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Report:
    """Outcome of a single named check.

    `failures` lists human-readable reasons; `certificate` carries exact data
    backing a rejection (ranks, offending indices) so a failed check is
    reproducible evidence rather than a bare boolean.
    """

    claim: str
    passed: bool
    failures: list = field(default_factory=list)
    certificate: dict | None = None

    def to_json(self):
        out = {"claim": self.claim, "pass": self.passed}
        if self.failures:
            out["failures"] = list(self.failures)
        if self.certificate is not None:
            out["certificate"] = self.certificate
        return out

    def __bool__(self):
        return self.passed


def merge_reports(claim: str, reports) -> Report:
    reports = list(reports)
    failures = []
    for r in reports:
        if not r.passed:
            failures.extend(f"{r.claim}: {msg}" for msg in (r.failures or ["failed"]))
    return Report(claim=claim, passed=not failures, failures=failures)
