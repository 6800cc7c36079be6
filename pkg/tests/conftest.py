from dataclasses import dataclass

import pytest


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float
    budget: float
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:>2} {status}  {self.name}  ({self.seconds:.1f}s / {self.budget:g}s)  {self.detail}"


_RESULTS: list[CriterionResult] = []


class Recorder:
    def record(self, number, name, passed, seconds, budget, detail=""):
        result = CriterionResult(number, name, bool(passed) and seconds < budget, seconds, budget, detail)
        _RESULTS.append(result)
        print(result.line())
        return result


@pytest.fixture(scope="session")
def acceptance():
    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for result in sorted(_RESULTS, key=lambda r: r.number):
        terminalreporter.write_line(result.line())
    passed = sum(r.passed for r in _RESULTS)
    terminalreporter.write_line(f"{passed}/{len(_RESULTS)} criteria passed")
