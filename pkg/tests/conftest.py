import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mlbermudan.model import GBMModel, ModelParams, TimeGrid
from mlbermudan.payoff import MaxCallPayoff

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def bench():
    """The five-asset max-call benchmark: model and payoff."""
    model = GBMModel()
    return model, MaxCallPayoff(100.0, model.params.r, model.grid)


@pytest.fixture
def small_model():
    params = ModelParams(d=2, x0=(100.0, 100.0))
    return GBMModel(params, TimeGrid.uniform(1.0, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance report --------------------------------------------------------------

_ACCEPTANCE: dict = {}


@pytest.fixture
def report(capsys):
    """``report(criterion, check, ok, detail)`` prints one line and records it for the summary."""

    def _report(criterion: int, check: str, ok: bool, detail: str = "") -> bool:
        line = f"criterion {criterion} {check}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        with capsys.disabled():
            print("\n" + line)
        _ACCEPTANCE.setdefault(criterion, []).append((check, bool(ok), line))
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(_ACCEPTANCE):
        checks = _ACCEPTANCE[c]
        failed = [name for name, ok, _ in checks if not ok]
        status = "PASS" if not failed else "FAIL"
        extra = f" (failing: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {c}: {status} [{len(checks) - len(failed)}/{len(checks)} checks]{extra}")
        for _, _, line in checks:
            terminalreporter.write_line(f"    {line}")
