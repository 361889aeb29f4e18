import pytest

from triplechar import energy

# max cancellation residual of every energy run made while the suite executes
CANCELLATION_LOG: list[tuple[str, float]] = []

_annotate = energy.annotate


def _logging_annotate(trace, cfg, sym, n_star=None):
    out = _annotate(trace, cfg, sym, n_star)
    CANCELLATION_LOG.append((f"{sym.name or 'symbol'} xi={trace.xi.tolist()} {trace.direction}",
                             float(out.cancel_resid.max())))
    return out


energy.annotate = _logging_annotate


def pytest_collection_modifyitems(config, items):
    # acceptance runs last so the cancellation criterion sees every run
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")


@pytest.fixture(scope="session")
def cancellation_log():
    return CANCELLATION_LOG
