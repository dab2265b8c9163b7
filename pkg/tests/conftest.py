import json
from importlib import resources

import numpy as np
import pytest

from rcit import _kernels


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


BACKENDS = ["python"] + (["cython"] if _kernels._ext is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def load_schema(name):
    return json.loads(resources.files("rcit").joinpath("schemas", name).read_text())


@pytest.fixture
def validate():
    jsonschema = pytest.importorskip("jsonschema")
    from referencing import Registry, Resource

    names = ["manifest.schema.json", "graph.schema.json", "ci_result.schema.json",
             "reports.schema.json", "discover.schema.json", "synth_meta.schema.json",
             "bench.schema.json"]
    registry = Registry().with_resources(
        [(nm, Resource.from_contents(load_schema(nm))) for nm in names])

    def _validate(obj, schema_name):
        jsonschema.Draft202012Validator(load_schema(schema_name), registry=registry).validate(obj)

    return _validate


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per criterion, then assert it."""

    def _verdict(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _verdict


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
