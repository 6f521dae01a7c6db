import functools
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fescheck import corpus  # noqa: E402
from fescheck.explorer import build_graph  # noqa: E402
from fescheck.load import load_refinement, load_system  # noqa: E402
from fescheck.refinement import RefinementContext  # noqa: E402


@functools.lru_cache(maxsize=None)
def system(spec: str, bounds: str):
    return load_system(corpus.path(spec), corpus.path(bounds))


@functools.lru_cache(maxsize=None)
def graph(spec: str, bounds: str):
    return build_graph(system(spec, bounds))


def ref_context(conc: str = "bank_conc.fes", abs_: str = "bank_right.fes",
                bounds: str = "bank-ref.bounds") -> RefinementContext:
    a = system(abs_, bounds)
    c = system(conc, bounds)
    ref = load_refinement(corpus.path("bank_ref.fes"), a, c)
    return RefinementContext(a, c, ref, graph(abs_, bounds), graph(conc, bounds))


@pytest.fixture(scope="session")
def bank_small():
    return system("bank.fes", "bank-small.bounds")


@pytest.fixture(scope="session")
def bank_small_graph():
    return graph("bank.fes", "bank-small.bounds")


@pytest.fixture(scope="session")
def bank_micro():
    return system("bank.fes", "bank-micro.bounds")


@pytest.fixture(scope="session")
def refctx():
    return ref_context()
