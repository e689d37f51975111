from fractions import Fraction

import pytest

from folnerdim.graphs import cayley_subgraph
from folnerdim.groups import GroupContext
from folnerdim.operators import GroupRingMatrix

Z = GroupContext.free_abelian(1)
Z2 = GroupContext.free_abelian(2)
H3 = GroupContext.heisenberg()


def interval(n):
    return [(i,) for i in range(-n, n + 1)]


def cycle(m):
    q = GroupContext.abelian_quotient((m,))
    return cayley_subgraph(q, q.elements())


def e1():
    """1 - g over Z."""
    return GroupRingMatrix(Z, 1, {(0,): ((1,),), (1,): ((-1,),)})


def e2():
    """[[1 - g, 1 - g], [0, 0]] over Z."""
    return GroupRingMatrix(Z, 2, {(0,): ((1, 1), (0, 0)), (1,): ((-1, -1), (0, 0))})


def averaging2():
    """1 - (g1 + g2)/2 over Z^2."""
    h = Fraction(-1, 2)
    return GroupRingMatrix(Z2, 1, {(0, 0): ((1,),), (1, 0): ((h,),), (0, 1): ((h,),)})


@pytest.fixture
def rng():
    import random

    return random.Random(20260915)


ACCEPTANCE_LINES = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    setattr(item, f"rep_{rep.when}", rep)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Collects a one-line verdict per acceptance criterion."""
    notes = {}
    yield notes
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    line = f"criterion {notes.get('id', '?'):>2}: {'PASS' if ok else 'FAIL'}  {notes.get('detail', '')}"
    ACCEPTANCE_LINES.append(line)
    print(line)
