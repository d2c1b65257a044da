import numpy as np
import scipy.sparse as sp

from radda import CareProblem

#: one "PASS criterion N: ..." / "FAIL criterion N: ..." line per
#: acceptance check, echoed after the run summary where output capture
#: cannot swallow them
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance gate")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_stable_problem(rng, n, mp=1, scale=0.1):
    """Random banded problem with A pushed into the open left half-plane.

    Off-diagonal bands are uniform in [-1, 1]; the diagonal is set to
    -(2 + row abs-sum), so every Gershgorin disk sits left of Re = -2.
    """
    A = sp.lil_matrix((n, n))
    for k in (-2, -1, 1, 2):
        A.setdiag(rng.uniform(-1.0, 1.0, n - abs(k)), k)
    rowsum = np.abs(A.toarray()).sum(axis=1)
    A.setdiag(-(2.0 + rowsum))
    B = scale * rng.standard_normal((n, mp))
    C = scale * rng.standard_normal((mp, n))
    return CareProblem(A.tocsr(), B, C)


def scalar_problem(a=-1.0, b=1.0, c=1.0):
    return CareProblem(np.array([[a]]), np.array([[b]]), np.array([[c]]))
