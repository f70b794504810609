import itertools

import numpy as np
import pytest

from gdlstbc import design, metric, sim


def random_block(spec, rng, n_r=None):
    n_r = n_r or spec.n_t
    H = rng.normal(size=(n_r, spec.n_t)) + 1j * rng.normal(size=(n_r, spec.n_t))
    Y = rng.normal(size=(n_r, spec.T)) + 1j * rng.normal(size=(n_r, spec.T))
    return H, Y


def beta_grid(spec, xi):
    """f over every assignment, shaped by the group sizes."""
    _, S, _ = design.codebook(spec)
    return metric.metric_f_batch(xi, S).reshape(spec.sizes)


def marginal(grid, domain):
    """min of the full grid over everything outside ``domain``, axes in domain order."""
    keep = sorted(domain)
    axes = tuple(n for n in range(grid.ndim) if n not in keep)
    m = grid.min(axis=axes) if axes else grid
    return np.transpose(m, [keep.index(n) for n in domain]) if len(domain) > 1 else m


def brute_assignment(spec, xi):
    grid = beta_grid(spec, xi)
    return tuple(int(a) for a in np.unravel_index(int(np.argmin(grid)), grid.shape))


def all_points(sizes):
    return itertools.product(*(range(k) for k in sizes))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def golden():
    return design.catalog("golden_s2", q=2)


DESK_CODES = sorted(sim.DESK_PARAMS)


def desk(name):
    return design.catalog(name, **sim.DESK_PARAMS[name])


# PASS/FAIL lines recorded by the acceptance tests, echoed after the run
ACCEPTANCE_LINES = []


def record(criterion, label, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'}  [{criterion}] {label}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
