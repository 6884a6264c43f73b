import os

import numpy as np
import pytest
from threadpoolctl import threadpool_limits

from iesflex.conic import solve_misocp
from iesflex.desk import desk_instance
from iesflex.evaluate import AffinePolicySolution
from iesflex.reformulate import ReformulationMode, compile_program

_limits = threadpool_limits(limits=1)

_SOLVES = {}


class Solved:
    """Instance, scenarios, compiled program, solver result and policies."""

    def __init__(self, inst, scen, prog, sol):
        self.inst, self.scen, self.prog, self.sol = inst, scen, prog, sol
        self.x = sol.x
        self.policy = AffinePolicySolution.from_vector(prog, sol.x, inst)

    @property
    def errors(self):
        return self.scen.wind - self.inst.moments.mean[None]


def solved_desk(epsilon=0.05, mode="DRCC", enable_p2hh=True, enable_boiler=True):
    """Desk planning solve, memoised for the whole test session."""
    key = (epsilon, mode, enable_p2hh, enable_boiler)
    if key not in _SOLVES:
        inst, scen = desk_instance(epsilon=epsilon)
        prog = compile_program(inst, ReformulationMode(mode, epsilon), enable_p2hh, enable_boiler)
        sol = solve_misocp(prog)
        assert sol.x is not None, sol.message
        _SOLVES[key] = Solved(inst, scen, prog, sol)
    return _SOLVES[key]


@pytest.fixture(scope="session")
def desk_solution():
    return solved_desk()


@pytest.fixture
def small_desk():
    return desk_instance(n_days=1, n_hours=4, n_scenarios=100, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixture_dir(tmp_path):
    from iesflex.desk import write_desk_fixture

    return write_desk_fixture(os.fspath(tmp_path / "fixture"), n_scenarios=60, seed=1)


@pytest.fixture(scope="session")
def small_solved():
    """One-day, four-hour desk case solved once per session."""
    inst, scen = desk_instance(n_days=1, n_hours=4, n_scenarios=100, seed=3)
    prog = compile_program(inst)
    sol = solve_misocp(prog)
    assert sol.x is not None, sol.message
    return Solved(inst, scen, prog, sol)
