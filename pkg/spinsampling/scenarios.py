"""
Default run grids for each subcommand.

Two scales are provided:
- desk:  minutes on a laptop (reduced trials and mode counts)
- large: the full-size ensembles (200 samples per cell, M up to 60)

Cells whose sectors exceed the capacity cap are skipped at run time, so a
grid may list sizes that only a raised --cap can reach.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

HALF_PI = math.pi / 2

SUBCOMMANDS = ("norm-scan", "error-scan", "bunching", "distance", "rwa", "oracle-check")
SCALES = ("desk", "large")


@dataclass(frozen=True)
class Scenario:
    """Default grid for one subcommand at one scale."""
    name: str
    description: str
    n_values: Tuple[int, ...]
    m_values: Tuple[int, ...]
    trials: int
    seed: int = 1
    times: Tuple[float, ...] = (HALF_PI,)
    b_values: Tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "n": list(self.n_values),
            "m": list(self.m_values),
            "trials": self.trials,
            "seed": self.seed,
            "time": list(self.times),
            "b": list(self.b_values),
        }


_DESK: Dict[str, Scenario] = {
    "norm-scan": Scenario(
        name="norm-scan",
        description="Haar statistics of ||Q H_BS P_1bpair|| over an (N, M) grid",
        n_values=(2, 3, 4, 5),
        m_values=(7, 10, 15, 20, 30, 40),
        trials=50,
    ),
    "error-scan": Scenario(
        name="error-scan",
        description="||delta(t)|| against t N^2/sqrt(M) and the integrated bound",
        n_values=(3,),
        m_values=(9, 16, 25, 36),
        trials=20,
    ),
    "bunching": Scenario(
        name="bunching",
        description="Haar mean of ||Q phi(t)||^2 against p_HCB",
        n_values=(2, 3),
        m_values=(10, 16),
        trials=200,
        times=(math.pi / 4, HALF_PI),
    ),
    "distance": Scenario(
        name="distance",
        description="variation distance between boson and spin outputs against 3||delta||",
        n_values=(2,),
        m_values=(8, 10, 12),
        trials=20,
    ),
    "rwa": Scenario(
        name="rwa",
        description="fidelity of the rotating-frame Ising state with the XY state",
        n_values=(1,),
        m_values=(3,),
        trials=1,
        b_values=(25.0, 50.0, 100.0, 200.0),
    ),
    "oracle-check": Scenario(
        name="oracle-check",
        description="brute-force equivalence suites",
        n_values=(1, 2, 3),
        m_values=(4, 5, 6),
        trials=10,
        times=(0.0, math.pi / 4, HALF_PI),
    ),
}

_LARGE: Dict[str, Scenario] = {
    **_DESK,
    "norm-scan": Scenario(
        name="norm-scan",
        description="Haar statistics of ||Q H_BS P_1bpair|| at full size",
        n_values=(2, 3, 4, 5, 6),
        m_values=(7, 10, 15, 20, 30, 40, 50, 60),
        trials=200,
    ),
    "error-scan": Scenario(
        name="error-scan",
        description="||delta(t)|| scaling at full size",
        n_values=(2, 3, 4),
        m_values=(9, 16, 25, 36, 49),
        trials=100,
        times=(math.pi / 8, math.pi / 4, 3 * math.pi / 8, HALF_PI),
    ),
    "bunching": Scenario(
        name="bunching",
        description="Haar mean of ||Q phi(t)||^2 at full size",
        n_values=(2, 3, 4),
        m_values=(10, 16, 25, 36),
        trials=1000,
        times=(math.pi / 8, math.pi / 4, 3 * math.pi / 8, HALF_PI),
    ),
}

_SCENARIOS = {"desk": _DESK, "large": _LARGE}


def get_scenario(name: str, scale: str = "desk") -> Scenario:
    """Default grid for a subcommand; unknown names raise KeyError."""
    if scale not in _SCENARIOS:
        raise KeyError(f"unknown scale '{scale}' (expected one of {', '.join(SCALES)})")
    return _SCENARIOS[scale][name]


def get_all_scenarios(scale: str = "desk") -> List[Scenario]:
    return [get_scenario(name, scale) for name in SUBCOMMANDS]
