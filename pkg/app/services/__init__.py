"""
Services package

Numeric core (statekit, ncvalue), the two frame-change engines (qrf_qubit,
qrf_grid) and the scenario plumbing behind the CLI (runner, verifier, reporter).
"""

from .qrf_grid import grid_engine
from .qrf_qubit import qubit_engine
from .reporter import reporter
from .runner import runner
from .verifier import verifier

__all__ = [
    'grid_engine',
    'qubit_engine',
    'reporter',
    'runner',
    'verifier',
]
