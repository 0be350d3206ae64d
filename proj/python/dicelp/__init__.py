"""Off-policy evaluation toolkit for tabular MDPs.

Thin wrapper around the compiled extension: exact LP solvers, regularized
Lagrangian saddle points, gradient-based optimization, LSTDQ, and the sweep
harness.
"""

try:
    # installed wheel: the extension sits inside this package
    from ._dicelp import *  # noqa: F401,F403
except ImportError:
    # in-tree builds put the extension on PYTHONPATH as a top-level module
    from _dicelp import *  # noqa: F401,F403
