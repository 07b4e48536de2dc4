"""DPOP over a deterministic in-process agent runtime."""

from .errors import DcopError
from .generators import GridParams, RandomGraphParams, generate_grid, generate_random
from .instance_io import load_instance, parse_instance, serialize_instance
from .local_solver import AgentContext, ArgmaxCache, UtilTable, compute_util, join_tables, lookup_value
from .model import (Constraint, DcopInstance, HardRule, Table, Variable, build_constraint_graph, evaluate,
                    evaluate_constraint)
from .oracle import brute_force, count_feasible
from .pseudotree import (PseudoTree, build_pseudotree, build_pseudotree_from_order, compute_separators,
                         induced_width, validate_pseudotree)
from .runtime import SolveReport, Status, solve
from .utility import NEG_INF

__version__ = "0.1.0"
