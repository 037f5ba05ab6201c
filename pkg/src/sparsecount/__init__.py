"""Approximate and exact evaluation of first-order counting queries on sparse graphs."""

from .clauses import (CanonicalClause, Mixed, TypeDescriptors, canonicalize, prune_delta_neq,
                      reduce_delta_eq, sign_vector_types)
from .counting import (SimpleClauseSum, TripleList, WeightTable, approx_decompose, approx_weights,
                       count_pairs, exact_decompose, exact_weights, prepare_flips,
                       technical_epsilon)
from .errors import (BudgetExceeded, ContractError, GraphFormatError, QuerySyntaxError,
                     ShapeError, SparseCountError)
from .graph import (FunctionalStructure, LabeledGraph, Signature, add_apex, augment,
                    edge_formula, flip, load_graph, orient)
from .logic import Formula, to_text
from .normal import (ConjClause, reduce_depth, relational_to_functional, similar_extremes, to_cpnf,
                     to_dnf)
from .optimizer import OptResult, optimize, partial_dominating_set
from .oracle import count_term, evaluate_formula, instability_witness
from .parser import parse_query
from .qe import (ApproxPair, BucketPredicates, CheckResult, bucketize, check_sentence,
                 eliminate_count, eliminate_exists)

__version__ = "0.1.0"
