"""Possible-worlds inference policies: ratios, reliable mixtures, credal bounds, defaults."""

from .credal import (
    Bounds,
    ConditioningImpossibleError,
    CredalConstraint,
    ExpertAssessment,
    InfeasibleError,
    feasible,
    merge_experts,
    query_bounds,
)
from .defaults import (
    AuditConfig,
    AuditVerdict,
    DefaultRule,
    DefaultTheory,
    Extension,
    audit_rule,
    compute_extensions,
    is_extension,
)
from .kb import KBError, KnowledgeBase, load_kb, parse_kb
from .logic import (
    FALSE,
    TRUE,
    Atom,
    Formula,
    FormulaSyntaxError,
    UnknownAtomError,
    Vocabulary,
    WorldSet,
    count_models,
    entails,
    models,
    parse_formula,
    render,
)
from .policies import (
    BeliefReport,
    Partition,
    PartitionError,
    expected_error,
    laplace_sequence,
    point_belief,
    possibility_ratio,
    reliable_belief,
    table1,
)

__version__ = "0.1.0"
