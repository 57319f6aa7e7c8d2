"""Dynamic role-binding policies: parse, verify, simulate and compile."""
from .core import (
    And,
    BindingConstraint,
    BindingStatement,
    DnfConstraint,
    Kind,
    Or,
    Outcome,
    Polarity,
    Policy,
    Role,
    RoleRef,
    RoleTable,
    binding_check,
    build_role_table,
    endorsement_outcome,
    to_dnf,
)
from .net import (
    Marking,
    PetriNet,
    build_nomination_net,
    check_consistency,
    enabled_transitions,
    export_dot,
    fire,
)
from .parser import ParseDiagnostic, PolicySyntaxError, parse_policy, render_policy
from .process import ProcessDescriptor, cross_validate, load_process, role_of_task
from .runtime import CaseState, State, create_case
from .codegen import compile_all, gen_binding_policy, gen_task_role_map

__version__ = "0.1.0"
