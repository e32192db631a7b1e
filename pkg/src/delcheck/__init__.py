"""Explicit-state model checking for epistemic logic with event-model updates.

Submodules:

* :mod:`delcheck.formula`   - formula AST, parser, renderer, statistics
* :mod:`delcheck.kripke`    - epistemic/event models, S5 tools, instance files
* :mod:`delcheck.semantics` - product update and the reference evaluator
* :mod:`delcheck.fastcheck` - memoized checker for the tractable fragment
* :mod:`delcheck.oracle`    - QBF/lexmax/bisimulation brute-force oracles
* :mod:`delcheck.reduction` - QBF-to-instance generators
* :mod:`delcheck.cli`       - command-line interface
"""

from .formula import (
    And,
    Atom,
    Formula,
    Know,
    Literal,
    Not,
    UpdateBox,
    formula_stats,
    parse_formula,
    render_formula,
)
from .kripke import (
    EpistemicModel,
    EventModel,
    PointedEventModel,
    PointedModel,
    load_instance,
    make_semi_private,
    s5_closure,
    validate_s5,
)
from .semantics import call_count_probe, evaluate, evaluate_pointed, product_update
from .fastcheck import (
    FragmentInstance,
    accepts_fragment,
    contract_update,
    fragment_check,
    nested_update_family,
)
from .oracle import Qbf, bisimilar, lexmax_sat, normalize_alternating, qbf_eval
from .reduction import (
    Instance,
    chi_formulas,
    instance_size_estimate,
    reduce_delta2,
    reduce_multi1,
    reduce_semiprivate,
    reduce_single2,
)

__version__ = "0.1.0"
