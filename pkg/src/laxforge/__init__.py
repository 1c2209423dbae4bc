"""Exact-arithmetic machinery for Yang-Baxter spin chains and their
first-order long-range deformations."""

from .jets import (
    COMPLEX,
    LAMBDA,
    RATIONAL,
    AlgebraMismatch,
    JetAlgebra,
    JetScalar,
    PoleAtEvaluationPoint,
    derivative_coeff,
)
from .tensor_core import (
    ShapeMismatch,
    SingularOperator,
    TensorOperator,
    identity_op,
    permutation_op,
)
from .rmatrix import (
    EMPTY,
    CoproductSpec,
    ModelValidationError,
    RModel,
    builtin_model,
    check_regularity,
    check_unitarity,
    check_ybe,
    coproduct_r,
    eval_r,
    load_model,
    r_inverse,
    yangian_gl,
)
from .charge_engine import (
    PLAIN,
    TILDE,
    algebraic_q,
    conjecture_density,
    coproduct_coefficient,
    coproduct_coefficient_recurrence,
    densities_equivalent,
    reduced_q,
    verify_coproduct_prop,
    verify_lemma_simplify,
    verify_sutherland,
)
from .chain import (
    ChainSpec,
    bilocal_window,
    boost_window,
    extract_charge,
    global_charge,
    monodromy,
    transfer,
)
from .deform import (
    Bilocal,
    Boost,
    EvaluatedTuple,
    Local,
    deformed_lax,
    deformed_rmatrix,
    deformed_transfer_and_charges,
    drinfeld_phi1,
    twist_gamma1,
    twisted_rform,
    verify_deformed_ybe,
    verify_rll,
)
from .magnon import (
    BetheRoots,
    MagnonState,
    bethe_solve,
    build_magnon_state,
    eigencheck,
    extra_terms_check,
    theta_monodromy_first_order,
    xi_apply,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
