"""Exact solvers for persuasion problems whose outcome is a stable matching."""

from .errors import CapacityError, InputError, InvariantError, PersuasionError, RegimeError, UnreachableSignalError
from .matching import WsmProblem, gale_shapley, wsm_brute, wsm_strict
from .model import (
    Instance,
    JointSignal,
    Matching,
    MetaSignal,
    PreferenceProfile,
    PrivatePolicy,
    PublicPolicy,
    blocking_pairs,
    induced_profile,
    is_bayes_plausible,
    is_indicative,
    is_stable_matching,
    is_stable_policy,
    policy_utility,
    posterior_of_metasignal,
)
from .oracle import solve_oracle_public, solve_oracle_restricted
from .support import reduce_policy_support
from .typed import (
    TypedInstance,
    expand_typed_policy,
    solve_private_typed,
    solve_public_typed,
    typed_utility,
    v_star,
)
from .worlds import check_non_degenerate, enumerate_proper_cells, perturb, solve_public_small_worlds

__version__ = "0.1.0"
