from .decompose import (
    TwoLevelFactor,
    controlled_matrix,
    controlled_u_to_basic,
    lower_to_basic,
    multicontrolled_to_cnot,
    synthesize_unitary,
    two_level_decompose,
    two_level_to_multicontrolled,
    u3_params,
    zyz_angles,
)
from .kak import kak, kak_decompose
from .sk import (
    SKNet,
    group_commutator_factor,
    sk_basic_approx,
    sk_compile,
    sk_precompile,
)

__all__ = [
    "TwoLevelFactor", "controlled_matrix", "controlled_u_to_basic", "lower_to_basic",
    "multicontrolled_to_cnot", "synthesize_unitary", "two_level_decompose",
    "two_level_to_multicontrolled", "u3_params", "zyz_angles", "kak", "kak_decompose",
    "SKNet", "group_commutator_factor", "sk_basic_approx", "sk_compile", "sk_precompile",
]
