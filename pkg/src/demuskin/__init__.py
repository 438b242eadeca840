"""Class-2 computations with Demushkin groups under a prime-to-p action.

The package works in the window F/F^3 of the q-central series of a free
pro-p group: exact collection arithmetic, the cup form and Bockstein vector
of a one-relator presentation, involutions with their H^1 matrices and H^2
scalars, coinvariants, and certified equivariant free quotients with a
prescribed signature.
"""

from demuskin.class2_words import (
    ClassTwoElement,
    ClassTwoEndo,
    GeneratorSet,
    TruncatedQuotient,
    apply_endo,
    central_sqrt,
    commutator,
    compose,
    demushkin_generators,
    endo_power,
    format_word,
    invert_auto,
    inverse,
    multiply,
    parse_word,
    power,
    quotient_equal,
    quotient_kill,
)
from demuskin.demushkin_core import (
    CharacterData,
    CohomologyData,
    CoinvariantsResult,
    DemushkinPresentation,
    InvolutionAction,
    bockstein_kernel,
    coinvariants,
    delta_map,
    gamma_line,
    invariants,
    lift_involution,
    standard_involution,
    standard_relator,
    symmetrize_basis,
    transform_presentation,
    trivial_action,
)
from demuskin.quotient_builder import (
    FreeQuotientCertificate,
    IsotropicSubmodule,
    Signature,
    adapted_basis,
    build_V,
    factoring_check,
    free_quotient,
    signature_of,
    uniqueness_check,
    validate_V,
)
from demuskin.zq_linalg import (
    BilinearForm,
    Modulus,
    Submodule,
    ZqMatrix,
    eigen_split,
    howell_form,
    inv_mod,
    is_totally_isotropic,
    isotropic_free_submodules,
    kernel,
    max_isotropic_oracle,
    orthogonal_complement,
)

__version__ = "0.1.0"
