"""Tree-indexed non-commutative independences.

Rooted subtrees of the free tree index a family of convolutions on
compactly supported laws (free, Boolean, monotone and many more).  This
package builds the trees, computes the moment-cumulant coefficients, and
convolves laws three independent ways: exactly through non-crossing
partitions, through finite-dimensional operator models, and numerically
through K transforms.
"""

from .cumulants import (
    alpha,
    boolean_cumulants,
    coefficient_table,
    moments_from_cumulants,
    theta_mass,
    tfree_cumulants,
)
from .digraphs import Digraph, Regular, Walk, compose_digraph, walk_tree
from .errors import (
    ConvergenceError,
    DepthError,
    DomainError,
    NumericalError,
    PrecisionError,
    SizeLimitError,
    TreeFreeError,
    ValidationError,
)
from .identities import check_identity
from .laws import (
    ScalarLaw,
    bernoulli,
    bp_bijection,
    clt_convergence,
    clt_law,
    convolution_power,
    convolve,
    id_law,
    semicircle,
)
from .partitions import NCPartition, enumerate_nc, linear_extensions
from .trees import (
    IDENTITY,
    AntiMono,
    Bool,
    Explicit,
    FiniteTree,
    Free,
    Mono,
    Orth,
    Sub,
    compose,
    permute,
    pushforward_check,
    truncate,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
