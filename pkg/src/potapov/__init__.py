"""Model reduction of passive delay networks by Blaschke-Potapov interpolation."""

from .blaschke import (
    BlaschkeFactor,
    PotapovProduct,
    approximation_error,
    cayley_from_disc,
    cayley_to_disc,
    eval_product,
    extract_factor,
    interpolate,
    product_tf,
    residue_at,
    singular_bound,
    singular_is_trivial,
)
from .netlist import (
    DIVERGENT,
    DelayNetwork,
    Divergent,
    build_cavity,
    build_two_mirror,
    eval_tf,
    limit_neg_infinity,
    network_from_dict,
    network_to_dict,
    parse_network,
    pole_closure,
    pole_function,
    transfer_function,
)
from .pade import PadeApproximant, pade_exp, pade_network_tf, pade_orders
from .roots import (
    ContourRegion,
    Root,
    RootSet,
    commensurate_poles,
    count_zeros,
    find_poles,
    find_zeros,
    zeros_from_poles,
)
from .separation import (
    FeedforwardChain,
    SeparationResult,
    eval_feedforward,
    separate,
    to_commensurate,
)
from .statespace import (
    RealizabilityReport,
    Signal,
    StateSpace,
    cascade,
    factor_to_statespace,
    omega_of,
    product_to_statespace,
    realizability_check,
    simulate,
    static_gain,
    statespace_tf,
    tf_of_statespace,
)

__version__ = "0.1.0"
