"""Supermaps in the Choi picture: verification, completion and comb realizations."""
from .certify import (
    CertReport,
    CompleteValue,
    SeesawResult,
    SuperInstrument,
    Verdict,
    build_instrument,
    certify,
    complete_cptni_value,
    complete_to_superchannel,
    cptni_seesaw_value,
    outcome_statistics,
)
from .comb import (
    CombRealization,
    decompose_super_instrument,
    decompose_superchannel,
    random_comb,
    random_super_instrument,
    random_superchannel,
    recompose,
)
from .errors import *  # noqa: F401,F403
from .maps import (
    MapChoi,
    MapReport,
    apply_map,
    apply_to_factors,
    choi_from_function,
    choi_from_kraus,
    classify_map,
    complete_map_to_channel,
    identity_channel,
    kraus_from_choi,
    random_channel,
    random_density_matrix,
    random_pure_state,
    random_unitary,
    unitary_channel,
)
from .sdp import SdpProblem, SdpSolution, Status, hermitian_basis, solve_sdp
from .supermap import (
    SuperChoi,
    SuperchannelReport,
    apply_supermap,
    canonical_superchannel,
    counterexample_supermap,
    identity_supermap,
    is_cpp,
    is_superchannel,
    pairing,
    realize_marginal_M,
    superchoi_from_action,
    zero_supermap,
)
from .tensor import (
    FactoredMatrix,
    PureVector,
    identity,
    kron,
    maximally_mixed,
    partial_trace,
    partial_transpose,
    phi_plus,
    purify,
    relate_purifications,
)

__version__ = "0.1.0"
