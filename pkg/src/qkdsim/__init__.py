"""BB84 simulator with a weak-randomness adversary.

The library half models the protocol, the intercept-flip-resend attack, the
restricted test-position source and its exact min-entropy cost; the CLI half
(`qkdsim`) batches Monte Carlo runs and entropy sweeps into CSV/JSON reports
and optional figures.
"""

from .adversary import (
    AttackSpec,
    EveRecord,
    ResendPolicy,
    corrupt_test_source,
    eve_estimate,
    intercept_resend,
    required_loss,
)
from .analysis import (
    RunStats,
    agreement,
    binary_entropy,
    case_stats,
    expected_agreement_analytic,
    hamming,
    monte_carlo,
    one_way_key_rate,
    trial_seed,
)
from .combinatorics import (
    EntropyReport,
    asymptote_comparison,
    default_test_set_size,
    entropy_loss_report,
    log2_binomial,
    stirling_log2_factorial,
)
from .entropy_core import (
    Distribution,
    FlatSource,
    SourceSpec,
    SubsetFlatSource,
    decode_subset,
    encode_subset,
    is_nb_source,
    loss_rate,
    make_flat,
    min_entropy,
    sample,
)
from .errors import (
    InfeasibleAttackError,
    InsufficientPositionsError,
    InvalidInputError,
    QkdSimError,
)
from .protocol import (
    ProtocolConfig,
    SiftMode,
    SiftResult,
    Transcript,
    bob_measure,
    choose_test_set,
    distribute,
    estimate_parameters,
    generate_strings,
    run_bb84,
    sift,
)
from .qsim import Basis, ConjugateQubit, QubitRegister, encode, flip, measure

__version__ = "0.1.0"
