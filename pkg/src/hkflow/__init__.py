"""Divergences, transport distances and heat-flow inequality checks on
finite metric-measure spaces."""

from .spaces import (
    DiscreteMeasure,
    LebesgueDecomposition,
    MetricMeasureSpace,
    MetricViolation,
    NonpositiveReference,
    cycle_space,
    lebesgue_decompose,
    line_space,
    measure,
    new_space,
)
from .divergences import (
    DualStatic,
    EntropyFunction,
    HellingerDual,
    NonDominating,
    PerspectiveFunction,
    csiszar,
    dual_static,
    he2_via_kl,
    hellinger,
    hellinger_conjugate,
    hellinger_dual,
    hellinger_dual_flow,
    hellinger_dual_value,
    hellinger_entropy,
    kl_divergence,
    perspective_divergence,
    perspective_of,
    power_entropy,
)
from .transport import MassMismatch, TransportPlan, wasserstein, wasserstein_1d
from .hk import (
    LetSolution,
    cost_ell,
    hk,
    hk_bruteforce,
    hk_distance,
    let_objective,
)
from .heat import (
    Generator,
    curvature_lower_bound,
    cycle_generator,
    dirichlet_energy,
    gamma,
    gamma2,
    heat_apply,
    heat_dual,
    ou_generator,
    r_k,
)
from .gaussian import (
    Gaussian1D,
    STANDARD_NORMAL,
    he2_gauss,
    kl_gauss,
    ou_flow,
    w2_gauss,
)
from .harness import CheckRecord
from .suite import SuiteReport, run_suite, validate_config

__version__ = "0.1.0"
