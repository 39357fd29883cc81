"""Robust feasibility and optimization via online learning against noise.

The package splits into geometry (`uncertainty`), online learners
(`learners`), the oracle-driven meta-solvers (`robust_core`), concrete
constraint families with their nominal oracles (`oracles`), ball-
constrained quadratic maximization (`trustregion`), independent
worst-case certification (`verify`), and a command-line front end
(`cli`).
"""

from .uncertainty import BallSet, UncertaintySet, ball_linear_max, project_ball, sample_sphere
from .learners import (
    FplState,
    OgdState,
    RegretTrace,
    accumulate_reward,
    fpl_step,
    measure_regret,
    ogd_step,
)
from .trustregion import TrsProblem, trs_brute_force, trs_max_on_ball, trs_min_on_ball
from .robust_core import (
    BracketError,
    CertifiedInfeasible,
    ConstraintSpec,
    DualCertificate,
    Feasible,
    Infeasible,
    NoiseLift,
    OracleBudgetError,
    PerturbationConstants,
    RobustFeasibilityProblem,
    RunReport,
    Solved,
    SubgradientConstants,
    dual_perturbation_solve,
    dual_subgradient_solve,
    perturbation_rounds,
    robust_minimize_bisection,
    subgradient_rounds,
)
from .oracles import (
    RobustLpInstance,
    RobustQpInstance,
    RobustSdpInstance,
    build_problem,
    generate_instance,
    lp_feasibility_oracle,
    oracle_for,
    qcqp_feasibility_oracle,
    quad_form_coefficients,
    recompute_certificate,
    sdp_feasibility_oracle,
)
from .verify import (
    RobustnessCertificate,
    check_epsilon_robust,
    worst_case_violation,
    worst_case_violation_sampled,
)

__version__ = "0.1.0"
