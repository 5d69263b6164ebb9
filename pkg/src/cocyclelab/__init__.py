"""Linear cocycles over subshifts of finite type.

A desk-scale laboratory for periodic spectra, dominated splittings,
unstable signatures, orbit-level perturbations and suspension flows.
"""

__version__ = "0.1.0"

from .sft import (
    MarkovMeasure, PeriodicWord, ResourceLimitError, SftSystem, bernoulli_measure,
    build_dense_periodic_word, count_periodic_points, cyclic_factors,
    enumerate_orbits_up_to, enumerate_periodic_words, full_shift, golden_mean_shift,
    markov_measure, parry_measure, sample_typical_word, stationary_vector,
)
from .cocycle import (
    EigenData, HyperbolicityCertificate, LinearCocycle, NotHyperbolic, OrbitCocycle, eigen_data,
    has_simple_spectrum, hyperbolicity_certificate, orbit_cocycle, periodic_lyapunov_exponents,
    product_along_word, rotation,
)
from .domination import (
    CycleWitness, DominationCertificate, NoInvariantSplitting, NotDominated, Signature,
    detect_equidimensional_cycle, finest_dominated_splitting, finest_splitting_report,
    m_domination_test, perturbation_preserves_signature, signature_robustness_margin,
    simple_star_probe, uniform_spectral_gap, unstable_signature,
)
from .perturb import (
    BudgetExceeded, DichotomyReport, PeriodTooShort, PerturbationPlan, RotationArc, StageError,
    apply_plan, arc_orbit, classify_dichotomy, force_complex, force_real_simple, kill_nilpotent,
    kill_nilpotent_report, make_dense_simple, perturb_generator, perturbation_norms,
    rotation_arc_experiment, rotation_number, signature_explosion, split_equal_eigenvalues,
)
from .spectrum import (
    LyapunovSpectrum, MeasureSpec, NoInvariantDirection, SplittingRequired,
    closed_form_diagonal_exponents, continuity_probe, ergodic_average_phi, gap_report, gap_table,
    measure_lyapunov_exponents,
)
from .suspension import (
    FlowSpectrum, RoofFunction, flow_signature_correspondence, roof_integral, suspend_spectrum,
)
from .sysfile import SystemDefinition, SystemFileError, load_system, parse_system
