"""Numerical laboratory for measure-valued evolution equations.

Simulates interacting particle systems whose coefficients depend on the
empirical law, lifts the runs to curves of measures, ensembles of curves,
and curves of random measures, and verifies the defining weak equations,
martingale properties, and metric structure at every level.
"""

__version__ = "0.1.0"

from .dynamics import (BLOWUP_THRESHOLD, BlowUpError, InitialLawSampler,
                       SimConfig, integrability_functional, simulate_ensemble,
                       simulate_mckv)
from .measures import (EmpiricalMeasure, MeasurePath, MeasurePathEnsemble,
                       PathMeasure, PathMeasureEnsemble, RandomMeasure,
                       RandomMeasureCurve, SamplePath, TimeGrid,
                       curve_eval, curve_from_ensemble, ensemble_project,
                       from_doc, integrate, path_marginal, path_to_curve,
                       to_doc, uniform_weights)
from .metrics import (EmbeddedPoint, MetricReport, d_2w, d_ell, ensemble_w1,
                      frak_d, iota_embed, w1_truncated)
from .scenarios import (SCENARIOS, MomentOracle, ScenarioSpec, gaussian_family,
                        gaussian_quantile_measure, mean_field_ou,
                        nonsmooth_probe, oracle_curve,
                        zero_diffusion_transport)
from .seeds import content_hash, derive_seed, stream
from .testfn import (Coefficients, CylinderFunction, Dictionary, OuterFunction,
                     TestFunction, TimeTestFunction, apply_K, apply_L,
                     build_dictionary, build_outer_family, bump_outer,
                     constant_outer, identity_outer, leibniz_gap,
                     product_cylinder, product_outer, time_test_functions)
from .verify import (HFunctional, HierarchyReport, MartingaleConfig,
                     MartingaleTestReport, ResidualReport, UniquenessTable,
                     constant_h, cylinder_battery, hierarchy_check,
                     kfp_battery, kfp_residual, martingale_battery,
                     martingale_configs, martingale_increment, qv_gap,
                     rm_battery, rm_equation_residual, trapezoid_weights,
                     uniqueness_probe)
