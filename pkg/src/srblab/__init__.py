"""Finite-horizon hyperbolicity diagnostics and empirical SRB-style measures
for invertible model maps with dominated splittings."""

from .charts import Chart, Point, torus_chart
from .cones import (ConeSpec, DominationCertificate, check_avg_domination,
                    cone_from_system, cone_width_bound, cone_width_of,
                    domination_robustness_radius, in_cone,
                    verify_cone_contraction)
from .disks import (ContractionReport, CurvatureConstants, CurvatureReport,
                    DiskTrace, DistortionConstants, DistortionReport,
                    EmbeddedDisk, TangencyReport, backward_contraction_check,
                    curvature_constants, curvature_recursion, distortion,
                    distortion_profile, holder_curvature,
                    hyperbolic_component, iterate_disk, make_disk,
                    make_graph_disk, measure_distortion_constants, measure_l1,
                    tangency_report)
from .errors import (CarvingFailed, ChainInfeasible, ChartOverflow,
                     ConfigInvalid, ConstantsInvalid, ConstructionFailed,
                     DegenerateImage, DegenerateSplitting, DegenerateTangent,
                     DimensionMismatch, EmptyRadius, HypothesisViolated,
                     NoConvergence, OrbitEscaped, ResolutionExhausted,
                     SingularMap, SrbLabError, ZeroMass)
from .experiments import (Config, describe, list_models, parse_config,
                          run_experiment)
from .linalg import (Subspace, graph_norm, mininorm, oblique_components,
                     restricted_det, restricted_mininorm, restricted_norm,
                     span, subspace_distance)
from .measures import (DefectReport, EmpiricalMeasure, HyperbolicMassReport,
                       Observable, birkhoff, default_observables,
                       disk_measure, hyperbolic_mass, invariance_defect,
                       packing_check, physical_fraction, pushforward_average,
                       pushforward_integrals, pushforward_measure,
                       select_disjoint_balls, weak_star_distance, write_atoms)
from .models import (GridSpec, ModelSpec, build, converge_splitting,
                     lambda_fraction, linear_torus_system,
                     measure_constants_h, quasi_uniform, region_sample)
from .pliss import (HyperbolicTimeReport, PlissParams, density_theta,
                    first_nonneg_shift, hyperbolic_times, lambda_membership,
                    lambda_membership_batch, pliss_times)
from .systems import (CocycleLog, ConstantsH, ConvergedSplitting,
                      ExactSplitting, MapSystem, SplittingField,
                      SystemConstants, cocycle_logs, cocycle_logs_batch,
                      orbit_coords, splitting_frames_along_orbit)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
