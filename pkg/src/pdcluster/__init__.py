"""Primal-dual clustering with certified lower bounds."""

from .instance import (BadInput, FacilityMode, Instance, InvalidK, NormalizationMode,
                       NormalizationRecord, Objective, build_instance, from_costs,
                       load_instance, normalize_distances, validate_metric)
from .jv import (ETA, ClientFacilityGraph, ClusterSolution, ConflictGraph, DualSolution,
                 InternalError, SeedConflict, build_client_facility_graph, build_conflict_graph,
                 delta_preset, dual_growth, jv, make_solution, maximal_independent_set)
from .certify import (Certificate, DegenerateCertificate, HybridAccount, RefusesToCertify,
                      audit_hybrid, build_certificate, client_audit, lmp_ratio, lp_lower_bound,
                      verify_dual_feasibility)
from .sequence import (HorizonExhausted, SequenceLevel, SweepConfig, bisection_solve, bucket,
                       generate_sequence, initial_alpha, quasi_graph_update, quasi_sweep,
                       solve_exact_k)
from .oracle import (OracleResult, TooLarge, brute_force_opt, greedy_opt_estimate,
                     reference_dual_growth, reference_quasi_sweep)

__version__ = "0.1.0"
