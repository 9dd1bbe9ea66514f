"""L2 (Mabuchi) geometry of invariant Kähler potentials on the flat torus."""
from .geodesic import (ExtensionCandidate, ExtensionError, GeodesicPath, SubgeodesicCertificate,
                       bump_family, check_subgeodesic, connect, envelope_oracle,
                       extension_candidate, extension_lower_bound, initial_tangent,
                       max_extension, mirror_concat, subgeodesic_delta,
                       verify_extension_obstruction, write_geodesic_csv)
from .holomorphy2d import Potential2D, TorusMap2D, ddbar, holomorphy_check
from .isometry import (ClassifierReport, IsometryMap, black_box, classify, compose, flip,
                       flip_map, identity_map, monotonicity_check, parse_map, pullback,
                       pullback_map, symmetry_probe, tangent_transport_check, verify_isometry)
from .legendre import (ConvexLift, DualPotential, LegendreProfile, RangeError, biconjugate,
                       dual_potential, lift, transform)
from .metric import (P_SWEEP, DistanceReport, cat0_check, chordal_length, d_infinity, d_p,
                     distance_table, dual_distance, segment_speed)
from .potential import (BumpProfile, CircleGrid, NotKahlerError, Potential1D, bump, harmonic,
                        is_kahler, ma_density, ma_energy, random_kahler, read_potential_csv,
                        smooth_max, write_potential_csv)

__version__ = "0.1.0"
