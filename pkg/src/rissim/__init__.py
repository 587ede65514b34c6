"""Near- and far-field scattering from reconfigurable intelligent surfaces.

An RIS is modelled as an array of impedance-loaded antennas; the received
field is an unconjugated bilinear form of finite-distance array manifolds
and the loaded impedance kernel.
"""

__version__ = "0.1.0"

from .em_core import (FREE_SPACE, ElementPattern, HalfWaveDipole, Isotropic, Medium,
                      Tabulated, Wave, emf, green, green_farfield, radiated_field,
                      radiation_vector)
from .errors import *  # noqa: F401,F403
from .experiments import (SweepResult, SweepSpec, convergence_study, distance_sweep,
                          extrema_alignment, fit_exponent, freespace_baseline,
                          fresnel_overlay, reference_spec)
from .fresnel import (ZoneMap, classify_elements, excess_phase, first_zone_contained,
                      fresnel_radius, zone_index)
from .geometry import (ArrayLayout, Scene, dimensions, farfield_distance, make_linear_layout,
                       make_planar_layout, symmetric_scene)
from .link import LinkModel, effective_channel, simulate, snr_db
from .ris_model import (DiagonalSelf, FullMatrix, IdealPhase, Kernel, Reactive, RisConstants,
                        ShortCircuit, SourceExcitation, farfield_scattered, kernel, manifold,
                        max_density_smart, optimal_phases, quantize_phases, radiation_density,
                        scattered_field, steering_farfield, synthesize_reactive_loads)
