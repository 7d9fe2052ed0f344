"""dimlab: theta-intermediate, Minkowski, Assouad and capacity dimensions
of finite atomic measures, with reference families and projection
experiments."""

from .backends import backend_name, get_backend
from .errors import ConfigError, DimlabError, NumericError, ResourceCapError
from .estimators import (PhiShape, ScaleGrid, dim_assouad,
                         dim_hausdorff_upper, dim_minkowski, dim_phi,
                         dim_theta, dimension_profile, local_dims,
                         scale_extremum, scaling_exponent)
from .measure import (AtomicMeasure, ball_mass, breakpoint_radii,
                      build_measure, load_measure, save_measure)

__version__ = "0.1.0"
