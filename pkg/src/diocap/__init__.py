"""diocap: continued fractions, small-divisor series, capacity kernels,
singular atomic measures, and discrete capacity/gauge-cover estimators on
the real line."""

from .contfrac import (CertifiedReal, ConvergentTable, PartialQuotients,
                       check_approximation_bounds, convergents, expand,
                       finite_fraction_value, gauss_step, named_real,
                       value_of_digits)
from .constructions import (BuildResult, DigitAnchor, GrowthRule,
                            LogSpaceTable, build)
from .sums import (brjuno_series, cauchy_bunyakovsky_check,
                   inverse_logpow_series, lemma1_series, lemma2_series,
                   pm_series)
from .kernels import GaugeSpec, KernelSpec, gauge_eval, kernel_eval
from .measures import (AtomicMeasure, build_paper_measure, energy, potential,
                       potential_sweep)
from .capacity import (CapacityEstimate, CoverEstimate, NodeSet,
                       check_capacity_properties, discrete_capacity,
                       greedy_cover)
from .xfloat import Mag, MagSum
from . import errors

__version__ = "0.1.0"
