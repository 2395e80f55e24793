from . import utils
from .cache import ZetaCache
from .cache_formats import CACHE_VERSION
from .cache_formats import cache_formats
from .config import RunConfig
from .groupring import AbelianGroup
from .groupring import GroupRingElt
from .groupring import MinusAlgebra
from .groupring import fitting_ideal
from .groupring import gross_stark_residual
from .groupring import rl_quotient
from .groupring import stickelberger
from .groupring import theta_derivative
from .measure import MeasureHandle
from .measure import brumer_stark_conjugates
from .measure import measure_of
from .measure import moment
from .measure import mult_integral
from .measure import riemann_oracle
from .padic import PadicCtx
from .padic import PadicElt
from .padic import exp_p
from .padic import hensel_sqrt
from .padic import log_p
from .padic import teichmuller
from .quadfield import FieldElement
from .quadfield import IdealRep
from .quadfield import QuadField
from .quadfield import is_inert
from .quadfield import make_field
from .quadfield import narrow_class_group
from .quadfield import totally_positive_fundamental_unit
from .recognize import MinPolyResult
from .recognize import elementary_symmetric
from .recognize import minimal_polynomial
from .recognize import recognize_coeff
from .shintani import ZetaQuery
from .shintani import partial_zeta
from .shintani import shintani_domain

try:
    from brumer_stark.version import version as __version__
except ImportError:
    __version__ = "0.0.0.local"

__all__ = [
    "QuadField",
    "FieldElement",
    "IdealRep",
    "make_field",
    "narrow_class_group",
    "totally_positive_fundamental_unit",
    "is_inert",
    "shintani_domain",
    "ZetaQuery",
    "partial_zeta",
    "PadicCtx",
    "PadicElt",
    "hensel_sqrt",
    "teichmuller",
    "log_p",
    "exp_p",
    "MeasureHandle",
    "measure_of",
    "moment",
    "mult_integral",
    "riemann_oracle",
    "brumer_stark_conjugates",
    "MinPolyResult",
    "elementary_symmetric",
    "recognize_coeff",
    "minimal_polynomial",
    "AbelianGroup",
    "GroupRingElt",
    "MinusAlgebra",
    "stickelberger",
    "rl_quotient",
    "fitting_ideal",
    "theta_derivative",
    "gross_stark_residual",
    "RunConfig",
    "ZetaCache",
    "CACHE_VERSION",
    "cache_formats",
    "utils",
]
