"""ML decoding of linear space-time block codes by min-sum message passing on junction trees."""

__version__ = "0.1.0"

from .design import CodeSpec, EncodingGroup, SignalSet, SpecError, catalog  # noqa: E402
from .estimator import CMLDecoder, GDLDecoder, GDLPamDecoder, NotFittedError, make_decoder  # noqa: E402
from .metric import OpCount, compute_xi  # noqa: E402

__all__ = ["CodeSpec", "EncodingGroup", "SignalSet", "SpecError", "catalog", "CMLDecoder",
           "GDLDecoder", "GDLPamDecoder", "NotFittedError", "make_decoder", "OpCount", "compute_xi"]
