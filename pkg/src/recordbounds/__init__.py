"""Sharp mean bounds for k-th record values from IGFR(alpha) populations."""
from .distributions import ID, IFR, DomainError, GfrAlpha, RecordIndex

__version__ = "0.1.0"

__all__ = ["ID", "IFR", "DomainError", "GfrAlpha", "RecordIndex", "__version__"]
