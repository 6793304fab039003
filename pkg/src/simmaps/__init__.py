"""Distance-equality-preserving maps on R^m: motions, helices, chord profiles."""
from .config import Tolerances
from .errors import SimMapsError

__all__ = ["Tolerances", "SimMapsError"]
__version__ = "0.1.0"
