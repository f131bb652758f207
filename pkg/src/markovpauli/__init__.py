"""Error exponents and capacity bounds for Markov-correlated Pauli channels.

Subpackages cover the symplectic code machinery (``symplectic``), the
channel model and its entropy functionals (``channel``), second-order
type combinatorics (``markov_types``), the rate/exponent optimization
(``exponent``) and the random-coding ensemble checks (``code_sim``).
"""

__version__ = "0.1.0"

from .channel import MarkovPauliChannel, gilbert_channel
from .symplectic import Subspace, SympVector

__all__ = ["MarkovPauliChannel", "gilbert_channel", "Subspace", "SympVector",
           "__version__"]
