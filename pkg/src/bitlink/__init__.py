"""bitlink: Monte-Carlo simulation and metrics for bitwise coded
modulation under matched and mismatched (auxiliary-channel) decoding.

The pipeline follows the classic bitwise receiver: QAM constellations
(uniform or probabilistically shaped), a quantized-Gaussian channel,
bitwise L-value demapping under an auxiliary SNR assumption, soft LDPC
decoding, and achievable-rate metrics (ASI/GMI, MI, Q-factors).
"""

from .backend import BACKEND
from .errors import BracketError, ConfigurationError

__version__ = "0.1.0"

__all__ = ["BACKEND", "BracketError", "ConfigurationError", "__version__"]
