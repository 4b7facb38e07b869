from numcore.tensor import Tape, Tensor, backward
from numcore.gradcheck import finite_diff_check, finite_diff_errors
from numcore import ops

__all__ = ["Tape", "Tensor", "backward", "finite_diff_check", "finite_diff_errors", "ops"]
