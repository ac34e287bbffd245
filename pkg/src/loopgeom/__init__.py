"""Integration and validation of loop-parameterised Maurer-Cartan forms."""

from .errors import LoopGeomError
from .forms import Grid, LoopForm1, MatForm1, MatForm2
from .frames import FrameField, integrate_family, integrate_frame
from .loop import LoopPoly, ThreeInvolutionSetup
from .matrix import Involution, mat_exp

__all__ = ["Grid", "MatForm1", "MatForm2", "LoopForm1", "LoopPoly", "Involution",
           "ThreeInvolutionSetup", "FrameField", "integrate_frame", "integrate_family",
           "mat_exp", "LoopGeomError"]
__version__ = "0.1.0"
