"""Figure generation for shnw result directories, via the public file schemas."""

from .figures import FIGURE_KINDS, FigureRequest, plot

__version__ = "0.1.0"
