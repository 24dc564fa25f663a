"""Figure generation for flatsat simulation traces and design reports."""

from .csvio import EmptyTraceError, MissingChannelError, TraceFormatError, read_trace
from .figures import KINDS, FigureSpec, render

__version__ = "0.1.0"
