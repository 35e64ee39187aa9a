"""Figure rendering for kscontrol artifacts."""

from .errors import EmptyInputError, KsplotsError, MissingColumnError
from .figures import KINDS, FigureSpec, RenderResult, render

__version__ = "0.1.0"
