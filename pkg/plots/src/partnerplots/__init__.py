"""partnerplots: figures from partnersim artifact directories.

Strictly offline: this package reads the CSV/JSON artifacts the simulator
CLI emits and never imports or invokes the simulator itself.
"""

__version__ = "0.1.0"

from .figures import FigureSpec, SchemaVersionError, render

__all__ = ["FigureSpec", "SchemaVersionError", "render", "__version__"]
