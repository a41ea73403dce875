"""Figure generation for mlaf run artifacts."""

__version__ = "0.1.0"

from .figures import (
    ladder_figure,
    scaling_figure,
    spectrum_figure,
    timeseries_figure,
)
from .schema import SchemaError
