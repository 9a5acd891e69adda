"""Figure rendering for cavityspin CSV outputs."""

from .recipes import RECIPES, FigureRecipe, render
from .schema import SchemaError, read_qgrid, read_table

__version__ = "0.1.0"

__all__ = ["RECIPES", "FigureRecipe", "render", "SchemaError",
           "read_table", "read_qgrid", "__version__"]
