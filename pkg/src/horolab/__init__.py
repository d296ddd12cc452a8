"""horolab: numerical checks of horosphere geometry on rank one model spaces."""

__version__ = "0.1.0"
