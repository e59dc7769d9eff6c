"""Selector protocols, the step-program engine and its branch trees."""
from .engine import *  # noqa: F401,F403
from .engine import __all__ as _engine_all
from .library import *  # noqa: F401,F403
from .library import __all__ as _library_all
from .references import REFERENCES, Reference, resolve_reference

__all__ = list(_engine_all) + list(_library_all) + ["REFERENCES", "Reference", "resolve_reference"]
