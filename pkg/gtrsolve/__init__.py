import logging
from .core import GtrsSolver, solve
from .models import CaseKind, GtrsOutcome, GtrsProblem

logging.getLogger(__name__).addHandler(logging.NullHandler())
