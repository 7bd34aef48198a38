# src/autodiff/__init__.py
from src.autodiff import ops  # noqa: F401  (attaches operator overloads to Tensor)
