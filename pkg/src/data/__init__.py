from .dataset import Dataset
from .models import (
    load_kernel,
    save_kernel,
    load_mixing,
    save_mixing,
    save_fit,
    write_json,
)

__all__ = [
    "Dataset",
    "load_kernel",
    "save_kernel",
    "load_mixing",
    "save_mixing",
    "save_fit",
    "write_json",
]
