"""
JSON files for kernels, mixing distributions and fitted models.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from ..kernel import KernelSpec
from ..mixing.distribution import DiscreteMixing, MixingDescriptor, mixing_from_dict

LOG = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _read_json(path: PathLike) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: malformed JSON ({e})") from e
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return data


def write_json(path: PathLike, payload: Dict[str, Any]) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_kernel(path: PathLike) -> KernelSpec:
    data = _read_json(path)
    # a fitted-model file carries its kernel
    if "kernel" in data and "d" not in data:
        data = data["kernel"]
    return KernelSpec.from_dict(data)


def save_kernel(path: PathLike, kernel: KernelSpec) -> None:
    write_json(path, kernel.to_dict())


def load_mixing(path: PathLike, kernel: Optional[KernelSpec] = None) -> Tuple[MixingDescriptor, Optional[KernelSpec]]:
    """
    Read a mixing distribution.

    Accepts the bare mixing form, a uniform descriptor, or a fitted-model file
    ({"mixing": ..., "certificate": ..., "kernel": ...}).

    Returns:
        (mixing, embedded kernel or None)
    """
    data = _read_json(path)
    embedded = KernelSpec.from_dict(data["kernel"]) if "kernel" in data else None
    body = data.get("mixing", data)
    return mixing_from_dict(body, kernel=kernel or embedded), embedded


def save_mixing(path: PathLike, g: DiscreteMixing, kernel: Optional[KernelSpec] = None) -> None:
    write_json(path, g.to_dict(kernel))


def save_fit(path: PathLike, g: DiscreteMixing, certificate: Dict[str, Any], kernel: KernelSpec) -> None:
    """Fitted NPMLE: mixing plus its certificate plus the kernel it was fit under."""
    write_json(path, {
        "v": 1,
        "mixing": g.to_dict(),
        "certificate": certificate,
        "kernel": kernel.to_dict(),
    })
    LOG.info(f"📁 Fitted model saved to {path}")
