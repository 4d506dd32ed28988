"""Thin-film interferometry toolkit (Python bindings)."""
import json as _json

from ._filmetric import (  # noqa: F401
    Colormap,
    ConfigError,
    IoError,
    NumericalError,
    __version__,
    add_gaussian_noise,
    apply_range,
    build_colormap,
    evaluate,
    family_counts,
    gen_gaussian,
    gen_perlin,
    load_dataset,
    reconstruct_naive,
    reconstruct_regularized,
    reflectance,
    render,
)
from ._filmetric import generate_dataset as _generate_dataset


def generate_dataset(spec, out_dir, threads=1):
    """Generate a dataset from a spec dict (or JSON string); returns the manifest."""
    text = spec if isinstance(spec, str) else _json.dumps(spec)
    return _generate_dataset(text, str(out_dir), threads)
