"""LOD for curl-curl problems with checkerboard coefficients."""

from ._curlod import (
    CurlodError,
    Mesh,
    curl_incidence,
    fit_rate,
    gradient_incidence,
    plot_script,
    projection,
    run,
    structured_mesh,
    validate,
)

__all__ = [
    "CurlodError",
    "Mesh",
    "curl_incidence",
    "fit_rate",
    "gradient_incidence",
    "plot_script",
    "projection",
    "run",
    "structured_mesh",
    "validate",
]
