"""H1-conforming finite element cochain complexes on intervals and hypercubes,
with canonical and mollified commuting (quasi-)interpolation."""

__version__ = "0.1.0"

from .fe1d import (  # noqa: E402
    ElementPair,
    build_element,
    derivative_matrix,
    gram_matrix,
    interpolate_0,
    interpolate_1,
    node_values_0,
    node_values_1,
)
from .poly1d import (  # noqa: E402
    Mollifier,
    Polynomial1D,
    ScalarField1D,
    gauss_integrate,
    integrated_legendre,
    legendre,
    mollifier_weights,
)
from .quasi1d import (  # noqa: E402
    PerturbationConfig,
    QuasiOperator,
    projection_correct,
    quasi_interpolate,
    quasi_operator,
    stability_constants,
    tilde_node_values,
    weighted_node_values,
)
from .tensorfec import (  # noqa: E402
    RankOneField,
    TensorPolyForm,
    char_vectors,
    cohomology_dims,
    d_matrix,
    l2_inner,
    tensor_d,
    tensor_interpolate,
    theta_sign,
)
