"""Generalized entanglement relative to operator subalgebras.

Coherent states, purity and Cartan-weight measures, convex roofs, liftable and separable
maps, communication complexity of protocols, and cone-level monotonicity checks.
"""

import os as _os

# GENTKIT_THREADS caps BLAS threads; it must be applied before numpy loads.
_threads = _os.environ.get("GENTKIT_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from . import algebra, coherence, cones, maps, measures, opspace, registry, states  # noqa: E402
from .algebra import AlgebraRep, h_purity, supporting_cartan  # noqa: E402
from .coherence import ground_state_witness, is_coherent, max_purity  # noqa: E402
from .maps import ExplicitMap, communication_complexity, lifts_to  # noqa: E402
from .measures import s_cartan, s_pure, s_roof  # noqa: E402
from .registry import AlgebraSpec, build  # noqa: E402
from .states import DensityMatrix, PureState  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "AlgebraRep",
    "AlgebraSpec",
    "DensityMatrix",
    "ExplicitMap",
    "PureState",
    "algebra",
    "build",
    "coherence",
    "communication_complexity",
    "cones",
    "ground_state_witness",
    "h_purity",
    "is_coherent",
    "lifts_to",
    "maps",
    "max_purity",
    "measures",
    "opspace",
    "registry",
    "s_cartan",
    "s_pure",
    "s_roof",
    "states",
    "supporting_cartan",
]
