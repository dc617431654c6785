from typing import Any, Dict, List, Union

import numpy as np
import numpy.typing as npt

ComplexMatrix = npt.NDArray[np.complex128]
RealArray = npt.NDArray[np.float64]
ComplexPair = List[float]
JsonMatrix = List[List[ComplexPair]]
JsonValue = Union[None, bool, int, float, str, List[Any], Dict[str, Any]]
JsonDict = Dict[str, JsonValue]
