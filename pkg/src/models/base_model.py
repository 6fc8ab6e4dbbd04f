from typing import Annotated

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, PlainSerializer


def _frozen_array(v, dtype=float) -> np.ndarray:
    arr = np.array(v, dtype=dtype)
    arr.setflags(write=False)
    return arr


def validate_vec2(v) -> np.ndarray:
    arr = _frozen_array(v)
    if arr.shape != (2,) or not np.all(np.isfinite(arr)):
        raise ValueError("Expected a finite 2-vector")
    return arr


def validate_points(v) -> np.ndarray:
    arr = _frozen_array(v)
    if arr.size == 0:
        arr = _frozen_array(np.zeros((0, 2)))
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("Expected an (n, 2) array of points")
    if not np.all(np.isfinite(arr)):
        raise ValueError("Point coordinates must be finite")
    return arr


def validate_matrix(v) -> np.ndarray:
    arr = _frozen_array(v)
    if arr.ndim != 2:
        raise ValueError("Expected a 2-D matrix")
    return arr


def validate_vector(v) -> np.ndarray:
    arr = _frozen_array(v)
    return arr.reshape(-1)


def validate_index_array(v) -> np.ndarray:
    return _frozen_array(v, dtype=np.int64)


def validate_bool_array(v) -> np.ndarray:
    return _frozen_array(v, dtype=bool)


_as_list = PlainSerializer(lambda a: np.asarray(a).tolist(), return_type=list)

Vec2 = Annotated[np.ndarray, BeforeValidator(validate_vec2), _as_list]
Points = Annotated[np.ndarray, BeforeValidator(validate_points), _as_list]
Matrix = Annotated[np.ndarray, BeforeValidator(validate_matrix), _as_list]
Vector = Annotated[np.ndarray, BeforeValidator(validate_vector), _as_list]
IndexArray = Annotated[np.ndarray, BeforeValidator(validate_index_array), _as_list]
BoolArray = Annotated[np.ndarray, BeforeValidator(validate_bool_array), _as_list]


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)
