"""
Raster Grids and Flood-Fill Spanning Tests
File: utils/raster.py
"""

import math
from enum import Enum

import numpy as np
from scipy import ndimage


def cell_centers(rect, resolution):
    """Centres of a grid of cells no wider than resolution covering rect

    Returns (xy, shape) where xy has one row per cell in row-major order
    (rows run along y) and shape is (ny, nx).
    """
    nx = max(1, math.ceil(rect.width / resolution))
    ny = max(1, math.ceil(rect.height / resolution))
    xs = rect.x_min + (np.arange(nx) + 0.5) * (rect.width / nx)
    ys = rect.y_min + (np.arange(ny) + 0.5) * (rect.height / ny)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()]), (ny, nx)


def cell_size(rect, resolution):
    """Largest side of the cells produced by cell_centers"""
    nx = max(1, math.ceil(rect.width / resolution))
    ny = max(1, math.ceil(rect.height / resolution))
    return max(rect.width / nx, rect.height / ny)


def spans(mask, direction='horizontal'):
    """True if a 4-connected cluster of marked cells joins the two opposite sides

    horizontal joins the first and last column, vertical the first and last row.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return False
    labels, _ = ndimage.label(mask)
    if direction == 'horizontal':
        start, end = labels[:, 0], labels[:, -1]
    else:
        start, end = labels[0, :], labels[-1, :]
    touching = np.intersect1d(start[start > 0], end[end > 0])
    return touching.size > 0


class Verdict(str, Enum):
    """Answer of a raster test"""

    YES = 'yes'
    NO = 'no'
    UNCERTAIN = 'uncertain'

    @classmethod
    def of(cls, flag):
        return cls.YES if flag else cls.NO
